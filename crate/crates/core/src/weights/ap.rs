//! Muckenhoupt constants over translates of filtration cells.

use serde::{Deserialize, Serialize};

use super::{Weight, WeightForm};
use crate::error::{Error, Result};
use crate::filtration::{increment, FiltrationSpec};
use crate::par;

/// Testing family: every level of `spec`, each cell translated by
/// multiples of `side / shifts` (rounded to the finest grid), kept when it
/// fits in the box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApFamily {
    pub spec: FiltrationSpec,
    #[serde(default = "default_shifts")]
    pub shifts: usize,
}

fn default_shifts() -> usize {
    4
}

impl ApFamily {
    pub fn new(spec: FiltrationSpec, shifts: usize) -> Result<Self> {
        spec.validate()?;
        if shifts == 0 {
            return Err(Error::param("shifts must be at least 1"));
        }
        Ok(Self { spec, shifts })
    }

    fn finest_shape(&self) -> Vec<usize> {
        (0..self.spec.dims())
            .map(|a| {
                let [lo, hi] = self.spec.bounds[a];
                ((hi - lo) / self.spec.side(self.spec.n_max, a)).round() as usize
            })
            .collect()
    }

    /// Cubes as `(first finest index, width in finest cells)` per axis.
    fn cubes(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let shape = self.finest_shape();
        let d = shape.len();
        let mut out = Vec::new();
        for n in self.spec.n_min..=self.spec.n_max {
            let width: Vec<usize> = (0..d)
                .map(|a| 1usize << ((self.spec.n_max - n) as u32 * self.spec.k[a]))
                .collect();
            let step: Vec<usize> = width.iter().map(|&m| (m / self.shifts).max(1)).collect();
            let counts: Vec<usize> = (0..d).map(|a| (shape[a] - width[a]) / step[a] + 1).collect();
            let mut idx = vec![0usize; d];
            for _ in 0..counts.iter().product::<usize>() {
                out.push(((0..d).map(|a| idx[a] * step[a]).collect(), width.clone()));
                increment(&mut idx, &counts);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApEstimate {
    pub value: f64,
    pub p: f64,
    pub cubes: usize,
    /// Cube attaining the supremum.
    pub worst_lo: Vec<f64>,
    pub worst_hi: Vec<f64>,
}

/// `(⨍_Q w)(⨍_Q w^{-1/(p-1)})^{p-1}` for an analytic weight on one box.
pub fn ap_functional(w: &Weight, p: f64, lo: &[f64], hi: &[f64], x1: usize) -> Result<f64> {
    check_p(p)?;
    let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    let mass = w.box_integral(lo, hi, x1, 1.0)?;
    if !(mass > 0.0) {
        return Err(Error::NotAWeight(format!("zero mass on the box {lo:?}..{hi:?}")));
    }
    let dual = w.box_integral(lo, hi, x1, -1.0 / (p - 1.0))?;
    Ok(combine(mass / vol, dual / vol, p))
}

fn combine(avg: f64, dual_avg: f64, p: f64) -> f64 {
    if avg.is_infinite() || dual_avg.is_infinite() {
        return f64::INFINITY;
    }
    avg * dual_avg.powf(p - 1.0)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param(format!("A_p needs 1 < p < ∞, got {p}")));
    }
    Ok(())
}

/// Summed-volume table with one leading zero slab per axis.
fn prefix_sums(values: &[f64], shape: &[usize]) -> Vec<f64> {
    let d = shape.len();
    let ext: Vec<usize> = shape.iter().map(|n| n + 1).collect();
    let total: usize = ext.iter().product();
    let mut out = vec![0.0; total];
    let mut idx = vec![0usize; d];
    for &v in values {
        let shifted: usize = idx.iter().zip(&ext).fold(0, |acc, (&i, &n)| acc * n + i + 1);
        out[shifted] = v;
        increment(&mut idx, shape);
    }
    let mut stride = 1;
    for a in (0..d).rev() {
        for i in 0..total {
            if (i / stride) % ext[a] != 0 {
                out[i] += out[i - stride];
            }
        }
        stride *= ext[a];
    }
    out
}

fn box_sum(table: &[f64], ext: &[usize], lo: &[usize], width: &[usize]) -> f64 {
    let d = ext.len();
    let mut total = 0.0;
    for corner in 0..(1usize << d) {
        let mut flat = 0;
        let mut sign = 1.0;
        for a in 0..d {
            let hi = corner >> a & 1 == 1;
            let i = if hi { lo[a] + width[a] } else { lo[a] };
            if !hi {
                sign = -sign;
            }
            flat = flat * ext[a] + i;
        }
        total += sign * table[flat];
    }
    total
}

/// Supremum of the Muckenhoupt functional over the family. Tabulated
/// weights carry one value per finest cell of `family.spec`.
pub fn ap_constant(w: &Weight, p: f64, family: &ApFamily) -> Result<ApEstimate> {
    check_p(p)?;
    w.validate()?;
    let spec = &family.spec;
    spec.validate()?;
    let d = spec.dims();
    let x1 = spec.geometry.x1_axis();
    let h: Vec<f64> = (0..d).map(|a| spec.side(spec.n_max, a)).collect();
    let cubes = family.cubes();
    let corners = |lo: &[usize], width: &[usize]| -> (Vec<f64>, Vec<f64>) {
        let l: Vec<f64> = (0..d).map(|a| spec.bounds[a][0] + lo[a] as f64 * h[a]).collect();
        let u = (0..d).map(|a| l[a] + width[a] as f64 * h[a]).collect();
        (l, u)
    };
    let values: Vec<Result<f64>> = match &w.form {
        WeightForm::Tabulated { values } => {
            let shape = family.finest_shape();
            if values.len() != shape.iter().product::<usize>() {
                return Err(Error::DomainMismatch);
            }
            let dual: Vec<f64> = values
                .iter()
                .map(|&v| if v > 0.0 { v.powf(-1.0 / (p - 1.0)) } else { f64::INFINITY })
                .collect();
            let mass_t = prefix_sums(values, &shape);
            let inf_t = prefix_sums(&dual.iter().map(|v| f64::from(u8::from(v.is_infinite()))).collect::<Vec<_>>(), &shape);
            let dual_t = prefix_sums(&dual.iter().map(|&v| if v.is_finite() { v } else { 0.0 }).collect::<Vec<_>>(), &shape);
            let ext: Vec<usize> = shape.iter().map(|n| n + 1).collect();
            par::map_slice(&cubes, |(lo, width)| {
                let cells: usize = width.iter().product();
                let mass = box_sum(&mass_t, &ext, lo, width);
                if !(mass > 0.0) {
                    let (l, u) = corners(lo, width);
                    return Err(Error::NotAWeight(format!("zero mass on the box {l:?}..{u:?}")));
                }
                if box_sum(&inf_t, &ext, lo, width) > 0.5 {
                    return Ok(f64::INFINITY);
                }
                let dual = box_sum(&dual_t, &ext, lo, width);
                Ok(combine(mass / cells as f64, dual / cells as f64, p))
            })
        }
        _ => par::map_slice(&cubes, |(lo, width)| {
            let (l, u) = corners(lo, width);
            ap_functional(w, p, &l, &u, x1)
        }),
    };
    let mut best = (0usize, 0.0f64);
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > best.1 || i == 0 {
            best = (i, v);
        }
    }
    let (lo, hi) = corners(&cubes[best.0].0, &cubes[best.0].1);
    Ok(ApEstimate {
        value: best.1,
        p,
        cubes: cubes.len(),
        worst_lo: lo,
        worst_hi: hi,
    })
}
