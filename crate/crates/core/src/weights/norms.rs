//! Weighted and mixed norms.
//!
//! Grid functions are treated as constant on the dual cell of each node
//! (`[x - h/2, x + h/2]` clipped to the box) and the weight is integrated
//! exactly over that cell. With `w ≡ 1` this is the trapezoid rule.

use serde::{Deserialize, Serialize};

use super::{Weight, WeightForm};
use crate::calculus::grid::{Grid, GridFunction};
use crate::error::{Error, Result};
use crate::filtration::{increment, DiscreteField, Filtration};
use crate::par;

/// `χ` of every finest cell.
pub fn cell_masses(w: &Weight, filtration: &Filtration) -> Result<Vec<f64>> {
    w.validate()?;
    let vol = filtration.finest_volume();
    if let WeightForm::Tabulated { values } = &w.form {
        if values.len() != filtration.finest_len() {
            return Err(Error::DomainMismatch);
        }
        return Ok(values.iter().map(|v| v * vol).collect());
    }
    let spec = filtration.spec();
    let x1 = spec.geometry.x1_axis();
    let h: Vec<f64> = (0..filtration.dims()).map(|a| spec.side(spec.n_max, a)).collect();
    let centers = filtration.finest_centers();
    par::map_slice(&centers, |c| {
        let lo: Vec<f64> = c.iter().zip(&h).map(|(x, h)| x - 0.5 * h).collect();
        let hi: Vec<f64> = c.iter().zip(&h).map(|(x, h)| x + 0.5 * h).collect();
        w.box_integral(&lo, &hi, x1, 1.0)
    })
    .into_iter()
    .collect()
}

fn dual_cell(grid: &Grid, axis: usize, i: usize) -> (f64, f64) {
    let x = grid.coord(axis, i);
    let h = 0.5 * grid.h[axis];
    if grid.n[axis] == 1 {
        return (x - h, x + h);
    }
    let lo = if i == 0 { x } else { x - h };
    let hi = if i + 1 == grid.n[axis] { x } else { x + h };
    (lo, hi)
}

/// Weight mass of the dual cells of the nodes of `grid` restricted to
/// `axes`, row-major over those axes. `x1` indexes into `axes`.
fn group_masses(w: &Weight, grid: &Grid, axes: &[usize], x1: usize) -> Result<Vec<f64>> {
    let shape: Vec<usize> = axes.iter().map(|&a| grid.n[a]).collect();
    let len: usize = shape.iter().product();
    let cells: Vec<(Vec<f64>, Vec<f64>)> = {
        let mut idx = vec![0usize; axes.len()];
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let (lo, hi) = axes
                .iter()
                .zip(&idx)
                .map(|(&a, &i)| dual_cell(grid, a, i))
                .unzip();
            out.push((lo, hi));
            increment(&mut idx, &shape);
        }
        out
    };
    let vol = |lo: &[f64], hi: &[f64]| -> f64 { lo.iter().zip(hi).map(|(a, b)| b - a).product() };
    match &w.form {
        WeightForm::Tabulated { values } => {
            if values.len() != len {
                return Err(Error::DomainMismatch);
            }
            Ok(values.iter().zip(&cells).map(|(v, (lo, hi))| v * vol(lo, hi)).collect())
        }
        WeightForm::PowerRadial { .. } => par::map_slice(&cells, |(lo, hi)| {
            let contains_origin = (x1..lo.len()).all(|a| lo[a] <= 0.0 && hi[a] >= 0.0);
            if contains_origin {
                w.box_integral(lo, hi, x1, 1.0)
            } else {
                // midpoint rule away from the singularity
                let mid: Vec<f64> = lo.iter().zip(hi.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
                Ok(w.value(&mid, x1)? * vol(lo, hi))
            }
        })
        .into_iter()
        .collect(),
        _ => par::map_slice(&cells, |(lo, hi)| w.box_integral(lo, hi, x1, 1.0))
            .into_iter()
            .collect(),
    }
}

/// Weight mass of every node's dual cell.
pub fn node_masses(w: &Weight, grid: &Grid) -> Result<Vec<f64>> {
    w.validate()?;
    let axes: Vec<usize> = (0..grid.dims()).collect();
    group_masses(w, grid, &axes, grid.domain.x1_axis())
}

/// `Σ |v|^p m` with `0 · ∞ := 0`.
pub fn integrate_power(values: &[f64], masses: &[f64], p: f64) -> f64 {
    values
        .iter()
        .zip(masses)
        .map(|(v, m)| if *v == 0.0 { 0.0 } else { v.abs().powf(p) * m })
        .sum()
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("exponent must lie in [1, ∞), got {p}")));
    }
    Ok(())
}

/// `(∫ |f|^p w)^{1/p}` on a grid.
pub fn weighted_norm(f: &GridFunction, w: &Weight, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let m = node_masses(w, f.grid())?;
    Ok(integrate_power(f.values(), &m, p).powf(1.0 / p))
}

/// `(∫ |f|^p w dμ)^{1/p}` for a field constant on finest cells.
pub fn weighted_norm_field(f: &DiscreteField, w: &Weight, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let m = cell_masses(w, f.filtration())?;
    Ok(integrate_power(f.values(), &m, p).powf(1.0 / p))
}

/// Iterated norm: `groups[0]` is integrated first with exponent
/// `exponents[0]`, and so on outwards. A group weight is a function of the
/// group's own coordinates, with `x_1` its first axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub exponents: Vec<f64>,
    pub groups: Vec<Vec<usize>>,
    #[serde(default)]
    pub weights: Vec<Option<Weight>>,
}

impl MixedNormSpec {
    pub fn new(exponents: Vec<f64>, groups: Vec<Vec<usize>>) -> Result<Self> {
        let s = Self {
            exponents,
            groups,
            weights: Vec::new(),
        };
        s.check(None)?;
        Ok(s)
    }

    /// One axis per group, innermost first.
    pub fn per_axis(exponents: Vec<f64>, order: Vec<usize>) -> Result<Self> {
        Self::new(exponents, order.into_iter().map(|a| vec![a]).collect())
    }

    pub fn with_weight(mut self, group: usize, w: Weight) -> Self {
        if self.weights.len() < self.groups.len() {
            self.weights.resize(self.groups.len(), None);
        }
        self.weights[group] = Some(w);
        self
    }

    pub fn check(&self, dims: Option<usize>) -> Result<()> {
        if self.exponents.len() != self.groups.len() || self.groups.is_empty() {
            return Err(Error::param("one exponent per axis group is required"));
        }
        if self.weights.len() > self.groups.len() {
            return Err(Error::param("more group weights than groups"));
        }
        for &p in &self.exponents {
            if !(p > 1.0 && p.is_finite()) {
                return Err(Error::param(format!("mixed-norm exponents must lie in (1, ∞), got {p}")));
            }
        }
        let mut seen: Vec<usize> = self.groups.iter().flatten().copied().collect();
        seen.sort_unstable();
        let d = dims.unwrap_or(seen.len());
        if seen != (0..d).collect::<Vec<_>>() {
            return Err(Error::param(format!("groups {:?} must partition the axes 0..{d}", self.groups)));
        }
        Ok(())
    }
}

pub fn mixed_norm(f: &GridFunction, spec: &MixedNormSpec) -> Result<f64> {
    mixed_norm_values(f.grid(), f.values(), spec)
}

/// [`mixed_norm`] on raw node values.
pub fn mixed_norm_values(grid: &Grid, values: &[f64], spec: &MixedNormSpec) -> Result<f64> {
    let d = grid.dims();
    spec.check(Some(d))?;
    if values.len() != grid.len() {
        return Err(Error::DomainMismatch);
    }
    let mut shape = grid.n.clone();
    let mut cur: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    for (g, axes) in spec.groups.iter().enumerate() {
        let p = spec.exponents[g];
        let w = spec.weights.get(g).cloned().flatten().unwrap_or_else(Weight::unit);
        let masses = group_masses(&w, grid, axes, 0)?;
        let mut out_shape = shape.clone();
        for &a in axes {
            out_shape[a] = 1;
        }
        let mut out = vec![0.0; out_shape.iter().product()];
        let mut idx = vec![0usize; d];
        for &v in &cur {
            if v != 0.0 {
                let gi = axes.iter().fold(0, |acc, &a| acc * grid.n[a] + idx[a]);
                let oi = (0..d).fold(0, |acc, a| acc * out_shape[a] + if axes.contains(&a) { 0 } else { idx[a] });
                out[oi] += v.powf(p) * masses[gi];
            }
            increment(&mut idx, &shape);
        }
        cur = out.into_iter().map(|s| s.powf(1.0 / p)).collect();
        shape = out_shape;
    }
    Ok(cur[0])
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::calculus::grid::GridDomain;
    use crate::filtration::{build_filtration, FiltrationSpec};

    fn square(h: f64) -> Arc<Grid> {
        Arc::new(Grid::over_box(GridDomain::HalfSpace, &[[0.0, 1.0], [0.0, 1.0]], &[h, h]).unwrap())
    }

    #[test]
    fn unit_masses_are_trapezoid_weights() {
        let g = square(0.125);
        let m = node_masses(&Weight::unit(), &g).unwrap();
        for (a, b) in m.iter().zip(g.quadrature_weights()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn indicator_with_linear_weight() {
        let f = build_filtration(FiltrationSpec::half(1, -2, 3, vec![[0.0, 4.0]])).unwrap();
        let u = DiscreteField::from_fn(f, |x| if x[0] < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let n = weighted_norm_field(&u, &Weight::power_x1(1.0), 2.0).unwrap();
        assert!((n * n - 0.5).abs() < 1e-14);
    }

    #[test]
    fn weighted_unit_square_mixed() {
        let g = square(0.25);
        let one = GridFunction::constant(g, 1.0);
        let spec = MixedNormSpec::per_axis(vec![2.0, 3.0], vec![0, 1])
            .unwrap()
            .with_weight(0, Weight::power_x1(1.0));
        let v = mixed_norm(&one, &spec).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(MixedNormSpec::per_axis(vec![1.0, 2.0], vec![0, 1]).is_err());
        assert!(MixedNormSpec::new(vec![2.0, 2.0], vec![vec![0], vec![0]]).is_err());
        let g = square(0.5);
        let spec = MixedNormSpec::per_axis(vec![2.0], vec![0]).unwrap();
        assert!(mixed_norm(&GridFunction::constant(g, 1.0), &spec).is_err());
    }
}
