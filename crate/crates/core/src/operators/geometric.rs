//! Maximal and sharp functions over balls, half-balls, forward parabolic
//! cylinders and half-cylinders, evaluated by node counting on a grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::grid::{Grid, GridDomain, GridFunction};
use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `B_r(x)`.
    Ball,
    /// `B_r(x) ∩ {x_1 >= 0}`.
    HalfBall,
    /// `[t, t + r^2) x B_r(x)`.
    Cylinder,
    /// Cylinder intersected with `{x_1 >= 0}`.
    HalfCylinder,
}

impl Shape {
    fn check_grid(self, grid: &Grid) -> Result<()> {
        let ok = match self {
            Shape::Ball => !grid.domain.has_time(),
            Shape::HalfBall => grid.domain == GridDomain::HalfSpace,
            Shape::Cylinder => grid.domain.has_time(),
            Shape::HalfCylinder => grid.domain == GridDomain::SpaceTimeHalf,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Grid(format!("{self:?} shapes do not fit a {:?} grid", grid.domain)))
        }
    }
}

/// Pair sampling policy for double averages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairBudget {
    /// Shapes with at most this many nodes are averaged over all pairs.
    pub exact_nodes: usize,
    /// Pairs drawn for larger shapes.
    pub samples: usize,
    pub seed: u64,
}

impl Default for PairBudget {
    fn default() -> Self {
        Self {
            exact_nodes: 4096,
            samples: 1 << 16,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricFamily {
    pub shape: Shape,
    /// Centres are the nodes whose indices are all multiples of this stride.
    pub center_stride: usize,
    /// Strictly increasing radii.
    pub radii: Vec<f64>,
    #[serde(default)]
    pub budget: PairBudget,
}

impl GeometricFamily {
    pub fn new(shape: Shape, center_stride: usize, radii: Vec<f64>) -> Result<Self> {
        let fam = Self {
            shape,
            center_stride,
            radii,
            budget: PairBudget::default(),
        };
        fam.validate()?;
        Ok(fam)
    }

    /// `count` radii `r0, r0 q, r0 q^2, ...`.
    pub fn geometric(shape: Shape, center_stride: usize, r0: f64, q: f64, count: usize) -> Result<Self> {
        let radii = (0..count).map(|j| r0 * q.powi(j as i32)).collect();
        Self::new(shape, center_stride, radii)
    }

    pub fn validate(&self) -> Result<()> {
        if self.center_stride == 0 {
            return Err(Error::param("center stride must be positive"));
        }
        if self.radii.is_empty() {
            return Err(Error::param("radius ladder is empty"));
        }
        if self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::param("radii must be positive and finite"));
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("radius ladder must be strictly increasing"));
        }
        Ok(())
    }

    fn centers(&self, grid: &Grid) -> Vec<usize> {
        let s = self.center_stride;
        (0..grid.len())
            .filter(|&i| grid.multi_index(i).iter().all(|k| k % s == 0))
            .collect()
    }

    /// Flat indices of grid nodes inside the shape of radius `r` at `center`.
    pub fn members(&self, grid: &Grid, center: &[f64], r: f64) -> Vec<usize> {
        let d = grid.dims();
        let time = grid.domain.has_time();
        let mut lo_i = vec![0usize; d];
        let mut hi_i = vec![0usize; d];
        for a in 0..d {
            let (lo, hi) = if time && a == 0 {
                (center[0], center[0] + r * r)
            } else {
                (center[a] - r, center[a] + r)
            };
            let first = ((lo - grid.lo[a]) / grid.h[a]).ceil().max(0.0);
            let last = ((hi - grid.lo[a]) / grid.h[a]).floor();
            if last < first || first >= grid.n[a] as f64 {
                return Vec::new();
            }
            lo_i[a] = first as usize;
            hi_i[a] = (last as usize).min(grid.n[a] - 1);
        }
        let strides = grid.strides();
        let x1 = grid.domain.x1_axis();
        let half = matches!(self.shape, Shape::HalfBall | Shape::HalfCylinder);
        let mut out = Vec::new();
        let mut idx = lo_i.clone();
        loop {
            let mut dist2 = 0.0;
            let mut inside = true;
            for a in 0..d {
                let y = grid.coord(a, idx[a]);
                if time && a == 0 {
                    inside &= y >= center[0] && y < center[0] + r * r;
                } else {
                    dist2 += (y - center[a]).powi(2);
                }
                if half && a == x1 {
                    inside &= y >= 0.0;
                }
            }
            if inside && dist2 < r * r {
                out.push(idx.iter().zip(&strides).map(|(i, s)| i * s).sum());
            }
            let mut a = d;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                if idx[a] < hi_i[a] {
                    idx[a] += 1;
                    break;
                }
                idx[a] = lo_i[a];
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RadiusMode {
    /// `𝕄 h`: every radius in the ladder.
    AllRadii,
    /// `𝕄_ρ h`: radii `>= ρ`.
    RadiiAtLeast(f64),
}

/// Pointwise sup over family shapes containing each node of the average of
/// `|h|` over the shape.
pub fn geometric_maximal(h: &GridFunction, family: &GeometricFamily, mode: RadiusMode) -> Result<GridFunction> {
    family.validate()?;
    let grid = h.grid();
    family.shape.check_grid(grid)?;
    let radii: Vec<f64> = match mode {
        RadiusMode::AllRadii => family.radii.clone(),
        RadiusMode::RadiiAtLeast(rho) => {
            if !(rho >= 0.0) {
                return Err(Error::param(format!("rho must be nonnegative, got {rho}")));
            }
            if *family.radii.last().unwrap() < rho {
                return Err(Error::param(format!("radius ladder never reaches rho = {rho}")));
            }
            family.radii.iter().copied().filter(|&r| r >= rho).collect()
        }
    };
    let shapes = shape_list(family, grid, &radii);
    let abs: Vec<f64> = h.values().iter().map(|v| v.abs()).collect();
    let avgs = par::map_slice(&shapes, |(c, r)| {
        let m = family.members(grid, &grid.node(*c), *r);
        if m.is_empty() {
            None
        } else {
            Some(m.iter().map(|&i| abs[i]).sum::<f64>() / m.len() as f64)
        }
    });
    if avgs.iter().all(Option::is_none) {
        return Err(Error::Grid("no family shape meets the grid".into()));
    }
    let mut out = vec![0.0f64; grid.len()];
    for ((c, r), avg) in shapes.iter().zip(&avgs) {
        if let Some(a) = avg {
            for i in family.members(grid, &grid.node(*c), *r) {
                out[i] = out[i].max(*a);
            }
        }
    }
    Ok(h.with_values(out))
}

fn shape_list(family: &GeometricFamily, grid: &Grid, radii: &[f64]) -> Vec<(usize, f64)> {
    let centers = family.centers(grid);
    let mut v = Vec::with_capacity(centers.len() * radii.len());
    for &c in &centers {
        for &r in radii {
            v.push((c, r));
        }
    }
    v
}

/// Sharp function together with the sampling record.
#[derive(Clone, Debug)]
pub struct SharpOutput {
    pub field: GridFunction,
    /// Shapes whose double average was subsampled.
    pub subsampled_shapes: usize,
    pub shapes: usize,
    pub budget: PairBudget,
}

/// `h^#_{γ,ρ}` for scalar `h`.
pub fn geometric_sharp(h: &GridFunction, family: &GeometricFamily, gamma: f64, rho: f64) -> Result<SharpOutput> {
    geometric_sharp_multi(h.grid(), 1, h.values(), family, gamma, rho)
}

/// `h^#_{γ,ρ}` for an `comps`-component field stored node-major; distances
/// are Euclidean (Frobenius for flattened matrices).
pub fn geometric_sharp_multi(
    grid: &std::sync::Arc<Grid>,
    comps: usize,
    values: &[f64],
    family: &GeometricFamily,
    gamma: f64,
    rho: f64,
) -> Result<SharpOutput> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::param(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if !(rho > 0.0) {
        return Err(Error::param(format!("rho must be positive, got {rho}")));
    }
    if comps == 0 || values.len() != comps * grid.len() {
        return Err(Error::DomainMismatch);
    }
    family.validate()?;
    family.shape.check_grid(grid)?;
    let radii: Vec<f64> = family.radii.iter().copied().filter(|&r| r <= rho).collect();
    if radii.is_empty() {
        return Err(Error::param(format!("no ladder radius is <= rho = {rho}")));
    }
    let shapes = shape_list(family, grid, &radii);
    let budget = family.budget;
    let osc = par::map_indices(shapes.len(), |k| {
        let (c, r) = shapes[k];
        let m = family.members(grid, &grid.node(c), r);
        if m.is_empty() {
            return None;
        }
        let seed = budget.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        Some(shape_oscillation(&m, comps, values, gamma, &budget, seed))
    });
    if osc.iter().all(Option::is_none) {
        return Err(Error::Grid("no family shape meets the grid".into()));
    }
    let mut out = vec![0.0f64; grid.len()];
    let mut subsampled = 0;
    for ((c, r), o) in shapes.iter().zip(&osc) {
        if let Some((v, sampled)) = o {
            subsampled += usize::from(*sampled);
            for i in family.members(grid, &grid.node(*c), *r) {
                out[i] = out[i].max(*v);
            }
        }
    }
    Ok(SharpOutput {
        field: GridFunction::new(std::sync::Arc::clone(grid), out)?,
        subsampled_shapes: subsampled,
        shapes: shapes.len(),
        budget,
    })
}

fn shape_oscillation(
    members: &[usize],
    comps: usize,
    values: &[f64],
    gamma: f64,
    budget: &PairBudget,
    seed: u64,
) -> (f64, bool) {
    if comps == 1 && gamma == 1.0 {
        let v: Vec<f64> = members.iter().map(|&i| values[i]).collect();
        return (super::dyadic::mean_oscillation(&v, 1.0), false);
    }
    let dist = |i: usize, j: usize| -> f64 {
        let a = &values[i * comps..(i + 1) * comps];
        let b = &values[j * comps..(j + 1) * comps];
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    };
    let k = members.len();
    if k <= budget.exact_nodes {
        let mut s = 0.0;
        for a in 0..k {
            for b in (a + 1)..k {
                s += dist(members[a], members[b]).powf(gamma);
            }
        }
        ((2.0 * s / (k * k) as f64).powf(1.0 / gamma), false)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = 0.0;
        for _ in 0..budget.samples {
            let a = members[rng.gen_range(0..k)];
            let b = members[rng.gen_range(0..k)];
            s += dist(a, b).powf(gamma);
        }
        ((s / budget.samples as f64).powf(1.0 / gamma), true)
    }
}
