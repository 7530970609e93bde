//! Sampled solution fields and quadrature helpers shared by catalog entries.

use std::sync::Arc;

use crate::calculus::fd::fd_derivatives;
use crate::calculus::grid::{Grid, GridFunction};
use crate::calculus::manufactured::Manufactured;
use crate::calculus::operator::{split_node, OperatorSpec};
use crate::error::{Error, Result};
use crate::operators::{geometric_maximal, GeometricFamily, RadiusMode};
use crate::par;
use crate::weights::norms::{mixed_norm_values, node_masses, MixedNormSpec};
use crate::weights::Weight;

/// `u`, `|Du|`, `|D²u|` and `F[u]` (plus `∂_t u` in time) at every node.
pub(crate) struct Fields {
    pub grid: Arc<Grid>,
    pub u: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    /// `D²u` flattened node-major as full rows.
    pub hess: Vec<f64>,
    pub f: Vec<f64>,
}

impl Fields {
    /// Finite-difference fields of `scale * sol`.
    pub fn sample(op: &OperatorSpec, sol: &Manufactured, grid: Arc<Grid>, scale: f64) -> Result<Self> {
        if grid.space_dims() != op.d {
            return Err(Error::param(format!(
                "operator has d = {}, grid has {} space axes",
                op.d,
                grid.space_dims()
            )));
        }
        let u = sol.sample(Arc::clone(&grid))?.map(|v| scale * v);
        let der = fd_derivatives(&u)?;
        let time = grid.domain.has_time();
        let f: Result<Vec<f64>> = par::map_indices(grid.len(), |n| {
            let node = grid.node(n);
            let (t, x) = split_node(&node, time);
            op.check_coefficients(t, x)?;
            let dt = der.dt.as_ref().map_or(0.0, |d| d[n]);
            Ok(op.apply(&der.d2u[n], t, x) + dt)
        })
        .into_iter()
        .collect();
        Ok(Self {
            g: der.grad_norm(),
            h: der.hessian_norm(),
            hess: der.hessian_flat(),
            f: f?,
            u: u.into_values(),
            grid,
        })
    }

    /// Fields from closed-form jets with a linear `a^{ij} D_ij` operator.
    pub fn exact(op: &OperatorSpec, sol: &Manufactured, grid: Arc<Grid>) -> Result<Self> {
        let jets = sol.exact_fields(&grid);
        let time = grid.domain.has_time();
        let f: Vec<f64> = jets
            .iter()
            .enumerate()
            .map(|(n, j)| {
                let node = grid.node(n);
                let (t, x) = split_node(&node, time);
                op.apply(&j.hess, t, x) + if time { j.dt } else { 0.0 }
            })
            .collect();
        let d = grid.space_dims();
        let mut hess = Vec::with_capacity(jets.len() * d * d);
        for j in &jets {
            for a in 0..d {
                for b in 0..d {
                    hess.push(j.hess.get(a, b));
                }
            }
        }
        Ok(Self {
            u: jets.iter().map(|j| j.value).collect(),
            g: jets.iter().map(|j| j.grad.iter().map(|v| v * v).sum::<f64>().sqrt()).collect(),
            h: jets.iter().map(|j| j.hess.norm()).collect(),
            hess,
            f,
            grid,
        })
    }

    /// `F[u] - u`.
    pub fn f_minus_u(&self) -> Vec<f64> {
        self.f.iter().zip(&self.u).map(|(f, u)| f - u).collect()
    }
}

/// Indicator of a region as quadrature factors: `1` inside, `1/2` on a
/// boundary node, `0` outside. Space and time factors are kept apart so
/// mixed norms can apply each at its own exponent.
#[derive(Clone, Debug)]
pub(crate) struct Region {
    space: Vec<f64>,
    time: Vec<f64>,
}

/// Factor of a node at `v` for the interval `[lo, hi]`: half on an end
/// that lies inside the grid span `[a, b]`, whole on an end that meets it,
/// since the grid quadrature already halves its own edge nodes.
fn edge(v: f64, lo: f64, hi: f64, tol: f64, [a, b]: [f64; 2]) -> f64 {
    let end = |e: f64, g: f64| if (e - g).abs() <= tol { 1.0 } else { 0.5 };
    if (v - lo).abs() <= tol {
        end(lo, a)
    } else if (v - hi).abs() <= tol {
        end(hi, b)
    } else if v > lo && v < hi {
        1.0
    } else {
        0.0
    }
}

impl Region {
    pub fn at(&self, i: usize) -> f64 {
        self.space[i] * self.time[i]
    }

    pub fn contains(&self, i: usize) -> bool {
        self.at(i) > 0.0
    }
}

/// `B_r(c)`, or `[t0, t0 + r²] × B_r(c)` on space-time grids.
pub(crate) fn ball_mask(grid: &Grid, center: &[f64], t0: f64, r: f64) -> Region {
    let time = grid.domain.has_time();
    let tol = 1e-9 * grid.h.iter().copied().fold(f64::INFINITY, f64::min);
    let (space, tf) = (0..grid.len())
        .map(|n| {
            let node = grid.node(n);
            let (t, x) = split_node(&node, time);
            let dist = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let s = edge(dist, -1.0, r, tol, [f64::NEG_INFINITY, f64::INFINITY]);
            let tw = if time {
                edge(t, t0, t0 + r * r, tol, [grid.lo[0], grid.hi(0)])
            } else {
                1.0
            };
            (s, tw)
        })
        .unzip();
    Region { space, time: tf }
}

/// `{lo <= x_1 <= hi}`.
pub(crate) fn x1_band(grid: &Grid, lo: f64, hi: f64) -> Region {
    let a = grid.domain.x1_axis();
    let tol = 1e-9 * grid.h[a];
    Region {
        space: (0..grid.len())
            .map(|n| edge(grid.coord(a, grid.multi_index(n)[a]), lo, hi, tol, [grid.lo[a], grid.hi(a)]))
            .collect(),
        time: vec![1.0; grid.len()],
    }
}

/// `Σ_{mask} |v|^p m`, with `0 · ∞ := 0`.
pub(crate) fn int_pow(values: &[f64], masses: &[f64], p: f64, mask: Option<&Region>) -> f64 {
    values
        .iter()
        .zip(masses)
        .enumerate()
        .map(|(i, (v, m))| {
            let k = mask.map_or(1.0, |r| r.at(i));
            if *v == 0.0 || k == 0.0 {
                0.0
            } else {
                k * v.abs().powf(p) * m
            }
        })
        .sum()
}

/// `Σ_{mask} m`.
pub(crate) fn mass_of(masses: &[f64], mask: &Region) -> f64 {
    masses.iter().enumerate().map(|(i, m)| mask.at(i) * m).sum()
}

pub(crate) fn masses(w: &Weight, grid: &Grid) -> Result<Vec<f64>> {
    node_masses(w, grid)
}

/// `v` times the region factors, each raised to `1 / p` of the exponent
/// integrating its axis, so the mixed norm of the result is the mixed norm
/// over the region.
pub(crate) fn restrict(grid: &Grid, values: &[f64], mask: &Region, spec: &MixedNormSpec) -> Vec<f64> {
    let exponent_of = |axis: usize| {
        spec.groups
            .iter()
            .position(|g| g.contains(&axis))
            .map_or(1.0, |k| spec.exponents[k])
    };
    let es = exponent_of(grid.domain.x1_axis());
    let et = if grid.domain.has_time() { exponent_of(0) } else { 1.0 };
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (s, t) = (mask.space[i], mask.time[i]);
            if s == 0.0 || t == 0.0 {
                0.0
            } else {
                v * s.powf(1.0 / es) * t.powf(1.0 / et)
            }
        })
        .collect()
}

/// Mixed norm raised to the outermost exponent.
pub(crate) fn mixed_power(grid: &Grid, values: &[f64], spec: &MixedNormSpec) -> Result<f64> {
    let p = *spec.exponents.last().expect("nonempty exponents");
    Ok(mixed_norm_values(grid, values, spec)?.powf(p))
}

/// `(M_ρ |v|^e)^{1/e}` over the family radii at least `rho` (all radii when
/// `rho` is `None`).
pub(crate) fn maximal_root(
    grid: &Arc<Grid>,
    values: &[f64],
    e: f64,
    family: &GeometricFamily,
    rho: Option<f64>,
) -> Result<Vec<f64>> {
    let pow: Vec<f64> = values.iter().map(|v| v.abs().powf(e)).collect();
    let gf = GridFunction::new(Arc::clone(grid), pow)?;
    let mode = rho.map_or(RadiusMode::AllRadii, RadiusMode::RadiiAtLeast);
    let m = geometric_maximal(&gf, family, mode)?;
    Ok(m.into_values().into_iter().map(|v| v.powf(1.0 / e)).collect())
}

/// Node where `lhs / Σ terms` is largest, with `0/0 := 0`.
pub(crate) fn pointwise_worst(lhs: &[f64], terms: &[&[f64]]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..lhs.len() {
        let rhs: f64 = terms.iter().map(|t| t[i]).sum();
        let r = super::ratio(lhs[i], 0.0, rhs);
        if r > best.1 {
            best = (i, r);
        }
    }
    best
}

/// Largest `|u|` on nodes not strictly inside `mask`, relative to `max |u|`.
pub(crate) fn leak_outside(u: &[f64], mask: &Region) -> f64 {
    let max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    u.iter()
        .enumerate()
        .filter(|(i, _)| mask.at(*i) < 1.0)
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
        / max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::grid::GridDomain;

    #[test]
    fn unit_ball_mass_approaches_pi() {
        let g = Grid::cube(2, 1.5, 0.01).unwrap();
        let m = masses(&Weight::unit(), &g).unwrap();
        let mask = ball_mask(&g, &[0.0, 0.0], 0.0, 1.0);
        assert!((mass_of(&m, &mask) - std::f64::consts::PI).abs() < 0.02);
    }

    #[test]
    fn cylinder_mask_respects_time() {
        let g = Grid::over_box(GridDomain::SpaceTime, &[[0.0, 2.0], [-1.0, 1.0]], &[0.5, 0.5]).unwrap();
        let mask = ball_mask(&g, &[0.0], 0.0, 1.0);
        for n in 0..g.len() {
            let node = g.node(n);
            let side = |v: f64| if v < 1.0 { 1.0 } else if v == 1.0 { 0.5 } else { 0.0 };
            // t = 0 is the grid's own edge, already halved by the quadrature
            assert_eq!(mask.at(n), side(node[0]) * side(node[1].abs()));
        }
    }

    #[test]
    fn boundary_halves_give_trapezoid_integrals() {
        let g = Grid::over_box(GridDomain::Space, &[[-1.0, 1.0]], &[0.1]).unwrap();
        let m = masses(&Weight::unit(), &g).unwrap();
        let band = ball_mask(&g, &[0.0], 0.0, 0.5);
        let x: Vec<f64> = (0..g.len()).map(|n| g.node(n)[0] + 1.0).collect();
        // trapezoid rule is exact for linear integrands
        assert!((int_pow(&x, &m, 1.0, Some(&band)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pointwise_ratio_skips_zero_nodes() {
        let (i, r) = pointwise_worst(&[0.0, 1.0, 2.0], &[&[0.0, 4.0, 2.0]]);
        assert_eq!((i, r), (2, 1.0));
    }
}
