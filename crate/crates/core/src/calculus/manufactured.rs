//! Manufactured solutions with closed-form derivatives.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{Grid, GridFunction};
use super::operator::split_node;
use super::symmat::SymMatrix;
use crate::error::{Error, Result};

/// Library names accepted by [`manufactured`].
pub const NAMES: [&str; 8] = [
    "bump",
    "gaussian",
    "quadratic",
    "exp",
    "exp_cutoff",
    "slab_bump",
    "odd_bump",
    "space_time",
];

/// Value and derivatives at one point. Space derivatives only; `dt` is the
/// time derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: SymMatrix,
    pub dt: f64,
}

impl Jet {
    fn zero(d: usize) -> Self {
        Self {
            value: 0.0,
            grad: vec![0.0; d],
            hess: SymMatrix::zeros(d),
            dt: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Manufactured {
    /// `exp(-1/(1 - |x-c|²/R²))` inside `B_R(c)`, zero outside.
    Bump { center: Vec<f64>, radius: f64 },
    /// `exp(-|x-c|²/(2σ²))`, truncated by the grid box.
    Gaussian { center: Vec<f64>, sigma: f64 },
    /// `½ xᵀAx + b·x + c`, `A` as full rows.
    Quadratic { a: Vec<Vec<f64>>, b: Vec<f64>, c: f64 },
    /// `e^{x_1}`.
    Exp,
    /// `e^{x_1} ζ((x_1 + ramp)/ramp)` with a smooth step `ζ`: zero left of
    /// `-ramp`, equal to `e^{x_1}` right of 0.
    ExpCutoff { ramp: f64 },
    /// Bump inside the slab `2^{-n} <= x_1 <= 2^{1-n}`, centred on the
    /// `x_1` axis.
    SlabBump { d: usize, n: i32 },
    /// `x_1` times a bump centred on `{x_1 = 0}`; odd in `x_1`.
    OddBump { center: Vec<f64>, radius: f64 },
    /// `ψ(t) v(x)` with `ψ(t) = exp(-1/(1 - ((t - t_c)/t_r)²))`.
    SpaceTime {
        t_center: f64,
        t_radius: f64,
        space: Box<Manufactured>,
    },
}

/// Builds a library member from its name and a parameter table.
pub fn manufactured(name: &str, params: toml::Table) -> Result<Manufactured> {
    if !NAMES.contains(&name) {
        return Err(Error::Unknown {
            kind: "manufactured solution",
            name: name.into(),
        });
    }
    let mut t = params;
    t.insert("name".into(), toml::Value::String(name.into()));
    let m: Manufactured = toml::Value::Table(t)
        .try_into()
        .map_err(|e: toml::de::Error| Error::param(format!("{name}: {e}")))?;
    m.validate()?;
    Ok(m)
}

fn bump_profile(y: &[f64], r: f64) -> Jet {
    let d = y.len();
    let s: f64 = y.iter().map(|v| v * v).sum::<f64>() / (r * r);
    if s >= 1.0 {
        return Jet::zero(d);
    }
    let q = 1.0 - s;
    let phi = (-1.0 / q).exp();
    let r2 = r * r;
    let grad = y.iter().map(|&v| -2.0 * phi * v / (q * q * r2)).collect();
    let c1 = phi * (q.powi(-4) - 2.0 * q.powi(-3)) * 4.0 / (r2 * r2);
    let c2 = 2.0 * phi / (q * q * r2);
    let hess = SymMatrix::from_fn(d, |i, j| c1 * y[i] * y[j] - if i == j { c2 } else { 0.0 });
    Jet {
        value: phi,
        grad,
        hess,
        dt: 0.0,
    }
}

fn shifted(x: &[f64], c: &[f64]) -> Vec<f64> {
    x.iter().zip(c).map(|(a, b)| a - b).collect()
}

/// `e^{-1/s}` and its first two derivatives, zero for `s <= 0`.
fn h_profile(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let h = (-1.0 / s).exp();
    (h, h / (s * s), h * (s.powi(-4) - 2.0 * s.powi(-3)))
}

/// Smooth step from 0 at `s <= 0` to 1 at `s >= 1`, with two derivatives.
pub fn smooth_step(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if s >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (a, a1, a2) = h_profile(s);
    let (b, b1, b2) = h_profile(1.0 - s);
    let (b1, b2) = (-b1, b2);
    let sum = a + b;
    let sum1 = a1 + b1;
    let num = a1 * b - a * b1;
    let num1 = a2 * b - a * b2;
    (a / sum, num / (sum * sum), num1 / (sum * sum) - 2.0 * num * sum1 / sum.powi(3))
}

impl Manufactured {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::param(m.to_string()));
        match self {
            Manufactured::Bump { center, radius } | Manufactured::OddBump { center, radius } => {
                if center.is_empty() || !(*radius > 0.0) {
                    return bad("bump needs a nonempty centre and a positive radius");
                }
                if matches!(self, Manufactured::OddBump { .. }) && center[0] != 0.0 {
                    return bad("odd bump must be centred on {x_1 = 0}");
                }
            }
            Manufactured::Gaussian { center, sigma } => {
                if center.is_empty() || !(*sigma > 0.0) {
                    return bad("gaussian needs a nonempty centre and sigma > 0");
                }
            }
            Manufactured::Quadratic { a, b, .. } => {
                if a.len() != b.len() || a.iter().any(|r| r.len() != b.len()) || b.is_empty() {
                    return bad("quadratic needs a square `a` matching `b`");
                }
            }
            Manufactured::ExpCutoff { ramp } => {
                if !(*ramp > 0.0) {
                    return bad("ramp must be positive");
                }
            }
            Manufactured::SlabBump { d, .. } => {
                if *d == 0 {
                    return bad("slab bump needs d >= 1");
                }
            }
            Manufactured::SpaceTime { t_radius, space, .. } => {
                if !(*t_radius > 0.0) {
                    return bad("t_radius must be positive");
                }
                if matches!(**space, Manufactured::SpaceTime { .. }) {
                    return bad("space factor cannot itself depend on time");
                }
                space.validate()?;
            }
            Manufactured::Exp => {}
        }
        Ok(())
    }

    /// Number of space variables, when fixed by the parameters.
    pub fn space_dims(&self) -> Option<usize> {
        match self {
            Manufactured::Bump { center, .. }
            | Manufactured::OddBump { center, .. }
            | Manufactured::Gaussian { center, .. } => Some(center.len()),
            Manufactured::Quadratic { b, .. } => Some(b.len()),
            Manufactured::SlabBump { d, .. } => Some(*d),
            Manufactured::SpaceTime { space, .. } => space.space_dims(),
            Manufactured::Exp | Manufactured::ExpCutoff { .. } => None,
        }
    }

    pub fn has_time(&self) -> bool {
        matches!(self, Manufactured::SpaceTime { .. })
    }

    /// Whether the function vanishes identically on `{x_1 = 0}`.
    pub fn is_dirichlet(&self) -> bool {
        match self {
            Manufactured::OddBump { .. } | Manufactured::SlabBump { .. } => true,
            Manufactured::SpaceTime { space, .. } => space.is_dirichlet(),
            _ => false,
        }
    }

    /// Value and derivatives at `(t, x)`.
    pub fn jet(&self, t: f64, x: &[f64]) -> Jet {
        let d = x.len();
        match self {
            Manufactured::Bump { center, radius } => bump_profile(&shifted(x, center), *radius),
            Manufactured::Gaussian { center, sigma } => {
                let y = shifted(x, center);
                let s2 = sigma * sigma;
                let g = (-y.iter().map(|v| v * v).sum::<f64>() / (2.0 * s2)).exp();
                Jet {
                    value: g,
                    grad: y.iter().map(|v| -v / s2 * g).collect(),
                    hess: SymMatrix::from_fn(d, |i, j| {
                        (y[i] * y[j] / (s2 * s2) - if i == j { 1.0 / s2 } else { 0.0 }) * g
                    }),
                    dt: 0.0,
                }
            }
            Manufactured::Quadratic { a, b, c } => {
                let am = SymMatrix::from_rows(a);
                let ax: Vec<f64> = (0..d).map(|i| (0..d).map(|j| am.get(i, j) * x[j]).sum()).collect();
                Jet {
                    value: 0.5 * ax.iter().zip(x).map(|(p, q)| p * q).sum::<f64>()
                        + b.iter().zip(x).map(|(p, q)| p * q).sum::<f64>()
                        + c,
                    grad: ax.iter().zip(b).map(|(p, q)| p + q).collect(),
                    hess: am,
                    dt: 0.0,
                }
            }
            Manufactured::Exp => {
                let e = x[0].exp();
                let mut j = Jet::zero(d);
                j.value = e;
                j.grad[0] = e;
                j.hess.set(0, 0, e);
                j
            }
            Manufactured::ExpCutoff { ramp } => {
                let e = x[0].exp();
                let (z, z1, z2) = smooth_step((x[0] + ramp) / ramp);
                let (z1, z2) = (z1 / ramp, z2 / (ramp * ramp));
                let mut j = Jet::zero(d);
                j.value = e * z;
                j.grad[0] = e * (z + z1);
                j.hess.set(0, 0, e * (z + 2.0 * z1 + z2));
                j
            }
            Manufactured::SlabBump { n, .. } => {
                let w = 2f64.powi(-n);
                let mut y = x.to_vec();
                y[0] -= 1.5 * w;
                bump_profile(&y, 0.5 * w)
            }
            Manufactured::OddBump { center, radius } => {
                let p = bump_profile(&shifted(x, center), *radius);
                let x1 = x[0];
                let grad = (0..d)
                    .map(|i| x1 * p.grad[i] + if i == 0 { p.value } else { 0.0 })
                    .collect();
                let hess = SymMatrix::from_fn(d, |i, j| {
                    x1 * p.hess.get(i, j)
                        + if i == 0 { p.grad[j] } else { 0.0 }
                        + if j == 0 { p.grad[i] } else { 0.0 }
                });
                Jet {
                    value: x1 * p.value,
                    grad,
                    hess,
                    dt: 0.0,
                }
            }
            Manufactured::SpaceTime {
                t_center,
                t_radius,
                space,
            } => {
                let s = (t - t_center) / t_radius;
                let v = space.jet(t, x);
                let q = 1.0 - s * s;
                if q <= 0.0 {
                    return Jet::zero(d);
                }
                let psi = (-1.0 / q).exp();
                // d/dt exp(-1/q) = exp(-1/q) q'/q², q' = -2s/t_r
                let dpsi = psi * (-2.0 * s / t_radius) / (q * q);
                Jet {
                    value: psi * v.value,
                    grad: v.grad.iter().map(|g| psi * g).collect(),
                    hess: v.hess.scale(psi),
                    dt: dpsi * v.value,
                }
            }
        }
    }

    /// Samples on `grid`; the time coordinate is axis 0 on space-time grids.
    pub fn sample(&self, grid: Arc<Grid>) -> Result<GridFunction> {
        if let Some(d) = self.space_dims() {
            if d != grid.space_dims() {
                return Err(Error::param(format!(
                    "manufactured solution has {d} space variables, grid has {}",
                    grid.space_dims()
                )));
            }
        }
        let time = grid.domain.has_time();
        GridFunction::sample(grid, |node| {
            let (t, x) = split_node(node, time);
            self.jet(t, x).value
        })
    }

    /// Closed-form jets at every node of `grid`.
    pub fn exact_fields(&self, grid: &Arc<Grid>) -> Vec<Jet> {
        let time = grid.domain.has_time();
        crate::par::map_indices(grid.len(), |n| {
            let node = grid.node(n);
            let (t, x) = split_node(&node, time);
            self.jet(t, x)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(m: &Manufactured, x: &[f64]) {
        let h = 1e-4;
        let j = m.jet(0.0, x);
        let d = x.len();
        for i in 0..d {
            let mut p = x.to_vec();
            let mut q = x.to_vec();
            p[i] += h;
            q[i] -= h;
            let g = (m.jet(0.0, &p).value - m.jet(0.0, &q).value) / (2.0 * h);
            assert!((g - j.grad[i]).abs() < 1e-6 * (1.0 + g.abs()), "grad {i}: {g} vs {}", j.grad[i]);
            for k in 0..d {
                let gk = (m.jet(0.0, &p).grad[k] - m.jet(0.0, &q).grad[k]) / (2.0 * h);
                assert!((gk - j.hess.get(i, k)).abs() < 1e-5 * (1.0 + gk.abs()));
            }
        }
    }

    #[test]
    fn closed_forms_match_difference_quotients() {
        let cases = vec![
            Manufactured::Bump {
                center: vec![0.1, -0.2],
                radius: 1.0,
            },
            Manufactured::Gaussian {
                center: vec![0.0, 0.3],
                sigma: 0.7,
            },
            Manufactured::OddBump {
                center: vec![0.0, 0.1],
                radius: 1.2,
            },
            Manufactured::ExpCutoff { ramp: 1.0 },
            Manufactured::SlabBump { d: 2, n: 1 },
        ];
        for m in &cases {
            let x = if m.space_dims().is_some() { vec![0.35, 0.2] } else { vec![-0.4] };
            fd_check(m, &x);
        }
    }

    #[test]
    fn space_time_derivative() {
        let m = manufactured(
            "space_time",
            toml::toml! {
                t_center = 0.5
                t_radius = 0.5
                space = { name = "bump", center = [0.0], radius = 1.0 }
            },
        )
        .unwrap();
        let h = 1e-5;
        let dt = (m.jet(0.4 + h, &[0.2]).value - m.jet(0.4 - h, &[0.2]).value) / (2.0 * h);
        assert!((dt - m.jet(0.4, &[0.2]).dt).abs() < 1e-8);
    }

    #[test]
    fn unknown_name_is_rejected() {
        let err = manufactured("sinh_wave", toml::Table::new()).unwrap_err();
        assert!(matches!(err, Error::Unknown { .. }));
        assert!(manufactured("bump", toml::toml! { center = [0.0] }).is_err());
    }

    #[test]
    fn odd_bump_vanishes_on_the_plane() {
        let m = Manufactured::OddBump {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        let g = Arc::new(Grid::over_box(super::super::grid::GridDomain::HalfSpace, &[[0.0, 1.0], [-1.0, 1.0]], &[0.1, 0.1]).unwrap());
        let u = m.sample(g).unwrap();
        assert_eq!(u.x1_trace_max(), 0.0);
        assert!(u.max_abs() > 0.1);
    }

    #[test]
    fn exp_cutoff_is_exp_on_the_right() {
        let m = Manufactured::ExpCutoff { ramp: 1.0 };
        let j = m.jet(0.0, &[0.5]);
        assert_eq!(j.value, 0.5f64.exp());
        assert_eq!(j.hess.get(0, 0), j.value);
        assert_eq!(m.jet(0.0, &[-1.0]).value, 0.0);
    }
}
