//! Finite-difference derivatives on uniform grids.
//!
//! Interior nodes use central differences. Faces use one-sided second-order
//! stencils: `(-3, 4, -1) / 2h` for first derivatives and
//! `(2, -5, 4, -1) / h^2` for second derivatives, falling back to
//! `(1, -2, 1) / h^2` when an axis has only three nodes. Mixed derivatives
//! nest the first-derivative operator, so every stencil is exact on
//! quadratics.

use std::sync::Arc;

use super::grid::{Grid, GridFunction};
use super::symmat::SymMatrix;
use crate::error::{Error, Result};

/// Space derivatives of a grid function, plus `∂_t u` on space-time grids.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub grid: Arc<Grid>,
    /// `D_i u` for each space axis.
    pub du: Vec<Vec<f64>>,
    /// `D^2 u` at each node.
    pub d2u: Vec<SymMatrix>,
    pub dt: Option<Vec<f64>>,
}

impl Derivatives {
    /// `|Du|` at each node.
    pub fn grad_norm(&self) -> Vec<f64> {
        let n = self.grid.len();
        (0..n)
            .map(|i| self.du.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect()
    }

    /// `|D^2 u|` (Frobenius) at each node.
    pub fn hessian_norm(&self) -> Vec<f64> {
        self.d2u.iter().map(SymMatrix::norm).collect()
    }

    /// `D^2 u` flattened node-major as full `d x d` rows, for matrix-valued
    /// sharp functions.
    pub fn hessian_flat(&self) -> Vec<f64> {
        let d = self.du.len();
        let mut out = Vec::with_capacity(self.d2u.len() * d * d);
        for m in &self.d2u {
            for i in 0..d {
                for j in 0..d {
                    out.push(m.get(i, j));
                }
            }
        }
        out
    }
}

/// Derivative of order 1 or 2 along `axis`.
pub fn diff_axis(grid: &Grid, values: &[f64], axis: usize, order: u8) -> Result<Vec<f64>> {
    let n = grid.n[axis];
    if n < 3 {
        return Err(Error::Grid(format!("axis {axis} has {n} nodes; at least 3 are needed")));
    }
    let h = grid.h[axis];
    let stride = grid.strides()[axis];
    let mut out = vec![0.0; values.len()];
    for base in 0..values.len() {
        if (base / stride) % n != 0 {
            continue;
        }
        let at = |k: usize| values[base + k * stride];
        for k in 0..n {
            let v = match order {
                1 => {
                    if k == 0 {
                        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
                    } else if k == n - 1 {
                        (3.0 * at(k) - 4.0 * at(k - 1) + at(k - 2)) / (2.0 * h)
                    } else {
                        (at(k + 1) - at(k - 1)) / (2.0 * h)
                    }
                }
                2 => {
                    let h2 = h * h;
                    if k == 0 {
                        if n >= 4 {
                            (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2
                        } else {
                            (at(0) - 2.0 * at(1) + at(2)) / h2
                        }
                    } else if k == n - 1 {
                        if n >= 4 {
                            (2.0 * at(k) - 5.0 * at(k - 1) + 4.0 * at(k - 2) - at(k - 3)) / h2
                        } else {
                            (at(k) - 2.0 * at(k - 1) + at(k - 2)) / h2
                        }
                    } else {
                        (at(k + 1) - 2.0 * at(k) + at(k - 1)) / h2
                    }
                }
                _ => return Err(Error::param(format!("derivative order {order} unsupported"))),
            };
            out[base + k * stride] = v;
        }
    }
    Ok(out)
}

pub fn fd_derivatives(u: &GridFunction) -> Result<Derivatives> {
    let grid = u.grid();
    let t = usize::from(grid.domain.has_time());
    let d = grid.space_dims();
    let du: Vec<Vec<f64>> = (0..d)
        .map(|i| diff_axis(grid, u.values(), t + i, 1))
        .collect::<Result<_>>()?;
    let mut entries = vec![Vec::new(); d * (d + 1) / 2];
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            entries[k] = if i == j {
                diff_axis(grid, u.values(), t + i, 2)?
            } else {
                diff_axis(grid, &du[j], t + i, 1)?
            };
            k += 1;
        }
    }
    let d2u = (0..grid.len())
        .map(|n| SymMatrix::from_upper(d, entries.iter().map(|e| e[n]).collect()).unwrap())
        .collect();
    let dt = if t == 1 {
        Some(diff_axis(grid, u.values(), 0, 1)?)
    } else {
        None
    };
    Ok(Derivatives {
        grid: Arc::clone(grid),
        du,
        d2u,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::grid::GridDomain;

    #[test]
    fn quadratic_is_exact_everywhere() {
        let g = Arc::new(Grid::cube(2, 1.0, 0.125).unwrap());
        let u = GridFunction::sample(g, |x| x[0] * x[0] + 3.0 * x[0] * x[1] - 2.0 * x[1] + 1.0).unwrap();
        let der = fd_derivatives(&u).unwrap();
        for (n, m) in der.d2u.iter().enumerate() {
            assert!((m.get(0, 0) - 2.0).abs() < 1e-12, "node {n}");
            assert!((m.get(0, 1) - 3.0).abs() < 1e-12);
            assert!(m.get(1, 1).abs() < 1e-12);
            let x = u.grid().node(n);
            assert!((der.du[0][n] - (2.0 * x[0] + 3.0 * x[1])).abs() < 1e-12);
            assert!((der.du[1][n] - (3.0 * x[0] - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_have_zero_derivatives() {
        let g = Arc::new(Grid::cube(3, 1.0, 0.5).unwrap());
        let der = fd_derivatives(&GridFunction::constant(g, 4.0)).unwrap();
        assert!(der.hessian_norm().iter().all(|&v| v == 0.0));
        assert!(der.grad_norm().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn three_node_axis_falls_back() {
        let g = Arc::new(Grid::over_box(GridDomain::Space, &[[0.0, 1.0]], &[0.5]).unwrap());
        let u = GridFunction::sample(g, |x| 3.0 * x[0] * x[0]).unwrap();
        let der = fd_derivatives(&u).unwrap();
        assert!(der.d2u.iter().all(|m| (m.get(0, 0) - 6.0).abs() < 1e-12));
        let g = Arc::new(Grid::over_box(GridDomain::Space, &[[0.0, 1.0]], &[1.0]).unwrap());
        assert!(fd_derivatives(&GridFunction::constant(g, 0.0)).is_err());
    }

    #[test]
    fn time_derivative_on_space_time_grid() {
        let g = Arc::new(Grid::over_box(GridDomain::SpaceTime, &[[0.0, 1.0], [-1.0, 1.0]], &[0.1, 0.25]).unwrap());
        let u = GridFunction::sample(g, |x| x[0] * x[0] + x[1] * x[1] * x[0]).unwrap();
        let der = fd_derivatives(&u).unwrap();
        let dt = der.dt.as_ref().unwrap();
        for n in 0..u.len() {
            let x = u.grid().node(n);
            assert!((dt[n] - (2.0 * x[0] + x[1] * x[1])).abs() < 1e-12);
            assert!((der.d2u[n].get(0, 0) - 2.0 * x[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn second_order_on_sine() {
        let err = |h: f64| {
            let g = Arc::new(Grid::over_box(GridDomain::Space, &[[0.0, 2.0]], &[h]).unwrap());
            let u = GridFunction::sample(g, |x| x[0].sin()).unwrap();
            let der = fd_derivatives(&u).unwrap();
            der.d2u
                .iter()
                .enumerate()
                .map(|(n, m)| (m.get(0, 0) + u.grid().node(n)[0].sin()).abs())
                .fold(0.0, f64::max)
        };
        let r = err(0.05) / err(0.025);
        assert!((3.5..4.5).contains(&r), "ratio {r}");
    }
}
