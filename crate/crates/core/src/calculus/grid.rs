//! Uniform node grids and sampled functions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtration::{increment, Filtration};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridDomain {
    /// Box in `R^d`.
    Space,
    /// Box in `{x_1 >= 0}`; axis 0 is `x_1`.
    HalfSpace,
    /// `[t0, t1] x box`, `t0 >= 0`; axis 0 is time.
    SpaceTime,
    /// Space-time box in `{t >= 0, x_1 >= 0}`; axis 0 is time, axis 1 is `x_1`.
    SpaceTimeHalf,
}

impl GridDomain {
    pub fn has_time(self) -> bool {
        matches!(self, GridDomain::SpaceTime | GridDomain::SpaceTimeHalf)
    }

    pub fn is_half(self) -> bool {
        matches!(self, GridDomain::HalfSpace | GridDomain::SpaceTimeHalf)
    }

    /// Axis holding `x_1`.
    pub fn x1_axis(self) -> usize {
        usize::from(self.has_time())
    }
}

/// Nodes `lo + i h` for `i in 0..n` on every axis, row-major with axis 0
/// slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub domain: GridDomain,
    pub lo: Vec<f64>,
    pub h: Vec<f64>,
    pub n: Vec<usize>,
}

impl Grid {
    pub fn new(domain: GridDomain, lo: Vec<f64>, h: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        let g = Self { domain, lo, h, n };
        g.validate()?;
        Ok(g)
    }

    /// Grid covering `bounds` with spacing as close to `h` as the box allows
    /// (rounded so the box is covered exactly).
    pub fn over_box(domain: GridDomain, bounds: &[[f64; 2]], h: &[f64]) -> Result<Self> {
        if bounds.len() != h.len() {
            return Err(Error::Grid("bounds and spacing differ in length".into()));
        }
        let mut lo = Vec::new();
        let mut hs = Vec::new();
        let mut n = Vec::new();
        for (&[a, b], &step) in bounds.iter().zip(h) {
            if !(step > 0.0) || !(b > a) {
                return Err(Error::Grid(format!("bad axis [{a}, {b}] with spacing {step}")));
            }
            let cells = ((b - a) / step).round().max(1.0) as usize;
            lo.push(a);
            hs.push((b - a) / cells as f64);
            n.push(cells + 1);
        }
        Self::new(domain, lo, hs, n)
    }

    /// Cubic space grid `[-l, l]^d`.
    pub fn cube(d: usize, l: f64, h: f64) -> Result<Self> {
        Self::over_box(GridDomain::Space, &vec![[-l, l]; d], &vec![h; d])
    }

    /// Nodes at the finest cell centres of a filtration, so grid values and
    /// field values line up one to one.
    pub fn from_filtration(f: &Filtration) -> Result<Self> {
        let spec = f.spec();
        let domain = match spec.geometry {
            crate::filtration::Geometry::Half { .. } => GridDomain::HalfSpace,
            crate::filtration::Geometry::Parabolic { .. } => GridDomain::SpaceTime,
            _ => GridDomain::Space,
        };
        let h: Vec<f64> = (0..f.dims()).map(|a| spec.side(f.n_max(), a)).collect();
        let lo = (0..f.dims()).map(|a| spec.bounds[a][0] + 0.5 * h[a]).collect();
        Self::new(domain, lo, h, f.finest_shape().to_vec())
    }

    fn validate(&self) -> Result<()> {
        let d = self.dims();
        if d == 0 || self.h.len() != d || self.n.len() != d {
            return Err(Error::Grid("lo, h and n must have one entry per axis".into()));
        }
        if self.domain.has_time() && d < 2 {
            return Err(Error::Grid("space-time grid needs at least one space axis".into()));
        }
        for a in 0..d {
            if !(self.h[a] > 0.0 && self.h[a].is_finite()) {
                return Err(Error::Grid(format!("axis {a}: spacing {} must be positive", self.h[a])));
            }
            if self.n[a] == 0 {
                return Err(Error::Grid(format!("axis {a} has no nodes")));
            }
        }
        let tol = |a: usize| 1e-12 * self.h[a];
        if self.domain.has_time() && self.lo[0] < -tol(0) {
            return Err(Error::Grid(format!("time starts at {} < 0", self.lo[0])));
        }
        if self.domain.is_half() {
            let a = self.domain.x1_axis();
            if self.lo[a] < -tol(a) {
                return Err(Error::Grid(format!("x_1 starts at {} < 0 on a half-space grid", self.lo[a])));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    /// Number of space axes.
    pub fn space_dims(&self) -> usize {
        self.dims() - usize::from(self.domain.has_time())
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + i as f64 * self.h[axis]
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.coord(axis, self.n[axis] - 1)
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims()];
        for a in (0..self.dims().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.n[a + 1];
        }
        s
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims()];
        for a in (0..self.dims()).rev() {
            idx[a] = flat % self.n[a];
            flat /= self.n[a];
        }
        idx
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.coord(a, i))
            .collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let mut idx = vec![0usize; self.dims()];
        let mut out = Vec::with_capacity(self.len());
        for _ in 0..self.len() {
            out.push(idx.iter().enumerate().map(|(a, &i)| self.coord(a, i)).collect());
            increment(&mut idx, &self.n);
        }
        out
    }

    /// Trapezoid weights along one axis.
    pub fn axis_weights(&self, axis: usize) -> Vec<f64> {
        let n = self.n[axis];
        let h = self.h[axis];
        if n == 1 {
            return vec![h];
        }
        (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
            .collect()
    }

    /// Tensor trapezoid weights for every node.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let per: Vec<Vec<f64>> = (0..self.dims()).map(|a| self.axis_weights(a)).collect();
        let mut idx = vec![0usize; self.dims()];
        let mut out = Vec::with_capacity(self.len());
        for _ in 0..self.len() {
            out.push(idx.iter().enumerate().map(|(a, &i)| per[a][i]).product());
            increment(&mut idx, &self.n);
        }
        out
    }

    /// Same box with every spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            domain: self.domain,
            lo: self.lo.clone(),
            h: self.h.iter().map(|h| h / 2.0).collect(),
            n: self.n.iter().map(|&n| 2 * (n - 1) + 1).collect(),
        }
    }

    /// Flat indices of nodes on the face `{x_1 = 0}`, if the grid touches it.
    pub fn x1_zero_face(&self) -> Vec<usize> {
        let a = self.domain.x1_axis();
        if self.lo[a].abs() > 1e-12 * self.h[a] {
            return Vec::new();
        }
        let s = self.strides()[a];
        (0..self.len()).filter(|i| (i / s) % self.n[a] == 0).collect()
    }
}

/// Node samples on a [`Grid`].
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn sample(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![c; n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.grid.len());
        Self {
            grid: Arc::clone(&self.grid),
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn check_domain(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_domain(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Trapezoid integral over the grid box.
    pub fn integral(&self) -> f64 {
        self.grid
            .quadrature_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.map(|v| v.abs().powf(p)).integral().powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|u|` on `{x_1 = 0}`; zero when the grid does not reach it.
    pub fn x1_trace_max(&self) -> f64 {
        self.grid
            .x1_zero_face()
            .iter()
            .fold(0.0, |m, &i| m.max(self.values[i].abs()))
    }

    /// CSV with node coordinates then value.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.grid.dims()).map(|a| format!("x{a}")).collect();
        header.push("value".into());
        w.write_record(&header)?;
        for (i, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.grid.node(i).iter().map(|x| format!("{x:?}")).collect();
            row.push(format!("{v:?}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{build_filtration, FiltrationSpec};

    #[test]
    fn box_grid_layout() {
        let g = Grid::over_box(GridDomain::Space, &[[0.0, 1.0], [-1.0, 1.0]], &[0.25, 0.5]).unwrap();
        assert_eq!(g.n, vec![5, 5]);
        assert_eq!(g.node(6), vec![0.25, -0.5]);
        assert_eq!(g.multi_index(6), vec![1, 1]);
        assert_eq!(g.strides(), vec![5, 1]);
        let r = g.refined();
        assert_eq!(r.n, vec![9, 9]);
        assert_eq!(r.h, vec![0.125, 0.25]);
    }

    #[test]
    fn trapezoid_is_exact_on_bilinear() {
        let g = Arc::new(Grid::cube(2, 1.0, 0.25).unwrap());
        let u = GridFunction::sample(g, |x| 1.0 + x[0] + 2.0 * x[1] + x[0] * x[1]).unwrap();
        assert!((u.integral() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn half_space_grid_must_start_at_zero_or_above() {
        assert!(Grid::over_box(GridDomain::HalfSpace, &[[-1.0, 1.0]], &[0.5]).is_err());
        let g = Grid::over_box(GridDomain::SpaceTimeHalf, &[[0.0, 1.0], [0.0, 1.0]], &[0.5, 0.5]).unwrap();
        assert_eq!(g.x1_zero_face(), vec![0, 3, 6]);
    }

    #[test]
    fn trace_detection() {
        let g = Arc::new(Grid::over_box(GridDomain::HalfSpace, &[[0.0, 1.0], [0.0, 1.0]], &[0.25, 0.25]).unwrap());
        let odd = GridFunction::sample(Arc::clone(&g), |x| x[0] * (1.0 + x[1])).unwrap();
        assert_eq!(odd.x1_trace_max(), 0.0);
        let even = GridFunction::sample(g, |x| 1.0 + x[0]).unwrap();
        assert_eq!(even.x1_trace_max(), 1.0);
    }

    #[test]
    fn filtration_grid_lines_up_with_cells() {
        let f = build_filtration(FiltrationSpec::parabolic(1, 0, 1, vec![[0.0, 1.0], [0.0, 1.0]])).unwrap();
        let g = Grid::from_filtration(&f).unwrap();
        assert_eq!(g.nodes(), f.finest_centers());
    }
}
