//! Dependence of the global estimate on the localization radius `R_0`.
//!
//! Dilating a bump of radius `1` to radius `R_0` (with grid and box scaled
//! alike) multiplies `∫ H^p / ∫ U^p` by `R_0^{-2p}` and leaves
//! `∫ |F|^p / ∫ H^p` unchanged, so the value-term coefficient must follow
//! `R_0^{-2p}` while the `F`-term coefficient stays flat.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::fields::{int_pow, masses, Fields};
use crate::calculus::grid::{Grid, GridDomain};
use crate::calculus::manufactured::Manufactured;
use crate::calculus::operator::OperatorSpec;
use crate::error::{Error, Result};
use crate::weights::Weight;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingProbe {
    pub p: f64,
    pub r0: Vec<f64>,
    /// `∫ H^p / ∫ U^p` per radius.
    pub value_coefficient: Vec<f64>,
    /// `∫ H^p / ∫ |F|^p` per radius.
    pub f_coefficient: Vec<f64>,
    /// Least-squares slope of `log value_coefficient` against `log R_0`.
    pub value_slope: f64,
    pub f_slope: f64,
}

impl ScalingProbe {
    /// Whether the value slope is `-2p` within `rel`.
    pub fn matches(&self, rel: f64) -> bool {
        let want = -2.0 * self.p;
        (self.value_slope - want).abs() <= rel * want.abs()
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs the global estimate for a Laplacian in `d` variables on a bump of
/// radius `R_0` for every `R_0` in `r0`, with `h / R_0` fixed at `h_ratio`.
pub fn r0_scaling_probe(d: usize, p: f64, r0: &[f64], h_ratio: f64) -> Result<ScalingProbe> {
    if r0.len() < 2 || r0.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(Error::param("probe needs at least two radii in (0, 1]"));
    }
    if !(p > d as f64) {
        return Err(Error::param(format!("exponent constraint violated: p = {p} must exceed d = {d}")));
    }
    let mut vc = Vec::new();
    let mut fc = Vec::new();
    for &r in r0 {
        let l = 1.25 * r;
        let grid = Arc::new(Grid::over_box(GridDomain::Space, &vec![[-l, l]; d], &vec![h_ratio * r; d])?);
        let op = OperatorSpec::laplacian(d).with_r0(r);
        let sol = Manufactured::Bump {
            center: vec![0.0; d],
            radius: r,
        };
        let fl = Fields::sample(&op, &sol, Arc::clone(&grid), 1.0)?;
        let m = masses(&Weight::unit(), &grid)?;
        let h = int_pow(&fl.h, &m, p, None);
        vc.push(h / int_pow(&fl.u, &m, p, None));
        fc.push(h / int_pow(&fl.f, &m, p, None));
    }
    let lx: Vec<f64> = r0.iter().map(|r| r.ln()).collect();
    let lv: Vec<f64> = vc.iter().map(|v| v.ln()).collect();
    let lf: Vec<f64> = fc.iter().map(|v| v.ln()).collect();
    Ok(ScalingProbe {
        p,
        r0: r0.to_vec(),
        value_slope: slope(&lx, &lv),
        f_slope: slope(&lx, &lf),
        value_coefficient: vc,
        f_coefficient: fc,
    })
}
