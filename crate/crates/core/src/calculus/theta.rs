//! The oscillation functional θ: how far `F(·, x)` strays from an
//! `x`-independent reference `F̄` on average over a small ball or cylinder.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operator::OperatorSpec;
use super::symmat::{random_orthogonal, SymMatrix};
use crate::error::{Error, Result};
use crate::operators::Shape;
use crate::par;

/// Exponents of the global τ ladder `2^j`.
const TAU_LADDER: std::ops::RangeInclusive<i32> = -20..=20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMode {
    /// `sup_{τ > τ_0} τ^{-1} |F(τM, x) - F̄(τM)|`.
    Sup,
    /// `|F(M, x) - F̄(M)|`, for positively homogeneous operators.
    Homogeneous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaConfig {
    pub mode: ThetaMode,
    /// Number of unit directions `M`; basis directions come first.
    pub budget: usize,
    pub seed: u64,
    /// Midpoint lattice resolution per axis of the averaging set.
    pub lattice: usize,
    pub shape: Shape,
}

impl ThetaConfig {
    pub fn new(mode: ThetaMode, budget: usize, seed: u64) -> Self {
        Self {
            mode,
            budget,
            seed,
            lattice: 128,
            shape: Shape::Ball,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaReport {
    pub theta: f64,
    /// Direction attaining the maximum, upper triangle.
    pub worst_direction: Vec<f64>,
    pub directions: usize,
    pub points: usize,
    /// τ values scanned (1 in homogeneous mode).
    pub taus: usize,
}

/// Unit-norm directions: `±E_ii`, `±(E_ij + E_ji)/√2`, `±I/√d`, then
/// random spectra in random frames, truncated to `budget`.
pub fn unit_directions(d: usize, budget: usize, seed: u64) -> Vec<SymMatrix> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in i..d {
            let mut m = SymMatrix::zeros(d);
            m.set(i, j, if i == j { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 });
            out.push(m.scale(-1.0));
            out.push(m);
        }
    }
    let id = SymMatrix::identity(d).scale(1.0 / (d as f64).sqrt());
    out.push(id.scale(-1.0));
    out.push(id);
    out.truncate(budget);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < budget {
        let q = random_orthogonal(d, &mut rng);
        let l: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = SymMatrix::conjugate_diag(&q, &l);
        let n = m.norm();
        if n > 1e-8 {
            out.push(m.scale(1.0 / n));
        }
    }
    out
}

/// Midpoint lattice of the averaging set around `z`. For cylinders `z` is
/// `(t, x)`.
pub fn averaging_points(shape: Shape, z: &[f64], r: f64, lattice: usize) -> Vec<Vec<f64>> {
    let time = matches!(shape, Shape::Cylinder | Shape::HalfCylinder);
    let half = matches!(shape, Shape::HalfBall | Shape::HalfCylinder);
    let d = z.len();
    let x1 = usize::from(time);
    let lo: Vec<f64> = (0..d)
        .map(|a| match (time && a == 0, half && a == x1) {
            (true, _) => z[0],
            (_, true) => (z[a] - r).max(0.0),
            _ => z[a] - r,
        })
        .collect();
    let hi: Vec<f64> = (0..d)
        .map(|a| if time && a == 0 { z[0] + r * r } else { z[a] + r })
        .collect();
    let step: Vec<f64> = (0..d).map(|a| (hi[a] - lo[a]) / lattice as f64).collect();
    let mut idx = vec![0usize; d];
    let shape_n = vec![lattice; d];
    let mut out = Vec::new();
    for _ in 0..lattice.pow(d as u32) {
        let p: Vec<f64> = (0..d).map(|a| lo[a] + (idx[a] as f64 + 0.5) * step[a]).collect();
        let dist2: f64 = (x1..d).map(|a| (p[a] - z[a]).powi(2)).sum();
        if dist2 < r * r {
            out.push(p);
        }
        crate::filtration::increment(&mut idx, &shape_n);
    }
    out
}

/// Empirical θ of `op` against the `x`-independent reference `fbar` on the
/// set of radius `r` around `z`. `fbar` is evaluated at `z`.
pub fn oscillation_theta(
    op: &OperatorSpec,
    fbar: &OperatorSpec,
    z: &[f64],
    r: f64,
    tau0: f64,
    cfg: &ThetaConfig,
) -> Result<ThetaReport> {
    if !(r > 0.0) || r > op.r0 {
        return Err(Error::param(format!("radius {r} must lie in (0, R_0 = {}]", op.r0)));
    }
    if cfg.budget == 0 || cfg.lattice == 0 {
        return Err(Error::param("direction budget and lattice must be positive"));
    }
    if !(tau0 >= 0.0) {
        return Err(Error::param(format!("tau0 = {tau0} must be nonnegative")));
    }
    let time = matches!(cfg.shape, Shape::Cylinder | Shape::HalfCylinder);
    if z.len() != op.d + usize::from(time) || fbar.d != op.d {
        return Err(Error::DomainMismatch);
    }
    let taus: Vec<f64> = match cfg.mode {
        ThetaMode::Homogeneous => vec![1.0],
        ThetaMode::Sup => TAU_LADDER.map(|j| 2f64.powi(j)).filter(|&t| t > tau0).collect(),
    };
    let dirs = unit_directions(op.d, cfg.budget, cfg.seed);
    let points = averaging_points(cfg.shape, z, r, cfg.lattice);
    if points.is_empty() {
        return Err(Error::param("averaging set contains no lattice points"));
    }
    let (tz, xz) = super::operator::split_node(z, time);
    let per_dir = par::map_slice(&dirs, |m| {
        if taus.is_empty() {
            return 0.0;
        }
        let scaled: Vec<(f64, SymMatrix, f64)> = taus
            .iter()
            .map(|&t| {
                let tm = m.scale(t);
                let fb = fbar.apply(&tm, tz, xz);
                (t, tm, fb)
            })
            .collect();
        let total: f64 = points
            .iter()
            .map(|p| {
                let (t, x) = super::operator::split_node(p, time);
                scaled
                    .iter()
                    .map(|(tau, tm, fb)| (op.apply(tm, t, x) - fb).abs() / tau)
                    .fold(0.0, f64::max)
            })
            .sum();
        total / points.len() as f64
    });
    let (best, theta) = per_dir
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    Ok(ThetaReport {
        theta,
        worst_direction: dirs[best].upper().to_vec(),
        directions: dirs.len(),
        points: points.len(),
        taus: taus.len(),
    })
}

/// `M ↦ max_λ λ^{-1} F̄(λM)` over the top half of the ladder `2^0..2^40`,
/// a stand-in for the limsup as `λ → ∞`.
pub fn homogenize(fbar: &OperatorSpec) -> Result<OperatorSpec> {
    let inner = fbar.clone();
    let op = OperatorSpec::custom(fbar.d, fbar.delta, move |m, t, x| {
        (20..=40)
            .map(|j| {
                let l = 2f64.powi(j);
                inner.apply(&m.scale(l), t, x) / l
            })
            .fold(f64::NEG_INFINITY, f64::max)
    })?;
    Ok(op.with_k_f(fbar.k_f).with_r0(fbar.r0).with_homogeneous(true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::operator::Side;

    #[test]
    fn directions_are_unit_and_deterministic() {
        let a = unit_directions(3, 40, 9);
        assert_eq!(a.len(), 40);
        for m in &a {
            assert!((m.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(a, unit_directions(3, 40, 9));
    }

    #[test]
    fn x_independent_operator_has_zero_theta() {
        let op = OperatorSpec::pucci(2, 0.5, Side::Max).unwrap();
        let cfg = ThetaConfig {
            lattice: 16,
            ..ThetaConfig::new(ThetaMode::Sup, 12, 1)
        };
        let rep = oscillation_theta(&op, &op, &[0.3, 0.1], 0.5, 0.0, &cfg).unwrap();
        assert!(rep.theta <= 1e-12);
        assert_eq!(rep.taus, 41);
    }

    #[test]
    fn radius_above_r0_is_rejected() {
        let op = OperatorSpec::laplacian(2).with_r0(0.5);
        let cfg = ThetaConfig::new(ThetaMode::Homogeneous, 4, 0);
        assert!(oscillation_theta(&op, &op, &[0.0, 0.0], 0.6, 0.0, &cfg).is_err());
    }

    #[test]
    fn cylinder_points_are_forward_in_time() {
        let pts = averaging_points(Shape::Cylinder, &[1.0, 0.0], 0.5, 20);
        assert!(pts.iter().all(|p| p[0] >= 1.0 && p[0] < 1.25 && p[1].abs() < 0.5));
        let half = averaging_points(Shape::HalfBall, &[0.0, 0.0], 1.0, 20);
        assert!(half.iter().all(|p| p[0] >= 0.0));
    }

    #[test]
    fn homogenized_pucci_is_itself() {
        let op = OperatorSpec::pucci(2, 0.5, Side::Min).unwrap();
        let h = homogenize(&op).unwrap();
        let m = SymMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, -2.0]]);
        assert!((h.apply(&m, 0.0, &[0.0, 0.0]) - op.apply(&m, 0.0, &[0.0, 0.0])).abs() < 1e-12);
    }
}
