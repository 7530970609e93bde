//! Fully nonlinear operators `F(u'', t, x)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fd::fd_derivatives;
use super::grid::GridFunction;
use super::symmat::{normal, random_symmetric, SymMatrix};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::par;

pub type CoefficientFn = Arc<dyn Fn(f64, &[f64]) -> SymMatrix + Send + Sync>;
pub type CustomFn = Arc<dyn Fn(&SymMatrix, f64, &[f64]) -> f64 + Send + Sync>;

/// Matrix coefficient `a(t, x)`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(SymMatrix),
    /// Upper-triangle entries as expressions in `t, x1, ..`.
    Expr { d: usize, entries: Vec<Expr> },
    Func(CoefficientFn),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(m) => write!(f, "Constant({:?})", m.upper()),
            Coefficient::Expr { entries, .. } => {
                let s: Vec<String> = entries.iter().map(|e| e.to_string()).collect();
                write!(f, "Expr({s:?})")
            }
            Coefficient::Func(_) => write!(f, "Func(..)"),
        }
    }
}

impl Coefficient {
    pub fn at(&self, t: f64, x: &[f64]) -> SymMatrix {
        match self {
            Coefficient::Constant(m) => m.clone(),
            Coefficient::Expr { d, entries } => {
                SymMatrix::from_upper(*d, entries.iter().map(|e| e.eval(t, x)).collect()).unwrap()
            }
            Coefficient::Func(f) => f(t, x),
        }
    }

    /// Parses full rows of expressions; the upper triangle is used and the
    /// lower one must agree textually or be omitted as `"_"`.
    pub fn from_rows(rows: &[Vec<String>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::param("coefficient matrix must be square"));
        }
        let mut entries = Vec::new();
        for i in 0..d {
            for j in i..d {
                let e = Expr::parse(&rows[i][j])?;
                let low = rows[j][i].trim();
                if i != j && low != "_" && Expr::parse(low)? != e {
                    return Err(Error::param(format!("coefficient is not symmetric at ({}, {})", i + 1, j + 1)));
                }
                entries.push(e);
            }
        }
        Ok(Coefficient::Expr { d, entries })
    }
}

#[derive(Clone)]
pub enum OperatorKind {
    /// `tr(a(t, x) M)`.
    Linear(Coefficient),
    /// `max_α tr(a_α(t, x) M)`.
    Bellman(Vec<Coefficient>),
    PucciMax,
    PucciMin,
    /// Any pointwise rule, e.g. tabulated data wrapped in an interpolant.
    Custom(CustomFn),
}

impl fmt::Debug for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Linear(a) => write!(f, "Linear({a:?})"),
            OperatorKind::Bellman(v) => write!(f, "Bellman({v:?})"),
            OperatorKind::PucciMax => write!(f, "PucciMax"),
            OperatorKind::PucciMin => write!(f, "PucciMin"),
            OperatorKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Max,
    Min,
}

/// `sup` (or `inf`) of `tr(aM)` over `a` in `S_δ`, in closed form.
pub fn pucci_extremal(m: &SymMatrix, delta: f64, side: Side) -> f64 {
    let (mut pos, mut neg) = (0.0, 0.0);
    for l in m.eigenvalues() {
        if l > 0.0 {
            pos += l;
        } else {
            neg += l;
        }
    }
    match side {
        Side::Max => pos / delta + delta * neg,
        Side::Min => delta * pos + neg / delta,
    }
}

#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    /// Space dimension.
    pub d: usize,
    pub delta: f64,
    pub k_f: f64,
    pub r0: f64,
    pub tau0: f64,
    pub homogeneous: bool,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, d: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::param(format!("delta must lie in (0, 1], got {delta}")));
        }
        let homogeneous = !matches!(kind, OperatorKind::Custom(_));
        Ok(Self {
            kind,
            d,
            delta,
            k_f: d as f64 / delta,
            r0: 1.0,
            tau0: 0.0,
            homogeneous,
        })
    }

    /// `Δ` as a linear operator with `a = I`.
    pub fn laplacian(d: usize) -> Self {
        Self::new(OperatorKind::Linear(Coefficient::Constant(SymMatrix::identity(d))), d, 1.0).unwrap()
    }

    pub fn pucci(d: usize, delta: f64, side: Side) -> Result<Self> {
        let kind = match side {
            Side::Max => OperatorKind::PucciMax,
            Side::Min => OperatorKind::PucciMin,
        };
        Self::new(kind, d, delta)
    }

    pub fn custom(d: usize, delta: f64, f: impl Fn(&SymMatrix, f64, &[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::new(OperatorKind::Custom(Arc::new(f)), d, delta)
    }

    pub fn with_k_f(mut self, k_f: f64) -> Self {
        self.k_f = k_f;
        self
    }

    pub fn with_r0(mut self, r0: f64) -> Self {
        self.r0 = r0;
        self
    }

    pub fn with_tau0(mut self, tau0: f64) -> Self {
        self.tau0 = tau0;
        self
    }

    pub fn with_homogeneous(mut self, h: bool) -> Self {
        self.homogeneous = h;
        self
    }

    /// `F(M, t, x)`.
    pub fn apply(&self, m: &SymMatrix, t: f64, x: &[f64]) -> f64 {
        match &self.kind {
            OperatorKind::Linear(a) => a.at(t, x).dot(m),
            OperatorKind::Bellman(family) => family
                .iter()
                .map(|a| a.at(t, x).dot(m))
                .fold(f64::NEG_INFINITY, f64::max),
            OperatorKind::PucciMax => pucci_extremal(m, self.delta, Side::Max),
            OperatorKind::PucciMin => pucci_extremal(m, self.delta, Side::Min),
            OperatorKind::Custom(f) => f(m, t, x),
        }
    }

    /// Coefficient attaining the Bellman maximum, or the linear coefficient.
    pub fn selection(&self, m: &SymMatrix, t: f64, x: &[f64]) -> Option<SymMatrix> {
        match &self.kind {
            OperatorKind::Linear(a) => Some(a.at(t, x)),
            OperatorKind::Bellman(family) => {
                let mut best: Option<(f64, SymMatrix)> = None;
                for a in family {
                    let a = a.at(t, x);
                    let v = a.dot(m);
                    if best.as_ref().map_or(true, |(b, _)| v > *b) {
                        best = Some((v, a));
                    }
                }
                best.map(|(_, a)| a)
            }
            _ => None,
        }
    }

    /// Checks that every coefficient at `(t, x)` lies in `S_δ`.
    pub fn check_coefficients(&self, t: f64, x: &[f64]) -> Result<()> {
        let family: Vec<&Coefficient> = match &self.kind {
            OperatorKind::Linear(a) => vec![a],
            OperatorKind::Bellman(v) => v.iter().collect(),
            _ => return Ok(()),
        };
        for a in family {
            let m = a.at(t, x);
            if m.dim() != self.d {
                return Err(Error::param(format!("coefficient is {}x{}, operator has d = {}", m.dim(), m.dim(), self.d)));
            }
            if let Err(eigenvalue) = m.in_s_delta(self.delta, 1e-12) {
                let mut point = vec![t];
                point.extend_from_slice(x);
                return Err(Error::Ellipticity {
                    point,
                    eigenvalue,
                    lo: self.delta,
                    hi: 1.0 / self.delta,
                });
            }
        }
        Ok(())
    }
}

/// Splits a grid node into `(t, x)`.
pub(crate) fn split_node(node: &[f64], has_time: bool) -> (f64, &[f64]) {
    if has_time {
        (node[0], &node[1..])
    } else {
        (0.0, node)
    }
}

/// `F[u]` at every node, plus `∂_t u` on space-time grids.
pub fn evaluate_operator(op: &OperatorSpec, u: &GridFunction) -> Result<GridFunction> {
    let grid = u.grid();
    if grid.space_dims() != op.d {
        return Err(Error::param(format!("operator has d = {}, grid has {} space axes", op.d, grid.space_dims())));
    }
    let der = fd_derivatives(u)?;
    let has_time = grid.domain.has_time();
    let vals = par::map_indices(grid.len(), |n| {
        let node = grid.node(n);
        let (t, x) = split_node(&node, has_time);
        op.check_coefficients(t, x)?;
        let dt = der.dt.as_ref().map_or(0.0, |d| d[n]);
        Ok(op.apply(&der.d2u[n], t, x) + dt)
    });
    let vals: Result<Vec<f64>> = vals.into_iter().collect();
    GridFunction::new(Arc::clone(grid), vals?)
}

/// Sampling parameters for [`check_operator_class`].
#[derive(Clone, Debug)]
pub struct ClassCheck {
    pub budget: usize,
    pub seed: u64,
    /// Space box the sample points are drawn from.
    pub region: Vec<[f64; 2]>,
    /// Time interval, for parabolic operators.
    pub time: Option<[f64; 2]>,
    /// Relative slack on every inequality.
    pub tol: f64,
}

impl ClassCheck {
    pub fn new(budget: usize, seed: u64, region: Vec<[f64; 2]>) -> Self {
        Self {
            budget,
            seed,
            region,
            time: None,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub check: String,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub t: f64,
    pub x: Vec<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub samples: usize,
    /// Largest `|F(A) - F(B)| / |A - B|` seen.
    pub lipschitz_ratio: f64,
    pub lipschitz_ok: bool,
    pub zero_max: f64,
    pub zero_ok: bool,
    pub homogeneity_err: Option<f64>,
    pub homogeneity_ok: bool,
    pub ellipticity_ok: bool,
    pub coefficients_ok: bool,
    pub witnesses: Vec<Witness>,
}

impl ClassReport {
    pub fn passed(&self) -> bool {
        self.lipschitz_ok && self.zero_ok && self.homogeneity_ok && self.ellipticity_ok && self.coefficients_ok
    }
}

/// Sampled check of the Lipschitz bound, `F(0, x) = 0`, homogeneity (when
/// flagged) and two-sided `S_δ` ellipticity of difference quotients.
pub fn check_operator_class(op: &OperatorSpec, check: &ClassCheck) -> Result<ClassReport> {
    if check.budget == 0 {
        return Err(Error::param("budget must be at least 1"));
    }
    if check.region.len() != op.d {
        return Err(Error::param("sample region must have one interval per space axis"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(check.seed);
    let d = op.d;
    let tol = check.tol;
    let mut rep = ClassReport {
        samples: check.budget,
        lipschitz_ratio: 0.0,
        lipschitz_ok: true,
        zero_max: 0.0,
        zero_ok: true,
        homogeneity_err: op.homogeneous.then_some(0.0),
        homogeneity_ok: true,
        ellipticity_ok: true,
        coefficients_ok: true,
        witnesses: Vec::new(),
    };
    let witness = |rep: &mut ClassReport, check: &str, a: &SymMatrix, b: &SymMatrix, t: f64, x: &[f64], detail: String| {
        if !rep.witnesses.iter().any(|w| w.check == check) {
            rep.witnesses.push(Witness {
                check: check.into(),
                a: a.upper().to_vec(),
                b: b.upper().to_vec(),
                t,
                x: x.to_vec(),
                detail,
            });
        }
    };
    for _ in 0..check.budget {
        let x: Vec<f64> = check.region.iter().map(|&[a, b]| rng.gen_range(a..=b)).collect();
        let t = check.time.map_or(0.0, |[a, b]| rng.gen_range(a..=b));
        let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
        let a = random_symmetric(d, &mut rng).scale(scale);
        let b = random_symmetric(d, &mut rng).scale(scale);
        let zero = SymMatrix::zeros(d);

        if let Err(e) = op.check_coefficients(t, &x) {
            rep.coefficients_ok = false;
            witness(&mut rep, "coefficients", &zero, &zero, t, &x, e.to_string());
        }

        let fa = op.apply(&a, t, &x);
        let fb = op.apply(&b, t, &x);
        let dist = a.sub(&b).norm();
        if dist > 0.0 {
            let ratio = (fa - fb).abs() / dist;
            rep.lipschitz_ratio = rep.lipschitz_ratio.max(ratio);
            if ratio > op.k_f * (1.0 + tol) {
                rep.lipschitz_ok = false;
                witness(&mut rep, "lipschitz", &a, &b, t, &x, format!("ratio {ratio} > K_F = {}", op.k_f));
            }
        }

        let f0 = op.apply(&zero, t, &x).abs();
        rep.zero_max = rep.zero_max.max(f0);
        if f0 > 1e-12 {
            rep.zero_ok = false;
            witness(&mut rep, "zero", &zero, &zero, t, &x, format!("|F(0)| = {f0}"));
        }

        if op.homogeneous {
            let tau = 10f64.powf(rng.gen_range(-3.0..3.0));
            let lhs = op.apply(&a.scale(tau), t, &x);
            let err = (lhs - tau * fa).abs() / (tau * fa.abs()).max(tau * a.norm()).max(f64::MIN_POSITIVE);
            if let Some(h) = rep.homogeneity_err.as_mut() {
                *h = h.max(err);
            }
            if err > 1e-9 {
                rep.homogeneity_ok = false;
                witness(&mut rep, "homogeneity", &a, &a.scale(tau), t, &x, format!("relative error {err}"));
            }
        }

        // P = B B^T is positive semidefinite
        let bm = nalgebra::DMatrix::from_fn(d, d, |_, _| normal(&mut rng));
        let p = SymMatrix::from_dmatrix(&(&bm * bm.transpose())).scale(scale);
        let s = rng.gen_range(0.01..2.0);
        let tr = s * p.trace();
        let diff = op.apply(&a.add(&p.scale(s)), t, &x) - fa;
        let slack = tol * (tr.abs() + fa.abs() + 1e-300);
        if diff < op.delta * tr - slack {
            rep.ellipticity_ok = false;
            witness(&mut rep, "ellipticity_lower", &a, &p, t, &x, format!("increment {diff} < δ s tr P = {}", op.delta * tr));
        } else if diff > tr / op.delta + slack {
            rep.ellipticity_ok = false;
            witness(&mut rep, "ellipticity_upper", &a, &p, t, &x, format!("increment {diff} > s tr P / δ = {}", tr / op.delta));
        }
    }
    Ok(rep)
}
