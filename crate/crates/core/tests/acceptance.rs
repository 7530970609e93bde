//! Acceptance checks, one line per criterion.
//!
//! Runs as a plain binary so each criterion reports PASS or FAIL on its own
//! line; the process exits non-zero when any of them fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wsobolev::calculus::fd::diff_axis;
use wsobolev::calculus::operator::{pucci_extremal, Side};
use wsobolev::calculus::symmat::{random_orthogonal, random_symmetric};
use wsobolev::calculus::{
    fd_derivatives, oscillation_theta, Grid, GridDomain, GridFunction, Manufactured, OperatorSpec, SymMatrix,
    ThetaConfig, ThetaMode,
};
use wsobolev::config::{run_suite, SuiteConfig};
use wsobolev::filtration::{build_filtration, DiscreteField, FiltrationSpec};
use wsobolev::harness::{
    exact_identity_suite, run_estimate_check, EstimateId, EstimateSpec, Trend, Verdict,
};
use wsobolev::operators::dyadic_maximal;
use wsobolev::weights::ap::{ap_constant, ap_functional, ApFamily};
use wsobolev::weights::{mixed_norm, MixedNormSpec, Weight};
use wsobolev::Error;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: f64, what: &str) -> Result<(), String> {
    ensure(
        elapsed.as_secs_f64() < limit,
        format!("{what} took {:.1}s, limit {limit}s", elapsed.as_secs_f64()),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn exact_identities() -> Outcome {
    let t = Instant::now();
    let rep = exact_identity_suite(1).map_err(|e| e.to_string())?;
    let el = t.elapsed();
    let mut worst = 0.0f64;
    for s in &rep.summaries {
        ensure(s.instances == 100, format!("{}: {} instances", s.geometry, s.instances))?;
        for (_, w) in &s.worst {
            worst = worst.max(*w);
        }
    }
    ensure(rep.summaries.len() == 3, "three geometries expected")?;
    ensure(
        rep.passed() && worst <= 1e-12,
        format!("worst relative error {worst:e}, {} failures", rep.failures.len()),
    )?;
    within(el, 10.0, "identity suite")?;
    Ok(format!("worst relative error {worst:.2e} in {:.2}s", el.as_secs_f64()))
}

/// Nonnegative field mixing a smooth background with rare tall spikes.
fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.05) {
                rng.gen_range(5.0..50.0)
            } else {
                rng.gen_range(0.0..1.0f64).powi(3)
            }
        })
        .collect()
}

fn maximal_constant() -> Outcome {
    let filt = build_filtration(FiltrationSpec::full(2, -2, 4, vec![[0.0, 4.0]; 2])).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (k, p) in [1.5, 2.0, 4.0].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let c = p / (p - 1.0);
        for _ in 0..30 {
            let g = DiscreteField::new(Arc::clone(&filt), random_field(&mut rng, filt.finest_len()))
                .map_err(|e| e.to_string())?;
            let m = dyadic_maximal(&g, None).map_err(|e| e.to_string())?;
            let (lhs, rhs) = (m.lp_norm(p), c * g.lp_norm(p));
            ensure(lhs <= rhs * (1.0 + 1e-9), format!("p = {p}: {lhs} > {rhs}"))?;
            worst = worst.max(lhs / rhs);
        }
    }
    // M 1_[0,1) is 2^{-j} on [2^{j-1}, 2^j), so its squared norm is
    // 1 + sum_{j=1}^{K} 2^{-j-1} = 3/2 - 2^{-K-1}.
    let levels = 16;
    let filt = build_filtration(FiltrationSpec::full(1, -levels, 0, vec![[0.0, 2f64.powi(levels)]]))
        .map_err(|e| e.to_string())?;
    let g = DiscreteField::from_fn(filt, |x| if x[0] < 1.0 { 1.0 } else { 0.0 }).map_err(|e| e.to_string())?;
    let sq = dyadic_maximal(&g, None).map_err(|e| e.to_string())?.lp_norm(2.0).powi(2);
    let truncation = 2f64.powi(-levels - 1);
    ensure(
        (sq - 1.5).abs() <= truncation * (1.0 + 1e-9),
        format!("indicator: {sq} is not within {truncation:e} of 3/2"),
    )?;
    Ok(format!("worst ratio to the constant {worst:.4}; indicator norm^2 {sq:.12}"))
}

fn ap_oracle() -> Outcome {
    let t = Instant::now();
    let fam = ApFamily::new(FiltrationSpec::half(1, -3, 4, vec![[0.0, 8.0]]), 4).map_err(|e| e.to_string())?;
    let est = ap_constant(&Weight::power_x1(1.0), 3.0, &fam).map_err(|e| e.to_string())?;
    // on [0, L]: avg x = L/2, avg x^{-1/2} = 2 L^{-1/2}
    let l: f64 = 1.0;
    let oracle = (l / 2.0) * (2.0 / l.sqrt()).powi(2);
    ensure(rel(est.value, oracle) <= 0.02, format!("[x_1]_3 = {} vs {oracle}", est.value))?;

    let cube = ApFamily::new(FiltrationSpec::full(2, -1, 2, vec![[0.0, 2.0], [0.0, 2.0]]), 2).map_err(|e| e.to_string())?;
    for p in [1.5, 2.0, 3.0, 6.0] {
        let v = ap_constant(&Weight::unit(), p, &cube).map_err(|e| e.to_string())?.value;
        ensure(v == 1.0, format!("[1]_{p} = {v}"))?;
    }

    // The functional on [0, L] is dilation invariant and infinite here, so
    // the ladder uses intervals [2^{-j}, 1] closing in on the singularity.
    let mut growth = Vec::new();
    for p in [2.0, 3.0] {
        for q in [-1.5, p - 0.5] {
            let at0 = ap_functional(&Weight::power_x1(q), p, &[0.0], &[1.0], 0).map_err(|e| e.to_string())?;
            ensure(at0.is_infinite(), format!("q = {q}, p = {p}: origin interval gives {at0}"))?;
            let series = (1..=7)
                .map(|j| ap_functional(&Weight::power_x1(q), p, &[2f64.powi(-j)], &[1.0], 0))
                .collect::<Result<Vec<f64>, Error>>()
                .map_err(|e| e.to_string())?;
            ensure(
                series.windows(2).all(|w| w[1] > w[0]),
                format!("q = {q}, p = {p}: not strictly increasing {series:?}"),
            )?;
            let g = series[6] / series[0];
            ensure(g >= 2.0, format!("q = {q}, p = {p}: growth {g} over 6 steps"))?;
            growth.push(g);
        }
    }
    within(t.elapsed(), 30.0, "A_p checks")?;
    let min_growth = growth.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("[x_1]_3 = {:.6}; ladder growth >= x{min_growth:.2}", est.value))
}

/// `sum_k l_k q_k^T M q_k` for the matrix `Q diag(l) Q^T`, with each `l_k`
/// at the end of `[delta, 1/delta]` that favours `side`.
fn vertex_value(m: &DMatrix<f64>, q: &DMatrix<f64>, delta: f64, side: Side) -> f64 {
    (0..q.ncols())
        .map(|k| {
            let c = q.column(k);
            let v = (c.transpose() * m * c)[(0, 0)];
            let (hi, lo) = (v / delta, v * delta);
            match side {
                Side::Max => hi.max(lo),
                Side::Min => hi.min(lo),
            }
        })
        .sum()
}

/// Extremal of `tr(aM)` over sampled `a` in `S_delta`: random eigenbases
/// with extreme eigenvalues, then a shrinking random search around the best.
fn brute_force_pucci(m: &SymMatrix, delta: f64, side: Side, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let d = m.dim();
    let mm = m.to_dmatrix();
    let better = |a: f64, b: f64| match side {
        Side::Max => a > b,
        Side::Min => a < b,
    };
    let mut best_q = random_orthogonal(d, rng);
    let mut best = vertex_value(&mm, &best_q, delta, side);
    for _ in 1..samples {
        let q = random_orthogonal(d, rng);
        let v = vertex_value(&mm, &q, delta, side);
        if better(v, best) {
            best = v;
            best_q = q;
        }
    }
    let mut sigma = 0.1;
    while sigma > 1e-7 {
        for _ in 0..40 {
            let noise = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0) * sigma);
            let q = (&best_q + noise).qr().q();
            let v = vertex_value(&mm, &q, delta, side);
            if better(v, best) {
                best = v;
                best_q = q;
            }
        }
        sigma *= 0.8;
    }
    best
}

fn pucci_oracle() -> Outcome {
    let m = SymMatrix::diag(&[1.0, -1.0]);
    let v = pucci_extremal(&m, 0.5, Side::Max);
    ensure(v == 1.5, format!("diag(1, -1), delta 1/2: {v}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let d = if i < 10 { 2 } else { 3 };
        let m = random_symmetric(d, &mut rng);
        let delta = rng.gen_range(0.2..0.9);
        for side in [Side::Max, Side::Min] {
            let closed = pucci_extremal(&m, delta, side);
            let brute = brute_force_pucci(&m, delta, side, 10_000, &mut rng);
            let e = rel(brute, closed);
            ensure(e <= 1e-3, format!("input {i} ({side:?}): closed {closed}, sampled {brute}"))?;
            worst = worst.max(e);
        }
    }
    Ok(format!("diag(1, -1) -> {v}; worst sampled relative error {worst:.2e}"))
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn ratios(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| w[0] / w[1]).collect()
}

fn finite_differences() -> Outcome {
    let g = Arc::new(Grid::cube(2, 1.0, 0.125).map_err(|e| e.to_string())?);
    let u = GridFunction::sample(Arc::clone(&g), |x| 0.5 * x[0] * x[0] + 3.0 * x[0] * x[1] - 2.0 * x[1] * x[1] + x[1] - 1.0)
        .map_err(|e| e.to_string())?;
    let der = fd_derivatives(&u).map_err(|e| e.to_string())?;
    let mut exact_err = 0.0f64;
    for (i, x) in g.nodes().iter().enumerate() {
        let want = [x[0] + 3.0 * x[1], 3.0 * x[0] - 4.0 * x[1] + 1.0];
        exact_err = exact_err.max((der.du[0][i] - want[0]).abs()).max((der.du[1][i] - want[1]).abs());
        let h = &der.d2u[i];
        exact_err = exact_err
            .max((h.get(0, 0) - 1.0).abs())
            .max((h.get(0, 1) - 3.0).abs())
            .max((h.get(1, 1) + 4.0).abs());
    }
    ensure(exact_err <= 1e-12, format!("quadratic: error {exact_err:e}"))?;

    let hs = [0.1, 0.05, 0.025, 0.0125];
    type Oracle = (&'static str, fn(f64) -> f64, fn(f64) -> f64, fn(f64) -> f64);
    let oracles: [Oracle; 2] = [
        ("sin", f64::sin, f64::cos, |x| -x.sin()),
        ("exp", f64::exp, f64::exp, f64::exp),
    ];
    let mut all = Vec::new();
    for (name, f, df, d2f) in oracles {
        for order in [1u8, 2] {
            let mut errs = Vec::new();
            for &h in &hs {
                let g = Grid::over_box(GridDomain::Space, &[[0.0, 2.0]], &[h]).map_err(|e| e.to_string())?;
                let xs: Vec<f64> = (0..g.n[0]).map(|i| g.coord(0, i)).collect();
                let v: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
                let want: Vec<f64> = xs.iter().map(|&x| if order == 1 { df(x) } else { d2f(x) }).collect();
                errs.push(max_err(&diff_axis(&g, &v, 0, order).map_err(|e| e.to_string())?, &want));
            }
            for r in ratios(&errs) {
                ensure((3.5..=4.5).contains(&r), format!("{name}, order {order}: ratio {r} from {errs:?}"))?;
                all.push(r);
            }
        }
    }
    // mixed second derivative of sin(x_1) exp(x_2)
    let mut errs = Vec::new();
    for &h in &hs {
        let g = Arc::new(Grid::over_box(GridDomain::Space, &[[0.0, 1.0], [-0.5, 0.5]], &[h, h]).map_err(|e| e.to_string())?);
        let u = GridFunction::sample(Arc::clone(&g), |x| x[0].sin() * x[1].exp()).map_err(|e| e.to_string())?;
        let der = fd_derivatives(&u).map_err(|e| e.to_string())?;
        let want: Vec<f64> = g.nodes().iter().map(|x| x[0].cos() * x[1].exp()).collect();
        let got: Vec<f64> = der.d2u.iter().map(|m| m.get(0, 1)).collect();
        errs.push(max_err(&got, &want));
    }
    for r in ratios(&errs) {
        ensure((3.5..=4.5).contains(&r), format!("mixed derivative: ratio {r} from {errs:?}"))?;
        all.push(r);
    }
    let (lo, hi) = all.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    Ok(format!("quadratic error {exact_err:.1e}; halving ratios in [{lo:.3}, {hi:.3}]"))
}

/// `avg_{B_r(z)} |sin x_1|` in two variables, by Simpson's rule in
/// `x_1 = z_1 + r sin(phi)`.
fn ball_average_abs_sin(z1: f64, r: f64) -> f64 {
    let n = 20_000;
    let step = PI / n as f64;
    let f = |phi: f64| (z1 + r * phi.sin()).sin().abs() * 2.0 * r * r * phi.cos() * phi.cos();
    let mut s = f(-PI / 2.0) + f(PI / 2.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(-PI / 2.0 + i as f64 * step);
    }
    s * step / 3.0 / (PI * r * r)
}

fn oscillation_functional() -> Outcome {
    let mut zero = 0.0f64;
    let ops = [
        OperatorSpec::pucci(2, 0.5, Side::Max).map_err(|e| e.to_string())?,
        OperatorSpec::laplacian(3),
        OperatorSpec::custom(2, 0.5, |m, _, _| m.get(0, 0) + 0.5 * m.get(1, 1) - 0.25 * m.get(0, 1).abs())
            .map_err(|e| e.to_string())?,
    ];
    for op in &ops {
        let z = vec![0.2; op.d];
        let cfg = ThetaConfig {
            lattice: 24,
            ..ThetaConfig::new(ThetaMode::Sup, 24, 3)
        };
        zero = zero.max(oscillation_theta(op, op, &z, 0.5, 0.0, &cfg).map_err(|e| e.to_string())?.theta);
    }
    ensure(zero <= 1e-12, format!("x-independent theta {zero:e}"))?;

    let eps = 0.3;
    let op = OperatorSpec::custom(2, 1.0, move |m, _, x| (1.0 + eps * x[0].sin()) * m.trace()).map_err(|e| e.to_string())?;
    let fbar = OperatorSpec::custom(2, 1.0, |m, _, _| m.trace()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (z, r) in [([0.3, 0.1], 0.5), ([1.2, -0.4], 0.8), ([-0.6, 0.0], 0.25)] {
        let cfg = ThetaConfig {
            lattice: 256,
            ..ThetaConfig::new(ThetaMode::Homogeneous, 16, 5)
        };
        let got = oscillation_theta(&op, &fbar, &z, r, 0.0, &cfg).map_err(|e| e.to_string())?.theta;
        let oracle = eps * 2f64.sqrt() * ball_average_abs_sin(z[0], r);
        let e = rel(got, oracle);
        ensure(e <= 0.01, format!("z = {z:?}, r = {r}: theta {got} vs quadrature {oracle}"))?;
        worst = worst.max(e);
    }
    Ok(format!("x-independent theta {zero:.1e}; modulated trace worst relative error {worst:.2e}"))
}

fn boundedness_trends() -> Outcome {
    let t = Instant::now();
    let cases = [
        (EstimateId::FsLocal, vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]),
        (EstimateId::Interp, vec![0.1, 0.05, 0.025, 0.0125]),
        (EstimateId::W2pGlobal, vec![0.1, 0.05, 0.025, 0.0125]),
        (EstimateId::HsWeighted, vec![0.1, 0.05, 0.025, 0.0125]),
        (EstimateId::ParaGlobal, vec![0.05, 0.025, 0.0125, 0.00625]),
    ];
    let mut lines = Vec::new();
    for (id, ladder) in cases {
        let r = run_estimate_check(&EstimateSpec::new(id).with_ladder(ladder), 1).map_err(|e| format!("{id}: {e}"))?;
        let s = &r.n_emp_series;
        let max = s.iter().copied().fold(0.0f64, f64::max);
        let min = s.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = max / min;
        ensure(s.len() == 4 && s.iter().all(|v| v.is_finite() && *v > 0.0), format!("{id}: series {s:?}"))?;
        ensure(
            r.trend == Trend::Bounded && r.verdict == Verdict::Bounded && spread < 1.25,
            format!("{id}: {:?} with spread {spread} over {s:?}", r.trend),
        )?;
        lines.push(format!("{id} {spread:.3}"));
    }
    within(t.elapsed(), 600.0, "boundedness runs")?;
    Ok(format!("max/min {} in {:.1}s", lines.join(", "), t.elapsed().as_secs_f64()))
}

fn negative_controls() -> Outcome {
    let r = run_estimate_check(&EstimateSpec::new(EstimateId::NegExp), 1).map_err(|e| e.to_string())?;
    let s = &r.n_emp_series;
    ensure(s.len() >= 2, "window ladder too short")?;
    let steps = ratios(s).iter().map(|x| 1.0 / x).collect::<Vec<_>>();
    ensure(
        steps.iter().all(|&g| g >= 2.0),
        format!("per-step growth {steps:?}"),
    )?;
    ensure(
        r.trend == Trend::Diverging && r.verdict == Verdict::ExpectedDivergence,
        format!("{:?} / {:?}", r.trend, r.verdict),
    )?;

    let mut spec = EstimateSpec::new(EstimateId::HsDirichlet);
    spec.solution = Some(Manufactured::Bump {
        center: vec![0.0, 0.0],
        radius: 0.5,
    });
    match run_estimate_check(&spec, 1) {
        Err(Error::Hypothesis(m)) => {
            let min = steps.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(format!("growth per window step >= x{min:.2}; nonzero trace rejected ({m})"))
        }
        Err(e) => Err(format!("nonzero trace gave the wrong error: {e}")),
        Ok(r) => Err(format!("nonzero trace accepted with verdict {:?}", r.verdict)),
    }
}

fn mixed_norms() -> Outcome {
    let (hx, hy) = (0.05, 0.1);
    let grid = Arc::new(
        Grid::over_box(GridDomain::Space, &[[0.0, 1.0], [-1.0, 2.0]], &[hx, hy]).map_err(|e| e.to_string())?,
    );
    let g = |x: f64| 1.0 + x * x;
    let h = |y: f64| (0.5 * y).exp() - 0.3;
    let f = GridFunction::sample(Arc::clone(&grid), |x| g(x[0]) * h(x[1])).map_err(|e| e.to_string())?;
    let line = |lo: f64, hi: f64, step: f64, fun: &dyn Fn(f64) -> f64, p: f64| -> Result<f64, String> {
        let gr = Arc::new(Grid::over_box(GridDomain::Space, &[[lo, hi]], &[step]).map_err(|e| e.to_string())?);
        Ok(GridFunction::sample(gr, |x| fun(x[0])).map_err(|e| e.to_string())?.lp_norm(p))
    };
    let mut factor = 0.0f64;
    for (p1, p2) in [(3.0, 5.0), (1.5, 4.0), (6.0, 2.0)] {
        let spec = MixedNormSpec::per_axis(vec![p1, p2], vec![0, 1]).map_err(|e| e.to_string())?;
        let got = mixed_norm(&f, &spec).map_err(|e| e.to_string())?;
        let want = line(0.0, 1.0, hx, &g, p1)? * line(-1.0, 2.0, hy, &h, p2)?;
        factor = factor.max(rel(got, want));
    }
    ensure(factor <= 1e-10, format!("product factorization error {factor:e}"))?;

    let mut equal = 0.0f64;
    for p in [1.5, 2.0, 4.0] {
        let spec = MixedNormSpec::per_axis(vec![p, p], vec![0, 1]).map_err(|e| e.to_string())?;
        equal = equal.max(rel(mixed_norm(&f, &spec).map_err(|e| e.to_string())?, f.lp_norm(p)));
    }
    ensure(equal <= 1e-10, format!("equal exponents differ from L_p by {equal:e}"))?;

    let mixed = run_estimate_check(&EstimateSpec::new(EstimateId::Mixed), 1).map_err(|e| e.to_string())?;
    let apriori = run_estimate_check(&EstimateSpec::new(EstimateId::Apriori), 1).map_err(|e| e.to_string())?;
    let agree = rel(mixed.n_emp, apriori.n_emp);
    ensure(
        agree <= 0.01,
        format!("MIXED {} vs APRIORI {}", mixed.n_emp, apriori.n_emp),
    )?;
    Ok(format!(
        "factorization {factor:.1e}, equal exponents {equal:.1e}, MIXED/APRIORI relative gap {agree:.1e}"
    ))
}

fn determinism() -> Outcome {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../suites/core.cfg");
    let mut cfg = SuiteConfig::load(path).map_err(|e| e.to_string())?;
    let a = run_suite(&cfg).and_then(|r| r.to_json()).map_err(|e| e.to_string())?;
    let b = run_suite(&cfg).and_then(|r| r.to_json()).map_err(|e| e.to_string())?;
    ensure(a == b, "two runs differ")?;
    cfg.jobs = Some(1);
    let c = run_suite(&cfg).and_then(|r| r.to_json()).map_err(|e| e.to_string())?;
    ensure(a == c, "single-threaded run differs")?;
    Ok(format!("{} bytes identical across runs and thread counts", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact-identities", exact_identities),
        ("maximal-constant", maximal_constant),
        ("ap-oracle", ap_oracle),
        ("pucci-oracle", pucci_oracle),
        ("finite-differences", finite_differences),
        ("oscillation-functional", oscillation_functional),
        ("boundedness-trends", boundedness_trends),
        ("negative-controls", negative_controls),
        ("mixed-norms", mixed_norms),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let out = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match out {
            Ok(detail) => println!("criterion {:>2} {name:<24} PASS  {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name:<24} FAIL  {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
