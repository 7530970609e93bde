//! One function per catalog entry: evaluate every part at one ladder value.
//!
//! Conventions shared by all entries:
//! * `U = |u|`, `G = |Du|`, `H = |D²u|` (Frobenius), `F = F[u]`, with
//!   `∂_t u` added to `F` on space-time grids.
//! * Integrals use the node masses of the entry weight.
//! * Pointwise inequalities report the node with the largest ratio.
//! * Mixed-norm inequalities compare norms raised to the outermost exponent.

use std::sync::Arc;

use super::exact;
use super::fields::{
    ball_mask, int_pow, leak_outside, mass_of, masses, maximal_root, mixed_power, pointwise_worst, restrict,
    x1_band, Fields, Region,
};
use super::params::Params;
use super::{EstimateId, EstimateSpec, OperatorConfig, Part, Run};
use crate::calculus::grid::{Grid, GridDomain};
use crate::calculus::manufactured::Manufactured;
use crate::calculus::operator::{check_operator_class, ClassCheck, OperatorSpec};
use crate::calculus::theta::{oscillation_theta, ThetaConfig, ThetaMode};
use crate::error::{Error, Result};
use crate::filtration::{build_filtration, DiscreteField, FiltrationSpec};
use crate::operators::{dyadic_maximal, dyadic_sharp, geometric::geometric_sharp_multi, GeometricFamily, Shape};
use crate::weights::norms::{cell_masses, integrate_power, MixedNormSpec};
use crate::weights::{Weight, WeightForm};

/// Entry being evaluated.
pub(super) struct Ctx<'a> {
    pub spec: &'a EstimateSpec,
    pub params: &'a Params,
    pub seed: u64,
}

fn constraint(what: &str) -> Error {
    Error::param(format!("exponent constraint violated: {what}"))
}

fn hypothesis(what: impl Into<String>) -> Error {
    Error::Hypothesis(what.into())
}

impl Ctx<'_> {
    pub fn p(&self, default: f64) -> Result<f64> {
        let p = self.spec.p.unwrap_or(default);
        if !(p >= 1.0 && p.is_finite()) {
            return Err(constraint(&format!("p = {p} must lie in [1, ∞)")));
        }
        self.params.record("p", p);
        Ok(p)
    }

    fn p_above(&self, default: f64, bound: f64, label: &str) -> Result<f64> {
        let p = self.p(default)?;
        if !(p > bound) {
            return Err(constraint(&format!("p = {p} must exceed {label} = {bound}")));
        }
        Ok(p)
    }

    /// Mixed exponents, each above `bound`.
    fn exponents(&self, count: usize, default: f64, bound: f64, label: &str) -> Result<Vec<f64>> {
        let e = match &self.spec.exponents {
            Some(e) => e.clone(),
            None => vec![self.spec.p.unwrap_or(default); count],
        };
        if e.len() != count {
            return Err(Error::param(format!("{} exponents given, {count} expected", e.len())));
        }
        for (i, &p) in e.iter().enumerate() {
            if !(p > bound && p.is_finite()) {
                return Err(constraint(&format!("p_{i} = {p} must exceed {label} = {bound}")));
            }
            self.params.record(&format!("p{i}"), p);
        }
        Ok(e)
    }

    fn q(&self, default: f64) -> f64 {
        let q = self.spec.q.unwrap_or(default);
        self.params.record("q", q);
        q
    }

    fn weight(&self) -> Result<Weight> {
        let w = self.spec.weight.clone().unwrap_or_else(Weight::unit);
        w.validate()?;
        Ok(w)
    }

    fn no_weight(&self) -> Result<()> {
        if self.spec.weight.is_some() {
            return Err(Error::param(format!("{} takes no weight", self.spec.id)));
        }
        Ok(())
    }

    fn no_operator(&self) -> Result<()> {
        if self.spec.operator.is_some() {
            return Err(Error::param(format!("{} fixes its own operator", self.spec.id)));
        }
        Ok(())
    }

    fn operator_config(&self) -> OperatorConfig {
        self.spec.operator.clone().unwrap_or_default()
    }

    /// Operator in `d` space variables, checked against the structural
    /// assumptions on the grid box.
    fn operator(&self, grid: &Grid) -> Result<OperatorSpec> {
        let d = grid.space_dims();
        let op = self.operator_config().build(d)?;
        let time = grid.domain.has_time();
        let region: Vec<[f64; 2]> = (usize::from(time)..grid.dims()).map(|a| [grid.lo[a], grid.hi(a)]).collect();
        let mut check = ClassCheck::new(64, self.seed, region);
        if time {
            check.time = Some([grid.lo[0], grid.hi(0)]);
        }
        let rep = check_operator_class(&op, &check)?;
        if !rep.passed() {
            let w = rep.witnesses.first();
            return Err(hypothesis(format!(
                "operator fails the structural check{}",
                w.map(|w| format!(" ({}: {} at x = {:?})", w.check, w.detail, w.x))
                    .unwrap_or_default()
            )));
        }
        Ok(op)
    }

    fn homogeneous_operator(&self, grid: &Grid) -> Result<OperatorSpec> {
        let op = self.operator(grid)?;
        if !op.homogeneous {
            return Err(hypothesis("operator must be positive homogeneous of degree one"));
        }
        Ok(op)
    }

    fn tau0_zero(&self, op: &OperatorSpec) -> Result<()> {
        if op.tau0 != 0.0 {
            return Err(hypothesis(format!("estimate needs tau0 = 0, got {}", op.tau0)));
        }
        Ok(())
    }

    /// Space dimension: from the solution when it fixes one, else `d`.
    fn dim(&self, default: usize) -> Result<usize> {
        let given = self.params.opt("d").map(|v| v as usize);
        let from_sol = self.spec.solution.as_ref().and_then(Manufactured::space_dims);
        let d = match (from_sol, given) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::param(format!("d = {b} but the solution has {a} space variables")));
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => default,
        };
        if d == 0 {
            return Err(Error::param("d must be positive"));
        }
        self.params.record("d", d as f64);
        Ok(d)
    }

    fn solution(&self, default: Manufactured, time: bool) -> Result<Manufactured> {
        let s = self.spec.solution.clone().unwrap_or(default);
        s.validate()?;
        if s.has_time() != time {
            return Err(Error::param(if time {
                "this estimate needs a space-time solution"
            } else {
                "this estimate needs a stationary solution"
            }));
        }
        Ok(s)
    }

    fn scale(&self) -> f64 {
        self.params.get("scale", 1.0)
    }

    fn fields(&self, op: &OperatorSpec, sol: &Manufactured, grid: Arc<Grid>) -> Result<Fields> {
        Fields::sample(op, sol, grid, self.scale())
    }

    fn stride(&self, h: f64) -> usize {
        let s = self.params.get("center_spacing", 0.1);
        ((s / h).round() as usize).max(1)
    }

    fn radii_pair(&self, small: &str, large: &str, r: f64, big: f64) -> Result<(f64, f64)> {
        let r = self.params.get(small, r);
        let big = self.params.get(large, big);
        if !(r > 0.0 && r < big) {
            return Err(Error::param(format!("need 0 < {small} < {large}, got {r} and {big}")));
        }
        Ok((r, big))
    }
}

fn origin(d: usize) -> Vec<f64> {
    vec![0.0; d]
}

fn bump(d: usize) -> Manufactured {
    Manufactured::Bump {
        center: origin(d),
        radius: 1.0,
    }
}

fn gaussian(d: usize) -> Manufactured {
    Manufactured::Gaussian {
        center: origin(d),
        sigma: 0.5,
    }
}

fn in_time(space: Manufactured) -> Manufactured {
    Manufactured::SpaceTime {
        t_center: 0.5,
        t_radius: 0.45,
        space: Box::new(space),
    }
}

fn odd_bump(d: usize, radius: f64) -> Manufactured {
    Manufactured::OddBump {
        center: origin(d),
        radius,
    }
}

fn grid(domain: GridDomain, bounds: Vec<[f64; 2]>, h: f64) -> Result<Arc<Grid>> {
    let hs = vec![h; bounds.len()];
    Ok(Arc::new(Grid::over_box(domain, &bounds, &hs)?))
}

fn space_grid(c: &Ctx, d: usize, h: f64) -> Result<Arc<Grid>> {
    let l = c.params.get("box", 1.25);
    grid(GridDomain::Space, vec![[-l, l]; d], h)
}

fn half_grid(c: &Ctx, d: usize, h: f64, x1_max: f64) -> Result<Arc<Grid>> {
    let l = c.params.get("box", 1.25);
    let mut b = vec![[-l, l]; d];
    b[0] = [0.0, c.params.get("x1_max", x1_max)];
    grid(GridDomain::HalfSpace, b, h)
}

fn para_grid(c: &Ctx, d: usize, h: f64, half: bool) -> Result<Arc<Grid>> {
    let l = c.params.get("box", 1.25);
    let mut b = vec![[0.0, c.params.get("t_max", 1.0)]];
    b.extend(vec![[-l, l]; d]);
    if half {
        b[1] = [0.0, c.params.get("x1_max", 1.25)];
    }
    grid(if half { GridDomain::SpaceTimeHalf } else { GridDomain::SpaceTime }, b, h)
}

fn vanishes_outside(u: &[f64], mask: &Region, what: &str) -> Result<()> {
    let leak = leak_outside(u, mask);
    if leak > 1e-12 {
        return Err(hypothesis(format!("u must vanish outside {what}; relative leak {leak:e}")));
    }
    Ok(())
}

fn dirichlet(fl: &Fields) -> Result<()> {
    let max = fl.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let trace = fl
        .grid
        .x1_zero_face()
        .iter()
        .fold(0.0f64, |m, &i| m.max(fl.u[i].abs()));
    if fl.grid.x1_zero_face().is_empty() {
        return Err(hypothesis("grid does not reach {x_1 = 0}"));
    }
    if trace > 1e-12 * max {
        return Err(hypothesis(format!("u must vanish on {{x_1 = 0}}; trace max {trace:e}")));
    }
    Ok(())
}

fn sum_pow(a: &[f64], b: &[f64], p: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x.powf(p) + y.powf(p)).powf(1.0 / p)).collect()
}

/// Entry dispatch.
pub(super) fn run(spec: &EstimateSpec, params: &Params, value: f64, seed: u64) -> Result<Run> {
    let c = Ctx { spec, params, seed };
    match spec.id {
        EstimateId::MaxLp => exact::max_lp(&c, value),
        EstimateId::MaxWeak => exact::max_weak(&c, value),
        EstimateId::ExactIdentities => exact::identities(&c, value),
        EstimateId::FsLocal => fs_local(&c, value),
        EstimateId::Osc => osc(&c, value, false),
        EstimateId::OscP => osc(&c, value, true),
        EstimateId::Interp => interp(&c, value, false),
        EstimateId::InterpP => interp(&c, value, true),
        EstimateId::InterpLocal => interp_local(&c, value),
        EstimateId::W2pGlobal => w2p_global(&c, value),
        EstimateId::Zeroth1d => zeroth_1d(&c, value),
        EstimateId::Apriori => apriori(&c, value),
        EstimateId::Mixed => mixed(&c, value),
        EstimateId::LocalW2p => local_w2p(&c, value),
        EstimateId::LocalMixed => local_mixed(&c, value),
        EstimateId::HsSlab => hs_slab(&c, value),
        EstimateId::HsWeighted => hs_weighted(&c, value),
        EstimateId::HsMixed => hs_mixed(&c, value),
        EstimateId::HsDirichlet => hs_dirichlet(&c, value),
        EstimateId::HsDirichletMixed => hs_dirichlet_mixed(&c, value),
        EstimateId::HsLocal => hs_local(&c, value),
        EstimateId::ParaGlobal => para_global(&c, value),
        EstimateId::ParaApriori => para_apriori(&c, value, false),
        EstimateId::ParaHsFull => para_apriori(&c, value, true),
        EstimateId::ParaMixed => para_mixed(&c, value),
        EstimateId::ParaLocalMixed => para_local_mixed(&c, value),
        EstimateId::ParaHs => para_hs(&c, value),
        EstimateId::ParaHsMixed => para_hs_mixed(&c, value),
        EstimateId::NegExp => neg_exp(&c, value),
    }
}

/// Local Fefferman-Stein bound on a dyadic filtration with cells of side
/// `h` at the finest level.
fn fs_local(c: &Ctx, h: f64) -> Result<Run> {
    c.no_operator()?;
    let gamma = c.params.get("gamma", 1.0);
    let beta = c.params.get("beta", 1.0);
    let m = c.params.get("m", 0.0).round() as i32;
    let p = c.p(2.0)?;
    if !(p > gamma * beta) {
        return Err(constraint(&format!("p = {p} must exceed gamma * beta = {}", gamma * beta)));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param(format!("beta = {beta} must lie in (0, 1]")));
    }
    let d = c.dim(2)?;
    let w = c.weight()?;
    let l = c.params.get("box", 2.0);
    let n_min = c.params.get("n_min", -1.0).round() as i32;
    let n_max = (-h.log2()).round() as i32;
    if (2f64.powi(-n_max) - h).abs() > 1e-12 * h {
        return Err(Error::param(format!("FS-LOCAL spacings must be powers of two, got {h}")));
    }
    let filt = build_filtration(FiltrationSpec::full(d, n_min, n_max, vec![[-l, l]; d]))?;
    let sol = c.solution(gaussian(d), false)?;
    let scale = c.scale();
    let u = DiscreteField::from_fn(Arc::clone(&filt), |x| scale * sol.jet(0.0, x).value)?;
    let abs = u.abs();
    let mu = dyadic_maximal(&abs, None)?;
    let sharp = dyadic_sharp(&u, gamma, m)?;
    let low = dyadic_maximal(&abs.map(|v| v.powf(gamma)), Some(m))?;
    let j_field = sharp.zip_with(&low, |s, a| s + a.powf(1.0 / gamma))?;
    let mass = cell_masses(&w, &filt)?;
    let lhs = integrate_power(u.values(), &mass, p);
    let i = integrate_power(mu.values(), &mass, p);
    let j = integrate_power(j_field.values(), &mass, p);
    let gb = gamma * beta;
    let rhs = i.powf((p - gb) / p) * j.powf(gb / p);
    let mut run = Run::new(h, vec![Part::new("fefferman-stein", lhs, 0.0, vec![("I^(1-gb/p) J^(gb/p)", rhs)])]);
    run.diagnostics.insert("I".into(), i);
    run.diagnostics.insert("J".into(), j);
    run.diagnostics.insert("coarsest_average".into(), abs.coarsest_max_average());
    Ok(run)
}

/// Pointwise sharp-function bound for `D²u` on balls or cylinders.
fn osc(c: &Ctx, h: f64, parabolic: bool) -> Result<Run> {
    let w_given = c.spec.weight.is_some();
    if w_given {
        c.no_weight()?;
    }
    let d = c.dim(if parabolic { 1 } else { 2 })?;
    let gamma = c.params.get("gamma", 0.5);
    let nu = c.params.get("nu", 4.0);
    let mu = c.params.get("mu", 1.0);
    let xi = c.params.get("xi", 2.0);
    let alpha = c.params.get("alpha", 0.5);
    if !(gamma > 0.0 && gamma < 1.0) || nu < 2.0 || !(mu > 0.0) || !(xi > 1.0) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("need gamma, alpha in (0, 1), nu >= 2, mu > 0, xi > 1"));
    }
    let (g, sol, shape) = if parabolic {
        (para_grid(c, d, h, false)?, c.solution(in_time(bump(d)), true)?, Shape::Cylinder)
    } else {
        (space_grid(c, d, h)?, c.solution(bump(d), false)?, Shape::Ball)
    };
    let op = c.operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let rho = op.r0 / nu;
    c.params.record("rho", rho);
    let stride = c.stride(h);
    let mut fam = GeometricFamily::new(shape, stride, vec![rho / 4.0, rho / 2.0, rho])?;
    fam.budget.seed = c.seed;
    let sharp = geometric_sharp_multi(&g, d * d, &fl.hess, &fam, gamma, rho)?;
    let mut radii = vec![rho / 4.0];
    while radii.last().unwrap() * 2.0 <= 2.0 + 1e-12 {
        radii.push(radii.last().unwrap() * 2.0);
    }
    let big = GeometricFamily::new(shape, stride, radii)?;
    let dd = if parabolic { (d + 1) as f64 } else { d as f64 };
    let xi_p = xi / (xi - 1.0);
    let pw = nu.powf(if parabolic { (d + 2) as f64 } else { d as f64 } / gamma);
    let mf = maximal_root(&g, &fl.f, dd, &big, None)?;
    let mh = maximal_root(&g, &fl.h, xi_p * dd, &big, None)?;
    let t1: Vec<f64> = mf.iter().map(|v| pw * v).collect();
    let t2 = vec![op.tau0 * pw; g.len()];
    let t3: Vec<f64> = mh.iter().map(|v| (mu * pw + nu.powf(-alpha)) * v).collect();
    let lhs = sharp.field.values();
    let (i, _) = pointwise_worst(lhs, &[&t1, &t2, &t3]);
    let part = Part::new(
        "sharp-hessian",
        lhs[i],
        0.0,
        vec![("F", t1[i]), ("tau0", t2[i]), ("hessian", t3[i])],
    );
    let mut run = Run::new(h, vec![part]);
    run.diagnostics.insert("subsampled_shapes".into(), sharp.subsampled_shapes as f64);
    run.diagnostics.insert("theta".into(), theta_at(&op, &g, rho, parabolic, c.seed)?);
    Ok(run)
}

/// θ of `op` against itself frozen at the box centre.
fn theta_at(op: &OperatorSpec, g: &Grid, r: f64, parabolic: bool, seed: u64) -> Result<f64> {
    let mut z: Vec<f64> = (0..g.dims()).map(|a| 0.5 * (g.lo[a] + g.hi(a))).collect();
    if parabolic {
        z[0] = g.lo[0];
    }
    let (tz, xz) = if parabolic { (z[0], z[1..].to_vec()) } else { (0.0, z.clone()) };
    let inner = op.clone();
    let fbar = OperatorSpec::custom(op.d, op.delta, move |m, _, _| inner.apply(m, tz, &xz))?
        .with_homogeneous(op.homogeneous)
        .with_k_f(op.k_f)
        .with_r0(op.r0);
    let mode = if op.homogeneous { ThetaMode::Homogeneous } else { ThetaMode::Sup };
    let mut cfg = ThetaConfig::new(mode, 16, seed);
    cfg.lattice = 12;
    cfg.shape = if parabolic { Shape::Cylinder } else { Shape::Ball };
    Ok(oscillation_theta(op, &fbar, &z, r.min(op.r0), op.tau0, &cfg)?.theta)
}

/// Interpolation bounds: two pointwise maximal-function bounds and the
/// gradient-integral bound.
fn interp(c: &Ctx, h: f64, parabolic: bool) -> Result<Run> {
    let d = c.dim(if parabolic { 1 } else { 2 })?;
    let p = c.p(if parabolic { 3.0 } else { 4.0 })?;
    let gamma = c.params.get("gamma", 0.5);
    let rho = c.params.get("rho", 0.25);
    if !(gamma > 0.0 && gamma <= 1.0) || !(rho > 0.0) {
        return Err(Error::param("need gamma in (0, 1] and rho > 0"));
    }
    let w = c.weight()?;
    let (g, sol, shape) = if parabolic {
        (para_grid(c, d, h, false)?, c.solution(in_time(bump(d)), true)?, Shape::Cylinder)
    } else {
        (space_grid(c, d, h)?, c.solution(bump(d), false)?, Shape::Ball)
    };
    let op = c.operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let fam = GeometricFamily::new(shape, c.stride(h), vec![rho, 2.0 * rho, 4.0 * rho, 8.0 * rho])?;
    let dd = if parabolic { (d + 1) as f64 } else { d as f64 };

    let lhs5 = maximal_root(&g, &fl.h, gamma, &fam, Some(rho))?;
    let f5 = maximal_root(&g, &fl.f, dd, &fam, Some(rho))?;
    let g5: Vec<f64> = maximal_root(&g, &fl.g, dd, &fam, Some(rho))?.iter().map(|v| v / rho).collect();
    let u5: Vec<f64> = maximal_root(&g, &fl.u, dd, &fam, Some(rho))?
        .iter()
        .map(|v| v / (rho * rho))
        .collect();
    let (i5, _) = pointwise_worst(&lhs5, &[&f5, &g5, &u5]);
    let part5 = Part::new(
        "sup-hessian",
        lhs5[i5],
        0.0,
        vec![("F", f5[i5]), ("gradient", g5[i5]), ("value", u5[i5])],
    );

    let pow = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|x| x.powf(p)).collect() };
    let lhs6 = pow(maximal_root(&g, &fl.g, p, &fam, Some(rho))?);
    let mh = pow(maximal_root(&g, &fl.h, p, &fam, Some(rho))?);
    let mu = pow(maximal_root(&g, &fl.u, p, &fam, Some(rho))?);
    let hu: Vec<f64> = mh.iter().zip(&mu).map(|(a, b)| (a * b).sqrt()).collect();
    let uu: Vec<f64> = mu.iter().map(|v| v * rho.powf(-p)).collect();
    let (i6, _) = pointwise_worst(&lhs6, &[&hu, &uu]);
    let part6 = Part::new(
        "sup-gradient",
        lhs6[i6],
        0.0,
        vec![("hessian-value", hu[i6]), ("value", uu[i6])],
    );

    let m = masses(&w, &g)?;
    let part7 = Part::new(
        "gradient-integral",
        int_pow(&fl.g, &m, p, None),
        rho.powf(p) * int_pow(&fl.h, &m, p, None),
        vec![("value", rho.powf(-p) * int_pow(&fl.u, &m, p, None))],
    );
    Ok(Run::new(h, vec![part5, part6, part7]))
}

/// Localized gradient bounds on concentric balls.
fn interp_local(c: &Ctx, h: f64) -> Result<Run> {
    let d = c.dim(2)?;
    let p = c.p(4.0)?;
    let w = c.weight()?;
    let rho = c.params.get("rho", 1.0);
    let eps = c.params.get("eps", 0.002);
    if !(rho > 0.0) || !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::param("need rho > 0 and eps in (0, 1]"));
    }
    let (r, big) = c.radii_pair("r", "R", 0.5, 1.0)?;
    let g = space_grid(c, d, h)?;
    let sol = c.solution(gaussian(d), false)?;
    let op = c.operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let m = masses(&w, &g)?;
    let o = origin(d);
    let half = ball_mask(&g, &o, 0.0, rho / 2.0);
    let full = ball_mask(&g, &o, 0.0, rho);
    let part9 = Part::new(
        "ball-localization",
        int_pow(&fl.g, &m, p, Some(&half)),
        eps * rho.powf(p) * int_pow(&fl.h, &m, p, Some(&full)),
        vec![("value", int_pow(&fl.u, &m, p, Some(&full)) / (eps * rho.powf(p)))],
    );
    let inner = ball_mask(&g, &o, 0.0, r);
    let outer = ball_mask(&g, &o, 0.0, big);
    let gap = big - r;
    let part8 = Part::new(
        "annulus",
        int_pow(&fl.g, &m, p, Some(&inner)),
        eps * gap.powf(p) * int_pow(&fl.h, &m, p, Some(&outer)),
        vec![("value", (eps * gap).powf(-p) * int_pow(&fl.u, &m, p, Some(&outer)))],
    );
    Ok(Run::new(h, vec![part9, part8]))
}

/// Global weighted bound for compactly supported `u`.
fn w2p_global(c: &Ctx, h: f64) -> Result<Run> {
    let d = c.dim(2)?;
    let p = c.p_above(4.0, d as f64, "d")?;
    let w = c.weight()?;
    let big = c.params.get("R", 1.0);
    let g = space_grid(c, d, h)?;
    let sol = c.solution(bump(d), false)?;
    let op = c.operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let o = origin(d);
    vanishes_outside(&fl.u, &ball_mask(&g, &o, 0.0, big), "B_R")?;
    let m = masses(&w, &g)?;
    let collar = mass_of(&m, &ball_mask(&g, &o, 0.0, big + op.r0));
    Ok(Run::new(
        h,
        vec![Part::new(
            "hessian",
            int_pow(&fl.h, &m, p, None),
            0.0,
            vec![
                ("F", int_pow(&fl.f, &m, p, None)),
                ("value", int_pow(&fl.u, &m, p, None)),
                ("tau0", op.tau0.powf(p) * collar),
            ],
        )],
    ))
}

/// Zeroth-order bound for `u'' - u` on the line, from exact derivatives.
fn zeroth_1d(c: &Ctx, h: f64) -> Result<Run> {
    c.no_operator()?;
    let d = c.dim(1)?;
    if d != 1 {
        return Err(Error::param("ZEROTH-1D is one-dimensional"));
    }
    let p = c.p_above(2.0, 1.0, "d")?;
    let w = c.weight()?;
    let g = space_grid(c, 1, h)?;
    let sol = c.solution(bump(1), false)?;
    let fl = Fields::exact(&OperatorSpec::laplacian(1), &sol, Arc::clone(&g))?;
    let m = masses(&w, &g)?;
    let s = c.scale();
    let u: Vec<f64> = fl.u.iter().map(|v| s * v).collect();
    let rhs: Vec<f64> = fl.f_minus_u().iter().map(|v| s * v).collect();
    Ok(Run::new(
        h,
        vec![Part::new(
            "zeroth-order",
            int_pow(&u, &m, p, None),
            0.0,
            vec![("u''-u", int_pow(&rhs, &m, p, None))],
        )],
    ))
}

fn apriori_parts(fl: &Fields, m: &[f64], p: f64) -> Vec<Part> {
    let hp = int_pow(&fl.h, m, p, None);
    let gp = int_pow(&fl.g, m, p, None);
    let up = int_pow(&fl.u, m, p, None);
    vec![
        Part::new(
            "hessian-gradient",
            hp + gp,
            0.0,
            vec![("F", int_pow(&fl.f, m, p, None)), ("value", up)],
        ),
        Part::new("full-norm", hp + gp + up, 0.0, vec![("F-u", int_pow(&fl.f_minus_u(), m, p, None))]),
    ]
}

fn apriori(c: &Ctx, h: f64) -> Result<Run> {
    let d = c.dim(2)?;
    let p = c.p_above(4.0, d as f64, "d")?;
    let w = c.weight()?;
    let g = space_grid(c, d, h)?;
    let sol = c.solution(bump(d), false)?;
    let op = c.operator(&g)?;
    c.tau0_zero(&op)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let m = masses(&w, &g)?;
    Ok(Run::new(h, apriori_parts(&fl, &m, p)))
}

fn mixed(c: &Ctx, h: f64) -> Result<Run> {
    c.no_weight()?;
    let d = c.dim(2)?;
    let e = c.exponents(d, 4.0, d as f64, "d")?;
    let g = space_grid(c, d, h)?;
    let sol = c.solution(bump(d), false)?;
    let op = c.operator(&g)?;
    c.tau0_zero(&op)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let spec = MixedNormSpec::per_axis(e, (0..d).collect())?;
    let lhs = mixed_power(&g, &fl.h, &spec)? + mixed_power(&g, &fl.g, &spec)? + mixed_power(&g, &fl.u, &spec)?;
    Ok(Run::new(
        h,
        vec![Part::new("mixed-norm", lhs, 0.0, vec![("F-u", mixed_power(&g, &fl.f_minus_u(), &spec)?)])],
    ))
}

fn local_w2p(c: &Ctx, h: f64) -> Result<Run> {
    let d = c.dim(2)?;
    let p = c.p_above(4.0, d as f64, "d")?;
    let w = c.weight()?;
    let (r, big) = c.radii_pair("r", "R", 0.5, 1.0)?;
    if r < big - 1.0 {
        return Err(Error::param("need r >= R - 1"));
    }
    let g = space_grid(c, d, h)?;
    let sol = c.solution(gaussian(d), false)?;
    let op = c.homogeneous_operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let m = masses(&w, &g)?;
    let o = origin(d);
    let inner = ball_mask(&g, &o, 0.0, r);
    let outer = ball_mask(&g, &o, 0.0, big);
    let gap = big - r;
    let lower: Vec<f64> = fl
        .g
        .iter()
        .zip(&fl.u)
        .map(|(gv, u)| gv / gap + (gap.powi(-2) + 1.0) * u.abs())
        .collect();
    let f_r = int_pow(&fl.f, &m, p, Some(&outer));
    let u_r = int_pow(&fl.u, &m, p, Some(&outer));
    let h_r = int_pow(&fl.h, &m, p, Some(&inner));
    Ok(Run::new(
        h,
        vec![
            Part::new("cutoff", h_r, 0.0, vec![("F", f_r), ("lower-order", int_pow(&lower, &m, p, Some(&outer)))]),
            Part::new("hessian", h_r, 0.0, vec![("F", f_r), ("value", gap.powf(-2.0 * p) * u_r)]),
            Part::new(
                "gradient",
                int_pow(&fl.g, &m, p, Some(&inner)),
                0.0,
                vec![("F", gap.powf(p) * f_r), ("value", gap.powf(-p) * u_r)],
            ),
        ],
    ))
}

fn local_mixed(c: &Ctx, h: f64) -> Result<Run> {
    c.no_weight()?;
    let d = c.dim(2)?;
    let e = c.exponents(d, 4.0, d as f64, "d")?;
    let (r, big) = c.radii_pair("r", "R", 0.5, 1.0)?;
    let g = space_grid(c, d, h)?;
    let sol = c.solution(gaussian(d), false)?;
    let op = c.homogeneous_operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let spec = MixedNormSpec::per_axis(e, (0..d).collect())?;
    let o = origin(d);
    let inner = ball_mask(&g, &o, 0.0, r);
    let outer = ball_mask(&g, &o, 0.0, big);
    let lhs = mixed_power(&g, &restrict(&g, &fl.h, &inner, &spec), &spec)? + mixed_power(&g, &restrict(&g, &fl.g, &inner, &spec), &spec)?;
    Ok(Run::new(
        h,
        vec![Part::new(
            "local-mixed",
            lhs,
            0.0,
            vec![
                ("F", mixed_power(&g, &restrict(&g, &fl.f, &outer, &spec), &spec)?),
                ("value", mixed_power(&g, &restrict(&g, &fl.u, &outer, &spec), &spec)?),
            ],
        )],
    ))
}

/// Slab estimates on `S_n` and `T_n` plus the far-field pair.
fn hs_slab(c: &Ctx, h: f64) -> Result<Run> {
    let d = c.dim(2)?;
    let p = c.p_above(4.0, d as f64, "d")?;
    let w = c.weight()?;
    let n = c.params.get("n", 1.0).round() as i32;
    let eps = c.params.get("eps", 0.5);
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::param("eps must lie in (0, 1]"));
    }
    let g = half_grid(c, d, h, 3.0)?;
    let mut center = origin(d);
    center[0] = 1.0;
    let sol = c.solution(Manufactured::Gaussian { center, sigma: 0.4 }, false)?;
    let op = c.homogeneous_operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let m = masses(&w, &g)?;
    let s_lo = 2f64.powi(-n);
    let s = x1_band(&g, s_lo, 2.0 * s_lo);
    let t = x1_band(&g, s_lo / 2.0, 4.0 * s_lo);
    let far = x1_band(&g, 2.0, f64::INFINITY);
    let near = x1_band(&g, 1.0, f64::INFINITY);
    let fmu = fl.f_minus_u();
    let k = 2f64.powi(n).powf(p);
    let on = |v: &[f64], mask: &Region| int_pow(v, &m, p, Some(mask));
    Ok(Run::new(
        h,
        vec![
            Part::new(
                "slab-hessian",
                on(&fl.h, &s),
                0.0,
                vec![("F-u", on(&fmu, &t)), ("gradient", k * on(&fl.g, &t)), ("value", (k * k + 1.0) * on(&fl.u, &t))],
            ),
            Part::new(
                "slab-gradient",
                on(&fl.g, &s),
                0.0,
                vec![
                    ("hessian", eps / k * on(&fl.h, &t)),
                    ("gradient", eps * on(&fl.g, &t)),
                    ("value", k / eps * on(&fl.u, &t)),
                ],
            ),
            Part::new(
                "far-hessian",
                on(&fl.h, &far),
                0.0,
                vec![("F-u", on(&fmu, &near)), ("gradient", on(&fl.g, &near)), ("value", on(&fl.u, &near))],
            ),
            Part::new(
                "far-gradient",
                on(&fl.g, &far),
                0.0,
                vec![
                    ("hessian", eps * on(&fl.h, &near)),
                    ("gradient", eps * on(&fl.g, &near)),
                    ("value", on(&fl.u, &near) / eps),
                ],
            ),
        ],
    ))
}

/// `min(x_1, 1)` at every node.
fn x1_hat(g: &Grid) -> Vec<f64> {
    let a = g.domain.x1_axis();
    (0..g.len()).map(|n| g.coord(a, g.multi_index(n)[a]).min(1.0)).collect()
}

fn times(v: &[f64], s: &[f64]) -> Vec<f64> {
    v.iter().zip(s).map(|(a, b)| a * b).collect()
}

/// `v / s` with `0 / 0 := 0`.
fn over(v: &[f64], s: &[f64]) -> Vec<f64> {
    v.iter()
        .zip(s)
        .map(|(a, b)| if *a == 0.0 { 0.0 } else if *b == 0.0 { f64::INFINITY } else { a / b })
        .collect()
}

fn hs_weighted(c: &Ctx, h: f64) -> Result<Run> {
    let d = c.dim(2)?;
    let p = c.p_above(4.0, d as f64, "d")?;
    let q = c.q(1.0);
    let w = c.weight()?;
    let g = half_grid(c, d, h, 2.5)?;
    let mut center = origin(d);
    center[0] = 1.0;
    let sol = c.solution(Manufactured::Bump { center, radius: 0.75 }, false)?;
    let op = c.homogeneous_operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let xh = x1_hat(&g);
    let m = if matches!(w.form, WeightForm::Unit) {
        masses(&Weight::hatted_power_x1(q), &g)?
    } else {
        let base = masses(&w, &g)?;
        base.iter()
            .zip(&xh)
            .map(|(b, x)| if *b == 0.0 { 0.0 } else { b * x.powf(q) })
            .collect()
    };
    let lhs = int_pow(&times(&fl.h, &xh), &m, p, None) + int_pow(&fl.g, &m, p, None);
    Ok(Run::new(
        h,
        vec![Part::new(
            "weighted-half-space",
            lhs,
            0.0,
            vec![
                ("F-u", int_pow(&times(&fl.f_minus_u(), &xh), &m, p, None)),
                ("value", int_pow(&over(&fl.u, &xh), &m, p, None)),
            ],
        )],
    ))
}

/// `x'` innermost, then `x_1` with the given outer weight.
fn half_mixed_spec(d: usize, e: &[f64], outer: Weight) -> Result<MixedNormSpec> {
    if d < 2 {
        return Err(Error::param("half-space mixed norms need d >= 2"));
    }
    Ok(MixedNormSpec::new(e.to_vec(), vec![(1..d).collect(), vec![0]])?.with_weight(1, outer))
}

fn hs_mixed(c: &Ctx, h: f64) -> Result<Run> {
    c.no_weight()?;
    let d = c.dim(2)?;
    let e = c.exponents(2, 4.0, d as f64, "d")?;
    let q = c.q(1.0);
    let g = half_grid(c, d, h, 2.5)?;
    let mut center = origin(d);
    center[0] = 1.0;
    let sol = c.solution(Manufactured::Bump { center, radius: 0.75 }, false)?;
    let op = c.homogeneous_operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    dirichlet(&fl)?;
    let spec = half_mixed_spec(d, &e, Weight::hatted_power_x1(q))?;
    let xh = x1_hat(&g);
    let lhs: Vec<f64> = times(&fl.h, &xh).iter().zip(&fl.g).map(|(a, b)| a + b).collect();
    Ok(Run::new(
        h,
        vec![Part::new(
            "half-space-mixed",
            mixed_power(&g, &lhs, &spec)?,
            0.0,
            vec![
                ("F-u", mixed_power(&g, &times(&fl.f_minus_u(), &xh), &spec)?),
                ("value", mixed_power(&g, &over(&fl.u, &xh), &spec)?),
            ],
        )],
    ))
}

fn hs_dirichlet(c: &Ctx, h: f64) -> Result<Run> {
    let d = c.dim(2)?;
    let p = c.p_above(4.0, d as f64, "d")?;
    let w = c.weight()?;
    let big = c.params.get("R", 1.0);
    let g = half_grid(c, d, h, 1.25)?;
    let sol = c.solution(odd_bump(d, 1.0), false)?;
    let op = c.operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    dirichlet(&fl)?;
    let o = origin(d);
    vanishes_outside(&fl.u, &ball_mask(&g, &o, 0.0, big), "B_R^+")?;
    let m = masses(&w, &g)?;
    let collar = mass_of(&m, &ball_mask(&g, &o, 0.0, big + op.r0));
    let mut parts = vec![Part::new(
        "hessian",
        int_pow(&fl.h, &m, p, None),
        0.0,
        vec![
            ("F", int_pow(&fl.f, &m, p, None)),
            ("value", int_pow(&fl.u, &m, p, None)),
            ("tau0", op.tau0.powf(p) * collar),
        ],
    )];
    if op.tau0 == 0.0 {
        parts.extend(apriori_parts(&fl, &m, p));
    }
    Ok(Run::new(h, parts))
}

fn hs_dirichlet_mixed(c: &Ctx, h: f64) -> Result<Run> {
    c.no_weight()?;
    let d = c.dim(2)?;
    let e = c.exponents(2, 3.0, d as f64, "d")?;
    let q = c.q(0.25);
    let top = e[1] / d as f64 - 1.0;
    if !(q > -1.0 && q < top) {
        return Err(constraint(&format!("q = {q} must lie in (-1, p_2/d - 1) = (-1, {top})")));
    }
    let g = half_grid(c, d, h, 1.25)?;
    let sol = c.solution(odd_bump(d, 1.0), false)?;
    let op = c.operator(&g)?;
    c.tau0_zero(&op)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    dirichlet(&fl)?;
    let spec = half_mixed_spec(d, &e, Weight::hatted_power_x1(q))?;
    let lhs: Vec<f64> = (0..g.len()).map(|i| fl.h[i] + fl.g[i] + fl.u[i].abs()).collect();
    let mut parts = vec![Part::new(
        "dirichlet-mixed",
        mixed_power(&g, &lhs, &spec)?,
        0.0,
        vec![("F-u", mixed_power(&g, &fl.f_minus_u(), &spec)?)],
    )];
    if op.homogeneous && c.operator_config().is_x_independent() {
        let plain = half_mixed_spec(d, &e, Weight::power_x1(q))?;
        parts.push(Part::new(
            "scaled-power",
            mixed_power(&g, &fl.h, &plain)?,
            0.0,
            vec![("F", mixed_power(&g, &fl.f, &plain)?)],
        ));
    }
    Ok(Run::new(h, parts))
}

fn hs_local(c: &Ctx, h: f64) -> Result<Run> {
    let d = c.dim(2)?;
    let p = c.p_above(4.0, d as f64, "d")?;
    let w = c.weight()?;
    let (r, big) = c.radii_pair("r", "R", 0.5, 1.0)?;
    let x0 = c.params.get("x0_1", 0.0);
    if x0 < 0.0 {
        return Err(Error::param("x0_1 must be nonnegative"));
    }
    let g = half_grid(c, d, h, 1.25)?;
    let sol = c.solution(odd_bump(d, 1.2), false)?;
    let op = c.operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let mut center = origin(d);
    center[0] = x0;
    let inner = ball_mask(&g, &center, 0.0, r);
    let outer = ball_mask(&g, &center, 0.0, big);
    if x0 < big {
        let face = g.x1_zero_face();
        let max = fl.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if face.iter().any(|&i| outer.contains(i) && fl.u[i].abs() > 1e-12 * max) {
            return Err(hypothesis("u must vanish on {x_1 = 0} inside B_R(x0)"));
        }
    }
    let m = masses(&w, &g)?;
    let gap = big - r;
    let lower: Vec<f64> = (0..g.len())
        .map(|i| fl.g[i] / gap + (gap.powi(-2) + 1.0) * fl.u[i].abs())
        .collect();
    Ok(Run::new(
        h,
        vec![Part::new(
            "boundary-local",
            int_pow(&fl.h, &m, p, Some(&inner)),
            0.0,
            vec![("F", int_pow(&fl.f, &m, p, Some(&outer))), ("lower-order", int_pow(&lower, &m, p, Some(&outer)))],
        )],
    ))
}

fn para_global(c: &Ctx, h: f64) -> Result<Run> {
    let d = c.dim(1)?;
    let p = c.p_above(3.0, (d + 1) as f64, "d + 1")?;
    let w = c.weight()?;
    let big = c.params.get("R", 1.0);
    let g = para_grid(c, d, h, false)?;
    let sol = c.solution(in_time(bump(d)), true)?;
    let op = c.operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let o = origin(d);
    vanishes_outside(&fl.u, &ball_mask(&g, &o, 0.0, big), "C_R")?;
    let m = masses(&w, &g)?;
    let collar = mass_of(&m, &ball_mask(&g, &o, 0.0, big + op.r0));
    Ok(Run::new(
        h,
        vec![Part::new(
            "hessian",
            int_pow(&fl.h, &m, p, None),
            0.0,
            vec![
                ("dt+F", int_pow(&fl.f, &m, p, None)),
                ("value", int_pow(&fl.u, &m, p, None)),
                ("tau0", op.tau0.powf(p) * collar),
            ],
        )],
    ))
}

/// Parabolic a priori bounds, on the whole space or the half space.
fn para_apriori(c: &Ctx, h: f64, half: bool) -> Result<Run> {
    let d = c.dim(1)?;
    let p = c.p_above(3.0, (d + 1) as f64, "d + 1")?;
    let w = c.weight()?;
    let g = para_grid(c, d, h, half)?;
    let sol = c.solution(in_time(if half { odd_bump(d, 1.0) } else { bump(d) }), true)?;
    let op = c.operator(&g)?;
    c.tau0_zero(&op)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let m = masses(&w, &g)?;
    let mut parts = apriori_parts(&fl, &m, p);
    if half {
        dirichlet(&fl)?;
        parts.remove(0);
    }
    Ok(Run::new(h, parts))
}

/// Space axes innermost in order, time outermost.
fn para_axes(d: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (1..=d).collect();
    v.push(0);
    v
}

fn para_mixed(c: &Ctx, h: f64) -> Result<Run> {
    c.no_weight()?;
    let d = c.dim(1)?;
    let e = c.exponents(d + 1, 3.0, (d + 1) as f64, "d + 1")?;
    let g = para_grid(c, d, h, false)?;
    let sol = c.solution(in_time(bump(d)), true)?;
    let op = c.operator(&g)?;
    c.tau0_zero(&op)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let spec = MixedNormSpec::per_axis(e, para_axes(d))?;
    let lhs = mixed_power(&g, &fl.h, &spec)? + mixed_power(&g, &fl.g, &spec)? + mixed_power(&g, &fl.u, &spec)?;
    Ok(Run::new(
        h,
        vec![Part::new("mixed-norm", lhs, 0.0, vec![("dt+F-u", mixed_power(&g, &fl.f_minus_u(), &spec)?)])],
    ))
}

fn para_local_mixed(c: &Ctx, h: f64) -> Result<Run> {
    c.no_weight()?;
    let d = c.dim(1)?;
    let e = c.exponents(d + 1, 3.0, (d + 1) as f64, "d + 1")?;
    let (r, big) = c.radii_pair("r", "R", 0.5, 1.0)?;
    let t0 = c.params.get("t0", 0.25);
    let g = para_grid(c, d, h, false)?;
    let sol = c.solution(in_time(gaussian(d)), true)?;
    let op = c.operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    let spec = MixedNormSpec::per_axis(e, para_axes(d))?;
    let o = origin(d);
    let inner = ball_mask(&g, &o, t0, r);
    let outer = ball_mask(&g, &o, t0, big);
    let lhs = mixed_power(&g, &restrict(&g, &fl.h, &inner, &spec), &spec)? + mixed_power(&g, &restrict(&g, &fl.g, &inner, &spec), &spec)?;
    Ok(Run::new(
        h,
        vec![Part::new(
            "local-mixed",
            lhs,
            0.0,
            vec![
                ("dt+F", mixed_power(&g, &restrict(&g, &fl.f, &outer, &spec), &spec)?),
                ("value", mixed_power(&g, &restrict(&g, &fl.u, &outer, &spec), &spec)?),
            ],
        )],
    ))
}

fn para_hs(c: &Ctx, h: f64) -> Result<Run> {
    let d = c.dim(1)?;
    let p = c.p_above(3.0, (d + 1) as f64, "d + 1")?;
    let w = c.weight()?;
    let big = c.params.get("R", 1.0);
    let g = para_grid(c, d, h, true)?;
    let sol = c.solution(in_time(odd_bump(d, 1.0)), true)?;
    let op = c.operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    dirichlet(&fl)?;
    let o = origin(d);
    vanishes_outside(&fl.u, &ball_mask(&g, &o, 0.0, big), "C_R^+")?;
    let m = masses(&w, &g)?;
    let collar = mass_of(&m, &ball_mask(&g, &o, 0.0, big + op.r0));
    Ok(Run::new(
        h,
        vec![Part::new(
            "hessian",
            int_pow(&fl.h, &m, p, None),
            0.0,
            vec![
                ("dt+F", int_pow(&fl.f, &m, p, None)),
                ("value", int_pow(&fl.u, &m, p, None)),
                ("tau0", op.tau0.powf(p) * collar),
            ],
        )],
    ))
}

fn para_hs_mixed(c: &Ctx, h: f64) -> Result<Run> {
    c.no_weight()?;
    let d = c.dim(1)?;
    let e = c.exponents(2, 3.0, (d + 1) as f64, "d + 1")?;
    let (p1, p2) = (e[0], e[1]);
    let q = c.q(0.25);
    let top = p1 / (d + 1) as f64 - 1.0;
    if !(q > -1.0 && q < top) {
        return Err(constraint(&format!("q = {q} must lie in (-1, p_1/(d+1) - 1) = (-1, {top})")));
    }
    let (r, big) = c.radii_pair("r", "R", 0.75, 1.0)?;
    let t0 = c.params.get("t0", 0.25);
    let g = para_grid(c, d, h, true)?;
    let sol = c.solution(in_time(odd_bump(d, 1.0)), true)?;
    let op = c.operator(&g)?;
    let fl = c.fields(&op, &sol, Arc::clone(&g))?;
    dirichlet(&fl)?;
    let o = origin(d);
    let inner = ball_mask(&g, &o, t0, r);
    let outer = ball_mask(&g, &o, t0, big);
    let pw = Weight::power_x1(q);

    let space: Vec<usize> = (1..=d).collect();
    let s72 = MixedNormSpec::new(vec![p1, p2], vec![space.clone(), vec![0]])?.with_weight(0, pw.clone());
    let s73 = MixedNormSpec::new(vec![p2, p1], vec![vec![0], space])?.with_weight(1, pw);
    let mut groups = vec![vec![1]];
    let mut ex = vec![p1];
    if d >= 2 {
        groups.push((2..=d).collect());
        ex.push(p1);
    }
    groups.push(vec![0]);
    ex.push(p2);
    let s75 = MixedNormSpec::new(ex, groups)?;

    let hg1 = sum_pow(&fl.h, &fl.g, p1);
    let hg2 = sum_pow(&fl.h, &fl.g, p2);
    let part = |name: &str, lhs: &[f64], spec: &MixedNormSpec| -> Result<Part> {
        Ok(Part::new(
            name,
            mixed_power(&g, &restrict(&g, lhs, &inner, spec), spec)?,
            0.0,
            vec![
                ("dt+F", mixed_power(&g, &restrict(&g, &fl.f, &outer, spec), spec)?),
                ("value", mixed_power(&g, &restrict(&g, &fl.u, &outer, spec), spec)?),
            ],
        ))
    };
    Ok(Run::new(
        h,
        vec![
            part("space-inner", &hg1, &s72)?,
            part("time-inner", &hg2, &s73)?,
            part("per-axis", &fl.h, &s75)?,
        ],
    ))
}

/// `e^x` cut off on the left: `u'' - u` lives on the ramp only, while the
/// left-hand side grows with the window.
fn neg_exp(c: &Ctx, len: f64) -> Result<Run> {
    c.no_operator()?;
    c.no_weight()?;
    let p = c.p(2.0)?;
    let h = c.params.get("h", 0.01);
    let sol = c.solution(Manufactured::ExpCutoff { ramp: 1.0 }, false)?;
    if sol.space_dims().is_some_and(|d| d != 1) {
        return Err(Error::param("NEG-EXP is one-dimensional"));
    }
    let ramp = match sol {
        Manufactured::ExpCutoff { ramp } => ramp,
        _ => 1.0,
    };
    let left = c.params.get("left", -ramp);
    if !(len > left) {
        return Err(Error::param(format!("window end {len} must exceed the left end {left}")));
    }
    let g = grid(GridDomain::Space, vec![[left, len]], h)?;
    let fl = Fields::exact(&OperatorSpec::laplacian(1), &sol, Arc::clone(&g))?;
    let m = masses(&Weight::unit(), &g)?;
    let lhs = int_pow(&fl.h, &m, p, None) + int_pow(&fl.g, &m, p, None) + int_pow(&fl.u, &m, p, None);
    let mut run = Run::new(
        len,
        vec![Part::new("full-norm", lhs, 0.0, vec![("u''-u", int_pow(&fl.f_minus_u(), &m, p, None))])],
    );
    run.label = Some(format!("[{left}, {len}]"));
    Ok(run)
}
