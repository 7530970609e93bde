//! Estimate catalog, refinement studies and reports.
//!
//! Every catalog entry evaluates both sides of one inequality on a
//! manufactured input and reports the empirical constant
//! `N_emp = (LHS - fixed) / Σ RHS` with `0/0 := 0`, where `fixed` collects
//! right-hand terms whose coefficient is not a free constant.

mod catalog;
mod exact;
mod fields;
mod params;
mod probe;
pub mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calculus::manufactured::Manufactured;
use crate::calculus::operator::{Coefficient, OperatorKind, OperatorSpec};
use crate::error::{Error, Result};
use crate::weights::Weight;

pub use exact::{exact_identity_suite, IdentityFailure, IdentityReport, IdentitySummary};
pub use params::Params;
pub use probe::{r0_scaling_probe, ScalingProbe};
pub use report::{SuiteReport, SCHEMA_VERSION};

macro_rules! ids {
    ($($v:ident => $s:literal),* $(,)?) => {
        /// Catalog key.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum EstimateId {
            $(#[serde(rename = $s)] $v,)*
        }

        impl EstimateId {
            pub const ALL: &'static [EstimateId] = &[$(EstimateId::$v,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(EstimateId::$v => $s,)*
                }
            }
        }

        impl FromStr for EstimateId {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok(EstimateId::$v),)*
                    _ => Err(Error::Unknown { kind: "estimate id", name: s.into() }),
                }
            }
        }
    };
}

ids! {
    MaxLp => "MAX-LP",
    MaxWeak => "MAX-WEAK",
    ExactIdentities => "EXACT-IDENTITIES",
    FsLocal => "FS-LOCAL",
    Osc => "OSC",
    OscP => "OSC-P",
    Interp => "INTERP",
    InterpP => "INTERP-P",
    InterpLocal => "INTERP-LOCAL",
    W2pGlobal => "W2P-GLOBAL",
    Zeroth1d => "ZEROTH-1D",
    Apriori => "APRIORI",
    Mixed => "MIXED",
    LocalW2p => "LOCAL-W2P",
    LocalMixed => "LOCAL-MIXED",
    HsSlab => "HS-SLAB",
    HsWeighted => "HS-WEIGHTED",
    HsMixed => "HS-MIXED",
    HsDirichlet => "HS-DIRICHLET",
    HsDirichletMixed => "HS-DIRICHLET-MIXED",
    HsLocal => "HS-LOCAL",
    ParaGlobal => "PARA-GLOBAL",
    ParaApriori => "PARA-APRIORI",
    ParaMixed => "PARA-MIXED",
    ParaLocalMixed => "PARA-LOCAL-MIXED",
    ParaHs => "PARA-HS",
    ParaHsFull => "PARA-HS-FULL",
    ParaHsMixed => "PARA-HS-MIXED",
    NegExp => "NEG-EXP",
}

impl fmt::Display for EstimateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl EstimateId {
    /// Entries with an analytic pass threshold.
    pub fn is_exact(self) -> bool {
        matches!(self, EstimateId::MaxLp | EstimateId::MaxWeak | EstimateId::ExactIdentities)
    }

    /// What the ladder values mean.
    pub fn ladder_kind(self) -> LadderKind {
        match self {
            EstimateId::MaxLp => LadderKind::Exponent,
            EstimateId::MaxWeak => LadderKind::Threshold,
            EstimateId::ExactIdentities => LadderKind::Instance,
            EstimateId::NegExp => LadderKind::Window,
            _ => LadderKind::Spacing,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderKind {
    /// Grid spacings, strictly decreasing.
    Spacing,
    /// Window lengths, strictly increasing.
    Window,
    /// Exponents `p`, any order.
    Exponent,
    /// Thresholds `λ`, any order.
    Threshold,
    /// Geometry index of the identity suite.
    Instance,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    #[default]
    Bounded,
    Diverging,
}

/// Matrix entry in a config file: a number or an expression in `t, x1, ..`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Num(f64),
    Expr(String),
}

impl Entry {
    fn text(&self) -> String {
        match self {
            Entry::Num(v) => format!("{v:?}"),
            Entry::Expr(s) => s.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKindConfig {
    Laplacian,
    Linear,
    Bellman,
    PucciMax,
    PucciMin,
}

/// Operator block of a suite entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: OperatorKindConfig,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Linear coefficient rows.
    #[serde(default)]
    pub a: Option<Vec<Vec<Entry>>>,
    /// Bellman family, one matrix of rows per member.
    #[serde(default)]
    pub family: Option<Vec<Vec<Vec<Entry>>>>,
    #[serde(default)]
    pub k_f: Option<f64>,
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub tau0: Option<f64>,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            kind: OperatorKindConfig::PucciMax,
            delta: Some(0.5),
            a: None,
            family: None,
            k_f: None,
            r0: None,
            tau0: None,
        }
    }
}

fn coefficient(rows: &[Vec<Entry>]) -> Result<Coefficient> {
    let text: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(Entry::text).collect()).collect();
    Coefficient::from_rows(&text)
}

impl OperatorConfig {
    pub fn laplacian() -> Self {
        Self {
            kind: OperatorKindConfig::Laplacian,
            delta: None,
            ..Self::default()
        }
    }

    /// Operator in `d` space variables.
    pub fn build(&self, d: usize) -> Result<OperatorSpec> {
        let delta = self.delta;
        let need_delta = || delta.ok_or_else(|| Error::param("operator needs delta"));
        let mut op = match self.kind {
            OperatorKindConfig::Laplacian => OperatorSpec::laplacian(d),
            OperatorKindConfig::Linear => {
                let rows = self.a.as_ref().ok_or_else(|| Error::param("linear operator needs a"))?;
                OperatorSpec::new(OperatorKind::Linear(coefficient(rows)?), d, need_delta()?)?
            }
            OperatorKindConfig::Bellman => {
                let fam = self.family.as_ref().ok_or_else(|| Error::param("Bellman operator needs family"))?;
                if fam.is_empty() {
                    return Err(Error::param("Bellman family is empty"));
                }
                let members = fam.iter().map(|m| coefficient(m)).collect::<Result<Vec<_>>>()?;
                OperatorSpec::new(OperatorKind::Bellman(members), d, need_delta()?)?
            }
            OperatorKindConfig::PucciMax => OperatorSpec::new(OperatorKind::PucciMax, d, need_delta()?)?,
            OperatorKindConfig::PucciMin => OperatorSpec::new(OperatorKind::PucciMin, d, need_delta()?)?,
        };
        if let Some(k) = self.k_f {
            op = op.with_k_f(k);
        }
        if let Some(r0) = self.r0 {
            if !(r0 > 0.0 && r0 <= 1.0) {
                return Err(Error::param(format!("R_0 = {r0} must lie in (0, 1]")));
            }
            op = op.with_r0(r0);
        }
        if let Some(t) = self.tau0 {
            if !(t >= 0.0) {
                return Err(Error::param(format!("tau0 = {t} must be nonnegative")));
            }
            op = op.with_tau0(t);
        }
        Ok(op)
    }

    /// Coefficients that do not depend on `(t, x)`.
    pub fn is_x_independent(&self) -> bool {
        let constant = |rows: &Vec<Vec<Entry>>| rows.iter().flatten().all(|e| matches!(e, Entry::Num(_)));
        match self.kind {
            OperatorKindConfig::Laplacian | OperatorKindConfig::PucciMax | OperatorKindConfig::PucciMin => true,
            OperatorKindConfig::Linear => self.a.as_ref().map_or(false, constant),
            OperatorKindConfig::Bellman => self.family.as_ref().map_or(false, |f| f.iter().all(constant)),
        }
    }
}

/// One suite entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    pub id: EstimateId,
    /// Distinguishes several entries with the same id; defaults to the id.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
    #[serde(default)]
    pub weight: Option<Weight>,
    #[serde(default)]
    pub p: Option<f64>,
    /// Mixed-norm exponents, innermost integral first.
    #[serde(default)]
    pub exponents: Option<Vec<f64>>,
    /// Power of the `x_1` weight.
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub solution: Option<Manufactured>,
    #[serde(default)]
    pub ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Free parameters tried in every combination; the reported combination
    /// is the best verdict with the smallest worst-case `N_emp`.
    #[serde(default)]
    pub sweep: BTreeMap<String, Vec<f64>>,
    /// Defaults to diverging for the counterexample entry, bounded otherwise.
    #[serde(default)]
    pub expect: Option<Expect>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl EstimateSpec {
    pub fn new(id: EstimateId) -> Self {
        Self {
            id,
            name: None,
            operator: None,
            weight: None,
            p: None,
            exponents: None,
            q: None,
            solution: None,
            ladder: None,
            params: BTreeMap::new(),
            sweep: BTreeMap::new(),
            expect: None,
            seed: None,
        }
    }

    pub fn with_param(mut self, key: &str, v: f64) -> Self {
        self.params.insert(key.into(), v);
        self
    }

    pub fn with_ladder(mut self, ladder: Vec<f64>) -> Self {
        self.ladder = Some(ladder);
        self
    }

    pub fn expectation(&self) -> Expect {
        self.expect.unwrap_or(if self.id == EstimateId::NegExp {
            Expect::Diverging
        } else {
            Expect::Bounded
        })
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.id.as_str().to_string())
    }
}

/// A named right-hand term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    #[serde(with = "report::real")]
    pub value: f64,
}

/// One inequality of an entry at one ladder value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    #[serde(with = "report::real")]
    pub lhs: f64,
    /// Right-hand terms with a prescribed coefficient.
    #[serde(with = "report::real")]
    pub fixed: f64,
    /// Right-hand terms multiplied by the free constant.
    pub rhs_terms: Vec<Term>,
    #[serde(with = "report::real")]
    pub n_emp: f64,
}

/// `(a - b)_+ / c` with `0/0 := 0`.
pub fn ratio(lhs: f64, fixed: f64, rhs: f64) -> f64 {
    let num = (lhs - fixed).max(0.0);
    if num == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        num / rhs
    }
}

impl Part {
    pub fn new(name: &str, lhs: f64, fixed: f64, rhs_terms: Vec<(&str, f64)>) -> Self {
        let rhs_terms: Vec<Term> = rhs_terms
            .into_iter()
            .map(|(n, v)| Term {
                name: n.into(),
                value: v,
            })
            .collect();
        let total: f64 = rhs_terms.iter().map(|t| t.value).sum();
        Self {
            name: name.into(),
            lhs,
            fixed,
            n_emp: ratio(lhs, fixed, total),
            rhs_terms,
        }
    }

    fn check_finite(&self) -> Result<()> {
        let all = [self.lhs, self.fixed].into_iter().chain(self.rhs_terms.iter().map(|t| t.value));
        for v in all {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Hypothesis(format!("part '{}' has a term equal to {v}", self.name)));
            }
        }
        Ok(())
    }
}

/// All parts of an entry at one ladder value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Run {
    #[serde(with = "report::real")]
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub parts: Vec<Part>,
    /// Largest part constant.
    #[serde(with = "report::real")]
    pub n_emp: f64,
    #[serde(with = "report::real_map")]
    pub diagnostics: BTreeMap<String, f64>,
}

impl Run {
    pub fn new(value: f64, parts: Vec<Part>) -> Self {
        let n_emp = parts.iter().map(|p| p.n_emp).fold(0.0, f64::max);
        Self {
            value,
            label: None,
            parts,
            n_emp,
            diagnostics: BTreeMap::new(),
        }
    }

    fn worst(&self) -> Option<&Part> {
        self.parts.iter().fold(None, |acc: Option<&Part>, p| match acc {
            Some(a) if a.n_emp >= p.n_emp => Some(a),
            _ => Some(p),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Bounded,
    Diverging,
    Inconclusive,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ExactPass,
    ExactFail,
    Bounded,
    Diverging,
    Inconclusive,
    ExpectedDivergence,
    MissingDivergence,
}

impl Verdict {
    /// Whether the entry lets a suite succeed.
    pub fn ok(self) -> bool {
        matches!(
            self,
            Verdict::ExactPass | Verdict::Bounded | Verdict::Inconclusive | Verdict::ExpectedDivergence
        )
    }
}

/// Spread below which a series counts as bounded.
pub const BOUNDED_SPREAD: f64 = 1.25;
/// Overall growth above which a monotone series counts as diverging.
pub const DIVERGING_GROWTH: f64 = 2.0;

/// Bounded when `max/min < 1.25`, diverging when strictly increasing with
/// `last/first > 2` (or when a value is infinite), inconclusive otherwise.
pub fn classify_trend(series: &[f64]) -> Trend {
    if series.is_empty() {
        return Trend::Inconclusive;
    }
    if series.iter().any(|v| v.is_nan()) {
        return Trend::Inconclusive;
    }
    if series.iter().any(|v| v.is_infinite()) {
        return Trend::Diverging;
    }
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 || (min > 0.0 && max / min < BOUNDED_SPREAD) {
        return Trend::Bounded;
    }
    let increasing = series.windows(2).all(|w| w[1] > w[0]);
    let first = series[0];
    let last = series[series.len() - 1];
    if increasing && (first == 0.0 || last / first > DIVERGING_GROWTH) {
        return Trend::Diverging;
    }
    Trend::Inconclusive
}

/// Trend of every part, worst first: diverging over inconclusive over
/// bounded.
fn entry_trend(runs: &[Run]) -> (Trend, BTreeMap<String, Trend>) {
    let mut per_part = BTreeMap::new();
    if let Some(first) = runs.first() {
        for (k, part) in first.parts.iter().enumerate() {
            let series: Vec<f64> = runs.iter().filter_map(|r| r.parts.get(k)).map(|p| p.n_emp).collect();
            per_part.insert(part.name.clone(), classify_trend(&series));
        }
    }
    let rank = |t: &Trend| match t {
        Trend::Diverging => 3,
        Trend::Inconclusive => 2,
        Trend::Bounded => 1,
        Trend::Exact => 0,
    };
    let worst = per_part.values().copied().max_by_key(rank).unwrap_or(Trend::Inconclusive);
    (worst, per_part)
}

/// Measured result of one entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub id: EstimateId,
    pub name: String,
    /// Every parameter the entry used, defaults included.
    #[serde(with = "report::real_map")]
    pub params: BTreeMap<String, f64>,
    pub ladder_kind: LadderKind,
    pub expect: Expect,
    pub seed: u64,
    /// Worst part of the last run.
    #[serde(with = "report::real")]
    pub lhs: f64,
    pub rhs_terms: Vec<Term>,
    #[serde(with = "report::real")]
    pub n_emp: f64,
    #[serde(with = "report::real_vec")]
    pub n_emp_series: Vec<f64>,
    pub trend: Trend,
    pub part_trends: BTreeMap<String, Trend>,
    pub verdict: Verdict,
    pub runs: Vec<Run>,
}

impl InequalityReport {
    fn assemble(spec: &EstimateSpec, params: BTreeMap<String, f64>, seed: u64, runs: Vec<Run>) -> Self {
        let series: Vec<f64> = runs.iter().map(|r| r.n_emp).collect();
        let (trend, part_trends) = if spec.id.is_exact() {
            let mut per = BTreeMap::new();
            if let Some(r) = runs.first() {
                for p in &r.parts {
                    per.insert(p.name.clone(), Trend::Exact);
                }
            }
            (Trend::Exact, per)
        } else {
            entry_trend(&runs)
        };
        let verdict = if spec.id.is_exact() {
            if series.iter().all(|&v| v <= 1.0) {
                Verdict::ExactPass
            } else {
                Verdict::ExactFail
            }
        } else {
            match (spec.expectation(), trend) {
                (Expect::Diverging, Trend::Diverging) => Verdict::ExpectedDivergence,
                (Expect::Diverging, _) => Verdict::MissingDivergence,
                (_, Trend::Bounded) => Verdict::Bounded,
                (_, Trend::Diverging) => Verdict::Diverging,
                _ => Verdict::Inconclusive,
            }
        };
        let (lhs, rhs_terms, n_emp) = match runs.last().and_then(Run::worst) {
            Some(p) => (p.lhs, p.rhs_terms.clone(), p.n_emp),
            None => (0.0, Vec::new(), 0.0),
        };
        Self {
            id: spec.id,
            name: spec.display_name(),
            params,
            ladder_kind: spec.id.ladder_kind(),
            expect: spec.expectation(),
            seed,
            lhs,
            rhs_terms,
            n_emp,
            n_emp_series: series,
            trend,
            part_trends,
            verdict,
            runs,
        }
    }

    /// `1 - max N_emp` for exact entries: the distance below the analytic
    /// threshold.
    pub fn margin(&self) -> Option<f64> {
        self.id
            .is_exact()
            .then(|| 1.0 - self.n_emp_series.iter().copied().fold(0.0, f64::max))
    }
}

/// Ladder rules per kind: at least 3 entries for refinement and windows,
/// spacings strictly decreasing, windows strictly increasing.
pub fn check_ladder(kind: LadderKind, ladder: &[f64]) -> Result<()> {
    if ladder.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("ladder values must be finite"));
    }
    match kind {
        LadderKind::Spacing => {
            if ladder.len() < 3 {
                return Err(Error::param(format!("refinement ladder needs at least 3 spacings, got {}", ladder.len())));
            }
            if ladder.iter().any(|&h| h <= 0.0) {
                return Err(Error::param("spacings must be positive"));
            }
            if ladder.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::param("spacing ladder must be strictly decreasing"));
            }
        }
        LadderKind::Window => {
            if ladder.len() < 3 {
                return Err(Error::param(format!("window ladder needs at least 3 lengths, got {}", ladder.len())));
            }
            if ladder.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::param("window ladder must be strictly increasing"));
            }
        }
        LadderKind::Exponent | LadderKind::Threshold | LadderKind::Instance => {
            if ladder.is_empty() {
                return Err(Error::param("ladder is empty"));
            }
        }
    }
    Ok(())
}

/// Seed of an entry: its own, else the suite seed mixed with its name.
pub fn entry_seed(spec: &EstimateSpec, suite_seed: u64) -> u64 {
    spec.seed.unwrap_or_else(|| {
        // FNV-1a over the name, folded into the suite seed
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in spec.display_name().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100_0000_01b3);
        }
        h ^ suite_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
    })
}

fn sweep_combinations(sweep: &BTreeMap<String, Vec<f64>>) -> Result<Vec<BTreeMap<String, f64>>> {
    let mut out = vec![BTreeMap::new()];
    for (k, vals) in sweep {
        if vals.is_empty() {
            return Err(Error::param(format!("sweep over '{k}' has no values")));
        }
        out = out
            .into_iter()
            .flat_map(|base| {
                vals.iter().map(move |&v| {
                    let mut m = base.clone();
                    m.insert(k.clone(), v);
                    m
                })
            })
            .collect();
    }
    Ok(out)
}

/// Runs `spec` at every value of `ladder`.
pub fn refinement_study(spec: &EstimateSpec, ladder: &[f64], seed: u64) -> Result<InequalityReport> {
    check_ladder(spec.id.ladder_kind(), ladder)?;
    let combos = sweep_combinations(&spec.sweep)?;
    let mut best: Option<((u8, f64), InequalityReport)> = None;
    for combo in combos {
        let mut merged = spec.params.clone();
        for (k, v) in &combo {
            if merged.contains_key(k) {
                return Err(Error::param(format!("'{k}' is both fixed and swept")));
            }
            merged.insert(k.clone(), *v);
        }
        let params = Params::new(merged);
        let mut runs = Vec::with_capacity(ladder.len());
        for &v in ladder {
            let run = catalog::run(spec, &params, v, seed)?;
            if !spec.id.is_exact() && spec.expectation() == Expect::Bounded {
                for p in &run.parts {
                    p.check_finite()?;
                }
            }
            runs.push(run);
        }
        params.check_all_used()?;
        let report = InequalityReport::assemble(spec, params.resolved(), seed, runs);
        // conclusive passes first, then the smallest worst-case constant
        let rank = match report.verdict {
            Verdict::Inconclusive => 1u8,
            v if v.ok() => 0,
            _ => 2,
        };
        let score = (rank, report.n_emp_series.iter().copied().fold(0.0, f64::max));
        if best.as_ref().map_or(true, |(s, _)| score.0 < s.0 || (score.0 == s.0 && score.1 < s.1)) {
            best = Some((score, report));
        }
    }
    Ok(best.expect("at least one combination").1)
}

/// Default ladder of an entry.
pub fn default_ladder(id: EstimateId) -> Vec<f64> {
    match id {
        EstimateId::MaxLp => vec![1.5, 2.0, 4.0],
        EstimateId::MaxWeak => vec![1.5, 2.0, 4.0, 8.0],
        EstimateId::ExactIdentities => vec![0.0, 1.0, 2.0],
        EstimateId::NegExp => vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        EstimateId::FsLocal => vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
        EstimateId::Osc | EstimateId::OscP | EstimateId::InterpP => vec![0.1, 0.05, 0.025],
        EstimateId::ParaGlobal
        | EstimateId::ParaApriori
        | EstimateId::ParaMixed
        | EstimateId::ParaLocalMixed
        | EstimateId::ParaHs
        | EstimateId::ParaHsFull
        | EstimateId::ParaHsMixed => vec![0.025, 0.0125, 0.00625],
        _ => vec![0.05, 0.025, 0.0125],
    }
}

/// Runs one entry over its ladder (or the default one).
pub fn run_estimate_check(spec: &EstimateSpec, suite_seed: u64) -> Result<InequalityReport> {
    let ladder = spec.ladder.clone().unwrap_or_else(|| default_ladder(spec.id));
    refinement_study(spec, &ladder, entry_seed(spec, suite_seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_classes() {
        assert_eq!(classify_trend(&[1.0, 1.1, 1.2]), Trend::Bounded);
        assert_eq!(classify_trend(&[0.0, 0.0, 0.0]), Trend::Bounded);
        assert_eq!(classify_trend(&[1.0, 3.0, 9.0]), Trend::Diverging);
        assert_eq!(classify_trend(&[1.0, 3.0, 1.5]), Trend::Inconclusive);
        assert_eq!(classify_trend(&[1.0, 1.5, 1.9]), Trend::Inconclusive);
        assert_eq!(classify_trend(&[1.0, f64::INFINITY]), Trend::Diverging);
    }

    #[test]
    fn zero_over_zero_is_zero() {
        assert_eq!(ratio(0.0, 0.0, 0.0), 0.0);
        assert!(ratio(1.0, 0.0, 0.0).is_infinite());
        assert_eq!(ratio(1.0, 2.0, 1.0), 0.0);
        assert_eq!(ratio(3.0, 1.0, 4.0), 0.5);
    }

    #[test]
    fn ladder_rules() {
        assert!(check_ladder(LadderKind::Spacing, &[0.1, 0.05]).is_err());
        assert!(check_ladder(LadderKind::Spacing, &[0.1, 0.05, 0.05]).is_err());
        assert!(check_ladder(LadderKind::Spacing, &[0.1, 0.05, 0.025]).is_ok());
        assert!(check_ladder(LadderKind::Window, &[3.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn ids_round_trip() {
        for &id in EstimateId::ALL {
            assert_eq!(id.as_str().parse::<EstimateId>().unwrap(), id);
        }
        assert!("W3P".parse::<EstimateId>().is_err());
    }

    #[test]
    fn sweep_expands_products() {
        let mut s = BTreeMap::new();
        s.insert("a".to_string(), vec![1.0, 2.0]);
        s.insert("b".to_string(), vec![3.0, 4.0, 5.0]);
        assert_eq!(sweep_combinations(&s).unwrap().len(), 6);
    }
}
