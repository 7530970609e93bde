//! Weights, Muckenhoupt and beta-type constants, weighted and mixed norms.
//!
//! A weight is a function of a point. Power forms depend on `x_1`, whose
//! coordinate index is supplied by the caller: 0 on space grids and
//! filtrations, 1 on space-time ones (axis 0 is time there).

pub mod ap;
pub mod beta;
pub mod norms;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ap::{ap_constant, ap_functional, ApEstimate, ApFamily};
pub use beta::{beta_type_constant, BetaEstimate};
pub use norms::{
    cell_masses, integrate_power, mixed_norm, mixed_norm_values, node_masses, weighted_norm, weighted_norm_field,
    MixedNormSpec,
};

/// Gauss-Legendre nodes per axis for radial weights.
const RADIAL_NODES: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum WeightForm {
    /// `w ≡ 1`.
    Unit,
    /// One value per finest cell or grid node, in the layout of the object
    /// it is applied to.
    Tabulated { values: Vec<f64> },
    /// `|x_1|^q`.
    PowerX1 { q: f64 },
    /// `min(|x_1|, 1)^q`.
    HattedPowerX1 { q: f64 },
    /// `|x|^q` over the space coordinates.
    PowerRadial { q: f64 },
}

/// `w(x) = form(dilation · x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    #[serde(flatten)]
    pub form: WeightForm,
    #[serde(default = "one")]
    pub dilation: f64,
}

fn one() -> f64 {
    1.0
}

impl Weight {
    pub fn new(form: WeightForm) -> Result<Self> {
        let w = Self { form, dilation: 1.0 };
        w.validate()?;
        Ok(w)
    }

    pub fn unit() -> Self {
        Self {
            form: WeightForm::Unit,
            dilation: 1.0,
        }
    }

    pub fn power_x1(q: f64) -> Self {
        Self {
            form: WeightForm::PowerX1 { q },
            dilation: 1.0,
        }
    }

    pub fn hatted_power_x1(q: f64) -> Self {
        Self {
            form: WeightForm::HattedPowerX1 { q },
            dilation: 1.0,
        }
    }

    pub fn power_radial(q: f64) -> Self {
        Self {
            form: WeightForm::PowerRadial { q },
            dilation: 1.0,
        }
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        Self::new(WeightForm::Tabulated { values })
    }

    /// `x ↦ w(s x)`.
    pub fn dilated(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::param(format!("dilation {s} must be positive")));
        }
        if matches!(self.form, WeightForm::Tabulated { .. }) {
            return Err(Error::param("tabulated weights cannot be dilated; dilate the filtration instead"));
        }
        Ok(Self {
            form: self.form.clone(),
            dilation: self.dilation * s,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dilation > 0.0 && self.dilation.is_finite()) {
            return Err(Error::param(format!("dilation {} must be positive", self.dilation)));
        }
        match &self.form {
            WeightForm::Tabulated { values } => {
                if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::NotAWeight(format!("tabulated value {} at {i}", values[i])));
                }
            }
            WeightForm::PowerX1 { q } | WeightForm::HattedPowerX1 { q } | WeightForm::PowerRadial { q } => {
                if !q.is_finite() {
                    return Err(Error::param("power must be finite"));
                }
            }
            WeightForm::Unit => {}
        }
        Ok(())
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.form, WeightForm::Tabulated { .. })
    }

    /// Exponent of a power form, zero for `Unit`.
    pub fn power(&self) -> Option<f64> {
        match self.form {
            WeightForm::Unit => Some(0.0),
            WeightForm::PowerX1 { q } | WeightForm::HattedPowerX1 { q } | WeightForm::PowerRadial { q } => Some(q),
            WeightForm::Tabulated { .. } => None,
        }
    }

    /// Pointwise value of an analytic form; `x1` is the coordinate index of
    /// `x_1`.
    pub fn value(&self, x: &[f64], x1: usize) -> Result<f64> {
        let s = self.dilation;
        Ok(match self.form {
            WeightForm::Unit => 1.0,
            WeightForm::PowerX1 { q } => (s * x[x1]).abs().powf(q),
            WeightForm::HattedPowerX1 { q } => (s * x[x1]).abs().min(1.0).powf(q),
            WeightForm::PowerRadial { q } => {
                (s * x[x1..].iter().map(|v| v * v).sum::<f64>().sqrt()).powf(q)
            }
            WeightForm::Tabulated { .. } => {
                return Err(Error::param("tabulated weights have no pointwise formula"));
            }
        })
    }

    /// `∫_box w^e`, in closed form for the `x_1` powers. Infinite when the
    /// power is not integrable up to `x_1 = 0` and the box reaches it.
    pub fn box_integral(&self, lo: &[f64], hi: &[f64], x1: usize, e: f64) -> Result<f64> {
        let vol = |skip: Option<usize>| -> f64 {
            (0..lo.len())
                .filter(|&a| Some(a) != skip)
                .map(|a| hi[a] - lo[a])
                .product()
        };
        let s = self.dilation;
        Ok(match self.form {
            WeightForm::Unit => vol(None),
            WeightForm::PowerX1 { q } => {
                power_integral(s * lo[x1], s * hi[x1], q * e) / s * vol(Some(x1))
            }
            WeightForm::HattedPowerX1 { q } => {
                hatted_integral(s * lo[x1], s * hi[x1], q * e) / s * vol(Some(x1))
            }
            WeightForm::PowerRadial { q } => radial_integral(lo, hi, x1, s, q * e),
            WeightForm::Tabulated { .. } => {
                return Err(Error::param("tabulated weights are integrated cell by cell"));
            }
        })
    }
}

/// `∫_a^b |x|^q dx` for `a <= b`.
pub fn power_integral(a: f64, b: f64, q: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if q == 0.0 {
        return b - a;
    }
    if q <= -1.0 {
        if a <= 0.0 && b >= 0.0 {
            return f64::INFINITY;
        }
        let (lo, hi) = if a > 0.0 { (a, b) } else { (-b, -a) };
        return if q == -1.0 {
            (hi / lo).ln()
        } else {
            (hi.powf(q + 1.0) - lo.powf(q + 1.0)) / (q + 1.0)
        };
    }
    // antiderivative sign(x)|x|^{q+1}/(q+1)
    let g = |x: f64| x.signum() * x.abs().powf(q + 1.0) / (q + 1.0);
    g(b) - g(a)
}

/// `∫_a^b min(|x|, 1)^q dx`.
pub fn hatted_integral(a: f64, b: f64, q: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let inner = power_integral(a.max(-1.0), b.min(1.0), q);
    let outer = (b.max(1.0) - a.max(1.0)) + (b.min(-1.0) - a.min(-1.0));
    if a.max(-1.0) < b.min(1.0) {
        inner + outer
    } else {
        outer
    }
}

fn radial_integral(lo: &[f64], hi: &[f64], x1: usize, s: f64, q: f64) -> f64 {
    let rule = GaussLegendre::new(std::num::NonZeroUsize::new(RADIAL_NODES).unwrap());
    let d = lo.len();
    let nodes: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|a| {
            if a < x1 {
                vec![(0.5 * (lo[a] + hi[a]), hi[a] - lo[a])]
            } else {
                let (c, h) = (0.5 * (lo[a] + hi[a]), 0.5 * (hi[a] - lo[a]));
                rule.iter().map(|(x, w)| (c + h * x, h * w)).collect()
            }
        })
        .collect();
    let shape: Vec<usize> = nodes.iter().map(Vec::len).collect();
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    for _ in 0..shape.iter().product::<usize>() {
        let r2: f64 = (x1..d).map(|a| nodes[a][idx[a]].0.powi(2)).sum();
        let w: f64 = (0..d).map(|a| nodes[a][idx[a]].1).product();
        total += w * (s * r2.sqrt()).powf(q);
        crate::filtration::increment(&mut idx, &shape);
    }
    total
}
