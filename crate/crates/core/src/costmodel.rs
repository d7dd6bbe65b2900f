//! Cost-of-update-delay functions, per-update value of information and the
//! per-update sawtooth areas.
//!
//! Three families are supported, each with a rate parameter `alpha >= 0`:
//!
//! ```text
//! linear       f(t) = alpha * t
//! exponential  f(t) = exp(alpha * t) - 1
//! logarithmic  f(t) = ln(alpha * t + 1)
//! ```
//!
//! Logarithms are natural throughout. `alpha = 0` is accepted at construction
//! (the cost is then identically zero) and reported by
//! [`CostModel::is_degenerate`]; ratio and area operations reject it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{integrate, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Linear,
    Exponential,
    Logarithmic,
}

impl CostKind {
    pub const ALL: [CostKind; 3] = [
        CostKind::Linear,
        CostKind::Exponential,
        CostKind::Logarithmic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CostKind::Linear => "linear",
            CostKind::Exponential => "exponential",
            CostKind::Logarithmic => "logarithmic",
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(CostKind::Linear),
            "exponential" | "exp" => Ok(CostKind::Exponential),
            "logarithmic" | "log" => Ok(CostKind::Logarithmic),
            other => Err(Error::InvalidParameter(format!(
                "unknown cost kind '{other}' (expected linear, exponential or logarithmic)"
            ))),
        }
    }
}

/// A cost function family together with its rate parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    kind: CostKind,
    alpha: f64,
}

impl CostModel {
    pub fn new(kind: CostKind, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(Self { kind, alpha })
    }

    pub fn linear(alpha: f64) -> Result<Self> {
        Self::new(CostKind::Linear, alpha)
    }

    pub fn exponential(alpha: f64) -> Result<Self> {
        Self::new(CostKind::Exponential, alpha)
    }

    pub fn logarithmic(alpha: f64) -> Result<Self> {
        Self::new(CostKind::Logarithmic, alpha)
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha == 0.0
    }

    fn require_positive_alpha(&self, what: &'static str) -> Result<()> {
        if self.is_degenerate() {
            Err(Error::DegenerateAlpha(what))
        } else {
            Ok(())
        }
    }

    /// Cost `f(elapsed)` after `elapsed` time units without a fresh update.
    ///
    /// # Panics
    /// If `elapsed` is negative or NaN.
    pub fn cost(&self, elapsed: f64) -> f64 {
        assert!(elapsed >= 0.0, "elapsed time must be >= 0, got {elapsed}");
        let x = self.alpha * elapsed;
        match self.kind {
            CostKind::Linear => x,
            CostKind::Exponential => x.exp_m1(),
            CostKind::Logarithmic => x.ln_1p(),
        }
    }

    /// Elapsed time at which the cost reaches `level`; the inverse of [`cost`](Self::cost).
    pub fn elapsed_for_cost(&self, level: f64) -> Result<f64> {
        if !(level >= 0.0 && level.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cost level must be finite and >= 0, got {level}"
            )));
        }
        if level == 0.0 {
            return Ok(0.0);
        }
        self.require_positive_alpha("the inverse cost")?;
        let x = match self.kind {
            CostKind::Linear => level,
            CostKind::Exponential => level.ln_1p(),
            CostKind::Logarithmic => level.exp_m1(),
        };
        Ok(x / self.alpha)
    }

    /// `∫₀ˣ f(t) dt`, the accumulated cost over a stretch of length `x >= 0`.
    pub fn cumulative_cost(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "integration length must be >= 0, got {x}"
            )));
        }
        if self.kind == CostKind::Linear {
            return Ok(0.5 * self.alpha * x * x);
        }
        self.require_positive_alpha("the accumulated cost")?;
        let u = self.alpha * x;
        let v = match self.kind {
            CostKind::Exponential => expm1_minus_x(u),
            CostKind::Logarithmic => one_plus_log_minus_x(u),
            CostKind::Linear => unreachable!(),
        };
        Ok(v / self.alpha)
    }

    /// Value of information of an update with interarrival `y` and system time `t`:
    /// the fraction of the pre-reception cost `f(y + t)` removed by the reception.
    pub fn voiu(&self, y: f64, t: f64) -> Result<f64> {
        check_update(y, t)?;
        self.require_positive_alpha("the value of information")?;
        let a = self.alpha;
        let v = match self.kind {
            CostKind::Linear => y / (y + t),
            // (e^{a(y+t)} - e^{at}) / (e^{a(y+t)} - 1), scaled by e^{-a(y+t)}
            CostKind::Exponential => (-a * y).exp_m1() / (-a * (y + t)).exp_m1(),
            CostKind::Logarithmic => {
                let total = (a * (y + t)).ln_1p();
                (total - (a * t).ln_1p()) / total
            }
        };
        Ok(v.clamp(0.0, 1.0))
    }

    /// Area under the cost sawtooth attributed to one update, closed form.
    pub fn area(&self, y: f64, t: f64) -> Result<f64> {
        check_update(y, t)?;
        let a = self.alpha;
        let q = match self.kind {
            CostKind::Linear => a * (y * t + 0.5 * y * y),
            CostKind::Exponential => {
                self.require_positive_alpha("the exponential area")?;
                // (e^{a(y+t)} - e^{at})/a - y split so that no term cancels
                ((a * t).exp_m1() * (a * y).exp_m1() + expm1_minus_x(a * y)) / a
            }
            CostKind::Logarithmic => {
                self.require_positive_alpha("the logarithmic area")?;
                (one_plus_log_minus_x(a * (y + t)) - one_plus_log_minus_x(a * t)) / a
            }
        };
        Ok(q.max(0.0))
    }

    /// Area per update by quadrature of its integral definition:
    /// `∫₀^{y+t} f(s) ds - ∫₀^t f(s) ds`.
    pub fn area_numeric(&self, y: f64, t: f64, spec: &QuadratureSpec) -> Result<f64> {
        check_update(y, t)?;
        if self.kind != CostKind::Linear {
            self.require_positive_alpha("the numeric area")?;
        }
        let f = |s: f64| self.cost(s);
        Ok(integrate(f, 0.0, y + t, spec)? - integrate(f, 0.0, t, spec)?)
    }
}

fn check_update(y: f64, t: f64) -> Result<()> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "interarrival time must be finite and > 0, got {y}"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "system time must be finite and >= 0, got {t}"
        )));
    }
    Ok(())
}

/// `e^u - 1 - u`.
fn expm1_minus_x(u: f64) -> f64 {
    if u.abs() < 0.5 {
        let mut term = u;
        let mut sum = 0.0;
        for k in 2..30 {
            term *= u / k as f64;
            sum += term;
            if term.abs() <= f64::EPSILON * sum.abs() {
                break;
            }
        }
        sum
    } else {
        u.exp_m1() - u
    }
}

/// `(1 + u) ln(1 + u) - u` for `u >= 0`.
fn one_plus_log_minus_x(u: f64) -> f64 {
    if u < 0.5 {
        // Σ_{k>=2} (-1)^k u^k / (k (k-1))
        let mut pow = -u;
        let mut sum = 0.0;
        for k in 2..60 {
            pow *= -u;
            let add = pow / (k * (k - 1)) as f64;
            sum += add;
            if add.abs() <= f64::EPSILON * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (1.0 + u) * u.ln_1p() - u
    }
}

/// One delivered status update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    /// 1-based delivery index.
    pub i: u64,
    /// Generation time.
    pub t_gen: f64,
    /// Reception time.
    pub t_recv: f64,
    /// Interarrival time since the previous generation.
    #[serde(rename = "Y")]
    pub interarrival: f64,
    /// Waiting plus service time.
    #[serde(rename = "T")]
    pub system_time: f64,
    #[serde(rename = "V")]
    pub voiu: f64,
    #[serde(rename = "Q")]
    pub area: f64,
}

impl UpdateRecord {
    /// Builds the record of update `i` from consecutive generation times and its
    /// reception time.
    pub fn from_events(
        model: &CostModel,
        i: u64,
        prev_gen: f64,
        gen: f64,
        recv: f64,
    ) -> Result<Self> {
        if !(gen > prev_gen) {
            return Err(Error::InvalidParameter(format!(
                "generation times must increase ({prev_gen} then {gen})"
            )));
        }
        if !(recv >= gen) {
            return Err(Error::InvalidParameter(format!(
                "reception at {recv} precedes generation at {gen}"
            )));
        }
        let y = gen - prev_gen;
        let t = recv - gen;
        Ok(Self {
            i,
            t_gen: gen,
            t_recv: recv,
            interarrival: y,
            system_time: t,
            voiu: model.voiu(y, t)?,
            area: model.area(y, t)?,
        })
    }

    /// Drop in cost at reception: `f(Y + T) - f(T)`.
    pub fn cost_drop(&self, model: &CostModel) -> f64 {
        model.cost(self.interarrival + self.system_time) - model.cost(self.system_time)
    }
}
