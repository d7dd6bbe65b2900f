//! Average CoUD and average VoIU of the M/M/1 FCFS status-update system.
//!
//! The linear CoUD is exact for the dependent interarrival/system-time
//! process. Every other average is evaluated with `Y ~ Exp(λ)` and
//! `T ~ Exp(μ - λ)` treated as independent, which is what the moment
//! generating functions and the conditional expectation below assume. The
//! simulator in [`crate::sim`] measures the dependent process.

use serde::{Deserialize, Serialize};

use crate::costmodel::{CostKind, CostModel};
use crate::error::{Error, Result};
use crate::specfun::{hyp2f1_1_2_3, scaled_exp_integral_e1, try_integrate, QuadratureSpec};

/// `ln(1e16)`: exponential weights are cut where they fall below 1e-16 of their peak.
const TAIL_DECADES: f64 = 36.841_361_487_904_734;

/// Arrival and service rates of a stable M/M/1 queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    lambda: f64,
    mu: f64,
}

impl QueueParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "arrival rate lambda must be finite and > 0, got {lambda}"
            )));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "service rate mu must be finite and > 0, got {mu}"
            )));
        }
        let rho = lambda / mu;
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::UnstableQueue { rho });
        }
        Ok(Self { lambda, mu })
    }

    pub fn from_rho(rho: f64, mu: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::UnstableQueue { rho });
        }
        Self::new(rho * mu, mu)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }

    /// Rate `μ(1 - ρ) = μ - λ` of the exponential stationary system time.
    pub fn system_time_rate(&self) -> f64 {
        self.mu - self.lambda
    }
}

/// Stationary density of the system time, `μ(1-ρ) e^{-μ(1-ρ)t}`.
pub fn system_time_pdf(q: &QueueParams, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let r = q.system_time_rate();
    r * (-r * t).exp()
}

/// Average linear CoUD `α (1/μ) (1 + 1/ρ + ρ²/(1-ρ))`.
pub fn avg_coud_linear(q: &QueueParams, alpha: f64) -> f64 {
    let rho = q.rho();
    alpha / q.mu() * (1.0 + 1.0 / rho + rho * rho / (1.0 - rho))
}

/// `E[e^{αT}]`, finite only while `α < μ - λ`.
pub fn system_time_mgf(q: &QueueParams, alpha: f64) -> Option<f64> {
    let r = q.system_time_rate();
    (alpha - r < 0.0).then(|| -r / (alpha - r))
}

/// `E[e^{α(Y+T)}]` with `Y` and `T` independent; needs `α < λ` and `α < μ - λ`.
pub fn cycle_mgf(q: &QueueParams, alpha: f64) -> Option<f64> {
    let r = q.system_time_rate();
    let lambda = q.lambda();
    (alpha - lambda < 0.0 && alpha - r < 0.0).then(|| r * lambda / ((alpha - r) * (alpha - lambda)))
}

/// An average CoUD that may diverge. Divergent values are `+inf` with `valid = false`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoudEstimate {
    pub value: f64,
    pub valid: bool,
    pub note: Option<String>,
}

impl CoudEstimate {
    fn finite(value: f64) -> Self {
        Self {
            value,
            valid: true,
            note: None,
        }
    }
}

fn require_positive(alpha: f64, what: &'static str) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else if alpha == 0.0 {
        Err(Error::DegenerateAlpha(what))
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must be finite and > 0, got {alpha}"
        )))
    }
}

/// Average exponential CoUD
/// `(λ/α) · μ(1-ρ)/(α - μ(1-ρ)) · (λ/(α-λ) + 1) - 1`.
///
/// Reported invalid (`+inf`) when `α >= λ` or `α >= μ - λ`; the boundary itself
/// is invalid.
pub fn avg_coud_exponential(q: &QueueParams, alpha: f64) -> Result<CoudEstimate> {
    require_positive(alpha, "the exponential CoUD")?;
    let lambda = q.lambda();
    let r = q.system_time_rate();
    let mut violated = Vec::new();
    if !(alpha - lambda < 0.0) {
        violated.push("alpha >= lambda");
    }
    if !(alpha - r < 0.0) {
        violated.push("alpha >= mu - lambda");
    }
    if !violated.is_empty() {
        return Ok(CoudEstimate {
            value: f64::INFINITY,
            valid: false,
            note: Some(violated.join(" and ")),
        });
    }
    let value = lambda / alpha * (r / (alpha - r)) * (lambda / (alpha - lambda) + 1.0) - 1.0;
    Ok(CoudEstimate::finite(value))
}

/// `E[g(Y, T)]` for independent `Y ~ Exp(λ)`, `T ~ Exp(μ-λ)` by iterated
/// adaptive quadrature, inner over `t`, outer over `y`.
fn independent_expectation<G>(q: &QueueParams, spec: &QuadratureSpec, g: G) -> Result<f64>
where
    G: Fn(f64, f64) -> Result<f64>,
{
    let lambda = q.lambda();
    let r = q.system_time_rate();
    let y_max = TAIL_DECADES / lambda;
    let t_max = TAIL_DECADES / r;
    try_integrate(
        |y| {
            let inner = try_integrate(|t| Ok(r * (-r * t).exp() * g(y, t)?), 0.0, t_max, spec)?;
            Ok(lambda * (-lambda * y).exp() * inner)
        },
        0.0,
        y_max,
        spec,
    )
}

/// Average logarithmic CoUD `λ E[Q_L]`, with `E[Q_L]` from two-dimensional quadrature.
pub fn avg_coud_logarithmic(
    q: &QueueParams,
    alpha: f64,
    spec: &QuadratureSpec,
) -> Result<CoudEstimate> {
    require_positive(alpha, "the logarithmic CoUD")?;
    let model = CostModel::logarithmic(alpha)?;
    let mean_area = independent_expectation(q, spec, |y, t| model.area(y, t))?;
    Ok(CoudEstimate::finite(q.lambda() * mean_area))
}

/// Average CoUD for any cost model.
pub fn avg_coud(q: &QueueParams, model: &CostModel, spec: &QuadratureSpec) -> Result<CoudEstimate> {
    match model.kind() {
        CostKind::Linear => Ok(CoudEstimate::finite(avg_coud_linear(q, model.alpha()))),
        CostKind::Exponential => avg_coud_exponential(q, model.alpha()),
        CostKind::Logarithmic => avg_coud_logarithmic(q, model.alpha(), spec),
    }
}

/// Mean linear VoIU `[μ(1-ρ)/(2λ)] · ₂F₁(1, 2; 3; (2λ-μ)/λ)`.
pub fn mean_voiu_linear(q: &QueueParams) -> f64 {
    let lambda = q.lambda();
    let z = (2.0 * lambda - q.mu()) / lambda;
    // z = 2 - 1/ρ < 1 for every stable queue
    let f = hyp2f1_1_2_3(z).expect("2F1 argument is below 1 for 0 < rho < 1");
    q.system_time_rate() / (2.0 * lambda) * f
}

/// `E[X/(X+T) | X = x] = -x μ(1-ρ) e^{xμ(1-ρ)} Ei(-μ(1-ρ)x)`.
pub fn conditional_mean_voiu_linear(q: &QueueParams, x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "interarrival must be finite and > 0, got {x}"
        )));
    }
    let s = x * q.system_time_rate();
    // -e^{s} Ei(-s) = e^{s} E1(s)
    Ok(s * scaled_exp_integral_e1(s)?)
}

/// Mean VoIU by two-dimensional quadrature of the per-update VoIU.
pub fn mean_voiu_numeric(q: &QueueParams, model: &CostModel, spec: &QuadratureSpec) -> Result<f64> {
    if model.is_degenerate() {
        return Err(Error::DegenerateAlpha("the value of information"));
    }
    let v = independent_expectation(q, spec, |y, t| model.voiu(y, t))?;
    Ok(v.clamp(0.0, 1.0))
}

/// Mean VoIU: hypergeometric closed form for the linear model, quadrature otherwise.
pub fn mean_voiu(q: &QueueParams, model: &CostModel, spec: &QuadratureSpec) -> Result<f64> {
    if model.is_degenerate() {
        return Err(Error::DegenerateAlpha("the value of information"));
    }
    match model.kind() {
        CostKind::Linear => Ok(mean_voiu_linear(q)),
        _ => mean_voiu_numeric(q, model, spec),
    }
}

/// Average VoIU per unit time, `λ E[V]`.
pub fn avg_voiu_rate(q: &QueueParams, model: &CostModel, spec: &QuadratureSpec) -> Result<f64> {
    Ok(q.lambda() * mean_voiu(q, model, spec)?)
}

/// Average CoUD and VoIU at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticResult {
    /// `+inf` (serialized as `null`) when the moment conditions fail.
    pub avg_coud: f64,
    pub avg_voiu_rate: f64,
    pub mean_voiu: f64,
    pub valid: bool,
    pub validity_note: String,
}

pub fn evaluate(
    q: &QueueParams,
    model: &CostModel,
    spec: &QuadratureSpec,
) -> Result<AnalyticResult> {
    let coud = avg_coud(q, model, spec)?;
    let mean = mean_voiu(q, model, spec)?;
    Ok(AnalyticResult {
        avg_coud: coud.value,
        avg_voiu_rate: q.lambda() * mean,
        mean_voiu: mean,
        valid: coud.valid,
        validity_note: coud.note.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::integrate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(lambda: f64, mu: f64) -> QueueParams {
        QueueParams::new(lambda, mu).unwrap()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn queue_params_validation() {
        assert!(matches!(
            QueueParams::new(1.2, 1.0),
            Err(Error::UnstableQueue { .. })
        ));
        assert!(matches!(
            QueueParams::new(1.0, 1.0),
            Err(Error::UnstableQueue { .. })
        ));
        assert!(QueueParams::new(0.0, 1.0).is_err());
        assert!(QueueParams::new(0.5, f64::INFINITY).is_err());
        let p = QueueParams::from_rho(0.25, 2.0).unwrap();
        assert_eq!((p.lambda(), p.mu(), p.rho()), (0.5, 2.0, 0.25));
        assert!(QueueParams::from_rho(1.0, 2.0).is_err());
    }

    #[test]
    fn pdf_examples() {
        assert_eq!(system_time_pdf(&q(0.5, 1.0), 0.0), 0.5);
        let v = system_time_pdf(&QueueParams::from_rho(0.25, 2.0).unwrap(), 1.0);
        assert!((v - 1.5 * (-1.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.33470).abs() < 1e-5);
        for p in [q(0.1, 1.0), q(0.5, 1.0), q(3.0, 4.0)] {
            let mass = integrate(|t| system_time_pdf(&p, t), 0.0, f64::INFINITY, &spec()).unwrap();
            assert!((mass - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_coud_examples() {
        assert!((avg_coud_linear(&q(0.5, 1.0), 1.0) - 3.5).abs() < 1e-15);
        assert!((avg_coud_linear(&q(0.5, 1.0), 0.1) - 0.35).abs() < 1e-15);
        assert_eq!(avg_coud_linear(&q(0.5, 1.0), 0.0), 0.0);
        for k in [0.1, 3.0, 17.0] {
            let p = q(0.3, 1.7);
            let scaled = avg_coud_linear(&p, 0.4 * k);
            assert!((scaled - k * avg_coud_linear(&p, 0.4)).abs() < 1e-12 * scaled);
        }
    }

    #[test]
    fn exponential_coud_examples() {
        let c = avg_coud_exponential(&q(0.5, 1.0), 0.1).unwrap();
        assert!(c.valid);
        assert!((c.value - 0.5625).abs() < 1e-12);
        let bad = avg_coud_exponential(&q(0.5, 1.0), 0.6).unwrap();
        assert!(!bad.valid && bad.value.is_infinite());
        assert!(bad.note.as_deref().unwrap().contains("alpha >= lambda"));
        let bad = avg_coud_exponential(&q(0.9, 1.0), 0.2).unwrap();
        assert_eq!(bad.note.as_deref(), Some("alpha >= mu - lambda"));
        assert!(matches!(
            avg_coud_exponential(&q(0.5, 1.0), 0.0),
            Err(Error::DegenerateAlpha(_))
        ));
    }

    #[test]
    fn exponential_coud_through_mgfs() {
        let p = q(0.4, 1.3);
        let a = 0.2;
        let via_mgf =
            p.lambda() / a * (cycle_mgf(&p, a).unwrap() - system_time_mgf(&p, a).unwrap()) - 1.0;
        let direct = avg_coud_exponential(&p, a).unwrap().value;
        assert!((via_mgf - direct).abs() < 1e-12);
        assert!(system_time_mgf(&p, 0.9).is_none());
        assert!(cycle_mgf(&p, 0.4).is_none());
    }

    #[test]
    fn exponential_small_alpha_limit() {
        // With Y and T independent, C_E/α → λ(E[Y]E[T] + E[Y²]/2) = 1/λ + 1/(μ-λ),
        // which exceeds the exact linear C_P/α by ρ/μ.
        for p in [q(0.5, 1.0), q(0.3, 1.0), q(1.0, 2.5)] {
            let a = 1e-3;
            let ce = avg_coud_exponential(&p, a).unwrap().value / a;
            let indep = 1.0 / p.lambda() + 1.0 / p.system_time_rate();
            assert!(((ce - indep) / indep).abs() < 1e-2, "{ce} vs {indep}");
            let gap = indep - avg_coud_linear(&p, 1.0);
            assert!((gap - p.rho() / p.mu()).abs() < 1e-12);
        }
    }

    #[test]
    fn logarithmic_coud_golden() {
        // frozen from an independent scipy dblquad evaluation over [0, ∞)²
        let c = avg_coud_logarithmic(&q(0.5, 1.0), 0.1, &spec()).unwrap();
        assert!(c.valid);
        assert!(
            (c.value - 0.318_311_294_861_071_07).abs() < 1e-6,
            "{}",
            c.value
        );
        assert!(c.value > 0.0 && c.value < 0.35);
        let tiny = avg_coud_logarithmic(&q(0.5, 1.0), 1e-6, &spec())
            .unwrap()
            .value;
        assert!(tiny > 0.0 && tiny < 1e-5);
    }

    /// E[F(Y+T)] - E[F(T)] with the hypoexponential density of Y+T.
    fn log_coud_one_dimensional(p: &QueueParams, alpha: f64) -> f64 {
        let m = CostModel::logarithmic(alpha).unwrap();
        let (l, r) = (p.lambda(), p.system_time_rate());
        let s = QuadratureSpec::new(1e-13, 1e-11, 4000).unwrap();
        let sum_pdf = |x: f64| l * r / (r - l) * ((-l * x).exp() - (-r * x).exp());
        let e_sum = integrate(
            |x| sum_pdf(x) * m.cumulative_cost(x).unwrap(),
            0.0,
            f64::INFINITY,
            &s,
        )
        .unwrap();
        let e_t = integrate(
            |t| r * (-r * t).exp() * m.cumulative_cost(t).unwrap(),
            0.0,
            f64::INFINITY,
            &s,
        )
        .unwrap();
        l * (e_sum - e_t)
    }

    #[test]
    fn logarithmic_coud_matches_one_dimensional_route() {
        for (p, a) in [(q(0.3, 1.0), 0.1), (q(0.7, 1.0), 0.5), (q(0.2, 2.0), 1.0)] {
            let two_d = avg_coud_logarithmic(&p, a, &spec()).unwrap().value;
            let one_d = log_coud_one_dimensional(&p, a);
            assert!(((two_d - one_d) / one_d).abs() < 1e-7, "{two_d} vs {one_d}");
        }
    }

    #[test]
    fn logarithmic_coud_matches_independent_resampling() {
        let p = q(0.5, 1.0);
        let m = CostModel::logarithmic(0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 400_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let y = -(1.0 - rng.gen::<f64>()).ln() / p.lambda();
            let t = -(1.0 - rng.gen::<f64>()).ln() / p.system_time_rate();
            let c = p.lambda() * m.area(y, t).unwrap();
            sum += c;
            sum2 += c * c;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = avg_coud_logarithmic(&p, 0.1, &spec()).unwrap().value;
        assert!((mean - exact).abs() < 4.0 * se, "{mean} ± {se} vs {exact}");
    }

    #[test]
    fn linear_voiu_examples() {
        assert!((mean_voiu_linear(&q(0.5, 1.0)) - 0.5).abs() < 1e-12);
        // 6 ln(3/2) - 2: integral of the survival function of Y/(Y+T)
        let want = 6.0 * 1.5f64.ln() - 2.0;
        assert!((mean_voiu_linear(&q(0.6, 1.0)) - want).abs() < 1e-12);
        assert!((mean_voiu_linear(&q(0.6, 1.0)) - 0.432_79).abs() < 1e-5);
        assert!(mean_voiu_linear(&q(1e-6, 1.0)) > 0.9999);
    }

    #[test]
    fn linear_voiu_via_conditional_expectation() {
        for p in [
            q(0.1, 1.0),
            q(0.5, 1.0),
            q(0.6, 1.0),
            q(0.9, 1.0),
            q(0.02, 1.0),
        ] {
            let l = p.lambda();
            let s = QuadratureSpec::new(1e-13, 1e-11, 4000).unwrap();
            let route = try_integrate(
                |x| Ok(l * (-l * x).exp() * conditional_mean_voiu_linear(&p, x)?),
                0.0,
                f64::INFINITY,
                &s,
            )
            .unwrap();
            assert!(
                (route - mean_voiu_linear(&p)).abs() < 1e-9,
                "rho {}",
                p.rho()
            );
        }
        assert!(conditional_mean_voiu_linear(&q(0.5, 1.0), 0.0).is_err());
    }

    #[test]
    fn linear_voiu_shape_on_grid() {
        let mut prev = f64::INFINITY;
        for k in 1..100 {
            let p = QueueParams::from_rho(k as f64 / 100.0, 1.0).unwrap();
            let v = mean_voiu_linear(&p);
            assert!(v > 0.0 && v < 1.0);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn numeric_voiu_agrees_with_closed_form() {
        let lin = CostModel::linear(1.0).unwrap();
        for k in 1..=9 {
            let p = QueueParams::from_rho(k as f64 / 10.0, 1.0).unwrap();
            let num = mean_voiu_numeric(&p, &lin, &spec()).unwrap();
            assert!((num - mean_voiu_linear(&p)).abs() < 1e-6, "rho {}", p.rho());
        }
    }

    #[test]
    fn numeric_voiu_orderings() {
        let p = q(0.5, 1.0);
        let lin = mean_voiu_linear(&p);
        let e = mean_voiu_numeric(&p, &CostModel::exponential(1e-4).unwrap(), &spec()).unwrap();
        assert!((e - lin).abs() < 1e-3);
        let l = mean_voiu_numeric(&p, &CostModel::logarithmic(0.1).unwrap(), &spec()).unwrap();
        assert!(l <= lin);
        let e = mean_voiu_numeric(&p, &CostModel::exponential(0.1).unwrap(), &spec()).unwrap();
        assert!(e >= lin);
    }

    #[test]
    fn voiu_rate_examples() {
        let lin = CostModel::linear(1.0).unwrap();
        assert!((avg_voiu_rate(&q(0.5, 1.0), &lin, &spec()).unwrap() - 0.25).abs() < 1e-12);
        let r = avg_voiu_rate(&q(0.6, 1.0), &lin, &spec()).unwrap();
        assert!((r - 0.6 * (6.0 * 1.5f64.ln() - 2.0)).abs() < 1e-12);
        assert!(avg_voiu_rate(&q(1e-9, 1.0), &lin, &spec()).unwrap() < 1e-8);
    }

    #[test]
    fn evaluate_combines() {
        let r = evaluate(&q(0.5, 1.0), &CostModel::exponential(0.6).unwrap(), &spec()).unwrap();
        assert!(!r.valid);
        assert_eq!(r.validity_note, "alpha >= lambda and alpha >= mu - lambda");
        assert!((r.avg_voiu_rate - 0.5 * r.mean_voiu).abs() < 1e-15);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.starts_with("{\"avg_coud\":null,"));
        let r = evaluate(&q(0.5, 1.0), &CostModel::linear(1.0).unwrap(), &spec()).unwrap();
        assert!(r.valid && r.validity_note.is_empty());
    }

    #[test]
    fn ordering_on_grid() {
        for k in 1..=9 {
            let p = QueueParams::from_rho(k as f64 / 10.0, 1.0).unwrap();
            let ce = avg_coud_exponential(&p, 0.1).unwrap().value;
            let cp = avg_coud_linear(&p, 0.1);
            let cl = avg_coud_logarithmic(&p, 0.1, &spec()).unwrap().value;
            assert!(ce > cp && cp > cl, "rho {}: {ce} {cp} {cl}", p.rho());
        }
    }
}
