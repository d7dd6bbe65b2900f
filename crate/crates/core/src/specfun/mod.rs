//! Special functions and quadrature used by the closed-form averages.

mod quad;

pub use quad::{integrate, try_integrate, QuadratureSpec};

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Above this `Ei(x)` overflows `f64`.
const EI_OVERFLOW: f64 = 700.0;
/// Series / asymptotic switchover for positive arguments.
const EI_ASYMPTOTIC_FROM: f64 = 40.0;

/// Exponential integral `Ei(x)`, the principal value of `-∫_{-x}^∞ e^{-t}/t dt`.
///
/// Negative arguments go through `E1(-x)`: power series for `|x| <= 1`, continued
/// fraction beyond. Positive arguments use the power series up to 40 and the
/// asymptotic expansion above.
pub fn exp_integral_ei(x: f64) -> Result<f64> {
    if x.is_nan() || x == 0.0 {
        return Err(Error::Domain(format!(
            "Ei is singular or undefined at x = {x}"
        )));
    }
    if x > EI_OVERFLOW {
        return Err(Error::Overflow(format!("Ei({x}) exceeds f64 range")));
    }
    if x < 0.0 {
        let y = -x;
        if y <= 1.0 {
            return Ok(-e1_series(y));
        }
        return Ok(-e1_continued_fraction(y) * (-y).exp());
    }
    if x <= EI_ASYMPTOTIC_FROM {
        Ok(ei_series(x))
    } else {
        Ok(ei_asymptotic(x))
    }
}

/// `e^x · E1(x)` for `x > 0`, finite even where `e^x` alone would overflow.
pub fn scaled_exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_infinite() {
        return Err(Error::Domain(format!(
            "scaled E1 needs a finite positive argument, got {x}"
        )));
    }
    if x <= 1.0 {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(e1_continued_fraction(x))
    }
}

/// `γ + ln x + Σ x^k / (k·k!)`.
fn ei_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= x / kf;
        let add = term / kf;
        sum += add;
        if add.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + x.abs().ln() + sum
}

/// `e^x/x · Σ k!/x^k`, truncated at the smallest term.
fn ei_asymptotic(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..100 {
        let next = term * k as f64 / x;
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term < f64::EPSILON * sum {
            break;
        }
    }
    x.exp() / x * sum
}

/// `E1(y) = -γ - ln y - Σ (-y)^k / (k·k!)` for `0 < y <= 1`.
fn e1_series(y: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -y / kf;
        let add = term / kf;
        sum += add;
        if add.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - y.ln() - sum
}

/// `e^y · E1(y)` by modified Lentz evaluation of the continued fraction, `y > 1`.
fn e1_continued_fraction(y: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = y + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h
}

/// Below this `|z|` the closed form of `₂F₁(1,2;3;z)` loses digits to `0/0`.
const HYP_SERIES_BELOW: f64 = 1e-4;

/// Gauss hypergeometric `₂F₁(1, 2; 3; z)` for real `z < 1`.
///
/// Closed form `2(-z - ln(1-z))/z²`; the power series `Σ 2zᵏ/(k+2)` near zero.
pub fn hyp2f1_1_2_3(z: f64) -> Result<f64> {
    if z.is_nan() || z >= 1.0 {
        return Err(Error::Domain(format!(
            "2F1(1,2;3;z) requires z < 1, got {z}"
        )));
    }
    if z.abs() < HYP_SERIES_BELOW {
        let mut sum = 0.0;
        let mut zk = 1.0;
        for k in 0..12 {
            sum += 2.0 * zk / (k as f64 + 2.0);
            zk *= z;
        }
        return Ok(sum);
    }
    Ok(2.0 * (-z - (-z).ln_1p()) / (z * z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Ei(x) from its integral definition: `-∫_{-x}^∞ e^{-t}/t dt` for x < 0
    /// (shifted to `-e^{x} ∫₀^∞ e^{-s}/(s - x) ds` so the tail keeps its relative
    /// accuracy), `γ + ln x + ∫₀ˣ (e^t - 1)/t dt` for x > 0.
    fn ei_quadrature(x: f64) -> f64 {
        let spec = QuadratureSpec::new(1e-15, 1e-13, 5000).unwrap();
        if x < 0.0 {
            -x.exp() * integrate(|s| (-s).exp() / (s - x), 0.0, f64::INFINITY, &spec).unwrap()
        } else {
            let g = |t: f64| if t == 0.0 { 1.0 } else { t.exp_m1() / t };
            EULER_GAMMA + x.ln() + integrate(g, 0.0, x, &spec).unwrap()
        }
    }

    #[test]
    fn ei_reference_values() {
        // frozen from the quadrature oracle above
        assert!(rel(exp_integral_ei(-1.0).unwrap(), -0.219_383_934_395_520_3) < 1e-10);
        assert!(rel(exp_integral_ei(1.0).unwrap(), 1.895_117_816_355_936_8) < 1e-10);
        let tiny = exp_integral_ei(-1e-9).unwrap();
        assert!((tiny - (EULER_GAMMA + 1e-9f64.ln())).abs() < 1e-8, "{tiny}");
        assert!((tiny + 20.15).abs() < 0.01);
    }

    #[test]
    fn ei_matches_quadrature_oracle() {
        for &x in &[
            -50.0, -30.0, -7.5, -2.0, -1.0, -0.3, -1e-3, -1e-6, 1e-6, 1e-3, 0.5, 1.0, 3.0, 12.0,
            35.0,
        ] {
            let got = exp_integral_ei(x).unwrap();
            let want = ei_quadrature(x);
            assert!(rel(got, want) < 1e-10, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn ei_branches_agree_at_switchover() {
        let s = ei_series(EI_ASYMPTOTIC_FROM);
        let a = ei_asymptotic(EI_ASYMPTOTIC_FROM);
        assert!(rel(s, a) < 1e-10, "{s} vs {a}");
        let y = 1.0;
        let s = e1_series(y);
        let cf = e1_continued_fraction(y) * (-y).exp();
        assert!(rel(s, cf) < 1e-12, "{s} vs {cf}");
    }

    #[test]
    fn ei_derivative_is_exp_over_x() {
        for &x in &[-2.0f64, -1.0, 1.0, 2.0] {
            let h = 1e-5;
            let fd =
                (exp_integral_ei(x + h).unwrap() - exp_integral_ei(x - h).unwrap()) / (2.0 * h);
            let exact = x.exp() / x;
            assert!(rel(fd, exact) < 1e-6, "x={x}: {fd} vs {exact}");
        }
    }

    #[test]
    fn ei_errors() {
        assert!(matches!(exp_integral_ei(0.0), Err(Error::Domain(_))));
        assert!(matches!(exp_integral_ei(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(exp_integral_ei(701.0), Err(Error::Overflow(_))));
        assert!(exp_integral_ei(700.0).unwrap().is_finite());
        assert_eq!(exp_integral_ei(-800.0).unwrap(), 0.0);
    }

    #[test]
    fn scaled_e1_consistent_with_ei() {
        for &x in &[0.2, 1.0, 5.0, 40.0] {
            let direct = -exp_integral_ei(-x).unwrap() * f64::exp(x);
            assert!(rel(scaled_exp_integral_e1(x).unwrap(), direct) < 1e-12);
        }
        // e^x E1(x) ~ 1/x for large x
        let big = scaled_exp_integral_e1(1e4).unwrap();
        assert!((big * 1e4 - 1.0).abs() < 2e-4);
        assert!(scaled_exp_integral_e1(0.0).is_err());
    }

    #[test]
    fn hyp_reference_values() {
        assert_eq!(hyp2f1_1_2_3(0.0).unwrap(), 1.0);
        let half = hyp2f1_1_2_3(0.5).unwrap();
        assert!((half - 8.0 * (std::f64::consts::LN_2 - 0.5)).abs() < 1e-14);
        assert!((half - 1.54518).abs() < 1e-5);
        let m1 = hyp2f1_1_2_3(-1.0).unwrap();
        assert!((m1 - 2.0 * (1.0 - std::f64::consts::LN_2)).abs() < 1e-14);
        assert!((m1 - 0.61371).abs() < 1e-5);
    }

    #[test]
    fn hyp_domain() {
        assert!(hyp2f1_1_2_3(1.0).is_err());
        assert!(hyp2f1_1_2_3(2.5).is_err());
        assert!(hyp2f1_1_2_3(f64::NAN).is_err());
        assert!(hyp2f1_1_2_3(-1e6).unwrap() > 0.0);
    }

    /// Σ_{k≥0} (1)_k (2)_k / (3)_k · z^k / k!, with Pochhammer products built term by term.
    fn hyp_pochhammer_series(z: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 0..400 {
            sum += term;
            let kf = k as f64;
            term *= (1.0 + kf) * (2.0 + kf) / ((3.0 + kf) * (kf + 1.0)) * z;
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum
    }

    #[test]
    fn hyp_closed_form_matches_series() {
        let mut z = -0.5;
        while z <= 0.5 {
            let got = hyp2f1_1_2_3(z).unwrap();
            let want = hyp_pochhammer_series(z);
            assert!((got - want).abs() <= 1e-9, "z={z}: {got} vs {want}");
            z += 0.01;
        }
        for &z in &[-2e-4, -1e-4, -5e-5, 1e-7, 9.9e-5, 1e-4, 2e-4] {
            assert!((hyp2f1_1_2_3(z).unwrap() - hyp_pochhammer_series(z)).abs() < 1e-11);
        }
    }
}
