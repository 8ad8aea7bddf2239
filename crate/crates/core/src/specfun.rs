//! Special functions: log-gamma, the regularized upper incomplete gamma
//! function `G(alpha, nu) = Gamma(alpha, nu) / Gamma(alpha)`, and the modified
//! Bessel function of the first kind `I_lambda`.

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances shared by the iterative special functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecFunConfig {
    /// Target absolute error.
    pub abs_tol: f64,
    /// Iteration cap for series and continued fractions.
    pub max_terms: usize,
}

impl Default for SpecFunConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_terms: 10_000,
        }
    }
}

impl SpecFunConfig {
    /// Checks `abs_tol > 0` and `max_terms >= 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || self.max_terms == 0 {
            return Err(Error::domain(
                "SpecFunConfig requires abs_tol > 0 and max_terms >= 1",
            ));
        }
        Ok(())
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn lanczos_ln_gamma(x: f64) -> f64 {
    // valid for x >= 0.5
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln Gamma(alpha)` for `alpha > 0`.
pub fn log_gamma(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain("log_gamma requires a finite alpha > 0"));
    }
    Ok(ln_gamma_pos(alpha))
}

fn ln_gamma_pos(alpha: f64) -> f64 {
    if alpha == 1.0 || alpha == 2.0 {
        return 0.0;
    }
    if alpha < 0.5 {
        // Gamma(a) = Gamma(a + 1) / a keeps accuracy as a -> 0.
        lanczos_ln_gamma(alpha + 1.0) - alpha.ln()
    } else {
        lanczos_ln_gamma(alpha)
    }
}

/// `(ln |Gamma(x)|, sign Gamma(x))` for any real `x` that is not a pole.
///
/// Poles (non-positive integers) return `(+inf, 0.0)`, so `1 / Gamma` at a
/// pole evaluates to zero.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x > 0.0 {
        return (ln_gamma_pos(x), 1.0);
    }
    if x == x.floor() {
        return (f64::INFINITY, 0.0);
    }
    // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x)
    let s = (PI * x).sin();
    let ln = PI.ln() - s.abs().ln() - ln_gamma_pos(1.0 - x);
    (ln, s.signum())
}

/// Regularized lower incomplete gamma `P(alpha, nu) = 1 - G(alpha, nu)`.
pub fn lower_gamma_p(alpha: f64, nu: f64, cfg: &SpecFunConfig) -> Result<f64> {
    check_gamma_args(alpha, nu)?;
    if nu == 0.0 {
        return Ok(0.0);
    }
    if nu < alpha + 1.0 {
        gamma_series(alpha, nu, cfg)
    } else {
        Ok(1.0 - gamma_continued_fraction(alpha, nu, cfg)?)
    }
}

/// Regularized upper incomplete gamma
/// `G(alpha, nu) = (1 / Gamma(alpha)) int_nu^inf e^{-t} t^{alpha - 1} dt`.
///
/// Series for `nu < alpha + 1`, Lentz continued fraction otherwise.
pub fn upper_gamma_q(alpha: f64, nu: f64, cfg: &SpecFunConfig) -> Result<f64> {
    check_gamma_args(alpha, nu)?;
    if nu == 0.0 {
        return Ok(1.0);
    }
    if nu < alpha + 1.0 {
        Ok((1.0 - gamma_series(alpha, nu, cfg)?).clamp(0.0, 1.0))
    } else {
        gamma_continued_fraction(alpha, nu, cfg)
    }
}

fn check_gamma_args(alpha: f64, nu: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain(
            "incomplete gamma requires a finite alpha > 0",
        ));
    }
    if !(nu >= 0.0) || nu.is_nan() {
        return Err(Error::domain("incomplete gamma requires nu >= 0"));
    }
    Ok(())
}

/// `ln(x) - x + 1` written as `ln(1 + d) - d` with `d = x - 1`, without cancellation.
fn log1pmx(d: f64) -> f64 {
    if d.abs() > 0.5 {
        return d.ln_1p() - d;
    }
    let mut pow = d * d;
    let mut sum = -0.5 * pow;
    let mut k = 3.0;
    loop {
        pow *= -d;
        let term = -pow / k;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            return sum;
        }
        k += 1.0;
    }
}

/// `ln(e^{-nu} nu^alpha / Gamma(alpha))` for `alpha > 0`, `nu > 0`.
///
/// For large `alpha` the three terms are each of order `alpha ln alpha` and
/// nearly cancel, so the Stirling form
/// `alpha log1pmx((nu - alpha) / alpha) + ln(alpha / 2 pi) / 2 - stirling(alpha)`
/// is used instead.
pub fn ln_gamma_kernel(alpha: f64, nu: f64) -> f64 {
    if alpha < 15.0 {
        return alpha * nu.ln() - nu - ln_gamma_pos(alpha);
    }
    let inv = 1.0 / alpha;
    let inv2 = inv * inv;
    let stirling = inv
        * (1.0 / 12.0
            - inv2
                * (1.0 / 360.0
                    - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
    alpha * log1pmx((nu - alpha) * inv) + 0.5 * (alpha / (2.0 * PI)).ln() - stirling
}

fn ln_gamma_prefactor(alpha: f64, nu: f64) -> f64 {
    ln_gamma_kernel(alpha, nu)
}

fn gamma_series(alpha: f64, nu: f64, cfg: &SpecFunConfig) -> Result<f64> {
    let mut ap = alpha;
    let mut term = 1.0 / alpha;
    let mut sum = term;
    for _ in 0..cfg.max_terms {
        ap += 1.0;
        term *= nu / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON * 0.5 {
            return Ok((sum.ln() + ln_gamma_prefactor(alpha, nu)).exp().min(1.0));
        }
    }
    let partial = (sum.ln() + ln_gamma_prefactor(alpha, nu)).exp();
    Err(Error::Convergence {
        what: "incomplete gamma series".into(),
        iterations: cfg.max_terms,
        partial,
        bound: term.abs() * partial / sum,
    })
}

fn gamma_continued_fraction(alpha: f64, nu: f64, cfg: &SpecFunConfig) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = nu + 1.0 - alpha;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=cfg.max_terms {
        let an = -(i as f64) * (i as f64 - alpha);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok((ln_gamma_prefactor(alpha, nu) + h.ln())
                .exp()
                .clamp(0.0, 1.0));
        }
    }
    let partial = (ln_gamma_prefactor(alpha, nu) + h.ln()).exp();
    Err(Error::Convergence {
        what: "incomplete gamma continued fraction".into(),
        iterations: cfg.max_terms,
        partial,
        bound: partial,
    })
}

/// `ln I_lambda(z)` for `lambda >= 0`, `z >= 0`.
///
/// Uses the large-argument Hankel expansion when it converges cleanly and
/// otherwise the power series, summed outward from its largest term so that
/// every term is scaled by the maximum.
pub fn log_bessel_i(lambda: f64, z: f64, cfg: &SpecFunConfig) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(
            "bessel_i requires a finite order lambda >= 0",
        ));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::domain("bessel_i requires a finite argument z >= 0"));
    }
    if z == 0.0 {
        return Ok(if lambda == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        });
    }
    if z >= 20.0 {
        if let Some(v) = hankel_log_bessel_i(lambda, z) {
            return Ok(v);
        }
    }
    series_log_bessel_i(lambda, z, cfg)
}

/// `I_lambda(z)` in linear scale.
///
/// Returns [`Error::Overflow`] when the value exceeds `f64::MAX`; callers
/// then switch to [`log_bessel_i`].
pub fn bessel_i(lambda: f64, z: f64, cfg: &SpecFunConfig) -> Result<f64> {
    let ln = log_bessel_i(lambda, z, cfg)?;
    let v = ln.exp();
    if v.is_infinite() {
        return Err(Error::Overflow("bessel_i".into()));
    }
    Ok(v)
}

fn hankel_log_bessel_i(lambda: f64, z: f64) -> Option<f64> {
    let mu4 = 4.0 * lambda * lambda;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut largest: f64 = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let ratio = -(mu4 - odd * odd) / (8.0 * k as f64 * z);
        if odd * odd > mu4 && ratio.abs() >= 1.0 {
            // Asymptotic series started to diverge before converging.
            return None;
        }
        term *= ratio;
        sum += term;
        largest = largest.max(term.abs());
        if term.abs() <= 1e-17 * sum.abs() {
            if largest > 1e2 || sum <= 0.0 {
                return None;
            }
            return Some(z - 0.5 * (2.0 * PI * z).ln() + sum.ln());
        }
    }
    None
}

fn series_log_bessel_i(lambda: f64, z: f64, cfg: &SpecFunConfig) -> Result<f64> {
    let half = 0.5 * z;
    let q = half * half;
    // Largest term: (k + 1)(k + 1 + lambda) ~ q.
    let k_star = {
        let disc = (lambda * lambda + 4.0 * q).sqrt();
        let root = 0.5 * (disc - lambda) - 1.0;
        if root > 0.0 {
            root.floor() as usize
        } else {
            0
        }
    };
    let ks = k_star as f64;
    let ln_peak =
        (2.0 * ks + lambda) * half.ln() - ln_gamma_pos(ks + 1.0) - ln_gamma_pos(ks + lambda + 1.0);

    let mut sum = 1.0;
    let mut used = 1usize;
    // upward
    let mut t = 1.0;
    let mut k = ks;
    loop {
        t *= q / ((k + 1.0) * (k + 1.0 + lambda));
        sum += t;
        k += 1.0;
        used += 1;
        if t < sum * f64::EPSILON * 0.25 {
            break;
        }
        if used > cfg.max_terms {
            return Err(Error::Convergence {
                what: "bessel series".into(),
                iterations: used,
                partial: ln_peak + sum.ln(),
                bound: t,
            });
        }
    }
    // downward
    let mut t = 1.0;
    let mut k = ks;
    while k > 0.0 {
        t *= k * (k + lambda) / q;
        sum += t;
        k -= 1.0;
        if t < sum * f64::EPSILON * 0.25 {
            break;
        }
    }
    Ok(ln_peak + sum.ln())
}
