//! Memory coefficients of the fractional model.
//!
//! With `h(t) = e^{-eta t}` the kernel `k(t) = H(2H-1) h(t) int_0^t h(s)|t-s|^{2H-2} ds`
//! gives the coefficient `C(t) = k(t) / h(t)^2`, which simplifies to
//!
//! ```text
//! C(t) = H(2H-1) int_0^t e^{eta u} u^{2H-2} du.
//! ```
//!
//! The substitution `u = v^{1/(2H-1)}` turns this into
//! `C(t) = H int_0^{t^{2H-1}} exp(eta v^{1/(2H-1)}) dv`, whose integrand is
//! bounded, and which tends to `1/2` as `H -> 1/2`.

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ContractSpec, ModelParams};
use crate::quad::{integrate_pieces, QuadConfig};

/// Which drift enters the exponential rate `eta` of `h(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum EtaMode {
    /// `eta = (1 - beta/2) mu` with the real-world drift.
    RealWorldMu,
    /// `eta = (1 - beta/2)(r - delta)`.
    RiskNeutralRMinusDelta,
    /// A fixed `eta`.
    ExplicitValue(f64),
}

/// Kernel evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// Absolute tolerance of the kernel quadratures.
    pub quad_tol: f64,
    /// Source of `eta`.
    pub eta_mode: EtaMode,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            quad_tol: 1e-10,
            eta_mode: EtaMode::RiskNeutralRMinusDelta,
        }
    }
}

impl KernelConfig {
    /// Checks `quad_tol > 0`.
    pub fn validate(&self) -> Result<()> {
        if !(self.quad_tol > 0.0) {
            return Err(Error::domain("KernelConfig.quad_tol must be positive"));
        }
        if let EtaMode::ExplicitValue(v) = self.eta_mode {
            if !v.is_finite() {
                return Err(Error::domain("explicit eta must be finite"));
            }
        }
        Ok(())
    }

    /// `eta` for the given parameters.
    pub fn eta(&self, params: &ModelParams) -> f64 {
        let scale = 1.0 - 0.5 * params.beta;
        match self.eta_mode {
            EtaMode::RealWorldMu => scale * params.mu,
            EtaMode::RiskNeutralRMinusDelta => scale * (params.r - params.delta),
            EtaMode::ExplicitValue(v) => v,
        }
    }

    pub(crate) fn quad(&self) -> QuadConfig {
        QuadConfig {
            abs_tol: self.quad_tol,
            rel_tol: 1e-14,
            max_intervals: 4000,
        }
    }
}

/// Constants of the transformed pricing problem for `Y = X^{2 - beta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCoeffs {
    /// `sigma^2 (2 - beta)^2`
    pub a: f64,
    /// `(r - delta)(2 - beta)`
    pub b: f64,
    /// `sigma^2 (2 - beta)(1 - beta)`
    pub c: f64,
    /// Exponential rate of `h(t)`.
    pub eta: f64,
    /// `e^{-b t0} X0^{2 - beta}`
    pub x: f64,
}

impl DerivedCoeffs {
    /// Bessel order `1 - c/a = 1 / (2 - beta)`.
    pub fn bessel_order(&self) -> f64 {
        1.0 - self.c / self.a
    }
}

/// Computes `a`, `b`, `c`, `eta` and `x` for a contract.
pub fn derive_coeffs(
    params: &ModelParams,
    contract: &ContractSpec,
    cfg: &KernelConfig,
) -> Result<DerivedCoeffs> {
    if !(params.beta >= 0.0 && params.beta < 2.0) {
        return Err(Error::Unsupported(alloc::format!(
            "beta = {} has no series representation; use the Black-Scholes branch at beta = 2",
            params.beta
        )));
    }
    if !(params.sigma > 0.0) {
        return Err(Error::domain("sigma must be positive"));
    }
    if !(params.x0 > 0.0) {
        return Err(Error::domain("x0 must be positive"));
    }
    let k = 2.0 - params.beta;
    let s2 = params.sigma * params.sigma;
    let b = (params.r - params.delta) * k;
    Ok(DerivedCoeffs {
        a: s2 * k * k,
        b,
        c: s2 * k * (1.0 - params.beta),
        eta: cfg.eta(params),
        x: (-b * contract.t0).exp() * params.x0.powf(k),
    })
}

/// `h(t) = e^{-eta t}`.
pub fn h_of_t(eta: f64, t: f64) -> f64 {
    (-eta * t).exp()
}

fn check_hurst(hurst: f64) -> Result<()> {
    if !(0.5..1.0).contains(&hurst) {
        return Err(Error::domain(alloc::format!(
            "Hurst index {hurst} outside [1/2, 1)"
        )));
    }
    Ok(())
}

/// `int_0^{L^p} exp(kappa v^{1/p}) dv`, i.e. `p int_0^L e^{kappa w} w^{p-1} dw`
/// with `p = 2H - 1 > 0`.
pub(crate) fn smoothed_power_integral(
    p: f64,
    kappa: f64,
    len: f64,
    quad: &QuadConfig,
) -> Result<f64> {
    if len <= 0.0 {
        return Ok(0.0);
    }
    let upper = len.powf(p);
    if kappa == 0.0 {
        return Ok(upper);
    }
    let inv_p = 1.0 / p;
    let r = integrate_pieces(|v: f64| (kappa * v.powf(inv_p)).exp(), &[0.0, upper], quad)?;
    Ok(r.value)
}

/// Memory coefficient `C(t) = k(t) h(t)^{-2}` for `t > 0`.
///
/// At `H = 1/2` this is exactly `1/2`.
pub fn c_of_t(hurst: f64, eta: f64, t: f64, cfg: &KernelConfig) -> Result<f64> {
    check_hurst(hurst)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain("C(t) requires t > 0"));
    }
    if hurst == 0.5 {
        return Ok(0.5);
    }
    let p = 2.0 * hurst - 1.0;
    Ok(hurst * smoothed_power_integral(p, eta, t, &cfg.quad())?)
}

/// `C(t)` extended by continuity to `t = 0` (where it vanishes for `H > 1/2`).
pub fn c_of_t_or_limit(hurst: f64, eta: f64, t: f64, cfg: &KernelConfig) -> Result<f64> {
    if t == 0.0 {
        check_hurst(hurst)?;
        return Ok(if hurst == 0.5 { 0.5 } else { 0.0 });
    }
    c_of_t(hurst, eta, t, cfg)
}

/// `int_m^t e^{-b s} ds`
fn discount_integral(b: f64, m: f64, t: f64) -> f64 {
    if b == 0.0 {
        t - m
    } else {
        (-b * m).exp() * -(-b * (t - m)).exp_m1() / b
    }
}

/// `int_{t0}^t e^{-b tau} C(tau) d tau` for arbitrary `b`.
///
/// The double integral is collapsed by swapping the order of integration:
/// `H(2H-1) int_0^t e^{eta u} u^{2H-2} (int_{max(u,t0)}^t e^{-b tau} d tau) du`.
pub fn discounted_memory(
    hurst: f64,
    eta: f64,
    b: f64,
    t0: f64,
    t: f64,
    cfg: &KernelConfig,
) -> Result<f64> {
    check_hurst(hurst)?;
    if !(t0 >= 0.0) || !(t >= t0) || !t.is_finite() {
        return Err(Error::domain(alloc::format!(
            "clock requires 0 <= t0 <= t, got t0={t0}, t={t}"
        )));
    }
    if t == t0 {
        return Ok(0.0);
    }
    if hurst == 0.5 {
        return Ok(0.5 * discount_integral(b, t0, t));
    }
    let p = 2.0 * hurst - 1.0;
    let inv_p = 1.0 / p;
    let integrand = |v: f64| {
        let u = v.powf(inv_p);
        (eta * u).exp() * discount_integral(b, u.max(t0), t)
    };
    let top = t.powf(p);
    let r = if t0 > 0.0 {
        integrate_pieces(integrand, &[0.0, t0.powf(p), top], &cfg.quad())?
    } else {
        integrate_pieces(integrand, &[0.0, top], &cfg.quad())?
    };
    Ok(hurst * r.value)
}

/// The clock `gamma_t = int_{t0}^t e^{-b tau} C(tau) d tau`.
pub fn gamma_clock(
    coeffs: &DerivedCoeffs,
    hurst: f64,
    t0: f64,
    t: f64,
    cfg: &KernelConfig,
) -> Result<f64> {
    discounted_memory(hurst, coeffs.eta, coeffs.b, t0, t, cfg)
}

/// Undiscounted `int_{t0}^t C(tau) d tau`.
pub fn integrated_memory(hurst: f64, eta: f64, t0: f64, t: f64, cfg: &KernelConfig) -> Result<f64> {
    discounted_memory(hurst, eta, 0.0, t0, t, cfg)
}
