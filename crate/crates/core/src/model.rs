//! Model and contract parameters, validation, and the explicit strong solution
//! `X_t = g(t, Y_t)` of the fractional CEV equation with `Y_t = int_0^t h dB^H`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationIssue};
use crate::kernel::h_of_t;

/// Market and model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Volatility scale of `sigma X^{beta/2}`.
    pub sigma: f64,
    /// Elasticity exponent in `[0, 2]`.
    pub beta: f64,
    /// Hurst index in `[1/2, 1)`.
    #[serde(alias = "H")]
    pub hurst: f64,
    /// Real-world drift rate.
    pub mu: f64,
    /// Risk-free rate.
    pub r: f64,
    /// Continuous dividend yield.
    pub delta: f64,
    /// Spot price.
    pub x0: f64,
}

/// Call or put.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    /// Right to buy.
    Call,
    /// Right to sell.
    Put,
}

/// A European option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractSpec {
    /// Strike `K >= 0`.
    pub strike: f64,
    /// Valuation time.
    #[serde(default)]
    pub t0: f64,
    /// Expiry `T > t0`.
    pub maturity: f64,
    /// Payoff type.
    #[serde(default = "default_kind")]
    pub kind: OptionKind,
}

fn default_kind() -> OptionKind {
    OptionKind::Call
}

impl ContractSpec {
    /// Time to expiry `T - t0`.
    pub fn tau(&self) -> f64 {
        self.maturity - self.t0
    }

    /// Same contract with a different payoff type.
    pub fn with_kind(self, kind: OptionKind) -> Self {
        Self { kind, ..self }
    }

    /// Same contract with a different strike.
    pub fn with_strike(self, strike: f64) -> Self {
        Self { strike, ..self }
    }
}

/// Non-fatal findings from [`validate`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Validated {
    /// Conditions that do not block pricing, e.g. `beta = 2`.
    pub warnings: Vec<ValidationIssue>,
}

fn issue(field: &str, message: impl Into<alloc::string::String>) -> ValidationIssue {
    ValidationIssue {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Checks every invariant of the pair and reports all violations at once.
pub fn validate(params: &ModelParams, contract: &ContractSpec) -> Result<Validated> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let finite = |v: f64| v.is_finite();

    if !(params.sigma > 0.0) || !finite(params.sigma) {
        errors.push(issue(
            "sigma",
            format!("must be positive and finite, got {}", params.sigma),
        ));
    }
    if !(0.0..=2.0).contains(&params.beta) {
        errors.push(issue(
            "beta",
            format!("must lie in [0, 2], got {}", params.beta),
        ));
    } else if params.beta == 2.0 {
        warnings.push(issue("beta", "beta = 2: Black-Scholes branch only"));
    } else if params.beta >= 1.95 {
        warnings.push(issue(
            "beta",
            "beta in [1.95, 2): series is ill-conditioned, consider the Black-Scholes branch",
        ));
    }
    if params.hurst.is_nan() || params.hurst < 0.5 {
        errors.push(issue("hurst", format!("H below 1/2 ({})", params.hurst)));
    } else if params.hurst >= 1.0 {
        errors.push(issue(
            "hurst",
            format!("H must be below 1, got {}", params.hurst),
        ));
    }
    if !(params.x0 > 0.0) || !finite(params.x0) {
        errors.push(issue(
            "x0",
            format!("must be positive and finite, got {}", params.x0),
        ));
    }
    if !(params.delta >= 0.0) || !finite(params.delta) {
        errors.push(issue(
            "delta",
            format!("must be non-negative, got {}", params.delta),
        ));
    }
    if !finite(params.r) {
        errors.push(issue("r", "must be finite"));
    }
    if !finite(params.mu) {
        errors.push(issue("mu", "must be finite"));
    }
    if !(contract.strike >= 0.0) || !finite(contract.strike) {
        errors.push(issue(
            "strike",
            format!("must be non-negative, got {}", contract.strike),
        ));
    }
    if !(contract.t0 >= 0.0) || !finite(contract.t0) {
        errors.push(issue(
            "t0",
            format!("must be non-negative, got {}", contract.t0),
        ));
    }
    if !(contract.maturity > contract.t0) || !finite(contract.maturity) {
        errors.push(issue(
            "maturity",
            format!(
                "must exceed t0, got {} <= {}",
                contract.maturity, contract.t0
            ),
        ));
    }

    if errors.is_empty() {
        Ok(Validated { warnings })
    } else {
        Err(Error::Validation(errors))
    }
}

/// `a(x) = int dx / (sigma x^{beta/2}) = x^{1 - beta/2} / (sigma (1 - beta/2))`.
pub fn a_transform(params: &ModelParams, x: f64) -> Result<f64> {
    if params.beta >= 2.0 {
        return Err(Error::domain("a_transform is logarithmic at beta = 2"));
    }
    if !(x > 0.0) {
        return Err(Error::domain("a_transform requires x > 0"));
    }
    let e = 1.0 - 0.5 * params.beta;
    Ok(x.powf(e) / (params.sigma * e))
}

/// Explicit solution `g(t, y)`, defined through `a(g(t, y)) = h(t)^{-1} (y + a(X0))`.
///
/// Returns 0 (absorbed) when the power base is non-positive.
/// `g(0, 0) == x0` holds bit for bit.
pub fn explicit_g(params: &ModelParams, eta: f64, t: f64, y: f64) -> Result<f64> {
    let a0 = a_transform(params, params.x0)?;
    let ratio = (1.0 + y / a0) / h_of_t(eta, t);
    if ratio <= 0.0 {
        return Ok(0.0);
    }
    Ok(params.x0 * ratio.powf(2.0 / (2.0 - params.beta)))
}

/// Drift `mu x + (sigma^2 beta / 2) C(t) x^{beta - 1}` of the fractional CEV
/// equation under `eta = (1 - beta/2) mu`, `phi = 0`.
pub fn drift_mu(params: &ModelParams, x: f64, c_t: f64) -> f64 {
    let correction = if params.beta == 0.0 {
        0.0
    } else {
        0.5 * params.sigma * params.sigma * params.beta * c_t * x.powf(params.beta - 1.0)
    };
    params.mu * x + correction
}
