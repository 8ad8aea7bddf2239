//! Closed-form series price of European options under the fractional CEV model.
//!
//! With `lambda = x / (a gamma_T)`, `y = K^{2-beta} / (a e^{bT} gamma_T)` and
//! `m = 1 / (2 - beta)` the call price is
//!
//! ```text
//! e^{-delta tau} X0 sum_n Pois(n; lambda) G(n + 1 + m, y)
//!   - K e^{-r tau} sum_n [e^{-lambda} lambda^{n + m} / Gamma(n + 1 + m)] G(n + 1, y)
//! ```
//!
//! where `G` is the regularized upper incomplete gamma function. Both sums are
//! evaluated from the mode of their weights outward, in the log domain, and
//! stopped by a geometric bound on the remaining weight mass.

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impliedvol::bs_price;
use crate::kernel::{derive_coeffs, gamma_clock, integrated_memory, DerivedCoeffs, KernelConfig};
use crate::model::{ContractSpec, ModelParams, OptionKind};
use crate::specfun::{ln_gamma_kernel, ln_gamma_signed, upper_gamma_q, SpecFunConfig};
use crate::sum::Neumaier;

/// Which printed form of the second sum to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaVariant {
    /// Weights `lambda^{n+m} / Gamma(n + 1 + m)`; reduces to Cox's CEV formula at `H = 1/2`.
    CoxConsistent,
    /// Weights `lambda^{n+m} / Gamma(n + 1 - m)`, kept for audit only.
    AsPrinted,
}

/// Series truncation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesConfig {
    /// Bound on the neglected weight mass of each sum.
    pub tail_tol: f64,
    /// Cap on the number of terms per sum.
    pub max_terms: usize,
    /// Which form of the formula to use.
    pub formula_variant: FormulaVariant,
    /// Incomplete-gamma settings.
    pub specfun: SpecFunConfig,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            tail_tol: 1e-12,
            max_terms: 50_000,
            formula_variant: FormulaVariant::CoxConsistent,
            specfun: SpecFunConfig::default(),
        }
    }
}

impl SeriesConfig {
    /// Checks `tail_tol > 0`.
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0) || self.max_terms == 0 {
            return Err(Error::domain(
                "SeriesConfig requires tail_tol > 0 and max_terms >= 1",
            ));
        }
        self.specfun.validate()
    }
}

/// Pricing engine tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Closed-form series.
    Series,
    /// Quadrature against the transition density.
    Quadrature,
    /// Finite differences.
    Pde,
    /// Monte Carlo.
    Mc,
    /// Lognormal branch at `beta = 2`.
    BlackScholes,
}

impl Engine {
    /// Lower-case tag used in reports.
    pub fn as_str(&self) -> &'static str {
        match self {
            Engine::Series => "series",
            Engine::Quadrature => "quadrature",
            Engine::Pde => "pde",
            Engine::Mc => "mc",
            Engine::BlackScholes => "black_scholes",
        }
    }
}

impl core::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "series" => Engine::Series,
            "quadrature" => Engine::Quadrature,
            "pde" => Engine::Pde,
            "mc" => Engine::Mc,
            "black_scholes" => Engine::BlackScholes,
            other => return Err(Error::domain(alloc::format!("unknown engine {other:?}"))),
        })
    }
}

/// Engine specific diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PriceMeta {
    /// Nothing to report.
    None,
    /// Series term counts and retained Poisson mass.
    Terms {
        /// Terms in the stock-leg sum.
        first: usize,
        /// Terms in the strike-leg sum.
        second: usize,
        /// Retained Poisson weight mass of the stock-leg sum.
        poisson_mass: f64,
    },
    /// Quadrature subintervals.
    Quadrature {
        /// Subintervals used.
        intervals: usize,
    },
    /// Finite-difference grid.
    Grid {
        /// Space nodes.
        n_space: usize,
        /// Time steps.
        n_time: usize,
    },
    /// Monte Carlo sample size.
    Paths {
        /// Paths simulated.
        n_paths: usize,
        /// Time steps per path.
        n_steps: usize,
        /// Fraction of paths absorbed at zero.
        absorbed_fraction: f64,
    },
}

/// A price with its provenance and error estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceResult {
    /// Option value, never negative.
    pub price: f64,
    /// Producing engine.
    pub engine: Engine,
    /// Truncation bound, grid estimate, or Monte Carlo standard error.
    pub error_estimate: f64,
    /// Engine diagnostics.
    pub meta: PriceMeta,
    /// Non-fatal warnings.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PriceResult {
    pub(crate) fn new(price: f64, engine: Engine, error_estimate: f64, meta: PriceMeta) -> Self {
        Self {
            price,
            engine,
            error_estimate,
            meta,
            warnings: Vec::new(),
        }
    }
}

/// Quantities that parameterise the series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesInputs {
    /// Transformed-problem constants.
    pub coeffs: DerivedCoeffs,
    /// Clock `gamma_T`.
    pub gamma_t: f64,
    /// Poisson intensity `x / (a gamma_T)`.
    pub lambda: f64,
    /// Incomplete-gamma argument `K^{2-beta} / (a e^{bT} gamma_T)`.
    pub y: f64,
    /// `1 / (2 - beta)`.
    pub order: f64,
}

/// Computes the clock and series arguments for a contract.
pub fn series_inputs(
    params: &ModelParams,
    contract: &ContractSpec,
    kernel: &KernelConfig,
) -> Result<SeriesInputs> {
    let coeffs = derive_coeffs(params, contract, kernel)?;
    let gamma_t = gamma_clock(
        &coeffs,
        params.hurst,
        contract.t0,
        contract.maturity,
        kernel,
    )?;
    if !(gamma_t > 0.0) {
        return Err(Error::DegenerateClock(gamma_t));
    }
    let scale = coeffs.a * gamma_t;
    let k = 2.0 - params.beta;
    Ok(SeriesInputs {
        coeffs,
        gamma_t,
        lambda: coeffs.x / scale,
        y: contract.strike.powf(k) / (scale * (coeffs.b * contract.maturity).exp()),
        order: 1.0 / k,
    })
}

/// `ln(e^{-lambda} lambda^n / n!)`
pub fn ln_poisson_weight(n: usize, lambda: f64) -> f64 {
    if n == 0 {
        return -lambda;
    }
    ln_gamma_kernel(n as f64 + 1.0, lambda) - lambda.ln()
}

/// Strike-leg weight `e^{-lambda} lambda^{n + m} / Gamma(n + 1 + m)`.
pub fn mixture_weight(n: usize, lambda: f64, order: f64) -> f64 {
    (ln_gamma_kernel(n as f64 + 1.0 + order, lambda) - lambda.ln()).exp()
}

#[derive(Debug, Clone, Copy)]
struct OutwardSum {
    value: f64,
    tail: f64,
    weight_mass: f64,
    terms: usize,
}

/// Sums `w(n) f(n)` from `mode` outward in both directions.
///
/// `f` must be a nondecreasing function of `n` with values in `[0, 1]` (an
/// incomplete gamma `G(n + s, y)`). `up_ratio(n)` must bound `|w(k+1)/w(k)|`
/// for every `k >= n`, and `down_ratio(n)` must bound `|w(k-1)/w(k)|` for every
/// `k <= n`. The remaining upward tail is then at most `|w(n)| r / (1 - r)` and
/// the downward one at most that times `f(n)`. A side stops once its bound
/// falls below `tol / 4` of the running sum (capped at `tol / 4`) and its
/// neglected weight mass below `tol / 4`.
#[allow(clippy::too_many_arguments)]
fn sum_outward(
    mode: usize,
    tol: f64,
    max_terms: usize,
    what: &str,
    weight: impl Fn(usize) -> f64,
    up_ratio: impl Fn(usize) -> f64,
    down_ratio: impl Fn(usize) -> f64,
    mut factor: impl FnMut(usize) -> Result<f64>,
) -> Result<OutwardSum> {
    let side_tol = |acc: &Neumaier| 0.25 * tol * acc.total().abs().clamp(f64::MIN_POSITIVE, 1.0);
    let mut acc = Neumaier::new();
    let mut mass = Neumaier::new();
    let mut terms = 0usize;

    let geometric_tail = |w: f64, r: f64| {
        if r < 1.0 {
            w.abs() * r / (1.0 - r)
        } else {
            f64::INFINITY
        }
    };
    let overflow = |acc: &Neumaier, bound: f64| Error::Convergence {
        what: alloc::format!("{what} series"),
        iterations: max_terms,
        partial: acc.total(),
        bound,
    };

    let mut tail_up;
    let mut n = mode;
    loop {
        let w = weight(n);
        if w != 0.0 {
            acc.add(w * factor(n)?);
            mass.add(w);
        }
        terms += 1;
        tail_up = geometric_tail(w, up_ratio(n));
        if tail_up <= side_tol(&acc) {
            break;
        }
        if terms >= max_terms {
            return Err(overflow(&acc, tail_up));
        }
        n += 1;
    }

    let mut tail_down = 0.0;
    let mut n = mode;
    while n > 0 {
        n -= 1;
        let w = weight(n);
        let f = if w != 0.0 { factor(n)? } else { 1.0 };
        acc.add(w * f);
        mass.add(w);
        terms += 1;
        let tail_weight = if n == 0 {
            0.0
        } else {
            geometric_tail(w, down_ratio(n))
        };
        tail_down = tail_weight * f;
        if tail_weight <= 0.25 * tol && tail_down <= side_tol(&acc) {
            break;
        }
        if terms >= max_terms {
            return Err(overflow(&acc, tail_down + tail_up));
        }
    }

    Ok(OutwardSum {
        value: acc.total(),
        tail: tail_up + tail_down,
        weight_mass: mass.total(),
        terms,
    })
}

fn mode_of(center: f64) -> usize {
    if center > 0.0 {
        center.floor() as usize
    } else {
        0
    }
}

/// Call price from the series formula. `contract.kind` is ignored.
pub fn price_call_series(
    params: &ModelParams,
    contract: &ContractSpec,
    kernel: &KernelConfig,
    cfg: &SeriesConfig,
) -> Result<PriceResult> {
    cfg.validate()?;
    crate::model::validate(params, contract)?;
    if params.beta >= 2.0 {
        return Err(Error::WrongBranch(
            "the series needs beta < 2; use the Black-Scholes branch".into(),
        ));
    }
    let tau = contract.tau();
    let stock_leg = (-params.delta * tau).exp() * params.x0;
    let mut warnings = Vec::new();
    if params.beta >= 1.95 {
        warnings.push(String::from(
            "beta >= 1.95: series is ill-conditioned; the Black-Scholes branch is the limit",
        ));
    }
    if contract.strike == 0.0 {
        let mut res = PriceResult::new(
            stock_leg,
            Engine::Series,
            0.0,
            PriceMeta::Terms {
                first: 0,
                second: 0,
                poisson_mass: 1.0,
            },
        );
        res.warnings = warnings;
        return Ok(res);
    }

    let inputs = series_inputs(params, contract, kernel)?;
    let SeriesInputs {
        lambda, y, order, ..
    } = inputs;
    let ln_lambda = lambda.ln();
    let sf = &cfg.specfun;

    let first = sum_outward(
        mode_of(lambda),
        cfg.tail_tol,
        cfg.max_terms,
        "stock-leg",
        |n| ln_poisson_weight(n, lambda).exp(),
        |n| lambda / (n as f64 + 1.0),
        |n| n as f64 / lambda,
        |n| upper_gamma_q(n as f64 + 1.0 + order, y, sf),
    )?;

    let second = match cfg.formula_variant {
        FormulaVariant::CoxConsistent => sum_outward(
            mode_of(lambda - order),
            cfg.tail_tol,
            cfg.max_terms,
            "strike-leg",
            |n| mixture_weight(n, lambda, order),
            |n| lambda / (n as f64 + 2.0 + order),
            |n| (n as f64 + order) / lambda,
            |n| upper_gamma_q(n as f64 + 1.0, y, sf),
        )?,
        FormulaVariant::AsPrinted => sum_outward(
            mode_of(lambda + order),
            cfg.tail_tol,
            cfg.max_terms,
            "strike-leg",
            |n| {
                let (ln_abs, sign) = ln_gamma_signed(n as f64 + 1.0 - order);
                if sign == 0.0 {
                    0.0
                } else {
                    sign * (-lambda + (n as f64 + order) * ln_lambda - ln_abs).exp()
                }
            },
            |n| {
                let d = n as f64 + 1.0 - order;
                if d > 0.0 {
                    lambda / d
                } else {
                    f64::INFINITY
                }
            },
            |n| (n as f64 - order).abs().max(order) / lambda,
            |n| upper_gamma_q(n as f64 + 1.0, y, sf),
        )?,
    };

    let strike_leg = contract.strike * (-params.r * tau).exp();
    let raw = stock_leg * first.value - strike_leg * second.value;
    let mut error_estimate = stock_leg * first.tail + strike_leg * second.tail;
    if raw < 0.0 {
        error_estimate += -raw;
    }
    let mut res = PriceResult::new(
        raw.max(0.0),
        Engine::Series,
        error_estimate,
        PriceMeta::Terms {
            first: first.terms,
            second: second.terms,
            poisson_mass: first.weight_mass,
        },
    );
    res.warnings = warnings;
    Ok(res)
}

/// Lognormal price at `beta = 2` with total variance `2 sigma^2 int_{t0}^T C`.
pub fn price_black_scholes_branch(
    params: &ModelParams,
    contract: &ContractSpec,
    kernel: &KernelConfig,
) -> Result<PriceResult> {
    if params.beta != 2.0 {
        return Err(Error::WrongBranch(alloc::format!(
            "Black-Scholes branch needs beta = 2, got {}",
            params.beta
        )));
    }
    crate::model::validate(params, contract)?;
    let variance = 2.0
        * params.sigma
        * params.sigma
        * integrated_memory(
            params.hurst,
            kernel.eta(params),
            contract.t0,
            contract.maturity,
            kernel,
        )?;
    let tau = contract.tau();
    let sigma_eff = (variance / tau).sqrt();
    let price = bs_price(
        params.x0,
        contract.strike,
        params.r,
        params.delta,
        sigma_eff,
        tau,
        contract.kind,
    );
    Ok(PriceResult::new(
        price.max(0.0),
        Engine::BlackScholes,
        0.0,
        PriceMeta::None,
    ))
}

/// Put price by parity against the series call.
pub fn price_put(
    params: &ModelParams,
    contract: &ContractSpec,
    kernel: &KernelConfig,
    cfg: &SeriesConfig,
) -> Result<PriceResult> {
    let call = price_call_series(params, contract, kernel, cfg)?;
    Ok(put_from_call(params, contract, call))
}

pub(crate) fn put_from_call(
    params: &ModelParams,
    contract: &ContractSpec,
    call: PriceResult,
) -> PriceResult {
    let tau = contract.tau();
    let parity = call.price - params.x0 * (-params.delta * tau).exp()
        + contract.strike * (-params.r * tau).exp();
    let mut res = call;
    if parity < 0.0 {
        if -parity > res.error_estimate {
            res.warnings
                .push(alloc::format!("put parity gave {parity:e}; floored at 0"));
        }
        res.error_estimate += -parity;
    }
    res.price = parity.max(0.0);
    res
}

/// Series price of `contract` (call, put, or the lognormal branch at `beta = 2`).
pub fn price_series(
    params: &ModelParams,
    contract: &ContractSpec,
    kernel: &KernelConfig,
    cfg: &SeriesConfig,
) -> Result<PriceResult> {
    if params.beta == 2.0 {
        return price_black_scholes_branch(params, contract, kernel);
    }
    match contract.kind {
        OptionKind::Call => price_call_series(params, contract, kernel, cfg),
        OptionKind::Put => price_put(params, contract, kernel, cfg),
    }
}

/// Hedge ratio `dP/dX0` by central differences with relative bump `bump`.
pub fn delta(
    params: &ModelParams,
    contract: &ContractSpec,
    kernel: &KernelConfig,
    cfg: &SeriesConfig,
    bump: f64,
) -> Result<f64> {
    if !(bump > 0.0 && bump < 1.0) {
        return Err(Error::domain("bump must lie in (0, 1)"));
    }
    let h = bump * params.x0;
    let up = ModelParams {
        x0: params.x0 + h,
        ..*params
    };
    let down = ModelParams {
        x0: params.x0 - h,
        ..*params
    };
    let p_up = price_series(&up, contract, kernel, cfg)?.price;
    let p_down = price_series(&down, contract, kernel, cfg)?.price;
    Ok((p_up - p_down) / (2.0 * h))
}
