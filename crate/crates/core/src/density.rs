//! Transition density of `Y = X^{2-beta}` and a quadrature pricer built on it.
//!
//! In the scaled variable `w = Y / (a e^{bt} gamma_t)` the density is
//!
//! ```text
//! (lambda / w)^{m/2} exp(-(w + lambda)) I_m(2 sqrt(lambda w)),   lambda = x / (a gamma_t)
//! ```
//!
//! with `m = 1 / (2 - beta)`. It is defective: mass `G(m, lambda)` sits at the
//! absorbing state `Y = 0`.

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gamma_clock, DerivedCoeffs, KernelConfig};
use crate::model::{ContractSpec, ModelParams};
use crate::pricer::{series_inputs, Engine, PriceMeta, PriceResult};
use crate::quad::{integrate, QuadConfig};
use crate::specfun::{log_bessel_i, log_gamma, upper_gamma_q, SpecFunConfig};
use crate::sum::Neumaier;

/// One evaluated density value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    /// Time.
    pub t: f64,
    /// Transformed state `Y`.
    pub y: f64,
    /// Density per unit `Y`.
    pub value: f64,
}

/// The density at a fixed horizon, in the scaled variable `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionDensity {
    /// Poisson intensity `x / (a gamma_t)`.
    pub lambda: f64,
    /// Bessel order `1 / (2 - beta)`.
    pub order: f64,
    /// `a e^{bt} gamma_t`, so that `Y = scale * w`.
    pub scale: f64,
}

impl TransitionDensity {
    /// Density at time `t` started from `x` at `t0`.
    pub fn new(
        coeffs: &DerivedCoeffs,
        hurst: f64,
        t0: f64,
        t: f64,
        cfg: &KernelConfig,
    ) -> Result<Self> {
        let gamma_t = gamma_clock(coeffs, hurst, t0, t, cfg)?;
        Self::from_clock(coeffs, gamma_t, t)
    }

    /// Density for a precomputed clock value `gamma_t`.
    pub fn from_clock(coeffs: &DerivedCoeffs, gamma_t: f64, t: f64) -> Result<Self> {
        if !(gamma_t > 0.0) {
            return Err(Error::DegenerateClock(gamma_t));
        }
        Ok(Self {
            lambda: coeffs.x / (coeffs.a * gamma_t),
            order: coeffs.bessel_order(),
            scale: coeffs.a * (coeffs.b * t).exp() * gamma_t,
        })
    }

    /// `ln` of the density in `w` at `w > 0`.
    pub fn ln_density_w(&self, w: f64, cfg: &SpecFunConfig) -> Result<f64> {
        if !(w > 0.0) {
            return Err(Error::domain("density requires w > 0"));
        }
        let (l, m) = (self.lambda, self.order);
        let ln_i = log_bessel_i(m, 2.0 * (l * w).sqrt(), cfg)?;
        Ok(0.5 * m * (l.ln() - w.ln()) - (w + l) + ln_i)
    }

    /// Density in `w`; the limit `e^{-lambda} lambda^m / Gamma(1 + m)` at `w = 0`.
    pub fn density_w(&self, w: f64, cfg: &SpecFunConfig) -> Result<f64> {
        if w == 0.0 {
            let m = self.order;
            return Ok((-self.lambda + m * self.lambda.ln() - log_gamma(1.0 + m)?).exp());
        }
        Ok(self.ln_density_w(w, cfg)?.exp())
    }

    /// Density per unit `Y`.
    pub fn density_y(&self, y: f64, cfg: &SpecFunConfig) -> Result<f64> {
        Ok(self.density_w(y / self.scale, cfg)? / self.scale)
    }

    /// Probability of absorption at zero, `G(m, lambda)`.
    pub fn absorbed_mass(&self, cfg: &SpecFunConfig) -> Result<f64> {
        upper_gamma_q(self.order, self.lambda, cfg)
    }

    fn spread(&self) -> f64 {
        (4.0 * self.lambda + 2.0 * self.order + 2.0).sqrt()
    }
}

/// Density value `u(t, y)` per unit `Y`.
pub fn transition_density(
    coeffs: &DerivedCoeffs,
    hurst: f64,
    t0: f64,
    t: f64,
    y: f64,
    cfg: &KernelConfig,
) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::domain("transition_density requires y > 0"));
    }
    if !(t > t0) {
        return Err(Error::domain("transition_density requires t > t0"));
    }
    TransitionDensity::new(coeffs, hurst, t0, t, cfg)?.density_y(y, &SpecFunConfig::default())
}

/// `int_lower^inf f(w) dw` for a unimodal-weighted integrand, panel by panel
/// outward from `mode`. Stops on each side once a panel adds less than
/// `tol / 100` of the running total.
fn integrate_outward(
    mut f: impl FnMut(f64) -> f64,
    lower: f64,
    mode: f64,
    width: f64,
    tol: f64,
    max_panels: usize,
) -> Result<(f64, f64, usize)> {
    let cfg = QuadConfig {
        abs_tol: 0.0,
        rel_tol: tol * 1e-2,
        max_intervals: 200,
    };
    let stop = tol * 1e-2;
    let mut acc = Neumaier::new();
    let mut err = 0.0;
    let mut intervals = 0;
    let mut panels = 0;
    let centre = mode.max(lower);

    let mut a = centre;
    loop {
        let b = a + width;
        let r = integrate(&mut f, a, b, &cfg)?;
        acc.add(r.value);
        err += r.error;
        intervals += r.intervals;
        panels += 1;
        if r.value.abs() <= stop * acc.total().abs()
            || acc.total() == 0.0 && a > centre + 40.0 * width
        {
            break;
        }
        if panels >= max_panels {
            return Err(Error::Convergence {
                what: "density tail".into(),
                iterations: panels,
                partial: acc.total(),
                bound: r.value.abs(),
            });
        }
        a = b;
    }
    let mut b = centre;
    while b > lower {
        let a = (b - width).max(lower);
        let r = integrate(&mut f, a, b, &cfg)?;
        acc.add(r.value);
        err += r.error;
        intervals += r.intervals;
        panels += 1;
        if r.value.abs() <= stop * acc.total().abs() {
            break;
        }
        if panels >= max_panels {
            return Err(Error::Convergence {
                what: "density body".into(),
                iterations: panels,
                partial: acc.total(),
                bound: r.value.abs(),
            });
        }
        b = a;
    }
    Ok((acc.total(), err, intervals))
}

/// Total mass `int_0^inf u(t, y) dy` by quadrature.
pub fn density_mass(density: &TransitionDensity, quad_tol: f64) -> Result<f64> {
    let sf = SpecFunConfig::default();
    let mut failure = None;
    let f = |w: f64| match density.density_w(w, &sf) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let (mass, _, _) =
        integrate_outward(f, 0.0, density.lambda, density.spread(), quad_tol, 10_000)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(mass),
    }
}

/// Call price `e^{-r tau} int_{K^{2-beta}}^inf (y^{1/(2-beta)} - K) u(T, y) dy`.
pub fn price_call_quadrature(
    params: &ModelParams,
    contract: &ContractSpec,
    kernel: &KernelConfig,
    quad_tol: f64,
) -> Result<PriceResult> {
    if !(quad_tol > 0.0) {
        return Err(Error::domain("quad_tol must be positive"));
    }
    crate::model::validate(params, contract)?;
    if params.beta >= 2.0 {
        return Err(Error::WrongBranch("the density needs beta < 2".into()));
    }
    let inputs = series_inputs(params, contract, kernel)?;
    let density = TransitionDensity::from_clock(&inputs.coeffs, inputs.gamma_t, contract.maturity)?;
    let sf = SpecFunConfig::default();
    let strike = contract.strike;
    let m = density.order;
    let ln_scale = density.scale.ln();
    let w_strike = inputs.y;

    let mut failure = None;
    let integrand = |w: f64| {
        if w <= 0.0 {
            return 0.0;
        }
        match density.ln_density_w(w, &sf) {
            Ok(ln_u) => {
                let spot = (m * (ln_scale + w.ln())).exp();
                let payoff = spot - strike;
                if payoff <= 0.0 {
                    0.0
                } else {
                    payoff * ln_u.exp()
                }
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let (value, error, intervals) = integrate_outward(
        integrand,
        w_strike,
        density.lambda,
        density.spread(),
        quad_tol,
        10_000,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let discount = (-params.r * contract.tau()).exp();
    Ok(PriceResult::new(
        (discount * value).max(0.0),
        Engine::Quadrature,
        discount * (error + quad_tol * value.abs()),
        PriceMeta::Quadrature { intervals },
    ))
}
