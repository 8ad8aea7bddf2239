//! Black-Scholes prices, implied-volatility inversion and strike skews.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::engine::{price_with_engine, EngineConfigs};
use crate::error::{Error, PriceBound, Result};
use crate::model::{ContractSpec, ModelParams, OptionKind};
use crate::pricer::Engine;

/// Standard normal cumulative distribution.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Lognormal option price with continuous dividend yield `delta`.
///
/// `sigma = 0` gives the discounted intrinsic value on the forward.
pub fn bs_price(
    spot: f64,
    strike: f64,
    r: f64,
    delta: f64,
    sigma: f64,
    tau: f64,
    kind: OptionKind,
) -> f64 {
    let df_q = (-delta * tau).exp();
    let df_r = (-r * tau).exp();
    let fwd_leg = spot * df_q;
    let strike_leg = strike * df_r;
    let sd = sigma * tau.sqrt();
    if strike <= 0.0 {
        return match kind {
            OptionKind::Call => fwd_leg,
            OptionKind::Put => 0.0,
        };
    }
    if sd <= 0.0 {
        return match kind {
            OptionKind::Call => (fwd_leg - strike_leg).max(0.0),
            OptionKind::Put => (strike_leg - fwd_leg).max(0.0),
        };
    }
    let d1 = ((fwd_leg / strike_leg).ln() + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    match kind {
        OptionKind::Call => fwd_leg * norm_cdf(d1) - strike_leg * norm_cdf(d2),
        OptionKind::Put => strike_leg * norm_cdf(-d2) - fwd_leg * norm_cdf(-d1),
    }
}

fn bs_vega(spot: f64, strike: f64, r: f64, delta: f64, sigma: f64, tau: f64) -> f64 {
    let fwd_leg = spot * (-delta * tau).exp();
    let sd = sigma * tau.sqrt();
    let d1 = ((fwd_leg / (strike * (-r * tau).exp())).ln() + 0.5 * sd * sd) / sd;
    fwd_leg * norm_pdf(d1) * tau.sqrt()
}

/// Inverts [`bs_price`] for volatility.
///
/// Safeguarded Newton on a shrinking bracket, with bisection whenever a Newton
/// step leaves the bracket or vega vanishes.
pub fn implied_vol(
    price: f64,
    spot: f64,
    strike: f64,
    r: f64,
    delta: f64,
    tau: f64,
    kind: OptionKind,
) -> Result<f64> {
    if !(spot > 0.0) || !(tau > 0.0) || !(strike > 0.0) {
        return Err(Error::domain("implied_vol requires spot, strike, tau > 0"));
    }
    let fwd_leg = spot * (-delta * tau).exp();
    let strike_leg = strike * (-r * tau).exp();
    let (lower, upper) = match kind {
        OptionKind::Call => ((fwd_leg - strike_leg).max(0.0), fwd_leg),
        OptionKind::Put => ((strike_leg - fwd_leg).max(0.0), strike_leg),
    };
    if !(price > lower) {
        return Err(Error::Inversion {
            price,
            bound: PriceBound::Lower,
        });
    }
    if !(price < upper) {
        return Err(Error::Inversion {
            price,
            bound: PriceBound::Upper,
        });
    }

    let residual_tol = 1e-10 * spot;
    let f = |s: f64| bs_price(spot, strike, r, delta, s, tau, kind) - price;

    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Inversion {
                price,
                bound: PriceBound::Upper,
            });
        }
    }
    // Brenner-Subrahmanyam style starting point, kept inside the bracket.
    let guess = (2.0 * core::f64::consts::PI / tau).sqrt() * price / fwd_leg;
    let mut sigma = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..200 {
        let diff = f(sigma);
        if diff > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        let vega = bs_vega(spot, strike, r, delta, sigma, tau);
        let newton = sigma - diff / vega;
        let next = if vega > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - sigma).abs();
        sigma = next;
        if diff.abs() <= residual_tol && step <= 1e-14 * sigma.max(1e-3) {
            return Ok(sigma);
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    if f(sigma).abs() <= residual_tol {
        Ok(sigma)
    } else {
        Err(Error::Convergence {
            what: "implied volatility".into(),
            iterations: 200,
            partial: sigma,
            bound: hi - lo,
        })
    }
}

/// Outcome of inverting one strike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "detail")]
pub enum RowStatus {
    /// Inversion succeeded.
    Ok,
    /// Pricing failed.
    PriceFailed(String),
    /// Price outside the invertible range.
    NotInvertible(String),
}

/// One line of a skew report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewRow {
    /// Strike.
    pub strike: f64,
    /// Model price (NaN when pricing failed).
    pub model_price: f64,
    /// Black-Scholes implied volatility, when invertible.
    pub implied_vol: Option<f64>,
    /// Engine that produced the price.
    pub engine: Engine,
    /// Row outcome.
    pub status: RowStatus,
}

/// Prices calls across `strikes` and inverts each to an implied volatility.
///
/// Row failures are recorded in [`SkewRow::status`]; the report never aborts.
pub fn skew_report(
    params: &ModelParams,
    strikes: &[f64],
    t0: f64,
    maturity: f64,
    engine: Engine,
    configs: &EngineConfigs,
) -> Vec<SkewRow> {
    strikes
        .iter()
        .map(|&strike| {
            let contract = ContractSpec {
                strike,
                t0,
                maturity,
                kind: OptionKind::Call,
            };
            skew_row(params, &contract, engine, configs)
        })
        .collect()
}

/// One row of [`skew_report`].
pub fn skew_row(
    params: &ModelParams,
    contract: &ContractSpec,
    engine: Engine,
    configs: &EngineConfigs,
) -> SkewRow {
    let strike = contract.strike;
    match price_with_engine(engine, params, contract, configs) {
        Err(e) => SkewRow {
            strike,
            model_price: f64::NAN,
            implied_vol: None,
            engine,
            status: RowStatus::PriceFailed(alloc::format!("{e}")),
        },
        Ok(res) => {
            let iv = implied_vol(
                res.price,
                params.x0,
                strike,
                params.r,
                params.delta,
                contract.tau(),
                contract.kind,
            );
            match iv {
                Ok(v) => SkewRow {
                    strike,
                    model_price: res.price,
                    implied_vol: Some(v),
                    engine: res.engine,
                    status: RowStatus::Ok,
                },
                Err(e) => SkewRow {
                    strike,
                    model_price: res.price,
                    implied_vol: None,
                    engine: res.engine,
                    status: RowStatus::NotInvertible(alloc::format!("{e}")),
                },
            }
        }
    }
}

/// True when every row inverted and implied vols strictly decrease in strike.
pub fn is_strictly_decreasing(rows: &[SkewRow]) -> bool {
    let vols: Option<Vec<f64>> = rows.iter().map(|r| r.implied_vol).collect();
    match vols {
        Some(v) if v.len() >= 2 => v.windows(2).all(|w| w[1] < w[0]),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn implied_vol_agrees_across_engines() {
        let params = ModelParams {
            sigma: 2.0,
            beta: 1.0,
            hurst: 0.75,
            mu: 0.05,
            r: 0.05,
            delta: 0.02,
            x0: 100.0,
        };
        let cfg = EngineConfigs::default();
        let strikes = [85.0, 100.0, 115.0];
        let series = skew_report(&params, &strikes, 0.0, 1.0, Engine::Series, &cfg);
        let pde = skew_report(&params, &strikes, 0.0, 1.0, Engine::Pde, &cfg);
        for (s, p) in series.iter().zip(&pde) {
            let (vs, vp) = (s.implied_vol.unwrap(), p.implied_vol.unwrap());
            // a 5e-3 relative price tolerance moves the vol by at most price tolerance / vega
            let d1 = ((100.0 / s.strike).ln() + (0.03 + 0.5 * vs * vs)) / vs;
            let vega = 100.0 * (-0.02f64).exp() * norm_pdf(d1);
            let bound = 5e-3 * s.model_price / vega;
            assert!(
                (vs - vp).abs() <= bound,
                "K={}: {vs} {vp} bound {bound}",
                s.strike
            );
        }
    }

    #[test]
    fn zero_vol_is_discounted_intrinsic() {
        let got = bs_price(100.0, 90.0, 0.05, 0.02, 0.0, 2.0, OptionKind::Call);
        let want = (-0.1f64).exp() * (100.0 * (0.06f64).exp() - 90.0);
        assert!((got - want).abs() < 1e-12);
        assert_eq!(
            bs_price(100.0, 150.0, 0.05, 0.02, 0.0, 2.0, OptionKind::Call),
            0.0
        );
    }

    #[test]
    fn put_call_parity() {
        for &k in &[50.0, 95.0, 100.0, 130.0] {
            for &s in &[0.05, 0.3, 1.2] {
                let c = bs_price(100.0, k, 0.04, 0.01, s, 0.75, OptionKind::Call);
                let p = bs_price(100.0, k, 0.04, 0.01, s, 0.75, OptionKind::Put);
                let want = 100.0 * (-0.0075f64).exp() - k * (-0.03f64).exp();
                assert!((c - p - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn atm_value_against_lognormal_quadrature() {
        // Simpson over the standard normal variable of the payoff.
        let n = 40_000;
        let (a, b) = (-10.0, 10.0);
        let h = (b - a) / n as f64;
        let payoff = |z: f64| (100.0 * (0.2 * z - 0.02f64).exp() - 100.0).max(0.0) * norm_pdf(z);
        let mut acc = payoff(a) + payoff(b);
        for i in 1..n {
            acc += payoff(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let oracle = acc * h / 3.0;
        let got = bs_price(100.0, 100.0, 0.0, 0.0, 0.2, 1.0, OptionKind::Call);
        assert!((got - oracle).abs() < 1e-6);
        assert!((got - 7.965_567_455_405_8).abs() < 1e-10);
    }

    #[test]
    fn round_trip() {
        for &sigma in &[0.05, 0.2, 0.8] {
            for &(k, kind) in &[
                (100.0, OptionKind::Call),
                (110.0, OptionKind::Call),
                (90.0, OptionKind::Put),
            ] {
                let price = bs_price(100.0, k, 0.03, 0.01, sigma, 1.0, kind);
                let got = implied_vol(price, 100.0, k, 0.03, 0.01, 1.0, kind).unwrap();
                assert!((got - sigma).abs() < 1e-8, "sigma={sigma} k={k}: {got}");
            }
        }
    }

    #[test]
    fn bounds_are_reported() {
        let intrinsic = 100.0 * (-0.01f64).exp() - 90.0 * (-0.03f64).exp();
        match implied_vol(intrinsic, 100.0, 90.0, 0.03, 0.01, 1.0, OptionKind::Call) {
            Err(Error::Inversion {
                bound: PriceBound::Lower,
                ..
            }) => {}
            other => panic!("{other:?}"),
        }
        match implied_vol(100.0, 100.0, 90.0, 0.03, 0.01, 1.0, OptionKind::Call) {
            Err(Error::Inversion {
                bound: PriceBound::Upper,
                ..
            }) => {}
            other => panic!("{other:?}"),
        }
    }
}
