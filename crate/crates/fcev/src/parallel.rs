//! Multi-threaded Monte Carlo with results identical to the serial engines.
//!
//! Every path owns its random stream, so paths can be simulated in any order.
//! Payoffs are collected in path order and reduced serially, which keeps the
//! floating-point summation order fixed.

use fcev_core::engine::EngineConfigs;
use fcev_core::montecarlo::{GaussianSimulator, McAccumulator, McConfig, PathSet, YSimulator};
use fcev_core::{ContractSpec, Engine, Error, KernelConfig, ModelParams, PriceResult, Result};
use rayon::prelude::*;

/// Parallel version of `price_call_mc`; bit-identical to it.
pub fn price_mc(
    params: &ModelParams,
    contract: &ContractSpec,
    cfg: &McConfig,
    kernel: &KernelConfig,
) -> Result<PriceResult> {
    let sim = YSimulator::new(params, contract, cfg, kernel)?;
    let samples: Vec<(f64, bool)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let (y, absorbed) = sim.terminal(i);
            (sim.payoff(y, contract.strike, contract.kind), absorbed)
        })
        .collect();
    let mut acc = McAccumulator::new();
    for (payoff, absorbed) in samples {
        acc.push(payoff, absorbed);
    }
    Ok(acc.finish((-params.r * contract.tau()).exp(), cfg.n_steps))
}

/// `price_with_engine` with the Monte Carlo engine run in parallel.
pub fn price(
    engine: Engine,
    params: &ModelParams,
    contract: &ContractSpec,
    cfg: &EngineConfigs,
) -> Result<PriceResult> {
    match engine {
        Engine::Mc => {
            cfg.validate()?;
            price_mc(params, contract, &cfg.mc, &cfg.kernel)
        }
        other => fcev_core::price_with_engine(other, params, contract, cfg),
    }
}

/// Parallel version of `simulate_y_paths`.
pub fn y_paths(
    params: &ModelParams,
    contract: &ContractSpec,
    cfg: &McConfig,
    kernel: &KernelConfig,
) -> Result<PathSet> {
    let sim = YSimulator::new(params, contract, cfg, kernel)?;
    let n_t = sim.times().len();
    let mut values = vec![0.0; cfg.n_paths * n_t];
    let absorbed = values
        .par_chunks_mut(n_t)
        .enumerate()
        .map(|(i, row)| sim.fill_path(i, row))
        .collect();
    Ok(PathSet {
        times: sim.times().to_vec(),
        values,
        absorbed,
    })
}

/// Parallel Gaussian driver paths (`stock = false`) or stock paths (`stock = true`).
pub fn gaussian_paths(
    params: &ModelParams,
    times: &[f64],
    cfg: &McConfig,
    kernel: &KernelConfig,
    stock: bool,
) -> Result<PathSet> {
    if stock && params.beta >= 2.0 {
        return Err(Error::Unsupported(
            "the explicit solution needs beta < 2".into(),
        ));
    }
    let sim = GaussianSimulator::new(params, times, cfg, kernel)?;
    let n_t = times.len();
    let mut values = vec![0.0; cfg.n_paths * n_t];
    let absorbed = values
        .par_chunks_mut(n_t)
        .enumerate()
        .map(|(i, row)| {
            if stock {
                sim.fill_stock(i, row)
            } else {
                sim.fill_driver(i, row);
                Ok(false)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PathSet {
        times: times.to_vec(),
        values,
        absorbed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fcev_core::montecarlo::{
        price_call_mc, simulate_gaussian_driver, simulate_stock_paths_gaussian, simulate_y_paths,
    };
    use fcev_core::OptionKind;

    fn params() -> ModelParams {
        ModelParams {
            sigma: 0.2,
            beta: 1.0,
            hurst: 0.7,
            mu: 0.05,
            r: 0.05,
            delta: 0.02,
            x0: 100.0,
        }
    }

    fn contract() -> ContractSpec {
        ContractSpec {
            strike: 100.0,
            t0: 0.0,
            maturity: 1.0,
            kind: OptionKind::Call,
        }
    }

    fn mc() -> McConfig {
        McConfig {
            n_paths: 2000,
            n_steps: 50,
            ..McConfig::default()
        }
    }

    #[test]
    fn parallel_price_matches_serial_bits() {
        let k = KernelConfig::default();
        let serial = price_call_mc(&params(), &contract(), &mc(), &k).unwrap();
        let par = price_mc(&params(), &contract(), &mc(), &k).unwrap();
        assert_eq!(serial.price.to_bits(), par.price.to_bits());
        assert_eq!(
            serial.error_estimate.to_bits(),
            par.error_estimate.to_bits()
        );
    }

    #[test]
    fn parallel_paths_match_serial() {
        let k = KernelConfig::default();
        let cfg = McConfig {
            n_paths: 50,
            ..mc()
        };
        assert_eq!(
            y_paths(&params(), &contract(), &cfg, &k).unwrap(),
            simulate_y_paths(&params(), &contract(), &cfg, &k).unwrap()
        );
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        assert_eq!(
            gaussian_paths(&params(), &times, &cfg, &k, false).unwrap(),
            simulate_gaussian_driver(&params(), &times, &cfg, &k).unwrap()
        );
        assert_eq!(
            gaussian_paths(&params(), &times, &cfg, &k, true).unwrap(),
            simulate_stock_paths_gaussian(&params(), &times, &cfg, &k).unwrap()
        );
    }
}
