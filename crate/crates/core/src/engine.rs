//! Uniform dispatch over the pricing engines.

use serde::{Deserialize, Serialize};

use crate::density::price_call_quadrature;
use crate::error::{Error, Result};
use crate::kernel::KernelConfig;
use crate::model::{ContractSpec, ModelParams, OptionKind};
use crate::montecarlo::{price_call_mc, McConfig};
use crate::pde::{price_pde, PdeGrid};
use crate::pricer::{
    price_black_scholes_branch, price_series, put_from_call, Engine, PriceResult, SeriesConfig,
};

/// Settings for every engine.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfigs {
    /// Memory kernel settings.
    pub kernel: KernelConfig,
    /// Series truncation.
    pub series: SeriesConfig,
    /// Density quadrature.
    pub quadrature: QuadratureConfig,
    /// Finite-difference grid.
    pub pde: PdeGrid,
    /// Monte Carlo.
    pub mc: McConfig,
}

/// Density quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Relative tolerance.
    pub quad_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { quad_tol: 1e-10 }
    }
}

impl EngineConfigs {
    /// Validates every section.
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.series.validate()?;
        self.pde.validate()?;
        self.mc.validate()?;
        if !(self.quadrature.quad_tol > 0.0) {
            return Err(Error::domain("quad_tol must be positive"));
        }
        Ok(())
    }
}

/// Prices `contract` with `engine`. At `beta = 2` the series request is
/// routed to the lognormal branch.
pub fn price_with_engine(
    engine: Engine,
    params: &ModelParams,
    contract: &ContractSpec,
    cfg: &EngineConfigs,
) -> Result<PriceResult> {
    cfg.validate()?;
    match engine {
        Engine::Series => price_series(params, contract, &cfg.kernel, &cfg.series),
        Engine::BlackScholes => price_black_scholes_branch(params, contract, &cfg.kernel),
        Engine::Pde => price_pde(params, contract, &cfg.pde, &cfg.kernel),
        Engine::Mc => price_call_mc(params, contract, &cfg.mc, &cfg.kernel),
        Engine::Quadrature => {
            let call = price_call_quadrature(
                params,
                &contract.with_kind(OptionKind::Call),
                &cfg.kernel,
                cfg.quadrature.quad_tol,
            )?;
            Ok(match contract.kind {
                OptionKind::Call => call,
                OptionKind::Put => put_from_call(params, contract, call),
            })
        }
    }
}
