//! Pricing engines for the fractional constant elasticity of variance (CEV) model.
//!
//! The stock follows `dX = mu(t, X) dt + sigma X^{beta/2} dB^H` driven by a
//! fractional Brownian motion with Hurst index `H >= 1/2`. Long memory enters
//! the pricing problem only through the deterministic coefficient `C(t)`,
//! which replaces the classical Itô factor `1/2`. Under the transform
//! `Y = X^{2 - beta}` the pricing problem becomes a time-changed Feller
//! square-root diffusion and European calls admit a Poisson/Gamma series.
//!
//! Engines:
//!
//! * [`pricer`]: the closed-form series (plus a lognormal branch at `beta = 2`),
//! * [`density`]: quadrature against the transition density,
//! * [`pde`]: Crank–Nicolson solver for the pricing PDE in the stock variable,
//! * [`montecarlo`]: simulation of the transformed diffusion, and Gaussian
//!   simulation of real-world stock paths through the explicit solution.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_docs)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod density;
pub mod engine;
pub mod error;
pub mod impliedvol;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod pde;
pub mod pricer;
pub mod quad;
pub mod specfun;
pub mod sum;

pub use engine::{price_with_engine, EngineConfigs};
pub use error::{Error, Result};
pub use kernel::{DerivedCoeffs, EtaMode, KernelConfig};
pub use model::{ContractSpec, ModelParams, OptionKind};
pub use pricer::{Engine, FormulaVariant, PriceMeta, PriceResult, SeriesConfig};
