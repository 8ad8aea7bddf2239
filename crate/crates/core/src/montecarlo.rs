//! Monte Carlo engines.
//!
//! Pricing simulates `Y = X^{2-beta}` under
//! `dY = (bY + cC(t)) dt + sqrt(2 a C(t) Y) dB` with a standard Brownian
//! driver. Stock paths under the real-world dynamics are drawn exactly from
//! the Gaussian driver `Y_t = int_0^t h dB^H` and mapped through
//! [`explicit_g`].
//!
//! Every path owns a ChaCha8 stream selected by its index, so any partition of
//! the paths across threads reproduces the serial result bit for bit.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    c_of_t_or_limit, derive_coeffs, gamma_clock, smoothed_power_integral, DerivedCoeffs,
    KernelConfig,
};
use crate::linalg::Cholesky;
use crate::model::{explicit_g, ContractSpec, ModelParams, OptionKind};
use crate::pricer::{Engine, PriceMeta, PriceResult};
use crate::quad::{integrate, QuadConfig};
use crate::sum::Neumaier;

/// Discretization of the `Y` dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McScheme {
    /// Euler with the square root taken of `max(Y, 0)`; paths absorb at 0.
    EulerFullTruncation,
    /// Exact square-root transitions on the clock `gamma`.
    ExactTimeChange,
}

/// Simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    /// Number of paths.
    pub n_paths: usize,
    /// Time steps per path.
    pub n_steps: usize,
    /// Base seed.
    pub seed: u64,
    /// Discretization.
    pub scheme: McScheme,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_steps: 500,
            seed: 20_240_601,
            scheme: McScheme::EulerFullTruncation,
        }
    }
}

impl McConfig {
    /// Checks `n_paths >= 1` and `n_steps >= 1`.
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || self.n_steps == 0 {
            return Err(Error::domain(
                "McConfig requires n_paths >= 1 and n_steps >= 1",
            ));
        }
        Ok(())
    }
}

/// The random stream of path `index`.
pub fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Simulated paths, stored row-major by path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    /// Time grid shared by all paths.
    pub times: Vec<f64>,
    /// `n_paths * times.len()` values.
    pub values: Vec<f64>,
    /// Whether each path hit zero.
    pub absorbed: Vec<bool>,
}

impl PathSet {
    /// Number of paths.
    pub fn n_paths(&self) -> usize {
        self.absorbed.len()
    }

    /// Values of path `i`.
    pub fn path(&self, i: usize) -> &[f64] {
        let n = self.times.len();
        &self.values[i * n..(i + 1) * n]
    }
}

/// Per-path simulator of `Y` on an even grid over `[t0, T]`.
#[derive(Debug, Clone)]
pub struct YSimulator {
    coeffs: DerivedCoeffs,
    scheme: McScheme,
    seed: u64,
    times: Vec<f64>,
    dt: f64,
    y0: f64,
    // Euler: C(t_k); exact: clock increments
    c_or_dgamma: Vec<f64>,
    order: f64,
}

impl YSimulator {
    /// Precomputes the grid and memory coefficients.
    pub fn new(
        params: &ModelParams,
        contract: &ContractSpec,
        cfg: &McConfig,
        kernel: &KernelConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        crate::model::validate(params, contract)?;
        let coeffs = derive_coeffs(params, contract, kernel)?;
        let n = cfg.n_steps;
        let dt = contract.tau() / n as f64;
        let times: Vec<f64> = (0..=n)
            .map(|k| {
                if k == n {
                    contract.maturity
                } else {
                    contract.t0 + k as f64 * dt
                }
            })
            .collect();
        let c_or_dgamma = match cfg.scheme {
            McScheme::EulerFullTruncation => times[..n]
                .iter()
                .map(|&t| c_of_t_or_limit(params.hurst, coeffs.eta, t, kernel))
                .collect::<Result<Vec<_>>>()?,
            McScheme::ExactTimeChange => times
                .windows(2)
                .map(|w| gamma_clock(&coeffs, params.hurst, w[0], w[1], kernel))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(Self {
            coeffs,
            scheme: cfg.scheme,
            seed: cfg.seed,
            times,
            dt,
            y0: params.x0.powf(2.0 - params.beta),
            c_or_dgamma,
            order: coeffs.bessel_order(),
        })
    }

    /// Time grid.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Writes path `index` into `out` (length `n_steps + 1`); returns whether it absorbed.
    pub fn fill_path(&self, index: usize, out: &mut [f64]) -> bool {
        let mut rng = path_rng(self.seed, index);
        let mut y = self.y0;
        out[0] = y;
        let mut absorbed = false;
        for k in 0..self.c_or_dgamma.len() {
            if !absorbed {
                y = self.step(k, y, &mut rng);
                absorbed = y <= 0.0;
                if absorbed {
                    y = 0.0;
                }
            }
            out[k + 1] = y;
        }
        absorbed
    }

    /// Terminal value of path `index` and whether it absorbed.
    pub fn terminal(&self, index: usize) -> (f64, bool) {
        let mut rng = path_rng(self.seed, index);
        let mut y = self.y0;
        for k in 0..self.c_or_dgamma.len() {
            y = self.step(k, y, &mut rng);
            if y <= 0.0 {
                return (0.0, true);
            }
        }
        (y, false)
    }

    fn step(&self, k: usize, y: f64, rng: &mut ChaCha8Rng) -> f64 {
        let DerivedCoeffs { a, b, c, .. } = self.coeffs;
        match self.scheme {
            McScheme::EulerFullTruncation => {
                let ck = self.c_or_dgamma[k];
                let z: f64 = rng.sample(StandardNormal);
                y + (b * y + c * ck) * self.dt + (2.0 * a * ck * y.max(0.0) * self.dt).sqrt() * z
            }
            McScheme::ExactTimeChange => {
                let (t_start, t_end) = (self.times[k], self.times[k + 1]);
                let scale = a * self.c_or_dgamma[k];
                let lambda = (-b * t_start).exp() * y / scale;
                let e: f64 = rng.sample(Gamma::new(self.order, 1.0).expect("positive order"));
                if e >= lambda {
                    return 0.0;
                }
                let count: f64 = rng.sample(Poisson::new(lambda - e).expect("positive intensity"));
                let w: f64 = rng.sample(Gamma::new(count + 1.0, 1.0).expect("positive shape"));
                (b * t_end).exp() * scale * w
            }
        }
    }

    /// Call or put payoff on `Y_T`.
    pub fn payoff(&self, y_t: f64, strike: f64, kind: OptionKind) -> f64 {
        let s = if y_t > 0.0 { y_t.powf(self.order) } else { 0.0 };
        match kind {
            OptionKind::Call => (s - strike).max(0.0),
            OptionKind::Put => (strike - s).max(0.0),
        }
    }
}

/// Simulated `Y` paths.
pub fn simulate_y_paths(
    params: &ModelParams,
    contract: &ContractSpec,
    cfg: &McConfig,
    kernel: &KernelConfig,
) -> Result<PathSet> {
    let sim = YSimulator::new(params, contract, cfg, kernel)?;
    let n_t = sim.times.len();
    let mut values = vec![0.0; cfg.n_paths * n_t];
    let absorbed = values
        .chunks_mut(n_t)
        .enumerate()
        .map(|(i, row)| sim.fill_path(i, row))
        .collect();
    Ok(PathSet {
        times: sim.times,
        values,
        absorbed,
    })
}

/// Running sample statistics; fed in path order they give reproducible results.
#[derive(Debug, Clone, Default)]
pub struct McAccumulator {
    n: usize,
    sum: Neumaier,
    sum_sq: Neumaier,
    absorbed: usize,
}

impl McAccumulator {
    /// Empty accumulator.
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one path.
    pub fn push(&mut self, payoff: f64, absorbed: bool) {
        self.n += 1;
        self.sum.add(payoff);
        self.sum_sq.add(payoff * payoff);
        if absorbed {
            self.absorbed += 1;
        }
    }

    /// Sample mean and its standard error.
    pub fn mean_and_se(&self) -> (f64, f64) {
        let n = self.n as f64;
        let mean = self.sum.total() / n;
        if self.n < 2 {
            return (mean, 0.0);
        }
        let var = ((self.sum_sq.total() - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }

    /// Fraction of absorbed paths.
    pub fn absorbed_fraction(&self) -> f64 {
        self.absorbed as f64 / self.n as f64
    }

    /// Discounted price result.
    pub fn finish(&self, discount: f64, n_steps: usize) -> PriceResult {
        let (mean, se) = self.mean_and_se();
        PriceResult::new(
            discount * mean,
            Engine::Mc,
            discount * se,
            PriceMeta::Paths {
                n_paths: self.n,
                n_steps,
                absorbed_fraction: self.absorbed_fraction(),
            },
        )
    }
}

/// Discounted Monte Carlo price; `error_estimate` is the standard error.
pub fn price_call_mc(
    params: &ModelParams,
    contract: &ContractSpec,
    cfg: &McConfig,
    kernel: &KernelConfig,
) -> Result<PriceResult> {
    let sim = YSimulator::new(params, contract, cfg, kernel)?;
    let mut acc = McAccumulator::new();
    for i in 0..cfg.n_paths {
        let (y, absorbed) = sim.terminal(i);
        acc.push(sim.payoff(y, contract.strike, contract.kind), absorbed);
    }
    Ok(acc.finish((-params.r * contract.tau()).exp(), cfg.n_steps))
}

/// `Cov(Y_s, Y_t)` of `Y_t = int_0^t e^{-eta u} dB^H_u`.
pub fn driver_covariance(
    hurst: f64,
    eta: f64,
    s: f64,
    t: f64,
    kernel: &KernelConfig,
) -> Result<f64> {
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    if s <= 0.0 {
        return Ok(0.0);
    }
    if hurst == 0.5 {
        return Ok(if eta == 0.0 {
            s
        } else {
            -(-2.0 * eta * s).exp_m1() / (2.0 * eta)
        });
    }
    let two_h = 2.0 * hurst;
    if eta == 0.0 {
        return Ok(0.5 * (s.powf(two_h) + t.powf(two_h) - (t - s).powf(two_h)));
    }
    let p = two_h - 1.0;
    let inner = kernel.quad();
    let mut failure = None;
    let f = |u: f64| {
        let j = smoothed_power_integral(p, eta, u, &inner)
            .and_then(|a| Ok(a + smoothed_power_integral(p, -eta, t - u, &inner)?));
        match j {
            Ok(v) => (-2.0 * eta * u).exp() * v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let outer = QuadConfig {
        abs_tol: kernel.quad_tol,
        rel_tol: 1e-12,
        max_intervals: 2000,
    };
    let r = integrate(f, 0.0, s, &outer)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(hurst * r.value)
}

/// Exact joint sampler of the Gaussian driver on a fixed grid.
#[derive(Debug, Clone)]
pub struct GaussianSimulator {
    times: Vec<f64>,
    // index into `times` of the first positive time
    first: usize,
    factor: Option<Cholesky>,
    seed: u64,
    params: ModelParams,
    eta: f64,
}

impl GaussianSimulator {
    /// Builds and factorizes the covariance on `times` (strictly increasing, from 0).
    pub fn new(
        params: &ModelParams,
        times: &[f64],
        cfg: &McConfig,
        kernel: &KernelConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "time grid must be strictly increasing and start at t >= 0",
            ));
        }
        if !(0.5..1.0).contains(&params.hurst) {
            return Err(Error::domain("Hurst index outside [1/2, 1)"));
        }
        let eta = kernel.eta(params);
        let first = times.partition_point(|&t| t <= 0.0);
        let pos = &times[first..];
        let n = pos.len();
        let factor = if n == 0 {
            None
        } else {
            let mut cov = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let v = driver_covariance(params.hurst, eta, pos[j], pos[i], kernel)?;
                    cov[i * n + j] = v;
                    cov[j * n + i] = v;
                }
            }
            Some(Cholesky::new(&cov, n)?)
        };
        Ok(Self {
            times: times.to_vec(),
            first,
            factor,
            seed: cfg.seed,
            params: *params,
            eta,
        })
    }

    /// Time grid.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Diagonal jitter used by the factorization.
    pub fn jitter(&self) -> f64 {
        self.factor.as_ref().map_or(0.0, |f| f.jitter)
    }

    /// Writes the driver path `index` into `out`.
    pub fn fill_driver(&self, index: usize, out: &mut [f64]) {
        out[..self.first].iter_mut().for_each(|v| *v = 0.0);
        if let Some(l) = &self.factor {
            let mut rng = path_rng(self.seed, index);
            let z: Vec<f64> = (0..l.dim()).map(|_| rng.sample(StandardNormal)).collect();
            l.mul_lower(&z, &mut out[self.first..]);
        }
    }

    /// Writes the stock path `index` into `out`; returns whether it absorbed.
    pub fn fill_stock(&self, index: usize, out: &mut [f64]) -> Result<bool> {
        self.fill_driver(index, out);
        let mut absorbed = false;
        for (k, v) in out.iter_mut().enumerate() {
            if absorbed {
                *v = 0.0;
                continue;
            }
            *v = explicit_g(&self.params, self.eta, self.times[k], *v)?;
            absorbed = *v <= 0.0;
        }
        Ok(absorbed)
    }
}

/// Driver paths `Y` on `times`.
pub fn simulate_gaussian_driver(
    params: &ModelParams,
    times: &[f64],
    cfg: &McConfig,
    kernel: &KernelConfig,
) -> Result<PathSet> {
    let sim = GaussianSimulator::new(params, times, cfg, kernel)?;
    let n_t = times.len();
    let mut values = vec![0.0; cfg.n_paths * n_t];
    for (i, row) in values.chunks_mut(n_t).enumerate() {
        sim.fill_driver(i, row);
    }
    Ok(PathSet {
        times: times.to_vec(),
        values,
        absorbed: vec![false; cfg.n_paths],
    })
}

/// Stock paths `X_t = g(t, Y_t)` on `times`.
pub fn simulate_stock_paths_gaussian(
    params: &ModelParams,
    times: &[f64],
    cfg: &McConfig,
    kernel: &KernelConfig,
) -> Result<PathSet> {
    if params.beta >= 2.0 {
        return Err(Error::Unsupported(
            "the explicit solution needs beta < 2".into(),
        ));
    }
    let sim = GaussianSimulator::new(params, times, cfg, kernel)?;
    let n_t = times.len();
    let mut values = vec![0.0; cfg.n_paths * n_t];
    let absorbed = values
        .chunks_mut(n_t)
        .enumerate()
        .map(|(i, row)| sim.fill_stock(i, row))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathSet {
        times: times.to_vec(),
        values,
        absorbed,
    })
}
