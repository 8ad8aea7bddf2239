//! Crank-Nicolson solver for the pricing equation in the stock price `X`:
//!
//! ```text
//! dP/dt + sigma^2 X^beta C(t) d2P/dX2 + (r - delta) X dP/dX - r P = 0
//! ```
//!
//! The first two steps are replaced by four fully implicit half steps
//! (Rannacher start-up) to damp the payoff kink. The grid is a sinh stretch
//! concentrated around the strike.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{c_of_t_or_limit, KernelConfig};
use crate::linalg::solve_tridiagonal;
use crate::model::{ContractSpec, ModelParams, OptionKind};
use crate::pricer::{Engine, PriceMeta, PriceResult};

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeScheme {
    /// Crank-Nicolson with implicit start-up steps.
    CrankNicolsonRannacher,
}

/// Grid settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeGrid {
    /// Lower edge.
    pub x_min: f64,
    /// Upper edge; `None` picks `max(6 F, 2 K)` with `F` the forward.
    pub x_max: Option<f64>,
    /// Number of space intervals.
    pub n_space: usize,
    /// Number of time steps.
    pub n_time: usize,
    /// Time-stepping scheme.
    pub scheme: PdeScheme,
    /// Width of the refined zone around the strike, as a fraction of the strike.
    pub stretch: f64,
    /// Skip the half-resolution solve used for the error estimate.
    pub skip_richardson: bool,
}

impl Default for PdeGrid {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: None,
            n_space: 2000,
            n_time: 1000,
            scheme: PdeScheme::CrankNicolsonRannacher,
            stretch: 0.15,
            skip_richardson: false,
        }
    }
}

impl PdeGrid {
    /// Checks the grid invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.x_min >= 0.0) || self.n_space < 3 || self.n_time < 3 || !(self.stretch > 0.0) {
            return Err(Error::domain(
                "PdeGrid requires x_min >= 0, n_space >= 3, n_time >= 3 and stretch > 0",
            ));
        }
        if let Some(x_max) = self.x_max {
            if !(x_max > self.x_min) {
                return Err(Error::domain("PdeGrid requires x_max > x_min"));
            }
        }
        Ok(())
    }

    fn upper_edge(&self, params: &ModelParams, contract: &ContractSpec) -> f64 {
        self.x_max.unwrap_or_else(|| {
            let fwd = params.x0 * ((params.r - params.delta) * contract.tau()).exp();
            (6.0 * fwd).max(2.0 * contract.strike)
        })
    }
}

/// Terminal payoff with Dirichlet data on both edges.
pub trait TerminalCondition {
    /// Payoff at expiry.
    fn payoff(&self, x: f64) -> f64;
    /// Value at the lower edge `x` with time to expiry `tau`.
    fn lower(&self, x: f64, tau: f64) -> f64;
    /// Value at the upper edge `x` with time to expiry `tau`.
    fn upper(&self, x: f64, tau: f64) -> f64;
}

/// Call or put payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vanilla {
    /// Strike.
    pub strike: f64,
    /// Call or put.
    pub kind: OptionKind,
    /// Risk-free rate.
    pub r: f64,
    /// Dividend yield.
    pub delta: f64,
}

impl Vanilla {
    /// Payoff of `contract` under `params`' rates.
    pub fn new(params: &ModelParams, contract: &ContractSpec) -> Self {
        Self {
            strike: contract.strike,
            kind: contract.kind,
            r: params.r,
            delta: params.delta,
        }
    }

    fn forward_intrinsic(&self, x: f64, tau: f64) -> f64 {
        let diff = x * (-self.delta * tau).exp() - self.strike * (-self.r * tau).exp();
        match self.kind {
            OptionKind::Call => diff.max(0.0),
            OptionKind::Put => (-diff).max(0.0),
        }
    }
}

impl TerminalCondition for Vanilla {
    fn payoff(&self, x: f64) -> f64 {
        match self.kind {
            OptionKind::Call => (x - self.strike).max(0.0),
            OptionKind::Put => (self.strike - x).max(0.0),
        }
    }

    fn lower(&self, x: f64, tau: f64) -> f64 {
        if x == 0.0 {
            match self.kind {
                OptionKind::Call => 0.0,
                OptionKind::Put => self.strike * (-self.r * tau).exp(),
            }
        } else {
            self.forward_intrinsic(x, tau)
        }
    }

    fn upper(&self, x: f64, tau: f64) -> f64 {
        self.forward_intrinsic(x, tau)
    }
}

/// Grid values at `t0`, optionally with the whole surface.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    /// Space nodes.
    pub x: Vec<f64>,
    /// Values at `t0` on `x`.
    pub values: Vec<f64>,
    /// Calendar times of the stored surface rows, from `T` down to `t0`.
    pub times: Vec<f64>,
    /// Rows of values per entry of `times`, empty unless requested.
    pub surface: Vec<Vec<f64>>,
}

impl PdeSolution {
    fn bracket(&self, x0: f64) -> Result<usize> {
        let n = self.x.len();
        let (lo, hi) = (self.x[0], self.x[n - 1]);
        if !(x0 >= lo && x0 <= hi) {
            return Err(Error::OutsideGrid {
                spot: x0,
                x_min: lo,
                x_max: hi,
            });
        }
        let i = self.x.partition_point(|&v| v <= x0).clamp(1, n - 1);
        // four nodes i-2..=i+1 around the interval [x_{i-1}, x_i]
        Ok(i.saturating_sub(2).min(n - 4))
    }

    /// Cubic Lagrange interpolation of the `t0` values.
    pub fn value_at(&self, x0: f64) -> Result<f64> {
        let s = self.bracket(x0)?;
        let xs = &self.x[s..s + 4];
        let ys = &self.values[s..s + 4];
        let mut acc = 0.0;
        for j in 0..4 {
            let mut w = 1.0;
            for m in 0..4 {
                if m != j {
                    w *= (x0 - xs[m]) / (xs[j] - xs[m]);
                }
            }
            acc += w * ys[j];
        }
        Ok(acc)
    }

    /// Derivative of the interpolating cubic, i.e. the grid hedge ratio.
    pub fn delta_at(&self, x0: f64) -> Result<f64> {
        let s = self.bracket(x0)?;
        let xs = &self.x[s..s + 4];
        let ys = &self.values[s..s + 4];
        let mut acc = 0.0;
        for j in 0..4 {
            let denom: f64 = (0..4).filter(|&m| m != j).map(|m| xs[j] - xs[m]).product();
            let mut deriv = 0.0;
            for skip in 0..4 {
                if skip == j {
                    continue;
                }
                deriv += (0..4)
                    .filter(|&m| m != j && m != skip)
                    .map(|m| x0 - xs[m])
                    .product::<f64>();
            }
            acc += ys[j] * deriv / denom;
        }
        Ok(acc)
    }
}

fn build_nodes(x_min: f64, x_max: f64, centre: f64, width: f64, n: usize) -> Vec<f64> {
    let lo = ((x_min - centre) / width).asinh();
    let hi = ((x_max - centre) / width).asinh();
    let mut x: Vec<f64> = (0..=n)
        .map(|i| centre + width * (lo + (hi - lo) * i as f64 / n as f64).sinh())
        .collect();
    x[0] = x_min;
    x[n] = x_max;
    x
}

struct Operator {
    // second-derivative and first-derivative stencils per interior node
    diff: Vec<[f64; 3]>,
    conv: Vec<[f64; 3]>,
    r: f64,
}

impl Operator {
    fn new(params: &ModelParams, x: &[f64]) -> Self {
        let n = x.len();
        let mut diff = vec![[0.0; 3]; n];
        let mut conv = vec![[0.0; 3]; n];
        let s2 = params.sigma * params.sigma;
        let drift = params.r - params.delta;
        for i in 1..n - 1 {
            let hm = x[i] - x[i - 1];
            let hp = x[i + 1] - x[i];
            let sum = hm + hp;
            let d = s2 * x[i].powf(params.beta);
            diff[i] = [
                d * 2.0 / (hm * sum),
                -d * 2.0 / (hm * hp),
                d * 2.0 / (hp * sum),
            ];
            let v = drift * x[i];
            conv[i] = [
                -v * hp / (hm * sum),
                v * (hp - hm) / (hm * hp),
                v * hm / (hp * sum),
            ];
        }
        Self {
            diff,
            conv,
            r: params.r,
        }
    }

    /// Row `i` of `C * diff + conv - r`.
    fn row(&self, i: usize, c: f64) -> [f64; 3] {
        let (d, v) = (self.diff[i], self.conv[i]);
        [c * d[0] + v[0], c * d[1] + v[1] - self.r, c * d[2] + v[2]]
    }
}

/// Solves backward from `maturity` to `t0` for an arbitrary terminal condition.
#[allow(clippy::too_many_arguments)]
pub fn solve_terminal(
    params: &ModelParams,
    t0: f64,
    maturity: f64,
    terminal: &impl TerminalCondition,
    grid: &PdeGrid,
    x_max: f64,
    centre: f64,
    kernel: &KernelConfig,
    keep_surface: bool,
) -> Result<PdeSolution> {
    grid.validate()?;
    if !(maturity > t0) {
        return Err(Error::domain("maturity must exceed t0"));
    }
    let n = grid.n_space;
    let x = build_nodes(
        grid.x_min,
        x_max,
        centre,
        grid.stretch * centre.max(1e-12),
        n,
    );
    let op = Operator::new(params, &x);
    let eta = kernel.eta(params);
    let tau_total = maturity - t0;
    let dt = tau_total / grid.n_time as f64;

    let mut v: Vec<f64> = x.iter().map(|&xi| terminal.payoff(xi)).collect();
    let mut times = Vec::new();
    let mut surface = Vec::new();
    if keep_surface {
        times.push(maturity);
        surface.push(v.clone());
    }

    let mut lower = vec![0.0; n + 1];
    let mut diag = vec![0.0; n + 1];
    let mut upper = vec![0.0; n + 1];
    let mut rhs = vec![0.0; n + 1];
    let mut scratch = vec![0.0; n + 1];

    // (tau_start, step, theta): theta = 1 implicit, 1/2 Crank-Nicolson
    let mut steps: Vec<(f64, f64, f64)> = Vec::with_capacity(grid.n_time + 2);
    for k in 0..4 {
        steps.push((k as f64 * 0.5 * dt, 0.5 * dt, 1.0));
    }
    for k in 2..grid.n_time {
        steps.push((k as f64 * dt, dt, 0.5));
    }

    for (tau_start, step, theta) in steps {
        let tau_end = tau_start + step;
        let c = c_of_t_or_limit(
            params.hurst,
            eta,
            maturity - (tau_start + 0.5 * step),
            kernel,
        )?;
        let explicit = (1.0 - theta) * step;
        let implicit = theta * step;
        for i in 1..n {
            let row = op.row(i, c);
            rhs[i] = v[i] + explicit * (row[0] * v[i - 1] + row[1] * v[i] + row[2] * v[i + 1]);
            lower[i] = -implicit * row[0];
            diag[i] = 1.0 - implicit * row[1];
            upper[i] = -implicit * row[2];
        }
        diag[0] = 1.0;
        upper[0] = 0.0;
        rhs[0] = terminal.lower(x[0], tau_end);
        diag[n] = 1.0;
        lower[n] = 0.0;
        rhs[n] = terminal.upper(x[n], tau_end);
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut scratch);
        core::mem::swap(&mut v, &mut rhs);
        if let Some(i) = v.iter().position(|p| !p.is_finite()) {
            return Err(Error::Instability(alloc::format!(
                "non-finite value at x = {} (node {i} of {n}), tau = {tau_end}, n_time = {}",
                x[i],
                grid.n_time
            )));
        }
        if keep_surface {
            times.push(maturity - tau_end);
            surface.push(v.clone());
        }
    }
    Ok(PdeSolution {
        x,
        values: v,
        times,
        surface,
    })
}

/// Solution of a vanilla contract on `grid`.
pub fn solve_pde(
    params: &ModelParams,
    contract: &ContractSpec,
    grid: &PdeGrid,
    kernel: &KernelConfig,
    keep_surface: bool,
) -> Result<PdeSolution> {
    crate::model::validate(params, contract)?;
    let x_max = grid.upper_edge(params, contract);
    if !(params.x0 >= grid.x_min && params.x0 <= x_max) {
        return Err(Error::OutsideGrid {
            spot: params.x0,
            x_min: grid.x_min,
            x_max,
        });
    }
    let centre = if contract.strike > 0.0 {
        contract.strike
    } else {
        params.x0
    };
    solve_terminal(
        params,
        contract.t0,
        contract.maturity,
        &Vanilla::new(params, contract),
        grid,
        x_max,
        centre,
        kernel,
        keep_surface,
    )
}

/// Price at `X0` with a Richardson error estimate from a half-resolution solve.
pub fn price_pde(
    params: &ModelParams,
    contract: &ContractSpec,
    grid: &PdeGrid,
    kernel: &KernelConfig,
) -> Result<PriceResult> {
    let fine = solve_pde(params, contract, grid, kernel, false)?;
    let price = fine.value_at(params.x0)?;
    let error_estimate = if grid.skip_richardson {
        0.0
    } else {
        let coarse_grid = PdeGrid {
            n_space: (grid.n_space / 2).max(3),
            n_time: (grid.n_time / 2).max(3),
            ..*grid
        };
        let coarse =
            solve_pde(params, contract, &coarse_grid, kernel, false)?.value_at(params.x0)?;
        (price - coarse).abs() / 3.0
    };
    let mut res = PriceResult::new(
        price.max(0.0),
        Engine::Pde,
        error_estimate,
        PriceMeta::Grid {
            n_space: grid.n_space,
            n_time: grid.n_time,
        },
    );
    if price < -error_estimate.max(1e-12) {
        res.warnings
            .push(String::from("negative grid value floored at 0"));
    }
    Ok(res)
}
