//! The four subcommands. Each returns the process exit code.

use fcev_core::impliedvol::{is_strictly_decreasing, skew_row, SkewRow};
use fcev_core::montecarlo::PathSet;
use fcev_core::pde::solve_pde;
use fcev_core::{Engine, OptionKind};
use rayon::prelude::*;

use crate::config::{PathMode, RunConfig};
use crate::error::{exit, CliError};
use crate::report::{self, PriceRow};
use crate::{parallel, xcheck};

// Human readable text goes to stdout unless stdout carries the report.
fn note(cfg: &RunConfig, text: &str) {
    if cfg.output.path.is_some() {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
}

/// Prices every contract with the configured engine.
pub fn price(cfg: &RunConfig) -> Result<i32, CliError> {
    let rows = price_rows(cfg)?;
    if let Some(path) = &cfg.output.surface {
        if cfg.engine != Engine::Pde {
            return Err(CliError::config("output.surface requires engine = pde"));
        }
        let sol = solve_pde(
            &cfg.model,
            &cfg.contracts[0],
            &cfg.engines.pde,
            &cfg.engines.kernel,
            true,
        )?;
        std::fs::write(path, report::surface_csv(&sol)).map_err(|source| CliError::Io {
            context: format!("cannot write {}", path.display()),
            source,
        })?;
    }
    report::emit(
        &cfg.output,
        &report::price_report(cfg, &rows, cfg.output.format),
    )?;
    note(cfg, &report::price_table(&rows));
    Ok(exit::OK)
}

/// Prices every contract; stops at the first engine error.
pub fn price_rows(cfg: &RunConfig) -> Result<Vec<PriceRow>, CliError> {
    cfg.contracts
        .iter()
        .map(|c| {
            let result = parallel::price(cfg.engine, &cfg.model, c, &cfg.engines)?;
            Ok(PriceRow {
                contract: *c,
                result,
            })
        })
        .collect()
}

/// Runs every engine and checks pairwise agreement.
pub fn xcheck(cfg: &RunConfig) -> Result<i32, CliError> {
    let rep = xcheck::run(
        &cfg.model,
        &cfg.contracts,
        &cfg.engines,
        &xcheck::Tolerances::default(),
    );
    report::emit(&cfg.output, &xcheck::report(cfg, &rep, cfg.output.format))?;
    note(cfg, &xcheck::table(&rep));
    Ok(if rep.all_pass() {
        exit::OK
    } else {
        exit::CHECK_FAILED
    })
}

/// Implied volatility across the strike grid of the first contract's expiry.
pub fn skew_rows(cfg: &RunConfig) -> Vec<SkewRow> {
    let base = cfg.contracts[0].with_kind(OptionKind::Call);
    cfg.skew_strikes()
        .par_iter()
        .map(|&k| skew_row(&cfg.model, &base.with_strike(k), cfg.engine, &cfg.engines))
        .collect()
}

/// Writes the skew report and prints the monotonicity verdict.
pub fn skew(cfg: &RunConfig) -> Result<i32, CliError> {
    let rows = skew_rows(cfg);
    report::emit(
        &cfg.output,
        &report::skew_report(cfg, &rows, cfg.output.format),
    )?;
    let vols: Vec<f64> = rows.iter().filter_map(|r| r.implied_vol).collect();
    let spread = vols.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - vols.iter().cloned().fold(f64::INFINITY, f64::min);
    note(
        cfg,
        &format!(
            "implied vol strictly decreasing in strike: {}\ninverted {} of {} strikes, spread {:.3e}\n",
            if is_strictly_decreasing(&rows) { "yes" } else { "no" },
            vols.len(),
            rows.len(),
            if vols.is_empty() { f64::NAN } else { spread },
        ),
    );
    Ok(exit::OK)
}

/// Simulates the configured process.
pub fn path_set(cfg: &RunConfig) -> Result<PathSet, CliError> {
    let (m, e) = (&cfg.model, &cfg.engines);
    Ok(match cfg.paths.mode {
        PathMode::Transformed => parallel::y_paths(m, &cfg.contracts[0], &e.mc, &e.kernel)?,
        PathMode::Stock => {
            parallel::gaussian_paths(m, &cfg.gaussian_times(), &e.mc, &e.kernel, true)?
        }
        PathMode::Driver => {
            parallel::gaussian_paths(m, &cfg.gaussian_times(), &e.mc, &e.kernel, false)?
        }
    })
}

/// Writes simulated paths and prints their summary.
pub fn paths(cfg: &RunConfig) -> Result<i32, CliError> {
    let set = path_set(cfg)?;
    report::emit(
        &cfg.output,
        &report::paths_report(cfg, &set, cfg.output.format),
    )?;
    note(cfg, &report::summary_table(&report::summarize(&set)));
    Ok(exit::OK)
}
