//! Pairwise agreement of the pricing engines on the same contracts.

use fcev_core::engine::EngineConfigs;
use fcev_core::pricer::price_series;
use fcev_core::{ContractSpec, Engine, ModelParams, PriceResult};
use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, RunConfig};
use crate::parallel;
use crate::report::{fmt_f, json_document, round_json};

/// Acceptance thresholds for each pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Series against quadrature, relative.
    pub quadrature_rel: f64,
    /// Series against finite differences, relative.
    pub pde_rel: f64,
    /// Series against Monte Carlo, in standard errors.
    pub mc_se: f64,
    /// Absolute deviation that always passes; relative tests are meaningless
    /// for prices that are zero to machine precision.
    pub abs_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature_rel: 1e-4,
            pde_rel: 5e-3,
            mc_se: 3.0,
            abs_floor: 1e-8,
        }
    }
}

/// Outcome of one engine on one contract.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineCell {
    /// Engine requested.
    pub engine: Engine,
    /// Its result, if it succeeded.
    pub result: Option<PriceResult>,
    /// Its error message otherwise.
    pub error: Option<String>,
}

/// PASS, FAIL, or ERROR when an engine did not produce a price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    /// Within tolerance.
    Pass,
    /// Outside tolerance.
    Fail,
    /// One side failed to price.
    Error,
}

impl Verdict {
    /// Upper-case label.
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Error => "ERROR",
        }
    }
}

/// One comparison against the series price.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheck {
    /// Index into the config's contracts.
    pub contract: usize,
    /// Strike of that contract.
    pub strike: f64,
    /// Engine compared against the series.
    pub engine: Engine,
    /// Series price.
    pub reference: f64,
    /// Other engine's price.
    pub other: f64,
    /// `|other - reference|`.
    pub abs_deviation: f64,
    /// Deviation in the pair's metric: relative, or standard errors for Monte Carlo.
    pub score: f64,
    /// Threshold on `score`.
    pub tolerance: f64,
    /// Outcome.
    pub verdict: Verdict,
    /// Error text for `ERROR` rows.
    pub detail: String,
}

/// Full cross-check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XcheckReport {
    /// Thresholds used.
    pub tolerances: Tolerances,
    /// Engine results per contract, in the order series, quadrature, pde, mc.
    pub cells: Vec<Vec<EngineCell>>,
    /// Pairwise checks.
    pub checks: Vec<PairCheck>,
}

impl XcheckReport {
    /// True when every check passed.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Pass)
    }
}

fn cell(engine: Engine, r: fcev_core::Result<PriceResult>) -> EngineCell {
    match r {
        Ok(res) => EngineCell {
            engine,
            result: Some(res),
            error: None,
        },
        Err(e) => EngineCell {
            engine,
            result: None,
            error: Some(e.to_string()),
        },
    }
}

/// Compares `other` to `reference` under the thresholds for `engine`.
pub fn compare(
    tol: &Tolerances,
    engine: Engine,
    reference: &PriceResult,
    other: &PriceResult,
) -> (f64, f64, Verdict) {
    let dev = (other.price - reference.price).abs();
    let (score, limit) = match engine {
        Engine::Mc => (dev / other.error_estimate, tol.mc_se),
        Engine::Pde => (dev / reference.price.abs(), tol.pde_rel),
        _ => (dev / reference.price.abs(), tol.quadrature_rel),
    };
    // NaN scores (0/0) count as a pass only through the absolute floor
    let pass = score <= limit || dev <= tol.abs_floor;
    (
        score,
        limit,
        if pass { Verdict::Pass } else { Verdict::Fail },
    )
}

/// Runs all four engines on each contract and checks them against the series.
pub fn run(
    params: &ModelParams,
    contracts: &[ContractSpec],
    cfg: &EngineConfigs,
    tol: &Tolerances,
) -> XcheckReport {
    let mut cells = Vec::new();
    let mut checks = Vec::new();
    for (idx, contract) in contracts.iter().enumerate() {
        let row = vec![
            cell(
                Engine::Series,
                cfg.validate()
                    .and_then(|_| price_series(params, contract, &cfg.kernel, &cfg.series)),
            ),
            cell(
                Engine::Quadrature,
                parallel::price(Engine::Quadrature, params, contract, cfg),
            ),
            cell(
                Engine::Pde,
                parallel::price(Engine::Pde, params, contract, cfg),
            ),
            cell(
                Engine::Mc,
                parallel::price(Engine::Mc, params, contract, cfg),
            ),
        ];
        for other in &row[1..] {
            let mut check = PairCheck {
                contract: idx,
                strike: contract.strike,
                engine: other.engine,
                reference: f64::NAN,
                other: f64::NAN,
                abs_deviation: f64::NAN,
                score: f64::NAN,
                tolerance: f64::NAN,
                verdict: Verdict::Error,
                detail: String::new(),
            };
            match (&row[0].result, &other.result) {
                (Some(r), Some(o)) => {
                    let (score, limit, verdict) = compare(tol, other.engine, r, o);
                    check.reference = r.price;
                    check.other = o.price;
                    check.abs_deviation = (o.price - r.price).abs();
                    check.score = score;
                    check.tolerance = limit;
                    check.verdict = verdict;
                }
                _ => {
                    check.detail = [&row[0], other]
                        .iter()
                        .filter_map(|c| {
                            c.error
                                .as_ref()
                                .map(|e| format!("{}: {e}", c.engine.as_str()))
                        })
                        .collect::<Vec<_>>()
                        .join("; ");
                }
            }
            checks.push(check);
        }
        cells.push(row);
    }
    XcheckReport {
        tolerances: *tol,
        cells,
        checks,
    }
}

/// Cross-check report in `format`.
pub fn report(cfg: &RunConfig, rep: &XcheckReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut body = serde_json::to_value(rep).unwrap_or(Value::Null);
            round_json(&mut body);
            json_document(cfg, "xcheck", body)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let write = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
                w.write_record([
                    "contract",
                    "strike",
                    "pair",
                    "reference",
                    "other",
                    "abs_deviation",
                    "score",
                    "tolerance",
                    "verdict",
                    "detail",
                ])?;
                for c in &rep.checks {
                    w.write_record([
                        c.contract.to_string(),
                        fmt_f(c.strike),
                        format!("series-{}", c.engine.as_str()),
                        fmt_f(c.reference),
                        fmt_f(c.other),
                        fmt_f(c.abs_deviation),
                        fmt_f(c.score),
                        fmt_f(c.tolerance),
                        c.verdict.as_str().to_string(),
                        c.detail.clone(),
                    ])?;
                }
                Ok(())
            };
            write(&mut w).expect("writing CSV to memory");
            w.into_inner().expect("flushing CSV to memory")
        }
    }
}

/// Human readable matrix.
pub fn table(rep: &XcheckReport) -> String {
    let mut s = String::new();
    for (idx, row) in rep.cells.iter().enumerate() {
        s.push_str(&format!("contract {idx}\n"));
        for c in row {
            match (&c.result, &c.error) {
                (Some(r), _) => s.push_str(&format!(
                    "  {:<11} {:>20.12} +- {:.3e}\n",
                    c.engine.as_str(),
                    r.price,
                    r.error_estimate
                )),
                (None, Some(e)) => s.push_str(&format!("  {:<11} error: {e}\n", c.engine.as_str())),
                _ => {}
            }
        }
        for c in rep.checks.iter().filter(|c| c.contract == idx) {
            let metric = if c.engine == Engine::Mc { "se" } else { "rel" };
            s.push_str(&format!(
                "  series-{:<11} {:<5} deviation {:.3e} ({metric} {:.3e}, limit {:.1e}) {}\n",
                c.engine.as_str(),
                c.verdict.as_str(),
                c.abs_deviation,
                c.score,
                c.tolerance,
                c.detail
            ));
        }
    }
    s
}
