//! CSV and JSON report writers.
//!
//! Floating-point values are written with 12 significant digits so golden
//! files compare exactly. The effective config embedded in JSON reports is
//! left unrounded so that it can be fed back in.

use std::io::Write;

use fcev_core::impliedvol::{RowStatus, SkewRow};
use fcev_core::montecarlo::PathSet;
use fcev_core::pde::PdeSolution;
use fcev_core::{ContractSpec, PriceResult};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, OutputConfig, RunConfig};
use crate::error::CliError;

/// 12 significant digits in scientific notation.
pub fn fmt_f(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        format!("{v}")
    }
}

/// `v` rounded to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if v.is_finite() {
        fmt_f(v).parse().unwrap_or(v)
    } else {
        v
    }
}

/// Rounds every float inside `v` to 12 significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n
                .as_f64()
                .and_then(|x| serde_json::Number::from_f64(round12(x)))
            {
                *n = x;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

fn rounded<T: Serialize>(value: &T) -> Value {
    let mut v = serde_json::to_value(value).unwrap_or(Value::Null);
    round_json(&mut v);
    v
}

/// JSON document `{"config": ..., key: body}`.
pub fn json_document(cfg: &RunConfig, key: &str, body: Value) -> Vec<u8> {
    let doc = json!({ "config": cfg, key: body });
    let mut out = serde_json::to_vec_pretty(&doc).expect("report serializes");
    out.push(b'\n');
    out
}

/// Writes `bytes` to the configured file, or stdout when none is set.
pub fn emit(output: &OutputConfig, bytes: &[u8]) -> Result<(), CliError> {
    match &output.path {
        Some(path) => std::fs::write(path, bytes).map_err(|source| CliError::Io {
            context: format!("cannot write {}", path.display()),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    context: "cannot write to stdout".into(),
                    source,
                })
        }
    }
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Vec<u8>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .and_then(|_| fill(&mut w))
        .expect("writing CSV to memory");
    w.into_inner().expect("flushing CSV to memory")
}

/// One priced contract.
#[derive(Debug, Clone, Serialize)]
pub struct PriceRow {
    /// The contract.
    pub contract: ContractSpec,
    /// Its price.
    pub result: PriceResult,
}

fn kind_str(c: &ContractSpec) -> &'static str {
    match c.kind {
        fcev_core::OptionKind::Call => "call",
        fcev_core::OptionKind::Put => "put",
    }
}

/// Price report in `format`.
pub fn price_report(cfg: &RunConfig, rows: &[PriceRow], format: Format) -> Vec<u8> {
    match format {
        Format::Json => json_document(cfg, "results", rounded(&rows)),
        Format::Csv => csv_bytes(
            &[
                "strike",
                "t0",
                "maturity",
                "kind",
                "engine",
                "price",
                "error_estimate",
                "meta",
                "warnings",
            ],
            |w| {
                for row in rows {
                    let (c, r) = (&row.contract, &row.result);
                    w.write_record([
                        fmt_f(c.strike),
                        fmt_f(c.t0),
                        fmt_f(c.maturity),
                        kind_str(c).to_string(),
                        r.engine.as_str().to_string(),
                        fmt_f(r.price),
                        fmt_f(r.error_estimate),
                        rounded(&r.meta).to_string(),
                        r.warnings.join("; "),
                    ])?;
                }
                Ok(())
            },
        ),
    }
}

/// Human readable price table.
pub fn price_table(rows: &[PriceRow]) -> String {
    let mut s = format!(
        "{:>10} {:>8} {:>5} {:>14} {:>20} {:>12}\n",
        "strike", "T", "kind", "engine", "price", "error"
    );
    for row in rows {
        let (c, r) = (&row.contract, &row.result);
        s.push_str(&format!(
            "{:>10.4} {:>8.4} {:>5} {:>14} {:>20.12} {:>12.3e}\n",
            c.strike,
            c.maturity,
            kind_str(c),
            r.engine.as_str(),
            r.price,
            r.error_estimate
        ));
        for w in &r.warnings {
            s.push_str(&format!("  warning: {w}\n"));
        }
    }
    s
}

/// Finite-difference surface as `t, X, P` rows.
pub fn surface_csv(sol: &PdeSolution) -> Vec<u8> {
    csv_bytes(&["t", "X", "P"], |w| {
        for (t, row) in sol.times.iter().zip(&sol.surface) {
            for (x, p) in sol.x.iter().zip(row) {
                w.write_record([fmt_f(*t), fmt_f(*x), fmt_f(*p)])?;
            }
        }
        Ok(())
    })
}

fn status_str(s: &RowStatus) -> String {
    match s {
        RowStatus::Ok => "ok".into(),
        RowStatus::PriceFailed(m) => format!("price_failed: {m}"),
        RowStatus::NotInvertible(m) => format!("not_invertible: {m}"),
    }
}

/// Skew report in `format`.
pub fn skew_report(cfg: &RunConfig, rows: &[SkewRow], format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "strike": r.strike,
                        "price": r.model_price,
                        "implied_vol": r.implied_vol,
                        "engine": r.engine,
                        "status": status_str(&r.status),
                    })
                })
                .collect();
            let mut body = Value::Array(items);
            round_json(&mut body);
            json_document(cfg, "skew", body)
        }
        Format::Csv => csv_bytes(
            &["strike", "price", "implied_vol", "engine", "status"],
            |w| {
                for r in rows {
                    w.write_record([
                        fmt_f(r.strike),
                        fmt_f(r.model_price),
                        r.implied_vol.map(fmt_f).unwrap_or_default(),
                        r.engine.as_str().to_string(),
                        status_str(&r.status),
                    ])?;
                }
                Ok(())
            },
        ),
    }
}

/// Cross-sectional statistics of a path set at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    /// Time.
    pub t: f64,
    /// Sample mean.
    pub mean: f64,
    /// Sample variance (denominator `n - 1`).
    pub variance: f64,
    /// Fraction of paths at exactly zero.
    pub zero_fraction: f64,
}

/// Mean, variance and zero fraction at every grid time.
pub fn summarize(paths: &PathSet) -> Vec<PathSummary> {
    let n = paths.n_paths();
    paths
        .times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let col = (0..n).map(|i| paths.path(i)[k]);
            let mean = col.clone().sum::<f64>() / n as f64;
            let ss: f64 = col.clone().map(|v| (v - mean) * (v - mean)).sum();
            let zeros = col.filter(|&v| v == 0.0).count();
            PathSummary {
                t,
                mean,
                variance: if n > 1 { ss / (n - 1) as f64 } else { 0.0 },
                zero_fraction: zeros as f64 / n as f64,
            }
        })
        .collect()
}

/// Path report in `format`.
pub fn paths_report(cfg: &RunConfig, paths: &PathSet, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let items: Vec<Value> = (0..paths.n_paths())
                .map(|i| {
                    json!({
                        "path_id": i,
                        "values": paths.path(i),
                        "absorbed": paths.absorbed[i],
                    })
                })
                .collect();
            let mut body = json!({
                "times": paths.times,
                "paths": items,
                "summary": summarize(paths),
            });
            round_json(&mut body);
            json_document(cfg, "paths", body)
        }
        Format::Csv => csv_bytes(&["path_id", "t", "value", "absorbed"], |w| {
            for i in 0..paths.n_paths() {
                let flag = if paths.absorbed[i] { "true" } else { "false" };
                for (t, v) in paths.times.iter().zip(paths.path(i)) {
                    w.write_record([i.to_string(), fmt_f(*t), fmt_f(*v), flag.to_string()])?;
                }
            }
            Ok(())
        }),
    }
}

/// Human readable summary table.
pub fn summary_table(rows: &[PathSummary]) -> String {
    let mut s = format!(
        "{:>10} {:>16} {:>16} {:>10}\n",
        "t", "mean", "variance", "zero_frac"
    );
    for r in rows {
        s.push_str(&format!(
            "{:>10.4} {:>16.8e} {:>16.8e} {:>10.6}\n",
            r.t, r.mean, r.variance, r.zero_fraction
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_f(1.0), "1.00000000000e0");
        assert_eq!(fmt_f(-2.953522344890079), "-2.95352234489e0");
        assert_eq!(round12(2.953522344890079), 2.95352234489);
        assert_eq!(fmt_f(f64::NAN), "NaN");
    }

    #[test]
    fn json_rounding_reaches_nested_numbers() {
        let mut v = json!({"a": [1.234567890123456, {"b": 3}], "c": "x"});
        round_json(&mut v);
        assert_eq!(v, json!({"a": [1.23456789012, {"b": 3}], "c": "x"}));
    }

    #[test]
    fn summary_of_known_paths() {
        let ps = PathSet {
            times: vec![0.0, 1.0],
            values: vec![1.0, 0.0, 1.0, 2.0, 1.0, 4.0],
            absorbed: vec![true, false, false],
        };
        let s = summarize(&ps);
        assert_eq!(s[0].variance, 0.0);
        assert!((s[1].mean - 2.0).abs() < 1e-15);
        assert!((s[1].variance - 4.0).abs() < 1e-15);
        assert!((s[1].zero_fraction - 1.0 / 3.0).abs() < 1e-15);
    }
}
