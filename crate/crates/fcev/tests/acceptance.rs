//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fcev::parallel;
use fcev::xcheck::{self, Tolerances, Verdict};
use fcev_core::density::{density_mass, TransitionDensity};
use fcev_core::engine::EngineConfigs;
use fcev_core::impliedvol::{bs_price, is_strictly_decreasing, skew_report};
use fcev_core::kernel::{c_of_t, derive_coeffs, gamma_clock};
use fcev_core::montecarlo::{price_call_mc, McConfig};
use fcev_core::pde::{solve_pde, PdeGrid};
use fcev_core::pricer::{delta, price_series};
use fcev_core::specfun::SpecFunConfig;
use fcev_core::{
    ContractSpec, Engine, EtaMode, KernelConfig, ModelParams, OptionKind, SeriesConfig,
};

// Tolerances, fixed by the acceptance criteria.
const CLOCK_TOL: f64 = 1e-10;
const SERIES_QUAD_REL: f64 = 1e-4;
const SERIES_PDE_REL: f64 = 5e-3;
const MC_SE: f64 = 3.0;
const KERNEL_TOL: f64 = 1e-10;
const KERNEL_LIMIT_TOL: f64 = 1e-2;
const BS_CONTINUITY_REL: f64 = 1e-2;
const ZERO_STRIKE_REL: f64 = 1e-8;
const FLAT_SKEW_TOL: f64 = 1e-6;
const DELTA_ABS: f64 = 1e-3;
// Prices this small are zero for every engine; relative error is undefined.
const ABS_FLOOR: f64 = 1e-8;
// Accuracy of the density mass quadrature, the reference side of the absorption check.
const MASS_QUAD_TOL: f64 = 1e-10;

const BETAS: [f64; 3] = [0.5, 1.0, 1.5];
const STRIKES: [f64; 3] = [80.0, 100.0, 120.0];

fn desk(beta: f64, hurst: f64) -> ModelParams {
    ModelParams {
        sigma: 0.2,
        beta,
        hurst,
        mu: 0.05,
        r: 0.05,
        delta: 0.02,
        x0: 100.0,
    }
}

fn call(strike: f64) -> ContractSpec {
    ContractSpec {
        strike,
        t0: 0.0,
        maturity: 1.0,
        kind: OptionKind::Call,
    }
}

fn tolerances() -> Tolerances {
    Tolerances {
        quadrature_rel: SERIES_QUAD_REL,
        pde_rel: SERIES_PDE_REL,
        mc_se: MC_SE,
        abs_floor: ABS_FLOOR,
    }
}

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fail(detail: impl ToString) -> Outcome {
    outcome(false, detail.to_string())
}

/// Runs the cross-check engines on `contracts` and summarizes the worst deviation per pair.
fn cross_check(
    params: &ModelParams,
    contracts: &[ContractSpec],
    engines: &[Engine],
    cfg: &EngineConfigs,
) -> (bool, String, Vec<String>) {
    let rep = xcheck::run(params, contracts, cfg, &tolerances());
    let mut pass = true;
    let mut worst = Vec::new();
    let mut failures = Vec::new();
    for &e in engines {
        let mut max_score: f64 = 0.0;
        for c in rep.checks.iter().filter(|c| c.engine == e) {
            if c.verdict != Verdict::Pass {
                pass = false;
                failures.push(format!(
                    "beta={} H={} K={} series-{} {} dev {:.3e} score {:.3e} {}",
                    params.beta,
                    params.hurst,
                    c.strike,
                    e.as_str(),
                    c.verdict.as_str(),
                    c.abs_deviation,
                    c.score,
                    c.detail
                ));
            }
            if c.reference.abs() > ABS_FLOOR && c.score.is_finite() {
                max_score = max_score.max(c.score);
            }
        }
        worst.push(format!("{}:{max_score:.2e}", e.as_str()));
    }
    (pass, worst.join(" "), failures)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let kernel = KernelConfig::default();
    let mut cfg = EngineConfigs::default();
    // only the PDE pair is part of this criterion; keep the Monte Carlo cell cheap
    cfg.mc.n_paths = 1;
    cfg.mc.n_steps = 1;
    let mut worst_clock: f64 = 0.0;
    let mut worst_pde: f64 = 0.0;
    let mut failures = Vec::new();
    for beta in BETAS {
        let params = desk(beta, 0.5);
        for k in STRIKES {
            let contract = call(k);
            let coeffs = match derive_coeffs(&params, &contract, &kernel) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let clock = match gamma_clock(&coeffs, 0.5, contract.t0, contract.maturity, &kernel) {
                Ok(g) => g,
                Err(e) => return fail(e),
            };
            let b = coeffs.b;
            let closed = ((-b * contract.t0).exp() - (-b * contract.maturity).exp()) / (2.0 * b);
            let err = (clock - closed).abs();
            worst_clock = worst_clock.max(err);
            if err > CLOCK_TOL {
                failures.push(format!("beta={beta} K={k} clock error {err:.3e}"));
            }
        }
        let contracts: Vec<_> = STRIKES.iter().map(|&k| call(k)).collect();
        let rep = xcheck::run(&params, &contracts, &cfg, &tolerances());
        for c in rep.checks.iter().filter(|c| c.engine == Engine::Pde) {
            if c.reference.abs() > ABS_FLOOR {
                worst_pde = worst_pde.max(c.score);
            }
            if c.verdict != Verdict::Pass {
                failures.push(format!(
                    "beta={beta} K={} series-pde {} dev {:.3e} rel {:.3e} {}",
                    c.strike,
                    c.verdict.as_str(),
                    c.abs_deviation,
                    c.score,
                    c.detail
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(30) {
        failures.push(format!("runtime {elapsed:.1?} exceeds 30 s"));
    }
    outcome(
        failures.is_empty(),
        format!(
            "max clock error {worst_clock:.2e}, max series-pde rel {worst_pde:.2e}, {elapsed:.1?}{}",
            join_failures(&failures)
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let cfg = EngineConfigs {
        mc: McConfig {
            n_paths: 100_000,
            n_steps: 500,
            ..McConfig::default()
        },
        ..EngineConfigs::default()
    };
    let contracts: Vec<_> = STRIKES.iter().map(|&k| call(k)).collect();
    let mut pass = true;
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for hurst in [0.6, 0.75, 0.9] {
        for beta in BETAS {
            let (ok, worst, f) = cross_check(
                &desk(beta, hurst),
                &contracts,
                &[Engine::Quadrature, Engine::Pde, Engine::Mc],
                &cfg,
            );
            pass &= ok;
            failures.extend(f);
            lines.push(format!("H={hurst} beta={beta} [{worst}]"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(300) {
        pass = false;
        failures.push(format!("runtime {elapsed:.1?} exceeds 5 min"));
    }
    for l in &lines {
        println!("    {l}");
    }
    outcome(
        pass,
        format!(
            "27 contracts x 3 pairs, worst scores listed above, {elapsed:.1?}{}",
            join_failures(&failures)
        ),
    )
}

fn criterion_3() -> Outcome {
    let kernel = KernelConfig::default();
    let times: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
    let mut worst: f64 = 0.0;
    let mut worst_limit: f64 = 0.0;
    for hurst in [0.55, 0.7, 0.9] {
        for t in times {
            let want = hurst * t.powf(2.0 * hurst - 1.0);
            match c_of_t(hurst, 0.0, t, &kernel) {
                Ok(v) => worst = worst.max((v - want).abs()),
                Err(e) => return fail(e),
            }
        }
    }
    for eta in [-0.1, 0.0, 0.1] {
        for t in times {
            match c_of_t(0.5 + 1e-4, eta, t, &kernel) {
                Ok(v) => worst_limit = worst_limit.max((v - 0.5).abs()),
                Err(e) => return fail(e),
            }
        }
    }
    outcome(
        worst <= KERNEL_TOL && worst_limit <= KERNEL_LIMIT_TOL,
        format!("max |C - H t^(2H-1)| {worst:.2e}, max |C - 1/2| near H=1/2 {worst_limit:.2e}"),
    )
}

fn criterion_4() -> Outcome {
    let kernel = KernelConfig::default();
    let series = SeriesConfig::default();
    let beta = 1.99;
    let mut rels = Vec::new();
    // In units where the spot is 1 the CEV local volatility at the spot is sigma.
    // At other spot levels the matching Black-Scholes volatility is sigma X0^(beta/2 - 1).
    for x0 in [1.0, 100.0] {
        let params = ModelParams {
            x0,
            beta,
            ..desk(beta, 0.5)
        };
        let contract = call(x0);
        let price = match price_series(&params, &contract, &kernel, &series) {
            Ok(r) => r.price,
            Err(e) => return fail(e),
        };
        let vol = params.sigma * x0.powf(beta / 2.0 - 1.0);
        let bs = bs_price(x0, x0, params.r, params.delta, vol, 1.0, OptionKind::Call);
        let unmatched = bs_price(
            x0,
            x0,
            params.r,
            params.delta,
            params.sigma,
            1.0,
            OptionKind::Call,
        );
        rels.push((
            x0,
            ((price - bs) / bs).abs(),
            ((price - unmatched) / unmatched).abs(),
        ));
    }
    let pass = rels.iter().all(|r| r.1 <= BS_CONTINUITY_REL);
    let detail = rels
        .iter()
        .map(|(x0, rel, raw)| {
            format!("X0={x0}: rel {rel:.2e} at local vol (rel {raw:.2e} at raw sigma)")
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, detail)
}

fn criterion_5() -> Outcome {
    let cfg = EngineConfigs::default();
    let mut failures = Vec::new();
    let mut worst = [0.0f64; 4];
    for beta in BETAS {
        let params = desk(beta, 0.75);
        let contract = call(0.0);
        let want = (-params.delta * contract.tau()).exp() * params.x0;
        for (slot, engine) in [Engine::Series, Engine::Quadrature, Engine::Pde, Engine::Mc]
            .into_iter()
            .enumerate()
        {
            let res = match parallel::price(engine, &params, &contract, &cfg) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("beta={beta} {}: {e}", engine.as_str()));
                    continue;
                }
            };
            let dev = (res.price - want).abs();
            let (score, ok) = match engine {
                Engine::Mc => (dev / res.error_estimate, dev <= MC_SE * res.error_estimate),
                Engine::Pde => (dev / want, dev <= SERIES_PDE_REL * want),
                _ => (dev / want, dev <= ZERO_STRIKE_REL * want),
            };
            worst[slot] = worst[slot].max(score);
            if !ok {
                failures.push(format!(
                    "beta={beta} {} price {} want {want} score {score:.3e}",
                    engine.as_str(),
                    res.price
                ));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "worst rel series {:.2e} quadrature {:.2e} pde {:.2e}, mc {:.2} SE{}",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            join_failures(&failures)
        ),
    )
}

fn criterion_6() -> Outcome {
    let kernel = KernelConfig::default();
    let sf = SpecFunConfig::default();
    let mc = McConfig {
        n_paths: 100_000,
        n_steps: 500,
        ..McConfig::default()
    };
    let stressed = |beta: f64, hurst: f64| ModelParams {
        sigma: 1.0,
        x0: 1.0,
        ..desk(beta, hurst)
    };
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for (label, x0) in [("desk", 100.0), ("stressed", 1.0)] {
        for beta in [0.5, 1.0] {
            for hurst in [0.5, 0.75] {
                let params = if label == "desk" {
                    desk(beta, hurst)
                } else {
                    stressed(beta, hurst)
                };
                let contract = call(x0);
                let check = || -> fcev_core::Result<(f64, f64, f64, f64)> {
                    let coeffs = derive_coeffs(&params, &contract, &kernel)?;
                    let dens = TransitionDensity::new(
                        &coeffs,
                        hurst,
                        contract.t0,
                        contract.maturity,
                        &kernel,
                    )?;
                    let mass = density_mass(&dens, MASS_QUAD_TOL)?;
                    let absorbed = dens.absorbed_mass(&sf)?;
                    let res = parallel::price_mc(&params, &contract, &mc, &kernel)?;
                    let freq = match res.meta {
                        fcev_core::PriceMeta::Paths {
                            absorbed_fraction, ..
                        } => absorbed_fraction,
                        _ => f64::NAN,
                    };
                    Ok((mass, absorbed, freq, res.price))
                };
                match check() {
                    Err(e) => failures.push(format!("{label} beta={beta} H={hurst}: {e}")),
                    Ok((mass, absorbed, freq, _)) => {
                        let p = 1.0 - mass;
                        let n = mc.n_paths as f64;
                        // binomial standard error under the model probability
                        let se = (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / n).sqrt();
                        let z = if se > 0.0 { (freq - p).abs() / se } else { 0.0 };
                        let in_range = mass > 0.0 && mass <= 1.0 + MASS_QUAD_TOL;
                        let ok = in_range && (freq - p).abs() <= MC_SE * se + MASS_QUAD_TOL;
                        lines.push(format!(
                            "{label} beta={beta} H={hurst}: mass {mass:.10} 1-mass {p:.5e} G {absorbed:.5e} mc {freq:.5e} z {z:.2}"
                        ));
                        if !ok {
                            failures.push(format!(
                                "{label} beta={beta} H={hurst} z {z:.2} mass {mass}"
                            ));
                        }
                    }
                }
            }
        }
    }
    for l in &lines {
        println!("    {l}");
    }
    outcome(
        failures.is_empty(),
        format!("8 cases, details above{}", join_failures(&failures)),
    )
}

fn criterion_7() -> Outcome {
    // h = 1 means eta = 0, where the driver is fractional Brownian motion itself
    let kernel = KernelConfig {
        eta_mode: EtaMode::ExplicitValue(0.0),
        ..KernelConfig::default()
    };
    let mc = McConfig {
        n_paths: 10_000,
        ..McConfig::default()
    };
    let times = [0.2, 0.4, 0.6, 0.8, 1.0];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for hurst in [0.5, 0.6, 0.8] {
        let params = desk(1.0, hurst);
        let set = match parallel::gaussian_paths(&params, &times, &mc, &kernel, false) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        let n = set.n_paths();
        let means: Vec<f64> = (0..times.len())
            .map(|k| (0..n).map(|i| set.path(i)[k]).sum::<f64>() / n as f64)
            .collect();
        for i in 0..times.len() {
            for j in i..times.len() {
                let (s, t) = (times[i], times[j]);
                let h2 = 2.0 * hurst;
                let want = 0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2));
                let prods: Vec<f64> = (0..n)
                    .map(|p| (set.path(p)[i] - means[i]) * (set.path(p)[j] - means[j]))
                    .collect();
                let cov = prods.iter().sum::<f64>() / (n - 1) as f64;
                let m = prods.iter().sum::<f64>() / n as f64;
                let var = prods.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                let z = (cov - want).abs() / se;
                worst = worst.max(z);
                if z > MC_SE {
                    failures.push(format!(
                        "H={hurst} s={s} t={t} cov {cov:.5} want {want:.5} z {z:.2}"
                    ));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "45 covariance cells, worst {worst:.2} SE{}",
            join_failures(&failures)
        ),
    )
}

fn criterion_8() -> Outcome {
    let cfg = EngineConfigs::default();
    let strikes: Vec<f64> = (0..9).map(|i| 80.0 + 5.0 * i as f64).collect();
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for hurst in [0.5, 0.75] {
        // sigma X^(beta/2) with beta = 1 at X0 = 100 is a 2 sigma / 10 local vol
        let params = ModelParams {
            sigma: 2.0,
            ..desk(1.0, hurst)
        };
        let rows = skew_report(&params, &strikes, 0.0, 1.0, Engine::Series, &cfg);
        let vols: Vec<String> = rows
            .iter()
            .map(|r| r.implied_vol.map_or("-".into(), |v| format!("{v:.5}")))
            .collect();
        details.push(format!("H={hurst} [{}]", vols.join(" ")));
        if !is_strictly_decreasing(&rows) {
            failures.push(format!("H={hurst} not strictly decreasing"));
        }
    }
    let params = desk(2.0, 0.75);
    let rows = skew_report(&params, &strikes, 0.0, 1.0, Engine::Series, &cfg);
    let vols: Option<Vec<f64>> = rows.iter().map(|r| r.implied_vol).collect();
    match vols {
        None => failures.push("beta=2 branch: a strike did not invert".into()),
        Some(v) => {
            let spread = v.iter().cloned().fold(f64::MIN, f64::max)
                - v.iter().cloned().fold(f64::MAX, f64::min);
            details.push(format!("beta=2 spread {spread:.2e}"));
            if spread > FLAT_SKEW_TOL {
                failures.push(format!("beta=2 spread {spread:.2e}"));
            }
        }
    }
    for d in &details {
        println!("    {d}");
    }
    outcome(
        failures.is_empty(),
        format!("beta=1 decreasing, beta=2 flat{}", join_failures(&failures)),
    )
}

fn criterion_9() -> Outcome {
    let kernel = KernelConfig::default();
    let series = SeriesConfig::default();
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for hurst in [0.5, 0.75] {
        let params = desk(1.0, hurst);
        let contract = call(100.0);
        let bumped = match delta(&params, &contract, &kernel, &series, 1e-4) {
            Ok(d) => d,
            Err(e) => return fail(e),
        };
        let grid = match solve_pde(&params, &contract, &PdeGrid::default(), &kernel, false)
            .and_then(|s| s.delta_at(params.x0))
        {
            Ok(d) => d,
            Err(e) => return fail(e),
        };
        worst = worst.max((bumped - grid).abs());
        details.push(format!("H={hurst}: bump {bumped:.6} grid {grid:.6}"));
    }
    outcome(
        worst <= DELTA_ABS,
        format!("{}, max diff {worst:.2e}", details.join(", ")),
    )
}

fn criterion_10() -> Outcome {
    let kernel = KernelConfig::default();
    let params = desk(1.0, 0.75);
    let contract = call(100.0);
    let mc = McConfig {
        n_paths: 20_000,
        n_steps: 100,
        ..McConfig::default()
    };
    let a = parallel::price_mc(&params, &contract, &mc, &kernel);
    let b = parallel::price_mc(&params, &contract, &mc, &kernel);
    let serial = price_call_mc(&params, &contract, &mc, &kernel);
    let prices_equal = match (a, b, serial) {
        (Ok(a), Ok(b), Ok(s)) => {
            a.price.to_bits() == b.price.to_bits()
                && a.price.to_bits() == s.price.to_bits()
                && a.error_estimate.to_bits() == s.error_estimate.to_bits()
        }
        _ => false,
    };

    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let config = dir.path().join("paths.json");
    let body = r#"{
        "schema_version": 1,
        "model": {"sigma": 0.2, "beta": 1.0, "hurst": 0.75, "mu": 0.05,
                  "r": 0.05, "delta": 0.02, "x0": 100.0},
        "contracts": [{"strike": 100.0, "maturity": 1.0}],
        "engines": {"mc": {"n_paths": 200, "n_steps": 50}}
    }"#;
    if let Err(e) = std::fs::write(&config, body) {
        return fail(e);
    }
    // identical invocations, including the output path embedded in JSON reports
    let run = |ext: &str| -> Option<Vec<u8>> {
        let out = dir.path().join(format!("out.{ext}"));
        let output = Command::new(env!("CARGO_BIN_EXE_fcev"))
            .args(["paths", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "11", "--format", ext])
            .output()
            .ok()?;
        if !output.status.success() {
            return None;
        }
        std::fs::read(&out).ok()
    };
    let files_equal = match (run("csv"), run("csv")) {
        (Some(a), Some(b)) => !a.is_empty() && a == b,
        _ => false,
    };
    let json_equal = match (run("json"), run("json")) {
        (Some(a), Some(b)) => !a.is_empty() && a == b,
        _ => false,
    };
    outcome(
        prices_equal && files_equal && json_equal,
        format!(
            "mc prices bit-identical (parallel, repeated, serial): {prices_equal}; path CSV identical: {files_equal}; path JSON identical: {json_equal}"
        ),
    )
}

fn join_failures(failures: &[String]) -> String {
    if failures.is_empty() {
        String::new()
    } else {
        format!("; failures: {}", failures.join(" | "))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("classical reduction", criterion_1),
        ("fractional cross-engine consistency", criterion_2),
        ("kernel limits", criterion_3),
        ("continuity as beta -> 2", criterion_4),
        ("zero-strike identity", criterion_5),
        ("density mass and absorption", criterion_6),
        ("driver covariance", criterion_7),
        ("implied volatility skew", criterion_8),
        ("hedge ratio", criterion_9),
        ("determinism", criterion_10),
    ];
    println!("\nrunning {} acceptance criteria", criteria.len());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({}) [{:.1?}]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail,
            start.elapsed()
        );
    }
    println!(
        "\nacceptance result: {} passed; {failed} failed\n",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
