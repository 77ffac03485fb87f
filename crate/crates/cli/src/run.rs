//! One runner per subcommand. Every runner is a pure function of the config,
//! so the same config always yields byte-identical output.

use serde::Serialize;
use serde_json::json;

use qmem::bounds::{build_ledger, feasibility_search, BoundsError};
use qmem::clock::{sample_at_times, verify_clock, ClockParams, ClockSampler};
use qmem::code::{b_exact, b_monte_carlo, block_from_index, DecoderTable, BLOCK_PAULIS};
use qmem::memory::{
    lifetime_curve, simulate_circuit_model, simulate_clock_controlled, simulate_unprotected,
    ClockMode, LogicalChannelEstimate, ProtocolParams, Strategy,
};
use qmem::oracle::{compare_to_oracle, mc_channel_tomography};
use qmem::pauli::StreamRng;
use qmem::stats::z_for_confidence;

use crate::config::{
    BpCurveConfig, ClockVerifyConfig, Experiment, ExperimentConfig, Format, LedgerConfig,
    LifetimeScanConfig, MemorySimConfig, OracleCheckConfig, ProtocolConfig, StrategyName,
};
use crate::plot::columns;
use crate::CliError;

/// Rendered results of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub body: String,
    /// One line for standard output.
    pub summary: String,
    pub plot: Option<String>,
    pub exit_code: u8,
}

fn render<R: Serialize>(format: Format, rows: &[R], summary: &impl Serialize) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| CliError::Runtime(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Json => Ok(pretty(&json!({ "summary": summary, "rows": rows }))),
    }
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("results serialize");
    s.push('\n');
    s
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    let seed = config.master_seed;
    let f = config.format;
    match &config.experiment {
        Experiment::ClockVerify(c) => clock_verify(c, seed, f),
        Experiment::DecodeTable(_) => decode_table(f),
        Experiment::BpCurve(c) => bp_curve(c, seed, f),
        Experiment::MemorySim(c) => memory_sim(c, seed, f),
        Experiment::LifetimeScan(c) => lifetime_scan(c, seed, f),
        Experiment::Ledger(c) => ledger(c, f),
        Experiment::OracleCheck(c) => oracle_check(c, seed, f),
    }
}

#[derive(Serialize)]
struct ClockRow {
    trial: u64,
    good: bool,
    max_time_error: f64,
    exit_type: &'static str,
}

/// Trajectories averaged for the clock-verify plot.
const PLOT_TRAJECTORIES: u64 = 100;
const PLOT_POINTS: usize = 100;

fn clock_verify(c: &ClockVerifyConfig, seed: u64, format: Format) -> Result<RunOutput, CliError> {
    let params = ClockParams::new(c.k_bits, c.epsilon, c.t_max, c.rate)?;
    let sampler = match c.spacing {
        Some(spacing) => ClockSampler::Checkpointed { spacing },
        None => ClockSampler::auto(&params),
    };
    let run = verify_clock(&params, c.trials, seed, sampler)?;
    let rows: Vec<ClockRow> = run
        .rows
        .iter()
        .map(|r| ClockRow {
            trial: r.trial,
            good: r.good,
            max_time_error: r.max_time_error,
            exit_type: r.exit_type.map_or("none", |k| k.as_str()),
        })
        .collect();
    let s = &run.summary;
    let body = match format {
        Format::Csv => render(format, &rows, &())?,
        Format::Json => render(format, &rows, s)?,
    };
    let summary = format!(
        "clock-verify: good fraction {} over {} trials, bound {}{}, max time error {:.4e} vs delta/2 {:.4e} ({}) | {}",
        s.good_fraction,
        s.trials,
        s.bound,
        if s.bound_vacuous { " (bound vacuous)" } else { "" },
        s.max_observed_error,
        s.delta_half,
        if s.accuracy_holds { "holds" } else { "violated" },
        serde_json::to_string(s).expect("summary serializes"),
    );

    // Mean polarization against the K^{1/2+ε} band.
    let k = c.k_bits as f64;
    let width = k.powf(0.5 + c.epsilon);
    let times: Vec<f64> = (0..=PLOT_POINTS).map(|i| c.t_max * i as f64 / PLOT_POINTS as f64).collect();
    let n = PLOT_TRAJECTORIES.min(c.trials);
    let mut sums = vec![0.0; times.len()];
    for i in 0..n {
        let mut rng = StreamRng::new(seed, i).lane(7);
        let traj = sample_at_times(&params, &times[1..], &mut rng)?;
        for (s, &t) in sums.iter_mut().zip(&times) {
            *s += traj.k_at(t) as f64;
        }
    }
    let plot_rows: Vec<Vec<f64>> = times
        .iter()
        .zip(&sums)
        .map(|(&t, s)| {
            let mean = k * (-c.rate * t).exp();
            vec![t, s / n as f64, mean - width, mean + width]
        })
        .collect();
    let plot = columns(
        "clock polarization: sample mean and good-trajectory band",
        &[("t", "time, 1/r"), ("k_mean", "bits"), ("band_lo", "bits"), ("band_hi", "bits")],
        &plot_rows,
    );
    Ok(RunOutput {
        body,
        summary,
        plot: Some(plot),
        exit_code: 0,
    })
}

#[derive(Serialize)]
struct DecodeRow {
    error: String,
    syndrome: String,
    residual: String,
}

fn decode_table(format: Format) -> Result<RunOutput, CliError> {
    let table = DecoderTable::perfect();
    let rows: Vec<DecodeRow> = (0..BLOCK_PAULIS)
        .map(|i| DecodeRow {
            error: block_from_index(i).to_string(),
            syndrome: table.syndrome_of_index(i).to_string(),
            residual: table.residual_of_index(i).to_string(),
        })
        .collect();
    let failures = rows.iter().filter(|r| r.residual != "I").count();
    let summary = json!({ "entries": rows.len(), "logical_failures": failures });
    Ok(RunOutput {
        body: render(format, &rows, &summary)?,
        summary: format!("decode-table: {} entries, {failures} with a logical residual", rows.len()),
        plot: None,
        exit_code: 0,
    })
}

#[derive(Serialize)]
struct BpRow {
    p: f64,
    b_exact: f64,
    b_mc: f64,
    ci_lo: f64,
    ci_hi: f64,
}

fn bp_curve(c: &BpCurveConfig, seed: u64, format: Format) -> Result<RunOutput, CliError> {
    let z = z_for_confidence(0.95);
    let mut rows = Vec::with_capacity(c.p.len());
    for (i, &p) in c.p.iter().enumerate() {
        let mc = b_monte_carlo(p, c.trials, seed.wrapping_add(i as u64))?;
        let (ci_lo, ci_hi) = mc.wilson_interval(z);
        rows.push(BpRow {
            p,
            b_exact: b_exact(p)?,
            b_mc: mc.p_hat(),
            ci_lo,
            ci_hi,
        });
    }
    let covered = rows.iter().filter(|r| r.ci_lo <= r.b_exact && r.b_exact <= r.ci_hi).count();
    let summary = json!({ "points": rows.len(), "trials": c.trials, "covered_95": covered });
    let plot_rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.p, r.b_exact, 10.0 * r.p * r.p]).collect();
    Ok(RunOutput {
        body: render(format, &rows, &summary)?,
        summary: format!("bp-curve: {} points, 95% interval covers the exact value at {covered}", rows.len()),
        plot: Some(columns(
            "logical failure of one decoded block",
            &[("p", "probability"), ("b_exact", "probability"), ("10p^2", "probability")],
            &plot_rows,
        )),
        exit_code: 0,
    })
}

fn protocol(p: &ProtocolConfig, levels: u32, clocked: bool) -> Result<ProtocolParams, CliError> {
    let mut params = ProtocolParams::from_multipliers(p.rate, p.p_star, p.c_prot, p.c_dec, p.c_delta, levels)?;
    params.epsilon = p.epsilon;
    if clocked {
        params = match p.k_bits {
            Some(k) => ProtocolParams { clock_bits: k, ..params },
            None => params.with_sized_clock()?,
        };
    }
    params.validate()?;
    Ok(params)
}

#[derive(Serialize)]
struct MemoryRow {
    strategy: StrategyName,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "K")]
    k: u64,
    t: f64,
    trials: u64,
    #[serde(rename = "p_I")]
    p_i: f64,
    #[serde(rename = "p_X")]
    p_x: f64,
    #[serde(rename = "p_Y")]
    p_y: f64,
    #[serde(rename = "p_Z")]
    p_z: f64,
    fid: f64,
    ci: f64,
    decode_failures: u64,
    bad_trajectories: u64,
}

impl MemoryRow {
    fn new(strategy: StrategyName, n: usize, k: u64, t: f64, e: &LogicalChannelEstimate) -> Self {
        let [p_i, p_x, p_y, p_z] = e.rates();
        Self {
            strategy,
            n,
            k,
            t,
            trials: e.trials,
            p_i,
            p_x,
            p_y,
            p_z,
            fid: e.avg_fidelity(),
            ci: e.fidelity_ci(),
            decode_failures: e.decode_failures,
            bad_trajectories: e.bad_trajectories,
        }
    }
}

fn memory_sim(c: &MemorySimConfig, seed: u64, format: Format) -> Result<RunOutput, CliError> {
    let clocked = matches!(c.strategy, StrategyName::Clock | StrategyName::ClockDeterministic);
    let mut extra = json!({});
    let row = match c.strategy {
        StrategyName::Unprotected => {
            let e = simulate_unprotected(c.t_max, c.n_qubits, c.protocol.rate, c.trials, seed)?;
            MemoryRow::new(c.strategy, c.n_qubits, 0, c.t_max, &e)
        }
        StrategyName::Circuit => {
            let p = protocol(&c.protocol, c.levels, false)?;
            let run = simulate_circuit_model(&p, c.trials, seed)?;
            extra = json!({
                "round_error": run.rounds.iter().map(|e| e.error_rate()).collect::<Vec<_>>(),
                "retrieval_error": run.retrieval.iter().map(|e| e.error_rate()).collect::<Vec<_>>(),
            });
            let t = f64::from(p.levels) * p.t_prot;
            MemoryRow::new(c.strategy, p.physical_qubits(), 0, t, &run.logical)
        }
        StrategyName::Clock | StrategyName::ClockDeterministic => {
            let p = protocol(&c.protocol, c.levels, clocked)?;
            let mode = if c.strategy == StrategyName::Clock {
                ClockMode::Stochastic
            } else {
                ClockMode::Deterministic
            };
            let run = simulate_clock_controlled(&p, mode, c.trials, seed)?;
            let (p_evol, p_dec) = p.budget();
            extra = json!({
                "ordering_violations": run.ordering_violations,
                "max_kick_probability": run.max_kick_probability,
                "mean_active_time": run.mean_active_time(),
                "t_dec": p.t_dec,
                "p_evol": p_evol,
                "p_dec": p_dec,
            });
            MemoryRow::new(c.strategy, p.physical_qubits(), p.clock_bits, p.t_max, &run.logical)
        }
    };
    let above = c.fidelity_floor.map(|f| row.fid >= f);
    let summary_line = format!(
        "memory-sim: {:?} N={} t={:.6} fid {:.6} +- {:.2e}{}",
        c.strategy,
        row.n,
        row.t,
        row.fid,
        row.ci,
        match (c.fidelity_floor, above) {
            (Some(f), Some(true)) => format!(", above floor {f}"),
            (Some(f), _) => format!(", BELOW floor {f}"),
            _ => String::new(),
        }
    );
    let summary = json!({ "above_floor": above, "details": extra });
    Ok(RunOutput {
        body: render(format, &[row], &summary)?,
        summary: summary_line,
        plot: None,
        exit_code: 0,
    })
}

#[derive(Serialize)]
struct LifetimeRow {
    #[serde(rename = "N")]
    n: usize,
    levels: u32,
    lifetime: f64,
    fit_slope: Option<f64>,
}

fn lifetime_scan(c: &LifetimeScanConfig, seed: u64, format: Format) -> Result<RunOutput, CliError> {
    let strategy = match c.strategy {
        StrategyName::Unprotected => Strategy::Unprotected { n_qubits: 1 },
        StrategyName::Circuit => Strategy::Circuit,
        StrategyName::Clock => Strategy::ClockControlled { mode: ClockMode::Stochastic },
        StrategyName::ClockDeterministic => Strategy::ClockControlled { mode: ClockMode::Deterministic },
    };
    let base_levels = c.levels.iter().copied().max().unwrap_or(1);
    let clocked = matches!(strategy, Strategy::ClockControlled { .. });
    let base = protocol(&c.protocol, base_levels, clocked)?;
    let curve = lifetime_curve(strategy, &base, &c.levels, c.fidelity_floor, c.trials, seed)?;
    let rows: Vec<LifetimeRow> = curve
        .points
        .iter()
        .map(|p| LifetimeRow {
            n: p.n_qubits,
            levels: p.levels,
            lifetime: p.lifetime,
            fit_slope: curve.slope_ln_n,
        })
        .collect();
    let summary = json!({
        "fidelity_floor": c.fidelity_floor,
        "slope_ln_n": curve.slope_ln_n,
        "slope_levels": curve.slope_levels,
    });
    let plot_rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![(r.n as f64).ln(), r.lifetime]).collect();
    Ok(RunOutput {
        body: render(format, &rows, &summary)?,
        summary: format!(
            "lifetime-scan: {:?} at floor {}, lifetimes {:?}, slope vs ln N {:?}",
            c.strategy,
            c.fidelity_floor,
            rows.iter().map(|r| r.lifetime).collect::<Vec<_>>(),
            curve.slope_ln_n
        ),
        plot: Some(columns(
            "storage lifetime against register size",
            &[("ln N", "nats"), ("lifetime", "time, 1/r")],
            &plot_rows,
        )),
        exit_code: 0,
    })
}

#[derive(Serialize)]
struct LedgerRow {
    step: usize,
    p_exact: f64,
    p_quadratic: f64,
    p_star: f64,
}

fn ledger(c: &LedgerConfig, format: Format) -> Result<RunOutput, CliError> {
    let report = build_ledger(c.rate, c.p_star, c.d, c.tau)?;
    let search = if c.search {
        match feasibility_search(c.rate, c.d, &c.ranges) {
            Ok(set) => Some(set),
            Err(BoundsError::Infeasible) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let holds = report.holds();
    let exit_code = if holds || search.is_some() { 0 } else { 2 };
    let rows: Vec<LedgerRow> = report
        .recursion_exact
        .iter()
        .zip(&report.recursion_quadratic)
        .enumerate()
        .map(|(step, (&p_exact, &p_quadratic))| LedgerRow {
            step,
            p_exact,
            p_quadratic,
            p_star: report.p_star,
        })
        .collect();
    let body = match format {
        Format::Json => pretty(&json!({
            "verdict": if holds { "HOLDS" } else { "FAILS" },
            "report": report,
            "search": search,
        })),
        Format::Csv => render(format, &rows, &())?,
    };
    let mut summary = format!(
        "ledger: verdict {} (first violation at step {:?}), K = {:.3e}, {} levels",
        if holds { "HOLDS" } else { "FAILS" },
        report.first_violation,
        report.clock_bits,
        report.levels
    );
    if c.search {
        match &search {
            Some(s) => summary.push_str(&format!(
                "; feasible: p* = {}, c_prot = {}, c_dec = {}, c_delta = {:.4e}, margin {:.3}",
                s.p_star, s.multipliers.c_prot, s.multipliers.c_dec, s.multipliers.c_delta, s.margin
            )),
            None => summary.push_str("; no feasible set in the searched range"),
        }
    }
    let plot_rows: Vec<Vec<f64>> =
        rows.iter().map(|r| vec![r.step as f64, r.p_exact, r.p_quadratic, r.p_star]).collect();
    Ok(RunOutput {
        body,
        summary,
        plot: Some(columns(
            "per-round error recursion",
            &[("step", "rounds"), ("p_exact", "probability"), ("p_quadratic", "probability"), ("p_star", "probability")],
            &plot_rows,
        )),
        exit_code,
    })
}

#[derive(Serialize)]
struct OracleRow {
    n_qubits: usize,
    t: f64,
    trials: u64,
    distance: f64,
    pass: bool,
}

fn oracle_check(c: &OracleCheckConfig, seed: u64, format: Format) -> Result<RunOutput, CliError> {
    let mut rows = Vec::new();
    for &n in &c.qubits {
        for &t in &c.times {
            let case_seed = seed.wrapping_add(rows.len() as u64);
            let ch = mc_channel_tomography::<f64>(n, c.rate, t, c.trials, case_seed, c.tolerance)?;
            let d = compare_to_oracle(&ch, c.rate, t, c.dt)?.distance;
            rows.push(OracleRow {
                n_qubits: n,
                t,
                trials: c.trials,
                distance: d,
                pass: d <= c.tolerance,
            });
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    let worst = rows.iter().map(|r| r.distance).fold(0.0, f64::max);
    let body = match format {
        Format::Json => pretty(&json!({ "pass": pass, "tolerance": c.tolerance, "max_distance": worst, "cases": rows })),
        Format::Csv => render(format, &rows, &())?,
    };
    Ok(RunOutput {
        body,
        summary: format!(
            "oracle-check: {} ({} cases, max distance {worst:.3e}, tolerance {:.1e})",
            if pass { "PASS" } else { "FAIL" },
            rows.len(),
            c.tolerance
        ),
        plot: None,
        exit_code: 0,
    })
}
