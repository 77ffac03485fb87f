//! Storage lifetime: the longest time for which the average fidelity of the
//! retrieved qubit stays at or above a floor.
//!
//! Protected strategies are evaluated at round boundaries. After the code
//! rounds the surviving physical qubit idles for further rounds of length
//! `t_prot`. Retrieval at a boundary decodes all remaining levels without
//! further noise. Every boundary of a trial is computed in one pass, so all
//! points of a scan share their random numbers.

use serde::{Deserialize, Serialize};

use super::clocked::{gated_decode, ClockMode, ClockPass};
use super::strategies::{merge_vec, simulate_unprotected_grid};
use super::{LogicalChannelEstimate, MemoryError, ProtocolParams};
use crate::code::DecoderTable;
use crate::pauli::{depolarize_marginal, par_trials, uniform_error, NoiseParams, Pauli};
use crate::stats::linear_fit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Strategy {
    /// Product encoding on `n_qubits`; qubit 0 is read out.
    Unprotected { n_qubits: usize },
    /// Instantaneous decoding of one level every `t_prot`.
    Circuit,
    /// Decoding gated by the clock, one level every `t_prot + t_dec`.
    ClockControlled { mode: ClockMode },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeResult {
    pub floor: f64,
    pub lifetime: f64,
    /// `(t, average fidelity)` at every evaluated time.
    pub points: Vec<(f64, f64)>,
    pub estimates: Vec<LogicalChannelEstimate>,
}

impl LifetimeResult {
    fn from_points(floor: f64, times: Vec<f64>, estimates: Vec<LogicalChannelEstimate>) -> Result<Self, MemoryError> {
        let points: Vec<(f64, f64)> = times.iter().copied().zip(estimates.iter().map(|e| e.avg_fidelity())).collect();
        if points.first().is_none_or(|p| p.1 < floor) {
            return Err(MemoryError::FloorUnreachable(floor));
        }
        let last_ok = points.iter().take_while(|p| p.1 >= floor).count() - 1;
        Ok(Self {
            floor,
            lifetime: points[last_ok].0,
            points,
            estimates,
        })
    }
}

fn check_floor(floor: f64) -> Result<(), MemoryError> {
    // The fidelity never drops below 1/2, so only floors above it can be crossed.
    if floor > 0.5 && floor < 1.0 {
        Ok(())
    } else {
        Err(MemoryError::InvalidFloor(floor))
    }
}

/// Time for a bare qubit to fall to `floor`.
fn bare_crossing(floor: f64, rate: f64) -> f64 {
    -(2.0 * floor - 1.0).ln() / rate
}

/// Grid step of the unprotected scan, in units of `1/r`.
pub const UNPROTECTED_GRID_STEP: f64 = 0.01;

/// Lifetime of `strategy` at `floor`. `params` fixes the rate (and, for the
/// protected strategies, the code and clock).
pub fn lifetime_scan(
    strategy: Strategy,
    params: &ProtocolParams,
    floor: f64,
    trials: u64,
    master_seed: u64,
) -> Result<LifetimeResult, MemoryError> {
    check_floor(floor)?;
    let rate = params.rate;
    if !(rate > 0.0) {
        return Err(MemoryError::InvalidParam { name: "rate", value: rate });
    }
    match strategy {
        Strategy::Unprotected { n_qubits } => {
            let step = UNPROTECTED_GRID_STEP / rate;
            let points = (2.0 * bare_crossing(floor, rate) / step).ceil() as usize + 2;
            let times: Vec<f64> = (0..=points).map(|i| i as f64 * step).collect();
            let est = simulate_unprotected_grid(&times, n_qubits, rate, trials, master_seed)?;
            LifetimeResult::from_points(floor, times, est)
        }
        Strategy::Circuit | Strategy::ClockControlled { .. } => {
            let idle = (2.0 * bare_crossing(floor, rate) / params.t_prot).ceil() as u32 + 2;
            let (times, est) = protected_boundaries(strategy, params, idle, trials, master_seed)?;
            LifetimeResult::from_points(floor, times, est)
        }
    }
}

/// Retrieval estimates at boundary 0, each code round and `idle` further
/// rounds of a bare qubit. Boundary times are nominal.
fn protected_boundaries(
    strategy: Strategy,
    params: &ProtocolParams,
    idle: u32,
    trials: u64,
    master_seed: u64,
) -> Result<(Vec<f64>, Vec<LogicalChannelEstimate>), MemoryError> {
    params.validate()?;
    let noise = NoiseParams::new(params.rate)?;
    let table = DecoderTable::perfect();
    let levels = params.levels as usize;
    let pass = match strategy {
        Strategy::ClockControlled { mode } => Some(ClockPass::new(params, mode)?),
        _ => None,
    };
    let round = match strategy {
        Strategy::ClockControlled { .. } => params.t_prot + params.t_dec,
        _ => params.t_prot,
    };
    let mut times: Vec<f64> = (0..=levels).map(|j| j as f64 * round).collect();
    let code_end = *times.last().expect("non-empty");
    times.extend((1..=idle).map(|m| code_end + f64::from(m) * params.t_prot));

    let est = par_trials(
        master_seed,
        trials,
        |stream| {
            let mut rng = stream.rng();
            let mut out = Vec::with_capacity(times.len());
            out.push(LogicalChannelEstimate::single(Pauli::I));
            let mut frame = vec![Pauli::I; params.physical_qubits()];
            let mut lost: Option<Pauli> = None;
            match &pass {
                None => {
                    for _ in 0..levels {
                        depolarize_marginal(&mut frame, params.t_prot, &noise, &mut rng);
                        frame = table.decode_level(&frame);
                        out.push(LogicalChannelEstimate::single(retrieve(table, &frame)));
                    }
                    debug_assert_eq!(out.len(), levels + 1, "round {levels}");
                }
                Some(pass) => {
                    let (timings, _) = pass.run(&stream);
                    let mut prev = 0.0;
                    for timing in &timings {
                        prev = gated_decode(params, &noise, table, &mut frame, timing, prev, &mut rng);
                        if lost.is_none() && timing.failed(params.t_dec, params.delta) {
                            lost = Some(uniform_error(&mut rng));
                        }
                        let r = lost.unwrap_or_else(|| retrieve(table, &frame));
                        out.push(LogicalChannelEstimate::single(r));
                    }
                }
            }
            let mut qubit = lost.unwrap_or(frame[0]);
            for _ in 0..idle {
                let mut one = [qubit];
                depolarize_marginal(&mut one, params.t_prot, &noise, &mut rng);
                qubit = one[0];
                out.push(LogicalChannelEstimate::single(qubit));
            }
            out
        },
        merge_vec,
    );
    let est = if trials == 0 { vec![LogicalChannelEstimate::default(); times.len()] } else { est };
    Ok((times, est))
}

fn retrieve(table: &DecoderTable, frame: &[Pauli]) -> Pauli {
    let mut rest = frame.to_vec();
    while rest.len() > 1 {
        rest = table.decode_level(&rest);
    }
    rest[0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimePoint {
    pub levels: u32,
    pub n_qubits: usize,
    pub lifetime: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeCurve {
    pub points: Vec<LifetimePoint>,
    /// Slope of lifetime against `ln N`.
    pub slope_ln_n: Option<f64>,
    /// Slope of lifetime against the number of levels.
    pub slope_levels: Option<f64>,
}

/// Lifetime for each level count. Unprotected runs use `N = 5^l` product
/// qubits; clock-controlled runs resize the clock for every level count.
pub fn lifetime_curve(
    strategy: Strategy,
    base: &ProtocolParams,
    levels: &[u32],
    floor: f64,
    trials: u64,
    master_seed: u64,
) -> Result<LifetimeCurve, MemoryError> {
    let mut points = Vec::with_capacity(levels.len());
    for &l in levels {
        let n_qubits = 5usize.pow(l);
        let (strategy, params) = match strategy {
            Strategy::Unprotected { .. } => (Strategy::Unprotected { n_qubits }, base.clone()),
            Strategy::Circuit => (strategy, with_levels(base, l)),
            Strategy::ClockControlled { .. } => (strategy, with_levels(base, l).with_sized_clock()?),
        };
        let r = lifetime_scan(strategy, &params, floor, trials, master_seed)?;
        points.push(LifetimePoint {
            levels: l,
            n_qubits,
            lifetime: r.lifetime,
        });
    }
    let lifetimes: Vec<f64> = points.iter().map(|p| p.lifetime).collect();
    let ln_n: Vec<f64> = points.iter().map(|p| (p.n_qubits as f64).ln()).collect();
    let ls: Vec<f64> = points.iter().map(|p| f64::from(p.levels)).collect();
    Ok(LifetimeCurve {
        slope_ln_n: linear_fit(&ln_n, &lifetimes).map(|f| f.slope),
        slope_levels: linear_fit(&ls, &lifetimes).map(|f| f.slope),
        points,
    })
}

fn with_levels(base: &ProtocolParams, levels: u32) -> ProtocolParams {
    let mut p = base.clone();
    p.levels = levels.max(1);
    p.t_max = f64::from(p.levels) * (p.t_prot + p.t_dec);
    p
}
