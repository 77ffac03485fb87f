//! Clock-controlled decoding, simulated in two passes.
//!
//! The clock's law does not depend on the code qubits, so each trial first
//! samples a clock trajectory and resolves when every level is decoded
//! (pass 1), then runs the Pauli frame of the code qubits against that
//! schedule (pass 2).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::strategies::merge_vec;
use super::{LogicalChannelEstimate, MemoryError, ProtocolParams};
use crate::clock::{
    sample_at_times, sample_trajectory, window_schedule, ClockParams, ClockTrajectory,
    WindowSchedule,
};
use crate::code::DecoderTable;
use crate::pauli::{depolarize_marginal, par_trials, uniform_error, NoiseParams, Pauli, StreamRng};

/// Above this many expected flips pass 1 uses checkpoints.
const EXACT_FLIP_LIMIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// Sampled clock trajectories.
    Stochastic,
    /// The polarization follows its mean `K e^{-rt}` exactly.
    Deterministic,
}

/// Outcome of pass 1 for one level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelTiming {
    /// Total time `T_l` the clock spends in the level's window.
    pub active_time: f64,
    /// Instant at which the accumulated active time reaches
    /// `min(t_dec, T_l)`; `None` if the window is never entered.
    pub decode_time: Option<f64>,
}

impl LevelTiming {
    fn from_intervals(intervals: &[(f64, f64)], t_dec: f64) -> Self {
        let active_time: f64 = intervals.iter().map(|(a, b)| b - a).sum();
        let target = t_dec.min(active_time);
        let mut acc = 0.0;
        let mut decode_time = None;
        for &(a, b) in intervals {
            if acc + (b - a) >= target {
                decode_time = Some(a + (target - acc));
                break;
            }
            acc += b - a;
        }
        Self {
            active_time,
            decode_time: if active_time > 0.0 { decode_time } else { None },
        }
    }

    /// Probability of the timing kick, `min(1, e^{h |T_l - t_dec|} - 1)`.
    pub fn kick_probability(&self, h_norm: f64, t_dec: f64) -> f64 {
        (h_norm * (self.active_time - t_dec).abs()).exp_m1().min(1.0)
    }

    /// The rotation is incomplete by more than the tolerated `δ`.
    pub fn failed(&self, t_dec: f64, delta: f64) -> bool {
        self.decode_time.is_none() || self.active_time < t_dec - delta
    }
}

/// Pass 1 on a given trajectory.
pub fn clock_active_times(
    schedule: &WindowSchedule,
    traj: &ClockTrajectory,
    t_dec: f64,
    until: f64,
) -> Vec<LevelTiming> {
    schedule
        .windows
        .iter()
        .map(|w| {
            let iv = traj.active_intervals(w.k_off as f64, w.k_on as f64, until);
            LevelTiming::from_intervals(&iv, t_dec)
        })
        .collect()
}

fn deterministic_timings(schedule: &WindowSchedule, rate: f64, t_dec: f64) -> Vec<LevelTiming> {
    schedule
        .windows
        .iter()
        .map(|w| LevelTiming::from_intervals(&[w.mean_interval(schedule.k_bits, rate)], t_dec))
        .collect()
}

/// Checkpoint times: a coarse grid plus a fine one around every window.
fn checkpoint_times(params: &ProtocolParams, horizon: f64) -> Vec<f64> {
    let coarse = horizon / 200.0;
    let fine = params.t_dec / 50.0;
    let mut times: Vec<f64> = (1..=200).map(|i| f64::from(i) * coarse).collect();
    for l in 1..=params.levels {
        let t_l = params.level_start(l);
        let (a, b) = ((t_l - 2.0 * params.t_dec).max(0.0), (t_l + 3.0 * params.t_dec).min(horizon));
        let steps = ((b - a) / fine).ceil() as usize;
        times.extend((0..=steps).map(|i| a + i as f64 * fine).filter(|&t| t > 0.0 && t <= horizon));
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    times
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClockedRun {
    pub logical: LogicalChannelEstimate,
    /// Error of one logical qubit of level `j + 1` right after its decode.
    pub rounds: Vec<LogicalChannelEstimate>,
    /// Good-trajectory trials whose levels did not decode in order.
    pub ordering_violations: u64,
    /// Largest timing-kick probability seen.
    pub max_kick_probability: f64,
    /// Sum over trials of `T_l`, per level.
    pub active_time_sum: Vec<f64>,
}

impl ClockedRun {
    fn merge(self, o: Self) -> Self {
        let active_time_sum = if self.active_time_sum.is_empty() {
            o.active_time_sum
        } else if o.active_time_sum.is_empty() {
            self.active_time_sum
        } else {
            self.active_time_sum.iter().zip(&o.active_time_sum).map(|(a, b)| a + b).collect()
        };
        Self {
            logical: self.logical.merge(o.logical),
            rounds: merge_vec(self.rounds, o.rounds),
            ordering_violations: self.ordering_violations + o.ordering_violations,
            max_kick_probability: self.max_kick_probability.max(o.max_kick_probability),
            active_time_sum,
        }
    }

    pub fn mean_active_time(&self) -> Vec<f64> {
        let n = self.logical.trials.max(1) as f64;
        self.active_time_sum.iter().map(|s| s / n).collect()
    }
}

/// Clock-controlled decoding with the same noise rate on clock and code.
pub fn simulate_clock_controlled(
    params: &ProtocolParams,
    mode: ClockMode,
    trials: u64,
    master_seed: u64,
) -> Result<ClockedRun, MemoryError> {
    simulate_clock_controlled_with(params, mode, params.rate, trials, master_seed)
}

/// Pass 1 setup shared by every trial of a clock-controlled run.
pub(crate) struct ClockPass {
    schedule: WindowSchedule,
    clock: ClockParams,
    horizon: f64,
    exact: bool,
    times: Vec<f64>,
    fixed: Option<Vec<LevelTiming>>,
    t_dec: f64,
}

impl ClockPass {
    pub(crate) fn new(params: &ProtocolParams, mode: ClockMode) -> Result<Self, MemoryError> {
        params.validate()?;
        if params.delta >= params.t_prot.min(params.t_dec) / 10.0 {
            return Err(MemoryError::ScheduleInfeasible(format!(
                "delta = {} is not small against t_prot = {} and t_dec = {}",
                params.delta, params.t_prot, params.t_dec
            )));
        }
        let schedule =
            window_schedule(params).map_err(|e| MemoryError::ScheduleInfeasible(e.to_string()))?;
        let clock = ClockParams::new(params.clock_bits, params.epsilon, params.t_max, params.rate)?;
        let horizon = params.t_max + params.t_prot.max(params.t_dec);
        let exact = params.clock_bits as f64 * params.rate * horizon / 2.0 <= EXACT_FLIP_LIMIT;
        let times = if exact { Vec::new() } else { checkpoint_times(params, horizon) };
        let fixed = (mode == ClockMode::Deterministic)
            .then(|| deterministic_timings(&schedule, params.rate, params.t_dec));
        Ok(Self {
            schedule,
            clock,
            horizon,
            exact,
            times,
            fixed,
            t_dec: params.t_dec,
        })
    }

    /// Per-level timings and trajectory goodness for one trial (clock lane 1).
    pub(crate) fn run(&self, stream: &StreamRng) -> (Vec<LevelTiming>, bool) {
        if let Some(t) = &self.fixed {
            return (t.clone(), true);
        }
        let mut rng = stream.lane(1);
        let traj = if self.exact {
            sample_trajectory(&self.clock, self.horizon, &mut rng)
        } else {
            sample_at_times(&self.clock, &self.times, &mut rng)
        }
        .expect("validated clock parameters");
        let good = self.clock.is_good(&traj).expect("horizon covers t_max");
        (clock_active_times(&self.schedule, &traj, self.t_dec, self.horizon), good)
    }
}

/// As [`simulate_clock_controlled`], with a separate noise rate for the code
/// qubits.
pub fn simulate_clock_controlled_with(
    params: &ProtocolParams,
    mode: ClockMode,
    code_rate: f64,
    trials: u64,
    master_seed: u64,
) -> Result<ClockedRun, MemoryError> {
    let code_noise = NoiseParams::new(code_rate)?;
    let pass = ClockPass::new(params, mode)?;
    let table = DecoderTable::perfect();
    let n = params.physical_qubits();
    let levels = params.levels as usize;
    Ok(par_trials(
        master_seed,
        trials,
        |stream| {
            let (timings, good) = pass.run(&stream);
            let mut rng = stream.lane(0);
            code_pass(params, &code_noise, table, n, levels, &timings, good, &mut rng)
        },
        ClockedRun::merge,
    ))
}

/// Applies one clock-gated decode: noise up to the decode instant, the
/// decode itself and the timing kick. Returns the new time origin.
pub(crate) fn gated_decode<R: Rng + ?Sized>(
    params: &ProtocolParams,
    noise: &NoiseParams,
    table: &DecoderTable,
    frame: &mut Vec<Pauli>,
    timing: &LevelTiming,
    prev: f64,
    rng: &mut R,
) -> f64 {
    let c = timing.decode_time.map_or(prev, |c| c.max(prev));
    depolarize_marginal(frame, c - prev, noise, rng);
    *frame = table.decode_level(frame);
    let kick = timing.kick_probability(params.h_norm, params.t_dec);
    if kick > 0.0 {
        for site in frame.iter_mut() {
            if rng.random::<f64>() < kick {
                *site = *site * uniform_error(rng);
            }
        }
    }
    c
}

#[allow(clippy::too_many_arguments)]
fn code_pass<R: Rng + ?Sized>(
    params: &ProtocolParams,
    noise: &NoiseParams,
    table: &DecoderTable,
    n: usize,
    levels: usize,
    timings: &[LevelTiming],
    good: bool,
    rng: &mut R,
) -> ClockedRun {
    let mut frame = vec![Pauli::I; n];
    let mut prev = 0.0;
    let mut failed = false;
    let mut ordered = true;
    let mut max_kick: f64 = 0.0;
    let mut rounds = Vec::with_capacity(levels);
    for timing in timings {
        failed |= timing.failed(params.t_dec, params.delta);
        if let Some(c) = timing.decode_time {
            ordered &= c > prev;
        }
        max_kick = max_kick.max(timing.kick_probability(params.h_norm, params.t_dec));
        prev = gated_decode(params, noise, table, &mut frame, timing, prev, rng);
        rounds.push(LogicalChannelEstimate::single(frame[0]));
    }
    let residual = if failed { uniform_error(rng) } else { frame[0] };
    let mut logical = LogicalChannelEstimate::default();
    logical.record_outcome(&super::TrialOutcome {
        residual,
        decode_failures: vec![failed],
        trajectory_good: good,
    });
    ClockedRun {
        logical,
        rounds,
        ordering_violations: u64::from(good && !ordered),
        max_kick_probability: max_kick,
        active_time_sum: timings.iter().map(|t| t.active_time).collect(),
    }
}
