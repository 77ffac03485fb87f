//! Sampling polarization trajectories and checking them against the
//! good-trajectory band.
//!
//! The `K` bits are exchangeable, so the clock is simulated as a
//! birth–death chain on the number `n` of 1-bits: every bit flips at rate
//! `r/2`, the total flip rate is the constant `K r / 2`, and a flip lowers
//! `n` with probability `n / K`. The polarization is `k = 2n - K`.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClockError, ClockParams};
use crate::pauli::StreamRng;

/// Above this many expected flips the exact sampler refuses to run.
pub const MAX_EXACT_FLIPS: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// Every flip is recorded.
    Exact,
    /// Only the polarization at checkpoint times is known.
    Checkpoints,
}

/// Piecewise-constant polarization path. Point `i` holds the value from
/// `times[i]` until the next point; point 0 is `(0, K)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockTrajectory {
    k_bits: u64,
    horizon: f64,
    resolution: Resolution,
    times: Vec<f64>,
    k: Vec<i64>,
}

impl ClockTrajectory {
    fn start(k_bits: u64, horizon: f64, resolution: Resolution) -> Self {
        Self {
            k_bits,
            horizon,
            resolution,
            times: vec![0.0],
            k: vec![k_bits as i64],
        }
    }

    fn push(&mut self, t: f64, k: i64) {
        self.times.push(t);
        self.k.push(k);
    }

    /// A path that never leaves `k = K` (the zero-rate limit).
    pub fn constant(k_bits: u64, horizon: f64) -> Self {
        Self::start(k_bits, horizon, Resolution::Exact)
    }

    pub fn k_bits(&self) -> u64 {
        self.k_bits
    }

    pub fn k0(&self) -> i64 {
        self.k[0]
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn polarizations(&self) -> &[i64] {
        &self.k
    }

    /// Number of recorded points after the initial one (flips for exact paths).
    pub fn transitions(&self) -> usize {
        self.times.len() - 1
    }

    /// `(time, change in k)` for every flip.
    pub fn flips(&self) -> impl Iterator<Item = (f64, i64)> + '_ {
        self.k
            .windows(2)
            .zip(&self.times[1..])
            .map(|(w, &t)| (t, w[1] - w[0]))
    }

    /// Polarization at time `t` (value of the last point at or before `t`).
    pub fn k_at(&self, t: f64) -> i64 {
        let i = self.times.partition_point(|&s| s <= t);
        self.k[i.saturating_sub(1)]
    }

    /// Final polarization.
    pub fn k_end(&self) -> i64 {
        *self.k.last().expect("non-empty path")
    }

    /// Time intervals within `[0, until]` during which `lo <= k(t) <= hi`.
    ///
    /// Exact paths are treated as step functions. Checkpointed paths are
    /// interpolated linearly between checkpoints; for large `K` the drift
    /// between checkpoints dominates the fluctuations, so this locates
    /// window crossings far more precisely than the checkpoint spacing.
    pub fn active_intervals(&self, lo: f64, hi: f64, until: f64) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut add = |a: f64, b: f64| {
            if b < a {
                return;
            }
            match out.last_mut() {
                Some(last) if a <= last.1 + 1e-15 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        };
        let n = self.times.len();
        for i in 0..n {
            let t0 = self.times[i];
            if t0 >= until {
                break;
            }
            let t1 = if i + 1 < n { self.times[i + 1].min(until) } else { until };
            let a = self.k[i] as f64;
            let linear = self.resolution == Resolution::Checkpoints && i + 1 < n;
            if !linear {
                if lo <= a && a <= hi {
                    add(t0, t1);
                }
                continue;
            }
            let b_end = self.k[i + 1] as f64;
            let full = self.times[i + 1] - t0;
            let slope = (b_end - a) / full;
            if slope == 0.0 {
                if lo <= a && a <= hi {
                    add(t0, t1);
                }
                continue;
            }
            let u_lo = (lo - a) / slope;
            let u_hi = (hi - a) / slope;
            let (u0, u1) = if u_lo <= u_hi { (u_lo, u_hi) } else { (u_hi, u_lo) };
            let s = t0 + u0.max(0.0);
            let e = (t0 + u1).min(t1);
            if s <= e {
                add(s, e);
            }
        }
        out
    }
}

fn exact_flip_budget(k_bits: u64, rate: f64, horizon: f64) -> Result<(), ClockError> {
    let expected = k_bits as f64 * rate * horizon / 2.0;
    if expected > MAX_EXACT_FLIPS {
        return Err(ClockError::TooManyEvents(expected));
    }
    Ok(())
}

/// Exact event-driven sample of the clock on `[0, horizon]`.
pub fn sample_trajectory<R: Rng + ?Sized>(
    params: &ClockParams,
    horizon: f64,
    rng: &mut R,
) -> Result<ClockTrajectory, ClockError> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(ClockError::NonPositive {
            name: "horizon",
            value: horizon,
        });
    }
    let k_bits = params.k_bits();
    exact_flip_budget(k_bits, params.rate(), horizon)?;
    let mut traj = ClockTrajectory::start(k_bits, horizon, Resolution::Exact);
    let total_rate = k_bits as f64 * params.rate() / 2.0;
    let gap = Exp::new(total_rate).expect("positive rate");
    let mut ones = k_bits;
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t > horizon {
            break;
        }
        if rng.random_range(0..k_bits) < ones {
            ones -= 1;
        } else {
            ones += 1;
        }
        traj.push(t, 2 * ones as i64 - k_bits as i64);
    }
    Ok(traj)
}

/// One Markov step of the 1-bit count over `dt`: each bit keeps its value
/// with probability `(1 + exp(-r dt))/2`.
fn binomial_step<R: Rng + ?Sized>(ones: u64, k_bits: u64, rate: f64, dt: f64, rng: &mut R) -> u64 {
    let flip = -(-rate * dt).exp_m1() / 2.0;
    let keep = 1.0 - flip;
    let stay = if ones == 0 {
        0
    } else {
        Binomial::new(ones, keep).expect("valid probability").sample(rng)
    };
    let zeros = k_bits - ones;
    let rise = if zeros == 0 {
        0
    } else {
        Binomial::new(zeros, flip).expect("valid probability").sample(rng)
    };
    stay + rise
}

/// Samples the polarization at the given increasing times (exact in law
/// at those times, unresolved in between).
pub fn sample_at_times<R: Rng + ?Sized>(
    params: &ClockParams,
    times: &[f64],
    rng: &mut R,
) -> Result<ClockTrajectory, ClockError> {
    let mut prev = 0.0;
    for &t in times {
        if !(t.is_finite() && t > prev || (t == 0.0 && prev == 0.0)) {
            return Err(ClockError::UnorderedTimes);
        }
        prev = t;
    }
    let k_bits = params.k_bits();
    let horizon = times.last().copied().unwrap_or(0.0);
    let mut traj = ClockTrajectory::start(k_bits, horizon, Resolution::Checkpoints);
    let mut ones = k_bits;
    let mut last = 0.0;
    for &t in times {
        if t == 0.0 {
            continue;
        }
        ones = binomial_step(ones, k_bits, params.rate(), t - last, rng);
        traj.push(t, 2 * ones as i64 - k_bits as i64);
        last = t;
    }
    Ok(traj)
}

/// Samples the polarization every `spacing` up to `horizon`.
pub fn sample_trajectory_checkpointed<R: Rng + ?Sized>(
    params: &ClockParams,
    spacing: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<ClockTrajectory, ClockError> {
    if !(spacing.is_finite() && spacing > 0.0 && spacing <= horizon) {
        return Err(ClockError::BadSpacing { spacing, horizon });
    }
    let steps = (horizon / spacing * (1.0 + 1e-12)).floor() as usize;
    let mut times: Vec<f64> = (1..=steps).map(|i| i as f64 * spacing).collect();
    match times.last() {
        Some(&last) if last < horizon * (1.0 - 1e-12) => times.push(horizon),
        Some(_) => *times.last_mut().expect("non-empty") = horizon,
        None => times.push(horizon),
    }
    sample_at_times(params, &times, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitKind {
    /// A flip carried the path out of the band.
    Vertical,
    /// The band moved past a constant polarization between flips.
    Horizontal,
    /// Seen between two checkpoints; the mechanism is not resolved.
    Unresolved,
}

impl ExitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExitKind::Vertical => "vertical",
            ExitKind::Horizontal => "horizontal",
            ExitKind::Unresolved => "unresolved",
        }
    }
}

/// Band excursions of one trajectory over `[0, t_max]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExitReport {
    pub vertical: u32,
    pub horizontal: u32,
    pub unresolved: u32,
    pub first_exit: Option<(f64, ExitKind)>,
    /// `max |t̃(k(t)) - t|` over `[0, t_max]` (over checkpoints only for
    /// checkpointed paths).
    pub max_time_error: f64,
}

impl ExitReport {
    pub fn exits(&self) -> u32 {
        self.vertical + self.horizontal + self.unresolved
    }

    /// A trajectory is good iff it never leaves the band.
    pub fn is_good(&self) -> bool {
        self.exits() == 0
    }
}

impl ClockParams {
    /// Checks a trajectory against `|k(t) - k̄(t)| < K^{1/2+e}` on `[0, t_max]`.
    ///
    /// Exact paths are checked everywhere: at each flip instant, and between
    /// flips by solving for the time at which the moving band edge meets the
    /// constant polarization. Checkpointed paths are checked at checkpoints.
    pub fn exit_report(&self, traj: &ClockTrajectory) -> Result<ExitReport, ClockError> {
        let t_max = self.t_max();
        if traj.horizon() < t_max * (1.0 - 1e-12) {
            return Err(ClockError::ShortTrajectory {
                horizon: traj.horizon(),
                t_max,
            });
        }
        let band = self.band();
        let k_total = self.k_bits() as f64;
        let rate = self.rate();
        let mut report = ExitReport::default();
        let record = |report: &mut ExitReport, t: f64, kind: ExitKind| {
            match kind {
                ExitKind::Vertical => report.vertical += 1,
                ExitKind::Horizontal => report.horizontal += 1,
                ExitKind::Unresolved => report.unresolved += 1,
            }
            if report.first_exit.is_none() {
                report.first_exit = Some((t, kind));
            }
        };

        let times = traj.times();
        let ks = traj.polarizations();
        let mut inside = true;
        for i in 0..times.len() {
            let s = times[i];
            if s > t_max {
                break;
            }
            let k = ks[i] as f64;
            let dev = k - self.mean_polarization(s);
            let now_inside = dev.abs() < band;
            let est_s = self.time_estimate(ks[i]);
            report.max_time_error = report.max_time_error.max((est_s - s).abs());
            if inside && !now_inside && i > 0 {
                let kind = match traj.resolution() {
                    Resolution::Exact => ExitKind::Vertical,
                    Resolution::Checkpoints => ExitKind::Unresolved,
                };
                record(&mut report, s, kind);
            }
            inside = now_inside;
            if traj.resolution() == Resolution::Checkpoints {
                continue;
            }
            // Between flips k is constant and k - k̄(t) increases with t.
            let e = if i + 1 < times.len() { times[i + 1].min(t_max) } else { t_max };
            report.max_time_error = report.max_time_error.max((est_s - e).abs());
            let dev_e = k - self.mean_polarization(e);
            if !inside && dev <= -band && dev_e > -band {
                inside = true;
            }
            if inside && dev_e >= band {
                let t_cross = (k_total / (k - band)).ln() / rate;
                record(&mut report, t_cross.clamp(s, e), ExitKind::Horizontal);
                inside = false;
            }
        }
        Ok(report)
    }

    pub fn is_good(&self, traj: &ClockTrajectory) -> Result<bool, ClockError> {
        Ok(self.exit_report(traj)?.is_good())
    }
}

/// Mergeable tally of exit reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExitTally {
    pub trials: u64,
    pub good: u64,
    pub vertical: u64,
    pub horizontal: u64,
    pub unresolved: u64,
    /// Largest time error seen on a good trajectory.
    pub max_time_error_good: f64,
}

impl ExitTally {
    pub fn record(&mut self, r: &ExitReport) {
        self.trials += 1;
        self.vertical += u64::from(r.vertical);
        self.horizontal += u64::from(r.horizontal);
        self.unresolved += u64::from(r.unresolved);
        if r.is_good() {
            self.good += 1;
            self.max_time_error_good = self.max_time_error_good.max(r.max_time_error);
        }
    }

    pub fn merge(self, o: Self) -> Self {
        Self {
            trials: self.trials + o.trials,
            good: self.good + o.good,
            vertical: self.vertical + o.vertical,
            horizontal: self.horizontal + o.horizontal,
            unresolved: self.unresolved + o.unresolved,
            max_time_error_good: self.max_time_error_good.max(o.max_time_error_good),
        }
    }

    pub fn exits(&self) -> u64 {
        self.vertical + self.horizontal + self.unresolved
    }
}

/// Empirical exit statistics compared with the theorem's bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitStatistics {
    pub trials: u64,
    pub good_fraction: f64,
    pub exits_per_trial: f64,
    pub vertical_rate: f64,
    pub vertical_rate_bound: f64,
    pub horizontal_count: u64,
    pub horizontal_bound_per_trial: f64,
    pub good_bound: f64,
    pub good_bound_deficit: f64,
    pub vacuous: bool,
    /// `None` when the bound is vacuous and the comparison is skipped.
    pub within_bounds: Option<bool>,
}

pub fn exit_statistics(tally: &ExitTally, params: &ClockParams) -> ExitStatistics {
    let n = tally.trials.max(1) as f64;
    let t_max = params.t_max();
    let bound = params.good_prob_bound();
    let vertical_rate = tally.vertical as f64 / (n * t_max);
    let vertical_rate_bound = params.vertical_exit_rate_bound();
    let good_fraction = tally.good as f64 / n;
    let within_bounds = (!bound.vacuous).then(|| {
        // Poisson allowance for the vertical count, binomial for non-good.
        let v_sigma = (vertical_rate_bound * t_max / n).sqrt();
        let d = bound.deficit.min(1.0);
        let ng_sigma = (d * (1.0 - d) / n).sqrt();
        vertical_rate * t_max <= vertical_rate_bound * t_max + 3.0 * v_sigma
            && 1.0 - good_fraction <= d + 3.0 * ng_sigma
    });
    ExitStatistics {
        trials: tally.trials,
        good_fraction,
        exits_per_trial: tally.exits() as f64 / n,
        vertical_rate,
        vertical_rate_bound,
        horizontal_count: tally.horizontal,
        horizontal_bound_per_trial: params.horizontal_exit_bound(),
        good_bound: bound.value,
        good_bound_deficit: bound.deficit,
        vacuous: bound.vacuous,
        within_bounds,
    }
}

/// How trajectories are generated for verification runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ClockSampler {
    Exact,
    Checkpointed { spacing: f64 },
}

impl ClockSampler {
    /// Exact when the expected flip count is small, otherwise 200 checkpoints.
    pub fn auto(params: &ClockParams) -> Self {
        if params.k_bits() as f64 * params.rate() * params.t_max() / 2.0 <= 2e6 {
            ClockSampler::Exact
        } else {
            ClockSampler::Checkpointed {
                spacing: params.t_max() / 200.0,
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        params: &ClockParams,
        rng: &mut R,
    ) -> Result<ClockTrajectory, ClockError> {
        match *self {
            ClockSampler::Exact => sample_trajectory(params, params.t_max(), rng),
            ClockSampler::Checkpointed { spacing } => {
                sample_trajectory_checkpointed(params, spacing, params.t_max(), rng)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: u64,
    pub good: bool,
    pub max_time_error: f64,
    pub exit_type: Option<ExitKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockVerifySummary {
    pub k_bits: u64,
    pub epsilon: f64,
    pub rate: f64,
    pub t_max: f64,
    pub trials: u64,
    pub sampler: ClockSampler,
    pub good_fraction: f64,
    pub bound: f64,
    pub bound_deficit: f64,
    pub bound_vacuous: bool,
    pub delta_half: f64,
    pub max_observed_error: f64,
    pub accuracy_holds: bool,
    pub exits: ExitStatistics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClockVerifyRun {
    pub rows: Vec<TrialRow>,
    pub summary: ClockVerifySummary,
}

/// Samples `trials` trajectories and checks goodness and time accuracy.
pub fn verify_clock(
    params: &ClockParams,
    trials: u64,
    master_seed: u64,
    sampler: ClockSampler,
) -> Result<ClockVerifyRun, ClockError> {
    let reports: Vec<ExitReport> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamRng::new(master_seed, i).rng();
            let traj = sampler.sample(params, &mut rng)?;
            params.exit_report(&traj)
        })
        .collect::<Result<_, _>>()?;
    let mut tally = ExitTally::default();
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            tally.record(r);
            TrialRow {
                trial: i as u64,
                good: r.is_good(),
                max_time_error: r.max_time_error,
                exit_type: r.first_exit.map(|(_, k)| k),
            }
        })
        .collect();
    let exits = exit_statistics(&tally, params);
    let delta_half = params.time_error_bound();
    Ok(ClockVerifyRun {
        rows,
        summary: ClockVerifySummary {
            k_bits: params.k_bits(),
            epsilon: params.epsilon(),
            rate: params.rate(),
            t_max: params.t_max(),
            trials,
            sampler,
            good_fraction: exits.good_fraction,
            bound: exits.good_bound,
            bound_deficit: exits.good_bound_deficit,
            bound_vacuous: exits.vacuous,
            delta_half,
            max_observed_error: tally.max_time_error_good,
            accuracy_holds: tally.max_time_error_good <= delta_half,
            exits,
        },
    })
}
