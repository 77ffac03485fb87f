//! The depolarizing clock: `K` classical bits, initialised to 1, flipping at
//! rate `r/2`. The polarization `k = #1 - #0` decays on average as
//! `K exp(-r t)`, and inverting that curve gives a time estimate.
//!
//! This module holds the closed-form side (mean curve, time estimate and
//! the good-trajectory bounds). Sampling and trajectory checks live in
//! [`trajectory`], the decoding window schedule in [`schedule`].

pub mod schedule;
pub mod trajectory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

pub use schedule::{window_schedule, Window, WindowSchedule};
pub use trajectory::{
    exit_statistics, sample_at_times, sample_trajectory, sample_trajectory_checkpointed,
    verify_clock, ClockSampler, ClockTrajectory, ClockVerifyRun, ClockVerifySummary, ExitKind,
    ExitReport, ExitStatistics, ExitTally, Resolution, TrialRow,
};

/// Smallest clock size for which the good-trajectory theorem is stated.
pub const MIN_CLOCK_BITS: u64 = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClockError {
    #[error("clock needs K >= 16 bits (theorem precondition), got {0}")]
    TooFewBits(u64),
    #[error("epsilon must lie in (0, 1/2), got {0}")]
    EpsilonOutOfRange(f64),
    #[error("{name} must be finite and positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("checkpoint spacing {spacing} must be positive and at most the horizon {horizon}")]
    BadSpacing { spacing: f64, horizon: f64 },
    #[error("checkpoint times must be non-negative and increasing")]
    UnorderedTimes,
    #[error("exact sampling would need about {0:.3e} flips; use the checkpointed sampler")]
    TooManyEvents(f64),
    #[error("degenerate window at level {level}: k_on = {k_on} <= k_off = {k_off}")]
    DegenerateWindow { level: u32, k_on: i64, k_off: i64 },
    #[error("windows of levels {level} and {next} overlap")]
    OverlappingWindows { level: u32, next: u32 },
    #[error("trajectory horizon {horizon} is shorter than t_max {t_max}")]
    ShortTrajectory { horizon: f64, t_max: f64 },
}

/// Clock parameters: `K` bits, band exponent `epsilon`, trusted horizon
/// `t_max` and the noise rate `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockParams<T: Real = f64> {
    k_bits: u64,
    epsilon: T,
    t_max: T,
    rate: T,
}

/// Closed-form lower bound on the probability of a good trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodProbBound<T: Real = f64> {
    /// `1 - deficit`; may be negative.
    pub value: T,
    /// `K (r t_max + exp(-3 K^{2e}/8)) / exp(K^{2e}/8)`, kept separately so
    /// tiny deficits survive rounding.
    pub deficit: T,
    /// Set when the bound carries no information (`value <= 0`).
    pub vacuous: bool,
}

impl<T: Real> ClockParams<T> {
    pub fn new(k_bits: u64, epsilon: T, t_max: T, rate: T) -> Result<Self, ClockError> {
        if k_bits < MIN_CLOCK_BITS {
            return Err(ClockError::TooFewBits(k_bits));
        }
        let half = T::lit(0.5);
        if !(epsilon > T::zero() && epsilon < half) {
            return Err(ClockError::EpsilonOutOfRange(epsilon.to_f64().unwrap_or(f64::NAN)));
        }
        for (name, value) in [("t_max", t_max), ("rate", rate)] {
            if !(value.is_finite() && value > T::zero()) {
                return Err(ClockError::NonPositive {
                    name,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self {
            k_bits,
            epsilon,
            t_max,
            rate,
        })
    }

    pub fn k_bits(&self) -> u64 {
        self.k_bits
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    fn k(&self) -> T {
        T::count(self.k_bits)
    }

    /// `K exp(-r t)`.
    pub fn mean_polarization(&self, t: T) -> T {
        self.k() * (-self.rate * t).exp()
    }

    /// Clock readout for a (possibly non-integer) polarization:
    /// `min(ln(K/k)/r, t_max)`, and `t_max` for `k <= 0`.
    pub fn time_estimate_real(&self, k: T) -> T {
        if k <= T::zero() {
            return self.t_max;
        }
        ((self.k() / k).ln() / self.rate).min(self.t_max)
    }

    pub fn time_estimate(&self, k: i64) -> T {
        if k <= 0 {
            return self.t_max;
        }
        self.time_estimate_real(T::from_i64(k).expect("i64 is representable"))
    }

    /// Half-width `K^{1/2+e}` of the good-trajectory band.
    pub fn band(&self) -> T {
        self.k().powf(T::lit(0.5) + self.epsilon)
    }

    pub fn good_prob_bound(&self) -> GoodProbBound<T> {
        let x = self.k().powf(T::lit(2.0) * self.epsilon);
        let eighth = x / T::lit(8.0);
        let deficit = self.k()
            * (self.rate * self.t_max + (-T::lit(3.0) * eighth).exp())
            * (-eighth).exp();
        let value = T::one() - deficit;
        GoodProbBound {
            value,
            deficit,
            vacuous: value <= T::zero(),
        }
    }

    /// `delta/2 = exp(r t_max) / (r K^{1/2-e})`.
    pub fn time_error_bound(&self) -> T {
        (self.rate * self.t_max).exp() / (self.rate * self.k().powf(T::lit(0.5) - self.epsilon))
    }

    /// Average rate of vertical exits, `K r exp(-K^{2e}/8)`.
    pub fn vertical_exit_rate_bound(&self) -> T {
        let x = self.k().powf(T::lit(2.0) * self.epsilon);
        self.k() * self.rate * (-x / T::lit(8.0)).exp()
    }

    /// Hoeffding tail `2 exp(-K^{2e}/2)` for one band crossing.
    pub fn hoeffding_tail(&self) -> T {
        let x = self.k().powf(T::lit(2.0) * self.epsilon);
        T::lit(2.0) * (-x / T::lit(2.0)).exp()
    }

    /// Bound on the expected number of horizontal exits in `[0, t_max]`:
    /// one Hoeffding tail per time at which `k̄(t) + K^{1/2+e}` is an integer.
    pub fn horizontal_exit_bound(&self) -> T {
        let b = self.band();
        let hi = (self.k() + b).floor();
        let lo = (self.mean_polarization(self.t_max) + b).ceil();
        let crossings = (hi - lo + T::one()).max(T::zero());
        crossings * self.hoeffding_tail()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: u64, eps: f64, t_max: f64) -> ClockParams {
        ClockParams::new(k, eps, t_max, 1.0).unwrap()
    }

    #[test]
    fn validation() {
        assert_eq!(ClockParams::new(15, 0.2, 1.0, 1.0), Err(ClockError::TooFewBits(15)));
        assert!(ClockParams::new(16, 0.5, 1.0, 1.0).is_err());
        assert!(ClockParams::new(16, 0.0, 1.0, 1.0).is_err());
        assert!(ClockParams::new(16, 0.2, 0.0, 1.0).is_err());
        assert!(ClockParams::new(16, 0.2, 1.0, -1.0).is_err());
        assert!(ClockParams::new(16, 0.2f32, 1.0, 1.0).is_ok());
    }

    #[test]
    fn mean_polarization_examples() {
        let p = params(1000, 0.25, 3.0);
        assert_eq!(p.mean_polarization(0.0), 1000.0);
        assert!((p.mean_polarization(2f64.ln()) - 500.0).abs() < 1e-9);
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let m = p.mean_polarization(i as f64 * 0.03);
            assert!(m < prev);
            prev = m;
        }
    }

    #[test]
    fn time_estimate_examples() {
        let p = params(1000, 0.25, 3.0);
        assert_eq!(p.time_estimate(1000), 0.0);
        assert!((p.time_estimate(500) - 2f64.ln()).abs() < 1e-12);
        assert_eq!(p.time_estimate(0), 3.0);
        assert_eq!(p.time_estimate(-10), 3.0);
        // below K exp(-r t_max) the clamp is active
        assert_eq!(p.time_estimate(40), 3.0);
        let mut prev = f64::INFINITY;
        for k in -5..=1000 {
            let t = p.time_estimate(k);
            assert!(t <= prev);
            prev = t;
        }
    }

    #[test]
    fn inversion_identity() {
        for p in [params(1000, 0.25, 3.0), params(1 << 20, 0.1, 1.0)] {
            for i in 0..=50 {
                let t = p.t_max() * i as f64 / 50.0;
                let back = p.time_estimate_real(p.mean_polarization(t));
                assert!((back - t).abs() < 1e-12, "{t} -> {back}");
            }
        }
    }

    #[test]
    fn good_prob_bound_examples() {
        let b = params(4096, 0.4, 2.0).good_prob_bound();
        assert!(!b.vacuous);
        assert!(b.deficit > 1e-40 && b.deficit < 1e-38, "{}", b.deficit);
        assert_eq!(b.value, 1.0);

        let v = params(1024, 1.0 / 6.0, 2.0).good_prob_bound();
        assert!(v.vacuous);
        assert!(v.value < 0.0);

        let b32 = ClockParams::<f32>::new(4096, 0.3, 2.0, 1.0).unwrap().good_prob_bound();
        let b64 = params(4096, 0.3, 2.0).good_prob_bound();
        assert!(((b32.deficit as f64) - b64.deficit).abs() / b64.deficit < 1e-3);
    }

    #[test]
    fn good_prob_bound_is_monotone_in_epsilon() {
        for k in [64u64, 1024, 4096, 100_000] {
            let mut prev = f64::NEG_INFINITY;
            for i in 1..50 {
                let eps = 0.5 * i as f64 / 50.0;
                let v = params(k, eps, 2.0).good_prob_bound().value;
                assert!(v >= prev, "K={k} eps={eps}");
                prev = v;
            }
        }
    }

    #[test]
    fn time_error_bound_examples() {
        let p = params(100_000_000, 0.25, 2.0);
        let expected = 2f64.exp() / 100.0;
        assert!((p.time_error_bound() - expected).abs() < 1e-12);
        assert!((p.time_error_bound() - 0.0739).abs() < 1e-4);
        let doubled = params(100_000_000, 0.25, 4.0);
        assert!((doubled.time_error_bound() / p.time_error_bound() - 2f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn exit_bounds_integrate_to_the_deficit() {
        // Integrating the vertical rate over [0, t_max] gives the r t_max part
        // of the deficit; the horizontal part is at most K exp(-K^{2e}/2).
        let p = params(4096, 0.3, 2.0);
        let vertical = p.vertical_exit_rate_bound() * p.t_max();
        let horizontal = p.horizontal_exit_bound();
        let d = p.good_prob_bound().deficit;
        assert!(vertical <= d);
        assert!(horizontal <= 4096.0 * (-(4096f64.powf(0.6)) / 2.0).exp() * 2.0);
    }
}
