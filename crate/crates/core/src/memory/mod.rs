//! End-to-end storage strategies and lifetime estimation.
//!
//! Every strategy reports a [`LogicalChannelEstimate`]: the distribution of
//! the residual logical Pauli over trials. For a Pauli channel the average
//! fidelity is `(2 p_I + 1) / 3`.

mod clocked;
mod estimate;
mod lifetime;
mod strategies;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{clock_size_for, BoundsError, FeasibleSet};
use crate::clock::ClockError;
use crate::code::BLOCK;
use crate::pauli::PauliError;

pub use clocked::{
    clock_active_times, simulate_clock_controlled, simulate_clock_controlled_with, ClockMode,
    ClockedRun, LevelTiming,
};
pub use estimate::{estimate_logical_channel, LogicalChannelEstimate, TrialOutcome};
pub use lifetime::{
    lifetime_curve, lifetime_scan, LifetimeCurve, LifetimePoint, LifetimeResult, Strategy,
    UNPROTECTED_GRID_STEP,
};
pub use strategies::{
    classical_failure_exact, classical_lifetime, classical_lifetime_exact,
    simulate_circuit_model, simulate_circuit_with_decode_times, simulate_classical_repetition,
    simulate_unprotected, simulate_unprotected_grid, CircuitRun,
};

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("repetition code needs an odd number of bits, got {0}")]
    EvenBits(u64),
    #[error("no trial outcomes")]
    Empty,
    #[error("floor {0} is outside the reachable range")]
    InvalidFloor(f64),
    #[error("fidelity floor {0} is not reached even at t = 0")]
    FloorUnreachable(f64),
    #[error("invalid protocol parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("schedule infeasible: {0}")]
    ScheduleInfeasible(String),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// Timescales and clock size of a concatenated storage protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub rate: f64,
    pub p_star: f64,
    pub d: u32,
    pub levels: u32,
    pub t_prot: f64,
    pub t_dec: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub clock_bits: u64,
    pub t_max: f64,
    pub h_norm: f64,
}

impl ProtocolParams {
    /// `t_prot = c_prot p*/r`, `t_dec = c_dec p*/(d r)`, `δ = c_delta t_dec`,
    /// `ε = 1/6` and `t_max = l (t_prot + t_dec)`. The clock size is left at
    /// the minimum; see [`ProtocolParams::with_sized_clock`].
    pub fn from_multipliers(
        rate: f64,
        p_star: f64,
        c_prot: f64,
        c_dec: f64,
        c_delta: f64,
        levels: u32,
    ) -> Result<Self, MemoryError> {
        let d = BLOCK as u32;
        let t_prot = c_prot * p_star / rate;
        let t_dec = c_dec * p_star / (f64::from(d) * rate);
        let p = Self {
            rate,
            p_star,
            d,
            levels,
            t_prot,
            t_dec,
            delta: c_delta * t_dec,
            epsilon: 1.0 / 6.0,
            clock_bits: crate::clock::MIN_CLOCK_BITS,
            t_max: f64::from(levels) * (t_prot + t_dec),
            h_norm: 2.0 * std::f64::consts::PI / t_dec,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_feasible(rate: f64, set: &FeasibleSet, levels: u32) -> Result<Self, MemoryError> {
        let m = set.multipliers;
        Self::from_multipliers(rate, set.p_star, m.c_prot, m.c_dec, m.c_delta, levels)
    }

    /// Sets `K` so that the clock's time error over `[0, t_max]` is at most `δ/2`.
    pub fn with_sized_clock(mut self) -> Result<Self, MemoryError> {
        self.clock_bits = clock_size_for(self.t_max, self.rate, self.delta, self.epsilon)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        let checks = [
            ("rate", self.rate, self.rate >= 0.0),
            ("p_star", self.p_star, self.p_star > 0.0 && self.p_star < 1.0),
            ("t_prot", self.t_prot, self.t_prot >= 0.0),
            ("t_dec", self.t_dec, self.t_dec > 0.0),
            ("delta", self.delta, self.delta > 0.0),
            ("epsilon", self.epsilon, self.epsilon > 0.0 && self.epsilon < 0.5),
            ("t_max", self.t_max, self.t_max > 0.0),
            ("levels", f64::from(self.levels), self.levels >= 1),
            ("h_norm", self.h_norm, self.h_norm > 0.0 && self.h_norm <= 2.0 * std::f64::consts::PI / self.t_dec * (1.0 + 1e-12)),
        ];
        for (name, value, ok) in checks {
            if !(ok && value.is_finite()) {
                return Err(MemoryError::InvalidParam { name, value });
            }
        }
        Ok(())
    }

    /// `N = d^l`.
    pub fn physical_qubits(&self) -> usize {
        (self.d as usize).pow(self.levels)
    }

    /// `t_l = l t_prot + (l - 1) t_dec`.
    pub fn level_start(&self, l: u32) -> f64 {
        crate::clock::schedule::level_start(l, self.t_prot, self.t_dec)
    }

    /// Budget for one round: `(r (t_prot - δ), e^{‖H‖δ} - 1 + d r (t_dec + δ))`.
    pub fn budget(&self) -> (f64, f64) {
        (
            self.rate * (self.t_prot - self.delta),
            (self.h_norm * self.delta).exp_m1()
                + f64::from(self.d) * self.rate * (self.t_dec + self.delta),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_times() {
        let p = ProtocolParams::from_multipliers(1.0, 0.01, 0.5, 0.25, 0.05, 3).unwrap();
        assert!((p.t_prot - 0.005).abs() < 1e-15);
        assert!((p.t_dec - 5e-4).abs() < 1e-15);
        assert!((p.level_start(1) - 0.005).abs() < 1e-15);
        assert!((p.level_start(3) - (0.015 + 0.001)).abs() < 1e-15);
        assert!((p.t_max - 3.0 * 0.0055).abs() < 1e-15);
        assert_eq!(p.physical_qubits(), 125);
        assert!(ProtocolParams::from_multipliers(1.0, 0.01, 0.5, 0.25, 0.05, 0).is_err());
    }

    #[test]
    fn sized_clock_meets_accuracy() {
        let p = ProtocolParams::from_multipliers(1.0, 0.01, 0.5, 0.25, 0.05, 2)
            .unwrap()
            .with_sized_clock()
            .unwrap();
        let c = crate::clock::ClockParams::new(p.clock_bits, p.epsilon, p.t_max, p.rate).unwrap();
        assert!(c.time_error_bound() <= p.delta / 2.0);
        assert!(p.clock_bits < 1 << 53);
    }
}
