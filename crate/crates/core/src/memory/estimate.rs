use serde::{Deserialize, Serialize};

use super::MemoryError;
use crate::pauli::Pauli;
use crate::stats::{z_for_confidence, BinomialEstimate};

/// Result of a single storage trial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    pub residual: Pauli,
    /// One flag per level; empty except for the clock-controlled strategy.
    pub decode_failures: Vec<bool>,
    pub trajectory_good: bool,
}

impl TrialOutcome {
    pub fn plain(residual: Pauli) -> Self {
        Self {
            residual,
            decode_failures: Vec::new(),
            trajectory_good: true,
        }
    }
}

/// Histogram of residual logical Paulis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalChannelEstimate {
    /// Counts in the order `I, X, Y, Z`.
    pub counts: [u64; 4],
    pub trials: u64,
    /// Trials with at least one failed decode.
    pub decode_failures: u64,
    pub bad_trajectories: u64,
}

impl LogicalChannelEstimate {
    pub fn record(&mut self, residual: Pauli) {
        self.counts[residual.report_index()] += 1;
        self.trials += 1;
    }

    pub fn single(residual: Pauli) -> Self {
        let mut e = Self::default();
        e.record(residual);
        e
    }

    pub fn record_outcome(&mut self, o: &TrialOutcome) {
        self.record(o.residual);
        self.decode_failures += u64::from(o.decode_failures.iter().any(|&f| f));
        self.bad_trajectories += u64::from(!o.trajectory_good);
    }

    pub fn merge(self, o: Self) -> Self {
        let mut counts = self.counts;
        for (c, x) in counts.iter_mut().zip(o.counts) {
            *c += x;
        }
        Self {
            counts,
            trials: self.trials + o.trials,
            decode_failures: self.decode_failures + o.decode_failures,
            bad_trajectories: self.bad_trajectories + o.bad_trajectories,
        }
    }

    pub fn count(&self, p: Pauli) -> u64 {
        self.counts[p.report_index()]
    }

    pub fn p_hat(&self, p: Pauli) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.count(p) as f64 / self.trials as f64
    }

    /// Rates in the order `I, X, Y, Z`.
    pub fn rates(&self) -> [f64; 4] {
        Pauli::ALL.map(|p| self.p_hat(p))
    }

    /// Estimate of the logical error probability `1 - p_I`.
    pub fn error(&self) -> BinomialEstimate {
        BinomialEstimate::new(self.trials - self.count(Pauli::I), self.trials)
    }

    pub fn error_rate(&self) -> f64 {
        self.error().p_hat()
    }

    pub fn avg_fidelity(&self) -> f64 {
        (2.0 * self.p_hat(Pauli::I) + 1.0) / 3.0
    }

    /// Standard error of [`avg_fidelity`](Self::avg_fidelity).
    pub fn fidelity_std_err(&self) -> f64 {
        2.0 / 3.0 * self.error().std_err()
    }

    /// Half-width of the 95% Wald interval on `p̂` for each class.
    pub fn ci(&self) -> [f64; 4] {
        let z = z_for_confidence(0.95);
        Pauli::ALL.map(|p| z * BinomialEstimate::new(self.count(p), self.trials).std_err())
    }

    /// Half-width of the 95% interval on the average fidelity.
    pub fn fidelity_ci(&self) -> f64 {
        z_for_confidence(0.95) * self.fidelity_std_err()
    }
}

pub fn estimate_logical_channel(outcomes: &[TrialOutcome]) -> Result<LogicalChannelEstimate, MemoryError> {
    if outcomes.is_empty() {
        return Err(MemoryError::Empty);
    }
    let mut e = LogicalChannelEstimate::default();
    for o in outcomes {
        e.record_outcome(o);
    }
    Ok(e)
}
