use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial as BinomialLaw, DiscreteCDF};

use super::{LogicalChannelEstimate, MemoryError, ProtocolParams};
use crate::code::DecoderTable;
use crate::pauli::{depolarize_marginal, par_trials, sample_noise_events, NoiseParams, Pauli};
use crate::stats::BinomialEstimate;

/// Residual on qubit 0 of a product-encoded register of `n_qubits` after
/// time `t` with no protection.
pub fn simulate_unprotected(
    t: f64,
    n_qubits: usize,
    rate: f64,
    trials: u64,
    master_seed: u64,
) -> Result<LogicalChannelEstimate, MemoryError> {
    Ok(simulate_unprotected_grid(&[t], n_qubits, rate, trials, master_seed)?.remove(0))
}

/// [`simulate_unprotected`] at several times from common random numbers:
/// each trial samples its events once, up to the largest time.
pub fn simulate_unprotected_grid(
    times: &[f64],
    n_qubits: usize,
    rate: f64,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<LogicalChannelEstimate>, MemoryError> {
    let noise = NoiseParams::new(rate)?;
    let horizon = times.iter().copied().fold(0.0, f64::max);
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        let bad = times.iter().copied().find(|t| !(t.is_finite() && *t >= 0.0)).unwrap_or(f64::NAN);
        return Err(crate::pauli::PauliError::InvalidDuration(bad).into());
    }
    let empty = vec![LogicalChannelEstimate::default(); times.len()];
    let out = par_trials(
        master_seed,
        trials,
        |stream| {
            let mut rng = stream.rng();
            let events = sample_noise_events(n_qubits.max(1), horizon, &noise, &mut rng)
                .expect("validated duration");
            times
                .iter()
                .map(|&t| {
                    let residual = events
                        .iter()
                        .take_while(|e| e.time <= t)
                        .filter(|e| e.qubit == 0)
                        .fold(Pauli::I, |acc, e| acc * e.pauli);
                    LogicalChannelEstimate::single(residual)
                })
                .collect::<Vec<_>>()
        },
        |a: Vec<LogicalChannelEstimate>, b| merge_vec(a, b),
    );
    Ok(if trials == 0 { empty } else { out })
}

pub(crate) fn merge_vec(a: Vec<LogicalChannelEstimate>, b: Vec<LogicalChannelEstimate>) -> Vec<LogicalChannelEstimate> {
    if a.is_empty() {
        return b;
    }
    if b.is_empty() {
        return a;
    }
    a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()
}

fn bit_flip_probability(t: f64, rate: f64) -> f64 {
    -(-rate * t).exp_m1() / 2.0
}

fn check_odd(n_bits: u64) -> Result<(), MemoryError> {
    if n_bits.is_multiple_of(2) {
        Err(MemoryError::EvenBits(n_bits))
    } else {
        Ok(())
    }
}

/// Majority-vote failure of `n_bits` copies, each flipped with probability
/// `(1 - e^{-rt})/2`. The number of flipped bits is drawn directly.
pub fn simulate_classical_repetition(
    n_bits: u64,
    t: f64,
    rate: f64,
    trials: u64,
    master_seed: u64,
) -> Result<BinomialEstimate, MemoryError> {
    check_odd(n_bits)?;
    NoiseParams::new(rate)?;
    let flips = Binomial::new(n_bits, bit_flip_probability(t.max(0.0), rate)).expect("valid probability");
    let failures = par_trials(
        master_seed,
        trials,
        |stream| u64::from(flips.sample(&mut stream.rng()) > n_bits / 2),
        |a, b| a + b,
    );
    Ok(BinomialEstimate::new(failures, trials))
}

/// Exact majority-vote failure `P[Bin(n, q) > n/2]`.
pub fn classical_failure_exact(n_bits: u64, t: f64, rate: f64) -> Result<f64, MemoryError> {
    check_odd(n_bits)?;
    let q = bit_flip_probability(t.max(0.0), rate);
    if q == 0.0 {
        return Ok(0.0);
    }
    let law = BinomialLaw::new(q, n_bits).expect("valid probability");
    Ok(law.sf(n_bits / 2))
}

fn bisect_time(mut f: impl FnMut(f64) -> f64, floor: f64) -> f64 {
    let mut hi = 1.0;
    while f(hi) < floor {
        hi *= 2.0;
        assert!(hi < 1e9, "failure floor never reached");
    }
    let mut lo = 0.0;
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < floor {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_failure_floor(floor: f64) -> Result<(), MemoryError> {
    if floor > 0.0 && floor < 0.5 {
        Ok(())
    } else {
        Err(MemoryError::InvalidFloor(floor))
    }
}

/// Time at which the exact majority-vote failure reaches `failure_floor`.
pub fn classical_lifetime_exact(n_bits: u64, rate: f64, failure_floor: f64) -> Result<f64, MemoryError> {
    check_odd(n_bits)?;
    check_failure_floor(failure_floor)?;
    NoiseParams::new(rate)?;
    Ok(bisect_time(
        |t| classical_failure_exact(n_bits, t, rate).expect("odd"),
        failure_floor,
    ))
}

/// Monte Carlo version of [`classical_lifetime_exact`]; every bisection
/// step reuses the same trial streams.
pub fn classical_lifetime(
    n_bits: u64,
    rate: f64,
    failure_floor: f64,
    trials: u64,
    master_seed: u64,
) -> Result<f64, MemoryError> {
    check_odd(n_bits)?;
    check_failure_floor(failure_floor)?;
    NoiseParams::new(rate)?;
    Ok(bisect_time(
        |t| {
            simulate_classical_repetition(n_bits, t, rate, trials, master_seed)
                .expect("validated")
                .p_hat()
        },
        failure_floor,
    ))
}

/// Circuit-model run: `rounds[j]` is the error of one level-`j+1` logical
/// qubit right after decode `j+1`; `retrieval[j]` is the residual after
/// additionally decoding every remaining level without further noise.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitRun {
    pub logical: LogicalChannelEstimate,
    pub rounds: Vec<LogicalChannelEstimate>,
    pub retrieval: Vec<LogicalChannelEstimate>,
}

impl CircuitRun {
    fn merge(self, o: Self) -> Self {
        Self {
            logical: self.logical.merge(o.logical),
            rounds: merge_vec(self.rounds, o.rounds),
            retrieval: merge_vec(self.retrieval, o.retrieval),
        }
    }
}

/// Instantaneous decoding of one level every `t_prot`, for `params.levels`
/// rounds.
pub fn simulate_circuit_model(params: &ProtocolParams, trials: u64, master_seed: u64) -> Result<CircuitRun, MemoryError> {
    let times: Vec<f64> = (1..=params.levels).map(|j| f64::from(j) * params.t_prot).collect();
    simulate_circuit_with_decode_times(params, &times, trials, master_seed)
}

/// Circuit model with level `j` decoded instantaneously at `decode_times[j-1]`.
pub fn simulate_circuit_with_decode_times(
    params: &ProtocolParams,
    decode_times: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<CircuitRun, MemoryError> {
    params.validate()?;
    let noise = NoiseParams::new(params.rate)?;
    let levels = params.levels as usize;
    if decode_times.len() != levels || decode_times.windows(2).any(|w| w[1] < w[0]) || decode_times.first().is_some_and(|&t| t < 0.0) {
        return Err(MemoryError::ScheduleInfeasible(
            "decode times must be one non-decreasing time per level".into(),
        ));
    }
    let table = DecoderTable::perfect();
    let n = params.physical_qubits();
    Ok(par_trials(
        master_seed,
        trials,
        |stream| {
            let mut rng = stream.rng();
            let mut frame = vec![Pauli::I; n];
            let mut prev = 0.0;
            let mut run = CircuitRun {
                logical: LogicalChannelEstimate::default(),
                rounds: Vec::with_capacity(levels),
                retrieval: Vec::with_capacity(levels),
            };
            for (j, &c) in decode_times.iter().enumerate() {
                depolarize_marginal(&mut frame, c - prev, &noise, &mut rng);
                prev = c;
                frame = table.decode_level(&frame);
                run.rounds.push(LogicalChannelEstimate::single(frame[0]));
                let mut rest = frame.clone();
                for _ in j + 1..levels {
                    rest = table.decode_level(&rest);
                }
                run.retrieval.push(LogicalChannelEstimate::single(rest[0]));
            }
            run.logical = LogicalChannelEstimate::single(frame[0]);
            run
        },
        CircuitRun::merge,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::b_exact;

    #[test]
    fn unprotected_at_zero_time_is_perfect() {
        let e = simulate_unprotected(0.0, 3, 1.0, 1000, 1).unwrap();
        assert_eq!(e.avg_fidelity(), 1.0);
    }

    #[test]
    fn unprotected_tracks_closed_form() {
        let times = [0.1, 0.5, 1.0, 2.0];
        let est = simulate_unprotected_grid(&times, 1, 1.0, 100_000, 2).unwrap();
        for (t, e) in times.iter().zip(&est) {
            let exact = (1.0 + (-t).exp()) / 2.0;
            assert!((e.avg_fidelity() - exact).abs() < 3.0 * e.fidelity_std_err().max(1e-4), "t={t}");
        }
    }

    #[test]
    fn grid_matches_single_time_runs() {
        let a = simulate_unprotected_grid(&[0.3, 0.9], 5, 1.0, 2000, 4).unwrap();
        let b = simulate_unprotected(0.9, 5, 1.0, 2000, 4).unwrap();
        assert_eq!(a[1], b);
    }

    #[test]
    fn repetition_single_bit() {
        let t = 0.7;
        let exact = classical_failure_exact(1, t, 1.0).unwrap();
        assert!((exact - (1.0 - (-t).exp()) / 2.0).abs() < 1e-15);
        let mc = simulate_classical_repetition(1, t, 1.0, 100_000, 3).unwrap();
        assert!(mc.wald_covers(exact, 3.0));
        assert!(matches!(simulate_classical_repetition(4, t, 1.0, 10, 3), Err(MemoryError::EvenBits(4))));
    }

    #[test]
    fn repetition_tail_against_direct_sum() {
        // Direct summation of the binomial tail in log space.
        let n = 101u64;
        let q = (1.0 - (-1.0f64).exp()) / 2.0;
        let mut tail = 0.0;
        for j in (n / 2 + 1)..=n {
            let ln_c: f64 = (1..=j).map(|i| ((n - j + i) as f64 / i as f64).ln()).sum();
            tail += (ln_c + j as f64 * q.ln() + (n - j) as f64 * (1.0 - q).ln()).exp();
        }
        let exact = classical_failure_exact(n, 1.0, 1.0).unwrap();
        assert!((exact - tail).abs() < 1e-12 * tail.max(1e-300) + 1e-15);
        assert!((exact - 6.1032e-5).abs() < 1e-8);
    }

    #[test]
    fn repetition_lifetime_exact_values() {
        let l = classical_lifetime_exact(11, 1.0, 0.1).unwrap();
        assert!((l - 1.00906).abs() < 1e-4, "{l}");
        assert!((classical_failure_exact(11, l, 1.0).unwrap() - 0.1).abs() < 1e-9);
    }

    #[test]
    fn circuit_model_without_noise() {
        let mut p = ProtocolParams::from_multipliers(1.0, 0.01, 0.5, 0.25, 0.05, 2).unwrap();
        p.rate = 0.0;
        let run = simulate_circuit_model(&p, 500, 1).unwrap();
        assert_eq!(run.logical.avg_fidelity(), 1.0);
        assert_eq!(run.rounds.len(), 2);
    }

    #[test]
    fn circuit_one_level_matches_enumeration() {
        // Only X, Y and Z events are errors: p = 3/4 (1 - e^{-r t}).
        let p = ProtocolParams::from_multipliers(1.0, 0.2, 0.5, 0.25, 0.05, 1).unwrap();
        let run = simulate_circuit_model(&p, 200_000, 9).unwrap();
        let q = 0.75 * (1.0 - (-p.t_prot).exp());
        let exact = b_exact(q).unwrap();
        assert!(run.logical.error().wald_covers(exact, 3.0), "{} vs {exact}", run.logical.error_rate());
        assert_eq!(run.rounds[0], run.logical);
        assert_eq!(run.retrieval[0], run.logical);
    }

    #[test]
    fn circuit_is_reproducible() {
        let p = ProtocolParams::from_multipliers(1.0, 0.05, 0.5, 0.25, 0.05, 2).unwrap();
        assert_eq!(simulate_circuit_model(&p, 300, 5).unwrap(), simulate_circuit_model(&p, 300, 5).unwrap());
    }
}
