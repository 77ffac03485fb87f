use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{Pauli, PauliError, PauliString};

/// Depolarizing noise strength.
///
/// The noise is unravelled as a Poisson process of rate `rate` per qubit in
/// which every event applies a uniformly random element of `{I, X, Y, Z}`.
/// Over a time `t` this reproduces the depolarizing channel with
/// `lambda = exp(-rate * t)`. Classical clock bits see the same process as
/// bit flips at `rate / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    rate: f64,
}

impl NoiseParams {
    pub fn new(rate: f64) -> Result<Self, PauliError> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(PauliError::InvalidRate(rate));
        }
        Ok(Self { rate })
    }

    #[inline]
    pub fn rate(&self) -> f64 {
        self.rate
    }

    #[inline]
    pub fn clock_flip_rate(&self) -> f64 {
        self.rate / 2.0
    }

    /// `exp(-rate * t)`.
    #[inline]
    pub fn lambda(&self, t: f64) -> f64 {
        (-self.rate * t).exp()
    }

    /// Probability that at least one event hits a given qubit within `t`.
    #[inline]
    pub fn hit_probability(&self, t: f64) -> f64 {
        -(-self.rate * t).exp_m1()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseEvent {
    pub time: f64,
    pub qubit: usize,
    pub pauli: Pauli,
}

#[inline]
fn uniform_pauli<R: Rng + ?Sized>(rng: &mut R) -> Pauli {
    Pauli::from_bits(rng.random_range(0..4u8))
}

/// Uniform draw from `{X, Y, Z}`.
#[inline]
pub fn uniform_error<R: Rng + ?Sized>(rng: &mut R) -> Pauli {
    Pauli::ERRORS[rng.random_range(0..3usize)]
}

/// Samples the time-ordered noise events on `n_qubits` over `[0, duration]`.
///
/// Qubits are sampled one after another from the same generator, qubit 0
/// first, so the events of qubit 0 over a shorter duration are a prefix of
/// those over a longer one.
pub fn sample_noise_events<R: Rng + ?Sized>(
    n_qubits: usize,
    duration: f64,
    params: &NoiseParams,
    rng: &mut R,
) -> Result<Vec<NoiseEvent>, PauliError> {
    if !duration.is_finite() || duration < 0.0 {
        return Err(PauliError::InvalidDuration(duration));
    }
    let mut events = Vec::new();
    if duration == 0.0 || params.rate == 0.0 {
        return Ok(events);
    }
    let gap = Exp::new(params.rate).expect("positive rate");
    for qubit in 0..n_qubits {
        let mut time = gap.sample(rng);
        while time <= duration {
            events.push(NoiseEvent {
                time,
                qubit,
                pauli: uniform_pauli(rng),
            });
            time += gap.sample(rng);
        }
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(events)
}

/// Multiplies `frame` by every event, in order.
pub fn apply_events(frame: &PauliString, events: &[NoiseEvent]) -> Result<PauliString, PauliError> {
    let mut out = frame.clone();
    for e in events {
        out.mul_site(e.qubit, e.pauli)?;
    }
    Ok(out)
}

/// Applies the net effect of `duration` of noise to every site of `frame`.
///
/// Equal in law to sampling the events and multiplying them in: a product
/// of one or more uniform Paulis is uniform, so each site is hit with
/// probability `1 - exp(-rate * duration)` and then multiplied by a uniform
/// Pauli.
pub fn depolarize_marginal<R: Rng + ?Sized>(
    frame: &mut [Pauli],
    duration: f64,
    params: &NoiseParams,
    rng: &mut R,
) {
    let hit = params.hit_probability(duration.max(0.0));
    if hit <= 0.0 {
        return;
    }
    for site in frame.iter_mut() {
        if rng.random::<f64>() < hit {
            *site = *site * uniform_pauli(rng);
        }
    }
}
