//! Qubit channels via Choi matrices, Pauli channels reconstructed from the
//! Monte Carlo noise sampler, and the oracle comparison.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    c, evolve_operator, hermitian_eigenvalues, lindblad_evolve, pauli_string_matrix, re, to_f64,
    zero_hamiltonian, CMatrix, DensityMatrix, OracleError, MAX_QUBITS,
};
use crate::num::{OracleScalar, Real};
use crate::pauli::{par_trials, sample_noise_events, NoiseParams, Pauli};

/// Single-qubit channel stored as its Choi matrix
/// `J = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|) / 2`, normalized to unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitChannel<T: OracleScalar> {
    choi: CMatrix<T>,
}

impl<T: OracleScalar> QubitChannel<T> {
    /// Builds the channel from its action on the four matrix units.
    pub fn from_fn(mut e: impl FnMut(&CMatrix<T>) -> CMatrix<T>) -> Self {
        let mut choi = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let mut unit = CMatrix::zeros(2, 2);
                unit[(i, j)] = re(T::one());
                let out = e(&unit) * re(T::lit(0.5));
                choi.view_mut((2 * i, 2 * j), (2, 2)).copy_from(&out);
            }
        }
        Self { choi }
    }

    pub fn identity() -> Self {
        Self::from_fn(|m| m.clone())
    }

    /// `ρ ↦ λρ + (1 - λ) tr(ρ) 1/2`.
    pub fn depolarizing(lambda: T) -> Self {
        Self::from_fn(|m| {
            let tr = m.trace();
            m * re(lambda) + CMatrix::identity(2, 2) * (tr * re((T::one() - lambda) * T::lit(0.5)))
        })
    }

    /// Channel of the single-qubit noise flow (with Hamiltonian `h`) over `t`.
    pub fn lindblad(h: &CMatrix<T>, rate: T, t: T, dt: T) -> Result<Self, OracleError> {
        let mut err = None;
        let ch = Self::from_fn(|m| match evolve_operator(m, h, 1, rate, t, dt) {
            Ok(x) => x,
            Err(e) => {
                err = Some(e);
                m.clone()
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(ch),
        }
    }

    pub fn choi(&self) -> &CMatrix<T> {
        &self.choi
    }

    pub fn apply(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let mut out = CMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                out += self.choi.view((2 * i, 2 * j), (2, 2)) * (rho[(i, j)] * re(T::lit(2.0)));
            }
        }
        out
    }

    /// Positive semidefinite Choi matrix and `tr_out J = 1/2`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let psd = hermitian_eigenvalues(&self.choi).into_iter().all(|x| to_f64(x) >= -tol);
        let mut tp = true;
        for i in 0..2 {
            for j in 0..2 {
                let block = self.choi.view((2 * i, 2 * j), (2, 2)).trace();
                let target = if i == j { T::lit(0.5) } else { T::zero() };
                tp &= to_f64(num_traits::Float::hypot(block.re - target, block.im)) <= tol;
            }
        }
        psd && tp
    }

    /// `⟨Φ|J|Φ⟩` with `|Φ⟩ = (|00⟩ + |11⟩)/√2`.
    pub fn entanglement_fidelity(&self) -> T {
        let j = &self.choi;
        ((j[(0, 0)] + j[(0, 3)] + j[(3, 0)] + j[(3, 3)]) * re(T::lit(0.5))).re
    }

    /// Haar-averaged fidelity, `(2 F_e + 1) / 3`.
    pub fn average_fidelity(&self) -> T {
        (T::lit(2.0) * self.entanglement_fidelity() + T::one()) / T::lit(3.0)
    }

    /// Average of `⟨ψ|E(ψ)|ψ⟩` over `n_states` points of a Fibonacci
    /// lattice on the Bloch sphere.
    pub fn average_fidelity_numeric(&self, n_states: usize) -> T {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let mut acc = T::zero();
        for i in 0..n_states {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n_states as f64;
            let rad = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let rho = bloch_state::<T>(rad * phi.cos(), rad * phi.sin(), z);
            acc += (&rho * self.apply(&rho)).trace().re;
        }
        acc / T::count(n_states as u64)
    }

    /// Positive partial transpose of the Choi matrix, which for qubit
    /// channels is equivalent to entanglement breaking.
    pub fn is_entanglement_breaking(&self) -> bool {
        self.min_partial_transpose_eigenvalue() >= T::lit(-1e-10)
    }

    pub fn min_partial_transpose_eigenvalue(&self) -> T {
        let mut pt = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let block = self.choi.view((2 * i, 2 * j), (2, 2)).transpose();
                pt.view_mut((2 * i, 2 * j), (2, 2)).copy_from(&block);
            }
        }
        hermitian_eigenvalues(&pt).into_iter().fold(T::infinity(), num_traits::Float::min)
    }
}

fn bloch_state<T: OracleScalar>(x: f64, y: f64, z: f64) -> CMatrix<T> {
    let h = 0.5;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            re(T::lit(h * (1.0 + z))),
            c(T::lit(h * x), T::lit(-h * y)),
            c(T::lit(h * x), T::lit(h * y)),
            re(T::lit(h * (1.0 - z))),
        ],
    )
}

/// Eigenstate of a product of Paulis: `basis[j]` selects X, Y or Z and
/// `signs[j]` the `±1` eigenvalue on qubit `j`.
pub fn pauli_eigenstate<T: OracleScalar>(basis: &[Pauli], plus: &[bool]) -> CMatrix<T> {
    basis.iter().zip(plus).fold(DMatrix::identity(1, 1), |acc, (&p, &s)| {
        let sgn = if s { 1.0 } else { -1.0 };
        let q = match p {
            Pauli::X => bloch_state::<T>(sgn, 0.0, 0.0),
            Pauli::Y => bloch_state::<T>(0.0, sgn, 0.0),
            _ => bloch_state::<T>(0.0, 0.0, sgn),
        };
        acc.kronecker(&q)
    })
}

/// `ρ ↦ Σ_P p_P P ρ P` on `n` qubits. Index `i` packs two bits per qubit,
/// qubit 0 lowest, as in the decoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliChannel<T: Real> {
    pub n_qubits: usize,
    pub probs: Vec<T>,
    pub trials: u64,
}

fn index_sites(n: usize, index: usize) -> Vec<Pauli> {
    (0..n).map(|j| Pauli::from_bits(((index >> (2 * j)) & 3) as u8)).collect()
}

impl<T: OracleScalar> PauliChannel<T> {
    pub fn from_counts(n_qubits: usize, counts: &[u64]) -> Self {
        let trials: u64 = counts.iter().sum();
        Self {
            n_qubits,
            probs: counts.iter().map(|&k| T::count(k) / T::count(trials.max(1))).collect(),
            trials,
        }
    }

    pub fn apply(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let dim = 1 << self.n_qubits;
        let mut out = CMatrix::zeros(dim, dim);
        for (i, &p) in self.probs.iter().enumerate() {
            if p == T::zero() {
                continue;
            }
            let m = pauli_string_matrix::<T>(&index_sites(self.n_qubits, i));
            out += &m * rho * &m * re(p);
        }
        out
    }
}

/// Histogram of the cumulative Pauli applied by the event sampler on
/// `n_qubits` over `t`. Fails if `1/√trials` exceeds `tol`.
pub fn mc_channel_tomography<T: OracleScalar>(
    n_qubits: usize,
    rate: f64,
    t: f64,
    trials: u64,
    master_seed: u64,
    tol: f64,
) -> Result<PauliChannel<T>, OracleError> {
    if !(1..=MAX_QUBITS).contains(&n_qubits) {
        return Err(OracleError::TooManyQubits(n_qubits));
    }
    if trials == 0 || 1.0 / (trials as f64).sqrt() > tol {
        return Err(OracleError::InsufficientTrials { trials, tol });
    }
    let noise = NoiseParams::new(rate).map_err(|_| OracleError::BadRate(rate))?;
    if !(t >= 0.0) {
        return Err(OracleError::BadStep { dt: 0.0, t });
    }
    let size = 1usize << (2 * n_qubits);
    let counts = par_trials(
        master_seed,
        trials,
        |stream| {
            let mut rng = stream.rng();
            let events = sample_noise_events(n_qubits, t, &noise, &mut rng).expect("validated duration");
            let mut index = 0usize;
            for e in events {
                index ^= (e.pauli.bits() as usize) << (2 * e.qubit);
            }
            let mut h = vec![0u64; size];
            h[index] = 1;
            h
        },
        |a: Vec<u64>, b: Vec<u64>| {
            if a.is_empty() {
                return b;
            }
            if b.is_empty() {
                return a;
            }
            a.iter().zip(&b).map(|(x, y)| x + y).collect()
        },
    );
    Ok(PauliChannel::from_counts(n_qubits, &counts))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub n_qubits: usize,
    pub rate: f64,
    pub t: f64,
    pub trials: u64,
    /// Max output trace distance over all `6^n` product Pauli eigenstates.
    pub distance: f64,
}

/// Compares a reconstructed Pauli channel with the Lindblad integration of
/// pure depolarizing noise on the same register.
pub fn compare_to_oracle<T: OracleScalar>(
    channel: &PauliChannel<T>,
    rate: T,
    t: T,
    dt: T,
) -> Result<OracleComparison, OracleError> {
    let n = channel.n_qubits;
    let h = zero_hamiltonian::<T>(n);
    let mut distance = 0.0f64;
    let axes = [Pauli::X, Pauli::Y, Pauli::Z];
    for code in 0..6usize.pow(n as u32) {
        let mut basis = Vec::with_capacity(n);
        let mut plus = Vec::with_capacity(n);
        let mut k = code;
        for _ in 0..n {
            basis.push(axes[(k % 6) / 2]);
            plus.push(k % 2 == 0);
            k /= 6;
        }
        let input = pauli_eigenstate::<T>(&basis, &plus);
        let rho = DensityMatrix::from_matrix(n, input.clone())?;
        let oracle = lindblad_evolve(&rho, &h, rate, t, dt)?;
        let mc = DensityMatrix::from_matrix(n, channel.apply(&input))?;
        distance = distance.max(to_f64(oracle.trace_distance(&mc)));
    }
    Ok(OracleComparison {
        n_qubits: n,
        rate: to_f64(rate),
        t: to_f64(t),
        trials: channel.trials,
        distance,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::avg_fidelity_depolarizing;

    type Ch = QubitChannel<f64>;

    #[test]
    fn identity_and_depolarizing_fidelity() {
        let id = Ch::identity();
        assert!(id.is_valid(1e-12));
        assert!((id.average_fidelity() - 1.0).abs() < 1e-15);
        assert!((id.average_fidelity_numeric(1000) - 1.0).abs() < 1e-12);
        let d = Ch::depolarizing(1.0 / 3.0);
        assert!((d.average_fidelity() - 2.0 / 3.0).abs() < 1e-12);
        assert!((d.average_fidelity_numeric(1000) - 2.0 / 3.0).abs() < 1e-3);
        for i in 0..=10 {
            let lambda = i as f64 / 10.0;
            let ch = Ch::depolarizing(lambda);
            let closed = avg_fidelity_depolarizing(lambda);
            assert!((ch.average_fidelity() - closed).abs() < 1e-12);
            assert!((ch.average_fidelity_numeric(1000) - closed).abs() < 1e-3);
        }
    }

    #[test]
    fn numeric_average_matches_exact_for_a_non_unital_channel() {
        // Amplitude damping is not covariant, so the average is non-trivial.
        let g: f64 = 0.3;
        let ch = Ch::from_fn(|m| {
            let k0 = DMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re((1.0 - g).sqrt())]);
            let k1 = DMatrix::from_row_slice(2, 2, &[re(0.0), re(g.sqrt()), re(0.0), re(0.0)]);
            &k0 * m * k0.adjoint() + &k1 * m * k1.adjoint()
        });
        assert!(ch.is_valid(1e-12));
        assert!((ch.average_fidelity_numeric(2000) - ch.average_fidelity()).abs() < 1e-3);
    }

    #[test]
    fn entanglement_breaking_threshold() {
        assert!(Ch::depolarizing(0.0).is_entanglement_breaking());
        let half = Ch::depolarizing(0.5);
        assert!(!half.is_entanglement_breaking());
        assert!((half.min_partial_transpose_eigenvalue() + 0.125).abs() < 1e-12);
        assert!(Ch::depolarizing(1.0 / 3.0).is_entanglement_breaking());
        assert!(!Ch::identity().is_entanglement_breaking());
    }

    #[test]
    fn lindblad_channel_is_depolarizing() {
        let t = 3f64.ln();
        let ch = Ch::lindblad(&zero_hamiltonian(1), 1.0, t, 0.001).unwrap();
        let d = Ch::depolarizing(1.0 / 3.0);
        assert!((ch.choi() - d.choi()).norm() < 1e-10);
        assert!(ch.is_entanglement_breaking());
    }

    #[test]
    fn tomography_at_zero_time_is_identity() {
        let ch = mc_channel_tomography::<f64>(2, 1.0, 0.0, 10_000, 1, 0.05).unwrap();
        assert_eq!(ch.probs[0], 1.0);
        let cmp = compare_to_oracle(&ch, 1.0, 0.0, 0.01).unwrap();
        assert!(cmp.distance < 1e-12);
    }

    #[test]
    fn tomography_identity_probability_at_ln3() {
        let ch = mc_channel_tomography::<f64>(1, 1.0, 3f64.ln(), 100_000, 4, 0.01).unwrap();
        // (1 + 3λ)/4 = 1/2 at λ = 1/3.
        assert!((ch.probs[0] - 0.5).abs() < 3.0 * (0.25f64 / 1e5).sqrt());
    }

    #[test]
    fn insufficient_trials() {
        assert!(matches!(
            mc_channel_tomography::<f64>(1, 1.0, 1.0, 100, 0, 5e-3),
            Err(OracleError::InsufficientTrials { .. })
        ));
        assert!(mc_channel_tomography::<f64>(4, 1.0, 1.0, 1_000_000, 0, 5e-3).is_err());
    }

    #[test]
    fn eigenstates_are_states() {
        let rho = pauli_eigenstate::<f64>(&[Pauli::X, Pauli::Y], &[true, false]);
        let d = DensityMatrix::from_matrix(2, rho).unwrap();
        assert!((d.purity() - 1.0).abs() < 1e-12);
        let y = pauli_string_matrix::<f64>(&[Pauli::I, Pauli::Y]);
        assert!((d.expectation(&y).re + 1.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn depolarizing_is_a_valid_channel(lambda in 0.0f64..=1.0) {
                let ch = QubitChannel::<f64>::depolarizing(lambda);
                prop_assert!(ch.is_valid(1e-12));
                prop_assert!((ch.average_fidelity() - avg_fidelity_depolarizing(lambda)).abs() < 1e-12);
                // PPT exactly when λ <= 1/3.
                if (lambda - 1.0 / 3.0).abs() > 1e-9 {
                    prop_assert_eq!(ch.is_entanglement_breaking(), lambda < 1.0 / 3.0);
                }
            }
        }
    }
}
