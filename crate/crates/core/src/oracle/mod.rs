//! Dense density-matrix oracle for up to three qubits.
//!
//! Integrates `dρ/dt = -i[H, ρ] - r (n ρ - Σ_j tr_j(ρ) ⊗ 1_j/2)` with a
//! fixed-step fourth-order Runge–Kutta scheme. Qubit 0 is the leftmost
//! tensor factor, i.e. the most significant bit of a basis index.

mod channel;

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

use crate::num::{OracleScalar, Real};
use crate::pauli::Pauli;

pub use channel::{
    compare_to_oracle, mc_channel_tomography, pauli_eigenstate, OracleComparison, PauliChannel,
    QubitChannel,
};

/// Largest supported register.
pub const MAX_QUBITS: usize = 3;

pub type CMatrix<T> = DMatrix<Complex<T>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{0} qubits requested; the oracle supports 1..={MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("matrix is {rows}x{cols}, expected {dim}x{dim}")]
    Shape { rows: usize, cols: usize, dim: usize },
    #[error("{what} off by {value:e} (tolerance {tol:e}); reduce the step size")]
    Invariant { what: &'static str, value: f64, tol: f64 },
    #[error("step and duration must satisfy dt > 0, t >= 0 (dt = {dt}, t = {t})")]
    BadStep { dt: f64, t: f64 },
    #[error("{trials} trials cannot resolve a tolerance of {tol}")]
    InsufficientTrials { trials: u64, tol: f64 },
    #[error("noise rate must be non-negative, got {0}")]
    BadRate(f64),
}

#[inline]
pub(crate) fn c<T: OracleScalar>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn re<T: OracleScalar>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

fn to_f64<T: Real>(x: T) -> f64 {
    num_traits::ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
}

/// 2x2 matrix of a Pauli.
pub fn pauli_matrix<T: OracleScalar>(p: Pauli) -> CMatrix<T> {
    let (o, z) = (T::one(), T::zero());
    let m = match p {
        Pauli::I => [re(o), re(z), re(z), re(o)],
        Pauli::X => [re(z), re(o), re(o), re(z)],
        Pauli::Y => [re(z), c(z, -o), c(z, o), re(z)],
        Pauli::Z => [re(o), re(z), re(z), re(-o)],
    };
    DMatrix::from_row_slice(2, 2, &m)
}

/// Kronecker product of the single-qubit Paulis, qubit 0 leftmost.
pub fn pauli_string_matrix<T: OracleScalar>(sites: &[Pauli]) -> CMatrix<T> {
    sites.iter().fold(DMatrix::identity(1, 1), |acc, &p| acc.kronecker(&pauli_matrix(p)))
}

/// Real eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues<T: OracleScalar>(m: &CMatrix<T>) -> Vec<T> {
    let h = (m + m.adjoint()) * re(T::lit(0.5));
    h.symmetric_eigenvalues().iter().copied().collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: OracleScalar> {
    n_qubits: usize,
    m: CMatrix<T>,
}

fn check_qubits(n: usize) -> Result<usize, OracleError> {
    if (1..=MAX_QUBITS).contains(&n) {
        Ok(1 << n)
    } else {
        Err(OracleError::TooManyQubits(n))
    }
}

impl<T: OracleScalar> DensityMatrix<T> {
    /// Wraps a matrix after checking shape and the state invariants.
    pub fn from_matrix(n_qubits: usize, m: CMatrix<T>) -> Result<Self, OracleError> {
        let dim = check_qubits(n_qubits)?;
        if m.nrows() != dim || m.ncols() != dim {
            return Err(OracleError::Shape {
                rows: m.nrows(),
                cols: m.ncols(),
                dim,
            });
        }
        let rho = Self { n_qubits, m };
        rho.check_invariants(T::ORACLE_TOL)?;
        Ok(rho)
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self, OracleError> {
        let dim = check_qubits(n_qubits)?;
        Ok(Self {
            n_qubits,
            m: CMatrix::identity(dim, dim) * re(T::one() / T::count(dim as u64)),
        })
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn pure(n_qubits: usize, psi: &DVector<Complex<T>>) -> Result<Self, OracleError> {
        let dim = check_qubits(n_qubits)?;
        if psi.len() != dim {
            return Err(OracleError::Shape { rows: psi.len(), cols: 1, dim });
        }
        let psi = psi / re(psi.norm());
        Self::from_matrix(n_qubits, &psi * psi.adjoint())
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, OracleError> {
        let dim = check_qubits(n_qubits)?;
        let mut psi = DVector::zeros(dim);
        psi[index % dim] = re(T::one());
        Self::pure(n_qubits, &psi)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn trace(&self) -> Complex<T> {
        self.m.trace()
    }

    pub fn purity(&self) -> T {
        (&self.m * &self.m).trace().re
    }

    /// `tr(ρ O)`.
    pub fn expectation(&self, op: &CMatrix<T>) -> Complex<T> {
        (&self.m * op).trace()
    }

    pub fn min_eigenvalue(&self) -> T {
        hermitian_eigenvalues(&self.m).into_iter().fold(T::infinity(), num_traits::Float::min)
    }

    pub fn check_invariants(&self, tol: f64) -> Result<(), OracleError> {
        let herm = to_f64((&self.m - self.m.adjoint()).norm());
        let tr = self.trace();
        let trace_err = to_f64(num_traits::Float::hypot(tr.re - T::one(), tr.im));
        let neg = -to_f64(self.min_eigenvalue());
        for (what, value) in [("hermiticity", herm), ("trace", trace_err), ("positivity", neg)] {
            if !(value <= tol) {
                return Err(OracleError::Invariant { what, value, tol });
            }
        }
        Ok(())
    }

    /// `1/2 ‖ρ - σ‖_1`.
    pub fn trace_distance(&self, other: &Self) -> T {
        let half = T::lit(0.5);
        hermitian_eigenvalues(&(&self.m - &other.m))
            .into_iter()
            .fold(T::zero(), |acc, x| acc + num_traits::Float::abs(x))
            * half
    }

    /// `-tr(ρ log2 ρ)`, with `0 log 0 = 0`.
    pub fn von_neumann_entropy(&self) -> T {
        hermitian_eigenvalues(&self.m)
            .into_iter()
            .filter(|&x| x > T::zero())
            .fold(T::zero(), |acc, x| acc - x * num_traits::Float::log2(x))
    }

    /// `I(ρ) = n - S(ρ)`.
    pub fn information_content(&self) -> T {
        T::count(self.n_qubits as u64) - self.von_neumann_entropy()
    }
}

/// `-i[H, ρ] - r (n ρ - Σ_j tr_j(ρ) ⊗ 1_j/2)` for any operator `ρ`.
pub fn lindblad_rhs<T: OracleScalar>(rho: &CMatrix<T>, h: &CMatrix<T>, n_qubits: usize, rate: T) -> CMatrix<T> {
    let dim = rho.nrows();
    let minus_i = c(T::zero(), -T::one());
    let mut depol = rho * re(T::count(n_qubits as u64));
    let half = re(T::lit(0.5));
    for j in 0..n_qubits {
        let bit = 1usize << (n_qubits - 1 - j);
        for a in 0..dim {
            for b in 0..dim {
                if (a ^ b) & bit != 0 {
                    continue;
                }
                let (a0, b0) = (a & !bit, b & !bit);
                // (tr_j ρ ⊗ 1_j/2)[a, b]: trace out bit j, identity back in its slot.
                let reduced = (rho[(a0, b0)] + rho[(a0 | bit, b0 | bit)]) * half;
                depol[(a, b)] -= reduced;
            }
        }
    }
    (h * rho - rho * h) * minus_i - depol * re(rate)
}

/// RK4 propagation of an arbitrary operator for time `t` in steps `<= dt`.
pub fn evolve_operator<T: OracleScalar>(
    rho: &CMatrix<T>,
    h: &CMatrix<T>,
    n_qubits: usize,
    rate: T,
    t: T,
    dt: T,
) -> Result<CMatrix<T>, OracleError> {
    let (dtf, tf) = (to_f64(dt), to_f64(t));
    if !(dtf > 0.0 && tf >= 0.0 && tf.is_finite()) {
        return Err(OracleError::BadStep { dt: dtf, t: tf });
    }
    let steps = (tf / dtf).ceil().max(0.0) as u64;
    let mut x = rho.clone();
    if steps == 0 {
        return Ok(x);
    }
    let step = t / T::count(steps);
    let (half, sixth, two) = (re(step * T::lit(0.5)), re(step / T::lit(6.0)), re(T::lit(2.0)));
    let f = |m: &CMatrix<T>| lindblad_rhs(m, h, n_qubits, rate);
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&(&x + &k1 * half));
        let k3 = f(&(&x + &k2 * half));
        let k4 = f(&(&x + &k3 * re(step)));
        x += (k1 + (k2 + k3) * two + k4) * sixth;
    }
    Ok(x)
}

/// Evolves a state under a constant Hamiltonian and depolarizing noise.
pub fn lindblad_evolve<T: OracleScalar>(
    rho0: &DensityMatrix<T>,
    h: &CMatrix<T>,
    rate: T,
    t: T,
    dt: T,
) -> Result<DensityMatrix<T>, OracleError> {
    let dim = rho0.dim();
    if h.nrows() != dim || h.ncols() != dim {
        return Err(OracleError::Shape {
            rows: h.nrows(),
            cols: h.ncols(),
            dim,
        });
    }
    if !(to_f64(rate) >= 0.0) {
        return Err(OracleError::BadRate(to_f64(rate)));
    }
    let m = evolve_operator(&rho0.m, h, rho0.n_qubits, rate, t, dt)?;
    let out = DensityMatrix {
        n_qubits: rho0.n_qubits,
        m,
    };
    out.check_invariants(T::ORACLE_TOL)?;
    Ok(out)
}

pub fn zero_hamiltonian<T: OracleScalar>(n_qubits: usize) -> CMatrix<T> {
    let dim = 1 << n_qubits;
    CMatrix::zeros(dim, dim)
}

/// Result of checking `dI/dt <= -r I` along a noise-only trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayCheck {
    /// Largest `dI/dt + r I` seen (non-positive when the inequality holds).
    pub max_excess: f64,
    pub points: usize,
}

/// Central finite differences of `I(ρ(t))` at `points` equally spaced times
/// in `(0, t_end]`, with RK4 steps of `h`.
pub fn information_decay_check<T: OracleScalar>(
    rho0: &DensityMatrix<T>,
    rate: T,
    t_end: T,
    points: usize,
    h: T,
) -> Result<DecayCheck, OracleError> {
    let zero_h = zero_hamiltonian(rho0.n_qubits());
    let spacing = t_end / T::count(points as u64);
    let mut state = rho0.clone();
    let mut clock = T::zero();
    let mut max_excess = f64::NEG_INFINITY;
    for i in 1..=points {
        let target = spacing * T::count(i as u64) - h;
        state = lindblad_evolve(&state, &zero_h, rate, target - clock, h)?;
        let before = state.information_content();
        let mid = lindblad_evolve(&state, &zero_h, rate, h, h)?;
        let after = lindblad_evolve(&mid, &zero_h, rate, h, h)?;
        let derivative = (after.information_content() - before) / (T::lit(2.0) * h);
        let excess = derivative + rate * mid.information_content();
        max_excess = max_excess.max(to_f64(excess));
        state = mid;
        clock = target + h;
    }
    Ok(DecayCheck { max_excess, points })
}

/// Random full-rank state `A A† / tr(A A†)` with Gaussian `A`.
pub fn random_state<T: OracleScalar, R: rand::Rng + ?Sized>(
    n_qubits: usize,
    rng: &mut R,
) -> Result<DensityMatrix<T>, OracleError> {
    use rand_distr::{Distribution, StandardNormal};
    let dim = check_qubits(n_qubits)?;
    let a = CMatrix::<T>::from_fn(dim, dim, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        let y: f64 = StandardNormal.sample(rng);
        c(T::lit(x), T::lit(y))
    });
    let m = &a * a.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_matrix(n_qubits, m * re(T::one() / tr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::StreamRng;

    type D = DensityMatrix<f64>;

    #[test]
    fn maximally_mixed_is_fixed() {
        for n in 1..=3 {
            let rho = D::maximally_mixed(n).unwrap();
            let out = lindblad_evolve(&rho, &zero_hamiltonian(n), 1.0, 1.0, 0.01).unwrap();
            assert!(rho.trace_distance(&out) < 1e-13);
        }
        assert!(D::maximally_mixed(4).is_err());
    }

    #[test]
    fn single_qubit_polarization_and_purity() {
        let rho = D::basis(1, 0).unwrap();
        let z = pauli_matrix::<f64>(Pauli::Z);
        for t in [0.25, 1.0, 2.0] {
            let out = lindblad_evolve(&rho, &zero_hamiltonian(1), 1.0, t, 0.01).unwrap();
            assert!((out.expectation(&z).re - (-t).exp()).abs() < 1e-9);
            assert!((out.purity() - (1.0 + (-2.0 * t).exp()) / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let rho = D::basis(1, 0).unwrap();
        let z = pauli_matrix::<f64>(Pauli::Z);
        let exact = (-1.0f64).exp();
        let err = |dt: f64| {
            let out = lindblad_evolve(&rho, &zero_hamiltonian(1), 1.0, 1.0, dt).unwrap();
            (out.expectation(&z).re - exact).abs()
        };
        let ratio = err(0.2) / err(0.1);
        assert!((ratio - 16.0).abs() < 2.0, "{ratio}");
    }

    #[test]
    fn hamiltonian_rotation_without_noise() {
        // H = (ω/2) X rotates |0⟩ about x: ⟨Z⟩ = cos ωt.
        let w = 2.0;
        let h = pauli_matrix::<f64>(Pauli::X) * re(w / 2.0);
        let out = lindblad_evolve(&D::basis(1, 0).unwrap(), &h, 0.0, 0.7, 0.001).unwrap();
        let z = pauli_matrix::<f64>(Pauli::Z);
        assert!((out.expectation(&z).re - (w * 0.7f64).cos()).abs() < 1e-10);
        assert!((out.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn invariants_hold_for_entangled_and_random_states() {
        let mut rng = StreamRng::new(1, 0).rng();
        let mut bell = DVector::zeros(4);
        bell[0] = re(1.0);
        bell[3] = re(1.0);
        let states = [D::pure(2, &bell).unwrap(), random_state(3, &mut rng).unwrap()];
        for rho in &states {
            let h = zero_hamiltonian(rho.n_qubits());
            lindblad_evolve(rho, &h, 1.3, 1.5, 0.01).unwrap();
        }
    }

    #[test]
    fn large_steps_are_reported() {
        let rho = D::basis(1, 0).unwrap();
        let r = lindblad_evolve(&rho, &zero_hamiltonian(1), 100.0, 1.0, 0.5);
        assert!(matches!(r, Err(OracleError::Invariant { .. })), "{r:?}");
        assert!(lindblad_evolve(&rho, &zero_hamiltonian(1), 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn entropy_extremes() {
        let pure = D::basis(2, 1).unwrap();
        assert!(pure.von_neumann_entropy().abs() < 1e-12);
        assert!((pure.information_content() - 2.0).abs() < 1e-12);
        let mixed = D::maximally_mixed(2).unwrap();
        assert!((mixed.von_neumann_entropy() - 2.0).abs() < 1e-12);
        assert!(mixed.information_content().abs() < 1e-12);
    }

    #[test]
    fn information_decays_at_least_at_rate_r() {
        let mut rng = StreamRng::new(2, 0).rng();
        for _ in 0..3 {
            let rho: D = random_state(2, &mut rng).unwrap();
            let check = information_decay_check(&rho, 1.0, 2.0, 10, 1e-3).unwrap();
            assert!(check.max_excess <= 1e-6, "{check:?}");
        }
    }

    #[test]
    fn f32_oracle_runs() {
        let rho = DensityMatrix::<f32>::basis(1, 0).unwrap();
        let out = lindblad_evolve(&rho, &zero_hamiltonian(1), 1.0f32, 1.0, 0.01).unwrap();
        let z = pauli_matrix::<f32>(Pauli::Z);
        assert!((out.expectation(&z).re - (-1.0f32).exp()).abs() < 1e-5);
    }

    #[test]
    fn pauli_matrices_multiply_like_the_group() {
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let prod = pauli_matrix::<f64>(a) * pauli_matrix::<f64>(b);
                let target = pauli_matrix::<f64>(a * b);
                // Equal up to a phase in {±1, ±i}.
                let phase = (target.adjoint() * &prod).trace() / re(2.0);
                assert!((phase.norm() - 1.0).abs() < 1e-12);
                assert!((prod - target * phase).norm() < 1e-12);
            }
        }
    }
}
