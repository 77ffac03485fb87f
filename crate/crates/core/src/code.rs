//! The 5-qubit perfect code at the Pauli-frame level: syndrome extraction,
//! lookup-table decoding, recursive concatenation and the exact decoded
//! error function `B(p)`.
//!
//! Generators are `XZZXI` and its cyclic shifts, in the order
//! `XZZXI, IXZZX, XIXZZ, ZXIXZ`; syndrome bit `i` is set iff the error
//! anticommutes with generator `i`. The logical operators are `XXXXX` and
//! `ZZZZZ`. The residual logical Pauli gets its X component from
//! anticommutation with `ZZZZZ` and its Z component from anticommutation
//! with `XXXXX`.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::num::ring_count;
use crate::pauli::{par_trials, uniform_error, Pauli, PauliString};
use crate::stats::BinomialEstimate;

/// Block size of the code.
pub const BLOCK: usize = 5;
/// Number of five-qubit Pauli operators.
pub const BLOCK_PAULIS: usize = 1 << (2 * BLOCK);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("expected a {expected}-qubit operator, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("length {0} is not a power of 5")]
    NotPowerOfFive(usize),
    #[error("probability must lie in [0, 1], got {0}")]
    ProbabilityOutOfRange(f64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeSpec {
    pub generators: [PauliString; 4],
    pub logical_x: PauliString,
    pub logical_z: PauliString,
}

impl CodeSpec {
    pub fn perfect() -> Self {
        let g0: PauliString = "XZZXI".parse().expect("valid literal");
        Self {
            generators: [
                g0.clone(),
                g0.rotate_right(1),
                g0.rotate_right(2),
                g0.rotate_right(3),
            ],
            logical_x: "XXXXX".parse().expect("valid literal"),
            logical_z: "ZZZZZ".parse().expect("valid literal"),
        }
    }

    /// All 16 elements of the stabilizer group.
    pub fn stabilizer_group(&self) -> Vec<PauliString> {
        (0u8..16)
            .map(|mask| {
                self.generators
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .fold(PauliString::identity(BLOCK), |acc, (_, g)| {
                        acc.mul(g).expect("same length")
                    })
            })
            .collect()
    }

    pub fn syndrome_of(&self, e: &PauliString) -> Result<Syndrome, CodeError> {
        check_block(e)?;
        let mut bits = 0u8;
        for (i, g) in self.generators.iter().enumerate() {
            if e.anticommutes_with(g).expect("same length") {
                bits |= 1 << i;
            }
        }
        Ok(Syndrome(bits))
    }

    /// Logical class of an operator that commutes with every generator.
    fn logical_class(&self, e: &PauliString) -> Pauli {
        let x = e.anticommutes_with(&self.logical_z).expect("same length");
        let z = e.anticommutes_with(&self.logical_x).expect("same length");
        Pauli::from_xz(x, z)
    }
}

fn check_block(e: &PauliString) -> Result<(), CodeError> {
    if e.len() != BLOCK {
        return Err(CodeError::WrongLength {
            expected: BLOCK,
            got: e.len(),
        });
    }
    Ok(())
}

/// Four syndrome bits, bit `i` for generator `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syndrome(pub u8);

impl Syndrome {
    pub fn bits(self) -> [bool; 4] {
        [0, 1, 2, 3].map(|i| self.0 >> i & 1 == 1)
    }

    pub fn is_trivial(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Syndrome {
    /// Bits in generator order, `s0 s1 s2 s3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{}", b as u8)?;
        }
        Ok(())
    }
}

/// Packs a five-qubit operator into `0..1024`, two bits per site, qubit 0
/// in the lowest bits.
#[inline]
pub fn block_index(sites: &[Pauli]) -> usize {
    sites
        .iter()
        .enumerate()
        .fold(0usize, |acc, (i, p)| acc | (p.bits() as usize) << (2 * i))
}

pub fn block_from_index(index: usize) -> PauliString {
    PauliString::from_sites(
        (0..BLOCK)
            .map(|i| Pauli::from_bits((index >> (2 * i)) as u8))
            .collect(),
    )
}

/// Lookup-table decoder over all 1024 five-qubit Paulis.
#[derive(Clone, Debug)]
pub struct DecoderTable {
    spec: CodeSpec,
    syndrome: Vec<Syndrome>,
    correction: [usize; 16],
    residual: Vec<Pauli>,
}

impl DecoderTable {
    pub fn new(spec: CodeSpec) -> Self {
        let syndrome: Vec<Syndrome> = (0..BLOCK_PAULIS)
            .map(|i| spec.syndrome_of(&block_from_index(i)).expect("block length"))
            .collect();

        let mut correction = [usize::MAX; 16];
        for index in (0..BLOCK_PAULIS).filter(|&i| block_from_index(i).weight() <= 1) {
            let s = syndrome[index].0 as usize;
            assert_eq!(
                correction[s],
                usize::MAX,
                "weight <= 1 errors must have distinct syndromes"
            );
            correction[s] = index;
        }

        let residual = (0..BLOCK_PAULIS)
            .map(|index| {
                let fixed = index ^ correction[syndrome[index].0 as usize];
                spec.logical_class(&block_from_index(fixed))
            })
            .collect();

        Self {
            spec,
            syndrome,
            correction,
            residual,
        }
    }

    /// Shared table for the perfect code.
    pub fn perfect() -> &'static DecoderTable {
        static TABLE: OnceLock<DecoderTable> = OnceLock::new();
        TABLE.get_or_init(|| DecoderTable::new(CodeSpec::perfect()))
    }

    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    pub fn correction(&self, s: Syndrome) -> PauliString {
        block_from_index(self.correction[s.0 as usize & 15])
    }

    #[inline]
    pub fn syndrome_of_index(&self, index: usize) -> Syndrome {
        self.syndrome[index]
    }

    #[inline]
    pub fn residual_of_index(&self, index: usize) -> Pauli {
        self.residual[index]
    }

    pub fn decode_block(&self, e: &PauliString) -> Result<Pauli, CodeError> {
        check_block(e)?;
        Ok(self.residual[block_index(e.sites())])
    }

    /// Decodes one level: every consecutive 5-tuple collapses to its residual.
    pub fn decode_level(&self, frame: &[Pauli]) -> Vec<Pauli> {
        frame
            .chunks_exact(BLOCK)
            .map(|block| self.residual[block_index(block)])
            .collect()
    }

    /// Decodes `levels` nested levels of a frame of length `5^levels`.
    pub fn decode_concatenated(&self, e: &PauliString, levels: u32) -> Result<Pauli, CodeError> {
        let expected = BLOCK
            .checked_pow(levels)
            .ok_or(CodeError::NotPowerOfFive(e.len()))?;
        if e.len() != expected {
            return Err(if is_power_of_five(e.len()) {
                CodeError::WrongLength {
                    expected,
                    got: e.len(),
                }
            } else {
                CodeError::NotPowerOfFive(e.len())
            });
        }
        let mut frame = e.sites().to_vec();
        for _ in 0..levels {
            frame = self.decode_level(&frame);
        }
        Ok(frame[0])
    }

    /// Number of failing (non-identity residual) errors of each weight 0..=5.
    pub fn failures_by_weight(&self) -> [u64; BLOCK + 1] {
        let mut a = [0u64; BLOCK + 1];
        for index in 0..BLOCK_PAULIS {
            if !self.residual[index].is_identity() {
                a[block_from_index(index).weight()] += 1;
            }
        }
        a
    }
}

pub fn is_power_of_five(mut n: usize) -> bool {
    if n == 0 {
        return false;
    }
    while n.is_multiple_of(BLOCK) {
        n /= BLOCK;
    }
    n == 1
}

/// `B(p)` evaluated in any ring: the probability of a non-identity residual
/// when each qubit independently suffers X, Y or Z with probability `p/3`
/// each.
pub fn b_exact_in<T: Num + Clone>(p: &T) -> T {
    let a = DecoderTable::perfect().failures_by_weight();
    let three: T = ring_count(3);
    let third = p.clone() / three;
    let q = T::one() - p.clone();
    let mut total = T::zero();
    for (w, &count) in a.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let mut term: T = ring_count(count);
        for _ in 0..w {
            term = term * third.clone();
        }
        for _ in w..BLOCK {
            term = term * q.clone();
        }
        total = total + term;
    }
    total
}

pub fn b_exact(p: f64) -> Result<f64, CodeError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CodeError::ProbabilityOutOfRange(p));
    }
    Ok(b_exact_in(&p))
}

/// Exact monomial coefficients `c_j` of `B(p) = sum_j c_j p^j`, j = 0..=5.
pub fn b_coefficients() -> Vec<BigRational> {
    let a = DecoderTable::perfect().failures_by_weight();
    let mut coeffs = vec![BigRational::zero(); BLOCK + 1];
    let third = BigRational::new(BigInt::one(), BigInt::from(3));
    for (w, &count) in a.iter().enumerate() {
        // count * (p/3)^w * (1 - p)^(5 - w), expanded binomially.
        let scale = BigRational::from_integer(BigInt::from(count)) * pow(&third, w);
        let m = BLOCK - w;
        for j in 0..=m {
            let sign = if j % 2 == 0 { BigInt::one() } else { -BigInt::one() };
            let c = BigRational::from_integer(sign * binomial(m, j));
            coeffs[w + j] += scale.clone() * c;
        }
    }
    coeffs
}

fn pow(x: &BigRational, n: usize) -> BigRational {
    (0..n).fold(BigRational::one(), |acc, _| acc * x.clone())
}

fn binomial(n: usize, k: usize) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// Largest `p0` on a uniform grid of `steps` intervals over `[0, 1]` such
/// that `B(p) <= 10 p^2` at every grid point in `[0, p0]`.
pub fn quadratic_bound_validity(steps: usize) -> f64 {
    let mut last = 0.0;
    for i in 0..=steps {
        let p = i as f64 / steps as f64;
        if b_exact_in(&p) > 10.0 * p * p {
            break;
        }
        last = p;
    }
    last
}

/// Samples a five-qubit i.i.d. depolarizing error with total probability `p`.
pub fn sample_block_error<R: Rng + ?Sized>(p: f64, rng: &mut R) -> usize {
    let mut index = 0usize;
    for i in 0..BLOCK {
        if rng.random::<f64>() < p {
            let e = uniform_error(rng);
            index |= (e.bits() as usize) << (2 * i);
        }
    }
    index
}

/// Monte Carlo estimate of `B(p)`.
pub fn b_monte_carlo(p: f64, trials: u64, master_seed: u64) -> Result<BinomialEstimate, CodeError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CodeError::ProbabilityOutOfRange(p));
    }
    let table = DecoderTable::perfect();
    let failures = par_trials(
        master_seed,
        trials,
        |stream| {
            let mut rng = stream.rng();
            u64::from(!table.residual_of_index(sample_block_error(p, &mut rng)).is_identity())
        },
        |a, b| a + b,
    );
    Ok(BinomialEstimate::new(failures, trials))
}
