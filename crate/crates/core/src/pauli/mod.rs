//! Pauli algebra modulo phase, Pauli error frames and the depolarizing
//! noise sampler shared by every protocol simulation.

mod noise;
mod rng;
mod string;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use noise::{
    apply_events, depolarize_marginal, sample_noise_events, uniform_error, NoiseEvent, NoiseParams,
};
pub use rng::{par_trials, StreamRng, TrialRng};
pub use string::PauliString;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PauliError {
    #[error("qubit index {index} out of range for a {len}-qubit frame")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid Pauli symbol {0:?}")]
    InvalidSymbol(char),
    #[error("depolarizing rate must be finite and non-negative, got {0}")]
    InvalidRate(f64),
    #[error("duration must be finite and non-negative, got {0}")]
    InvalidDuration(f64),
}

/// Single-qubit Pauli operator modulo global phase.
///
/// Stored in symplectic form: bit 0 is the X component, bit 1 the Z
/// component, so multiplication is XOR.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    X = 1,
    Z = 2,
    Y = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const ERRORS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    #[inline]
    pub const fn from_bits(bits: u8) -> Pauli {
        match bits & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Z,
            _ => Pauli::Y,
        }
    }

    /// Builds a Pauli from its X and Z components.
    #[inline]
    pub const fn from_xz(x: bool, z: bool) -> Pauli {
        Pauli::from_bits((x as u8) | ((z as u8) << 1))
    }

    #[inline]
    pub const fn bits(self) -> u8 {
        self as u8
    }

    #[inline]
    pub const fn has_x(self) -> bool {
        self.bits() & 1 == 1
    }

    #[inline]
    pub const fn has_z(self) -> bool {
        self.bits() & 2 == 2
    }

    #[inline]
    pub const fn is_identity(self) -> bool {
        self.bits() == 0
    }

    /// Index in the `I, X, Y, Z` ordering used by reports.
    #[inline]
    pub const fn report_index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    pub const fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Product of two Paulis with the phase dropped.
#[inline]
pub const fn pauli_mul(a: Pauli, b: Pauli) -> Pauli {
    Pauli::from_bits(a.bits() ^ b.bits())
}

/// True iff `a` and `b` are distinct non-identity Paulis.
#[inline]
pub const fn anticommutes(a: Pauli, b: Pauli) -> bool {
    let (a, b) = (a.bits(), b.bits());
    ((a & 1) & (b >> 1)) ^ ((a >> 1) & (b & 1)) == 1
}

impl std::ops::Mul for Pauli {
    type Output = Pauli;

    fn mul(self, rhs: Pauli) -> Pauli {
        pauli_mul(self, rhs)
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl TryFrom<char> for Pauli {
    type Error = PauliError;

    fn try_from(c: char) -> Result<Self, Self::Error> {
        match c {
            'I' | 'i' | '_' => Ok(Pauli::I),
            'X' | 'x' => Ok(Pauli::X),
            'Y' | 'y' => Ok(Pauli::Y),
            'Z' | 'z' => Ok(Pauli::Z),
            other => Err(PauliError::InvalidSymbol(other)),
        }
    }
}

impl FromStr for Pauli {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Pauli::try_from(c),
            (Some(_), Some(c)) | (None, Some(c)) => Err(PauliError::InvalidSymbol(c)),
            (None, None) => Err(PauliError::InvalidSymbol(' ')),
        }
    }
}
