use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{anticommutes, pauli_mul, Pauli, PauliError};

/// An `n`-qubit Pauli operator modulo phase.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    sites: Vec<Pauli>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { sites: vec![Pauli::I; n] }
    }

    pub fn from_sites(sites: Vec<Pauli>) -> Self {
        Self { sites }
    }

    /// `pauli` on qubit `index`, identity elsewhere.
    pub fn single(n: usize, index: usize, pauli: Pauli) -> Result<Self, PauliError> {
        let mut s = Self::identity(n);
        s.set(index, pauli)?;
        Ok(s)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Pauli] {
        &self.sites
    }

    pub fn into_sites(self) -> Vec<Pauli> {
        self.sites
    }

    #[inline]
    pub fn get(&self, index: usize) -> Option<Pauli> {
        self.sites.get(index).copied()
    }

    pub fn set(&mut self, index: usize, pauli: Pauli) -> Result<(), PauliError> {
        let len = self.len();
        let site = self
            .sites
            .get_mut(index)
            .ok_or(PauliError::IndexOutOfRange { index, len })?;
        *site = pauli;
        Ok(())
    }

    /// Multiplies site `index` by `pauli` in place.
    pub fn mul_site(&mut self, index: usize, pauli: Pauli) -> Result<(), PauliError> {
        let len = self.len();
        let site = self
            .sites
            .get_mut(index)
            .ok_or(PauliError::IndexOutOfRange { index, len })?;
        *site = pauli_mul(*site, pauli);
        Ok(())
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        self.sites.iter().filter(|p| !p.is_identity()).count()
    }

    pub fn is_identity(&self) -> bool {
        self.sites.iter().all(|p| p.is_identity())
    }

    /// Sitewise product.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString, PauliError> {
        self.check_len(other)?;
        Ok(PauliString {
            sites: self
                .sites
                .iter()
                .zip(&other.sites)
                .map(|(&a, &b)| pauli_mul(a, b))
                .collect(),
        })
    }

    /// True iff the two operators anticommute (odd number of anticommuting sites).
    pub fn anticommutes_with(&self, other: &PauliString) -> Result<bool, PauliError> {
        self.check_len(other)?;
        Ok(self
            .sites
            .iter()
            .zip(&other.sites)
            .filter(|(&a, &b)| anticommutes(a, b))
            .count()
            % 2
            == 1)
    }

    fn check_len(&self, other: &PauliString) -> Result<(), PauliError> {
        if self.len() != other.len() {
            return Err(PauliError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Cyclic shift to the right by `k` sites.
    pub fn rotate_right(&self, k: usize) -> PauliString {
        let mut sites = self.sites.clone();
        if !sites.is_empty() {
            let k = k % sites.len();
            sites.rotate_right(k);
        }
        PauliString { sites }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.sites {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(Pauli::try_from)
            .collect::<Result<Vec<_>, _>>()
            .map(PauliString::from_sites)
    }
}

impl From<Vec<Pauli>> for PauliString {
    fn from(sites: Vec<Pauli>) -> Self {
        PauliString::from_sites(sites)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pauli_string(n: usize) -> impl Strategy<Value = PauliString> {
        proptest::collection::vec((0u8..4).prop_map(Pauli::from_bits), n)
            .prop_map(PauliString::from_sites)
    }

    #[test]
    fn parse_and_display() {
        let s: PauliString = "XZZXI".parse().unwrap();
        assert_eq!(s.to_string(), "XZZXI");
        assert_eq!(s.weight(), 4);
        assert_eq!(s.rotate_right(1).to_string(), "IXZZX");
    }

    #[test]
    fn anticommutation_of_strings() {
        let a: PauliString = "XXXXX".parse().unwrap();
        let b: PauliString = "ZZZZZ".parse().unwrap();
        assert!(a.anticommutes_with(&b).unwrap());
        let c: PauliString = "XZZXI".parse().unwrap();
        assert!(!a.anticommutes_with(&c).unwrap());
    }

    #[test]
    fn errors() {
        let mut s = PauliString::identity(3);
        assert_eq!(
            s.set(3, Pauli::X),
            Err(PauliError::IndexOutOfRange { index: 3, len: 3 })
        );
        assert!(s.mul(&PauliString::identity(2)).is_err());
    }

    proptest! {
        #[test]
        fn sitewise_product_is_commutative_and_involutive(
            (a, b) in (1usize..12).prop_flat_map(|n| (pauli_string(n), pauli_string(n)))
        ) {
            let ab = a.mul(&b).unwrap();
            prop_assert_eq!(&ab, &b.mul(&a).unwrap());
            prop_assert_eq!(ab.mul(&b).unwrap(), a.clone());
            prop_assert!(a.weight() <= a.len());
        }
    }
}
