use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Binary variables `x_i ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct BinaryAssignment(Vec<u8>);

/// Ising spins `S_i ∈ {-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinAssignment(Vec<i8>);

impl BinaryAssignment {
    pub fn zeros(n: usize) -> Self {
        BinaryAssignment(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    /// Flip every bit; for a partition this swaps the two subsets.
    pub fn complement(&self) -> Self {
        BinaryAssignment(self.0.iter().map(|&b| 1 - b).collect())
    }

    pub fn to_spins(&self) -> SpinAssignment {
        SpinAssignment(self.0.iter().map(|&b| 2 * b as i8 - 1).collect())
    }

    /// Build from bits already known to be 0/1.
    pub(crate) fn from_bits_unchecked(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        BinaryAssignment(bits)
    }
}

impl SpinAssignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }

    pub fn to_binary(&self) -> BinaryAssignment {
        BinaryAssignment(self.0.iter().map(|&s| ((s + 1) / 2) as u8).collect())
    }

    pub(crate) fn from_spins_unchecked(spins: Vec<i8>) -> Self {
        debug_assert!(spins.iter().all(|&s| s == 1 || s == -1));
        SpinAssignment(spins)
    }
}

impl TryFrom<Vec<u8>> for BinaryAssignment {
    type Error = Error;

    fn try_from(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::invalid(format!(
                "binary value {} at position {pos} is not 0 or 1",
                bits[pos]
            )));
        }
        Ok(BinaryAssignment(bits))
    }
}

impl TryFrom<Vec<i8>> for SpinAssignment {
    type Error = Error;

    fn try_from(spins: Vec<i8>) -> Result<Self> {
        if let Some(pos) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::invalid(format!(
                "spin value {} at position {pos} is not -1 or +1",
                spins[pos]
            )));
        }
        Ok(SpinAssignment(spins))
    }
}

impl From<BinaryAssignment> for Vec<u8> {
    fn from(a: BinaryAssignment) -> Self {
        a.0
    }
}

impl From<SpinAssignment> for Vec<i8> {
    fn from(a: SpinAssignment) -> Self {
        a.0
    }
}

/// Map spins to bits via `q = (S + 1) / 2`.
pub fn spins_to_binary(spins: &[i8]) -> Result<BinaryAssignment> {
    Ok(SpinAssignment::try_from(spins.to_vec())?.to_binary())
}

/// Map bits to spins via `S = 2q - 1`.
pub fn binary_to_spins(bits: &[u8]) -> Result<SpinAssignment> {
    Ok(BinaryAssignment::try_from(bits.to_vec())?.to_spins())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn maps_spins_to_bits() {
        assert_eq!(spins_to_binary(&[1, -1]).unwrap().as_slice(), &[1, 0]);
        assert_eq!(
            spins_to_binary(&[-1, -1, -1]).unwrap().as_slice(),
            &[0, 0, 0]
        );
        assert_eq!(binary_to_spins(&[0, 1]).unwrap().as_slice(), &[-1, 1]);
    }

    #[test]
    fn rejects_out_of_alphabet() {
        assert!(matches!(
            spins_to_binary(&[1, 0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            binary_to_spins(&[2]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(serde_json::from_str::<BinaryAssignment>("[0,1,3]").is_err());
    }

    proptest! {
        #[test]
        fn spin_binary_round_trip(bits in prop::collection::vec(0u8..=1, 0..64)) {
            let spins = binary_to_spins(&bits).unwrap();
            let back = spins_to_binary(spins.as_slice()).unwrap();
            prop_assert_eq!(back.as_slice(), &bits[..]);
        }
    }
}
