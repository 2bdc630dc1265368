//! Fixed-length bit strings.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A bit string, stored one bit per element, most-significant first.
///
/// Serializes as `"<len>:<hex>"` so that lengths which are not a multiple of
/// eight round-trip exactly.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits(vec![false; len])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Bits(bits)
    }

    /// Little helper for tests and configs: `"0110"` style strings.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Config(format!("invalid bit character `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bits)
    }

    /// The `len` low-order bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        Bits((0..len).rev().map(|i| i < 64 && (value >> i) & 1 == 1).collect())
    }

    pub fn to_u64(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Bits((0..len).map(|_| rng.random::<bool>()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.0[i] = v;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }

    pub fn parity(&self) -> bool {
        self.0.iter().fold(false, |acc, &b| acc ^ b)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| !b)
    }

    pub fn xor(&self, other: &Bits) -> Result<Bits> {
        if self.len() != other.len() {
            return Err(Error::Length { expected: self.len(), got: other.len() });
        }
        Ok(Bits(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }

    pub fn concat(&self, other: &Bits) -> Bits {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Bits(v)
    }

    pub fn slice(&self, start: usize, end: usize) -> Bits {
        Bits(self.0[start..end].to_vec())
    }

    pub fn check_len(&self, expected: usize) -> Result<()> {
        if self.len() == expected {
            Ok(())
        } else {
            Err(Error::Length { expected, got: self.len() })
        }
    }

    /// Packs into bytes, zero-padding the final byte on the right.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
            })
            .collect()
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() * 8 < len {
            return Err(Error::Length { expected: len, got: bytes.len() * 8 });
        }
        Ok(Bits((0..len).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1).collect()))
    }

    pub fn to_hex(&self) -> String {
        format!("{}:{}", self.len(), hex::encode(self.to_bytes()))
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let (len, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("malformed bit string `{s}`")))?;
        let len: usize = len
            .parse()
            .map_err(|_| Error::Config(format!("malformed bit length in `{s}`")))?;
        let bytes = hex::decode(body).map_err(|e| Error::Config(e.to_string()))?;
        Bits::from_bytes(&bytes, len)
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Bits(iter.into_iter().collect())
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Bits::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn u64_conversion_is_msb_first() {
        assert_eq!(Bits::from_u64(0b110, 3).to_string(), "110");
        assert_eq!(Bits::parse("0101").unwrap().to_u64(), 5);
    }

    #[test]
    fn xor_rejects_length_mismatch() {
        let a = Bits::zeros(3);
        let b = Bits::zeros(4);
        assert_eq!(a.xor(&b), Err(Error::Length { expected: 3, got: 4 }));
    }

    proptest! {
        #[test]
        fn hex_round_trip(v in proptest::collection::vec(any::<bool>(), 0..70)) {
            let bits = Bits::from_bools(v);
            prop_assert_eq!(Bits::from_hex(&bits.to_hex()).unwrap(), bits);
        }
    }
}
