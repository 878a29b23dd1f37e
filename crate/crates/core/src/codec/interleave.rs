//! The frame interleaver shared by both sources and the relay.
//!
//! Interleaving applies a fixed permutation: `out[k] = in[perm[k]]`.
//! Permutations commute with elementwise XOR, so the interleaved XOR of two
//! codewords equals the XOR of the interleaved codewords; the relay relies
//! on this transparency.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::derive_rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<u32>,
    inverse: Vec<u32>,
}

impl Interleaver {
    /// Wraps an explicit permutation of `0..len`, rejecting anything that
    /// is not a bijection.
    pub fn from_permutation(perm: Vec<u32>) -> Result<Self> {
        let len = perm.len();
        if len == 0 {
            return Err(Error::EmptyInput("permutation"));
        }
        let mut inverse = vec![u32::MAX; len];
        for (k, &p) in perm.iter().enumerate() {
            let p = p as usize;
            if p >= len {
                return Err(Error::Asset(format!(
                    "permutation entry {p} out of range 0..{len}"
                )));
            }
            if inverse[p] != u32::MAX {
                return Err(Error::Asset(format!("permutation repeats index {p}")));
            }
            inverse[p] = k as u32;
        }
        Ok(Self { perm, inverse })
    }

    pub fn identity(len: usize) -> Result<Self> {
        Self::from_permutation((0..len as u32).collect())
    }

    /// Fixed pseudorandom permutation: a Fisher-Yates shuffle driven by a
    /// ChaCha8 stream derived from `seed`. Identical `(len, seed)` always
    /// gives the identical permutation.
    pub fn pseudorandom(len: usize, seed: u64) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptyInput("permutation length"));
        }
        let mut perm: Vec<u32> = (0..len as u32).collect();
        let mut rng = derive_rng(seed, 0x504D, len as u64);
        perm.shuffle(&mut rng);
        Self::from_permutation(perm)
    }

    /// Parses a newline-separated list of indices.
    pub fn parse(text: &str) -> Result<Self> {
        let perm = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u32>()
                    .map_err(|_| Error::Asset(format!("bad permutation entry `{tok}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_permutation(perm)
    }

    /// Serializes as one index per line.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(self.perm.len() * 5);
        for p in &self.perm {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn interleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>> {
        if input.len() != self.perm.len() {
            return Err(Error::LengthMismatch {
                context: "interleave",
                left: input.len(),
                right: self.perm.len(),
            });
        }
        Ok(self.perm.iter().map(|&p| input[p as usize]).collect())
    }

    pub fn deinterleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>> {
        if input.len() != self.inverse.len() {
            return Err(Error::LengthMismatch {
                context: "deinterleave",
                left: input.len(),
                right: self.inverse.len(),
            });
        }
        Ok(self.inverse.iter().map(|&p| input[p as usize]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identity_leaves_data_unchanged() {
        let il = Interleaver::identity(8).unwrap();
        let data: Vec<u8> = (0..8).collect();
        assert_eq!(il.interleave(&data).unwrap(), data);
        assert_eq!(il.deinterleave(&data).unwrap(), data);
    }

    #[test]
    fn round_trip_on_random_data() {
        let il = Interleaver::pseudorandom(257, 5).unwrap();
        let mut rng = crate::rng::derive_rng(1, 0, 0);
        let data: Vec<u16> = (0..257).map(|_| rng.random()).collect();
        let mixed = il.interleave(&data).unwrap();
        assert_ne!(mixed, data);
        assert_eq!(il.deinterleave(&mixed).unwrap(), data);
    }

    #[test]
    fn xor_transparency() {
        let il = Interleaver::pseudorandom(64, 9).unwrap();
        let mut rng = crate::rng::derive_rng(2, 0, 0);
        let a: Vec<u8> = (0..64).map(|_| rng.random_range(0..=1)).collect();
        let b: Vec<u8> = (0..64).map(|_| rng.random_range(0..=1)).collect();
        let xored: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let lhs = il.interleave(&xored).unwrap();
        let rhs: Vec<u8> = il
            .interleave(&a)
            .unwrap()
            .iter()
            .zip(&il.interleave(&b).unwrap())
            .map(|(x, y)| x ^ y)
            .collect();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Interleaver::from_permutation(vec![0, 0, 2]).is_err());
        assert!(Interleaver::from_permutation(vec![0, 3]).is_err());
        assert!(Interleaver::from_permutation(vec![]).is_err());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let il = Interleaver::identity(4).unwrap();
        assert!(il.interleave(&[1u8, 2, 3]).is_err());
    }

    #[test]
    fn parse_serialize_round_trip() {
        let il = Interleaver::pseudorandom(32, 3).unwrap();
        let text = il.serialize();
        assert_eq!(Interleaver::parse(&text).unwrap(), il);
    }
}
