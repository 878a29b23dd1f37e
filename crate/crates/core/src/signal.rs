//! Bit sequences, differential BPSK modulation, and the XOR network-code
//! reference.
//!
//! # Bit-to-phase mapping
//!
//! The differential encoder uses an **inverted** mapping relative to the
//! textbook DPSK convention:
//!
//! * coded bit `1` keeps the phase (`Δφ = 0`),
//! * coded bit `0` flips the phase (`Δφ = π`).
//!
//! Equivalently, `u(k) = u(k-1) * (2c(k) - 1)` with symbols `u ∈ {+1, -1}`.
//! So the all-ones coded sequence produces a constant symbol stream and the
//! all-zeros sequence a strictly alternating one. Everything downstream
//! (trellis transitions, hard decisions, oracles) assumes this polarity.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// What a bit sequence represents in the transmit chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitRole {
    /// Source information bits.
    Info,
    /// Output of an outer encoder (one codeword).
    Coded,
    /// Elementwise XOR of the two source codewords.
    XorCodeword,
}

/// A validated sequence over {0, 1} with a role tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSeq {
    bits: Vec<u8>,
    role: BitRole,
}

impl BitSeq {
    /// Builds a bit sequence, rejecting values outside {0, 1}.
    pub fn new(bits: Vec<u8>, role: BitRole) -> Result<Self> {
        for (index, &value) in bits.iter().enumerate() {
            if value > 1 {
                return Err(Error::InvalidBit { index, value });
            }
        }
        Ok(Self { bits, role })
    }

    pub fn info(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits, BitRole::Info)
    }

    pub fn coded(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits, BitRole::Coded)
    }

    pub fn xor_codeword(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits, BitRole::XorCodeword)
    }

    pub fn role(&self) -> BitRole {
        self.role
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }
}

/// A complex baseband symbol sequence with constant per-symbol energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSeq {
    symbols: Vec<Complex64>,
    energy: f64,
}

impl SymbolSeq {
    /// Wraps raw symbols, checking `|s|² = energy` for every entry.
    pub fn new(symbols: Vec<Complex64>, energy: f64) -> Result<Self> {
        if energy <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "energy",
                reason: format!("must be positive, got {energy}"),
            });
        }
        for (k, s) in symbols.iter().enumerate() {
            if (s.norm_sqr() - energy).abs() > 1e-9 * energy {
                return Err(Error::InvalidParameter {
                    name: "symbols",
                    reason: format!("|s({k})|² = {} != energy {energy}", s.norm_sqr()),
                });
            }
        }
        Ok(Self { symbols, energy })
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// One differentially-encoded transmit frame: a reference symbol followed by
/// `N` payload symbols, `N + 1` in total.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    symbols: SymbolSeq,
}

impl Frame {
    pub fn from_symbols(symbols: SymbolSeq) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyInput("frame symbols"));
        }
        Ok(Self { symbols })
    }

    /// The initial reference symbol u(0)√Es.
    pub fn reference_symbol(&self) -> Complex64 {
        self.symbols.symbols()[0]
    }

    /// The `N` differentially-encoded payload symbols.
    pub fn payload(&self) -> &[Complex64] {
        &self.symbols.symbols()[1..]
    }

    pub fn symbols(&self) -> &SymbolSeq {
        &self.symbols
    }

    /// Number of coded bits carried (total length minus the reference).
    pub fn coded_len(&self) -> usize {
        self.symbols.len() - 1
    }
}

/// Differentially encodes `coded` bits into `N + 1` BPSK symbols.
///
/// `u0` is the reference symbol sign (+1 or -1) and `es` the per-symbol
/// energy. Coded bit `c(k)` governs the transition from symbol `k` to
/// symbol `k + 1`: bit 1 repeats the previous symbol, bit 0 negates it
/// (see the module docs for why the mapping is inverted).
pub fn differential_encode(coded: &BitSeq, u0: i8, es: f64) -> Result<SymbolSeq> {
    if coded.is_empty() {
        return Err(Error::EmptyInput("coded bits"));
    }
    if u0 != 1 && u0 != -1 {
        return Err(Error::InvalidParameter {
            name: "u0",
            reason: format!("reference sign must be +1 or -1, got {u0}"),
        });
    }
    if es <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "es",
            reason: format!("symbol energy must be positive, got {es}"),
        });
    }

    let amp = es.sqrt();
    let mut symbols = Vec::with_capacity(coded.len() + 1);
    let mut u = f64::from(u0);
    symbols.push(Complex64::new(amp * u, 0.0));
    for &c in coded.bits() {
        u *= f64::from(2 * i16::from(c) - 1) as f64;
        symbols.push(Complex64::new(amp * u, 0.0));
    }
    SymbolSeq::new(symbols, es)
}

/// Inverts [`differential_encode`] by hard-deciding consecutive symbol signs.
///
/// Every symbol must be an antipodal point `±√Es` (real axis); anything else
/// is rejected.
pub fn differential_decode_hard(symbols: &SymbolSeq) -> Result<BitSeq> {
    if symbols.len() < 2 {
        return Err(Error::EmptyInput("symbol sequence needs at least 2 entries"));
    }
    let amp = symbols.energy().sqrt();
    let tol = 1e-9 * amp.max(1.0);

    let sign_of = |k: usize, s: &Complex64| -> Result<f64> {
        if s.im.abs() > tol || (s.re.abs() - amp).abs() > tol {
            return Err(Error::NonAntipodalSymbol(k));
        }
        Ok(if s.re > 0.0 { 1.0 } else { -1.0 })
    };

    let syms = symbols.symbols();
    let mut prev = sign_of(0, &syms[0])?;
    let mut bits = Vec::with_capacity(syms.len() - 1);
    for (k, s) in syms.iter().enumerate().skip(1) {
        let cur = sign_of(k, s)?;
        // Repeated sign means bit 1, a flip means bit 0.
        bits.push(if cur == prev { 1 } else { 0 });
        prev = cur;
    }
    BitSeq::coded(bits)
}

/// Elementwise XOR of two equal-length bit sequences; the relay's target
/// word when both sources use the same linear code.
pub fn xor_reference(c1: &BitSeq, c2: &BitSeq) -> Result<BitSeq> {
    if c1.len() != c2.len() {
        return Err(Error::LengthMismatch {
            context: "xor_reference",
            left: c1.len(),
            right: c2.len(),
        });
    }
    let bits = c1
        .bits()
        .iter()
        .zip(c2.bits())
        .map(|(&a, &b)| a ^ b)
        .collect();
    BitSeq::xor_codeword(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn re(seq: &SymbolSeq) -> Vec<f64> {
        seq.symbols().iter().map(|s| s.re).collect()
    }

    #[test]
    fn all_ones_is_identity_chain() {
        let c = BitSeq::coded(vec![1, 1, 1]).unwrap();
        let s = differential_encode(&c, 1, 1.0).unwrap();
        assert_eq!(re(&s), vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_bit_flips_phase() {
        let c = BitSeq::coded(vec![0]).unwrap();
        let s = differential_encode(&c, 1, 1.0).unwrap();
        assert_eq!(re(&s), vec![1.0, -1.0]);
    }

    #[test]
    fn two_flips_return_to_start() {
        let c = BitSeq::coded(vec![0, 0]).unwrap();
        let s = differential_encode(&c, 1, 1.0).unwrap();
        assert_eq!(re(&s), vec![1.0, -1.0, 1.0]);
    }

    #[test]
    fn all_zeros_alternates() {
        let c = BitSeq::coded(vec![0; 6]).unwrap();
        let s = differential_encode(&c, 1, 4.0).unwrap();
        assert_eq!(re(&s), vec![2.0, -2.0, 2.0, -2.0, 2.0, -2.0, 2.0]);
    }

    #[test]
    fn unit_energy_invariant() {
        let c = BitSeq::coded(vec![0, 1, 1, 0, 1]).unwrap();
        let s = differential_encode(&c, -1, 2.5).unwrap();
        for sym in s.symbols() {
            assert!((sym.norm_sqr() - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let empty = BitSeq::coded(vec![]).unwrap();
        assert!(differential_encode(&empty, 1, 1.0).is_err());
        let c = BitSeq::coded(vec![1]).unwrap();
        assert!(differential_encode(&c, 0, 1.0).is_err());
        assert!(differential_encode(&c, 1, 0.0).is_err());
        assert!(BitSeq::coded(vec![0, 2]).is_err());
    }

    #[test]
    fn hard_decode_examples() {
        let s = SymbolSeq::new(
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
            1.0,
        )
        .unwrap();
        assert_eq!(differential_decode_hard(&s).unwrap().bits(), &[0, 0]);

        let s = SymbolSeq::new(
            vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            1.0,
        )
        .unwrap();
        assert_eq!(differential_decode_hard(&s).unwrap().bits(), &[1]);
    }

    #[test]
    fn hard_decode_rejects_non_antipodal() {
        let s = SymbolSeq::new(
            vec![Complex64::new(0.6, 0.8), Complex64::new(1.0, 0.0)],
            1.0,
        )
        .unwrap();
        assert!(matches!(
            differential_decode_hard(&s),
            Err(Error::NonAntipodalSymbol(0))
        ));
    }

    #[test]
    fn round_trip_on_random_sequences() {
        let mut rng = crate::rng::derive_rng(0xD1FF, 0, 0);
        for trial in 0..1000 {
            let bits: Vec<u8> = (0..64).map(|_| rng.random_range(0..=1u8)).collect();
            let c = BitSeq::coded(bits.clone()).unwrap();
            let u0 = if rng.random::<bool>() { 1 } else { -1 };
            let s = differential_encode(&c, u0, 1.0).unwrap();
            let back = differential_decode_hard(&s).unwrap();
            assert_eq!(back.bits(), bits.as_slice(), "trial {trial}");
        }
    }

    #[test]
    fn xor_reference_examples() {
        let a = BitSeq::coded(vec![0, 1, 1, 0]).unwrap();
        let b = BitSeq::coded(vec![0, 1, 0, 1]).unwrap();
        assert_eq!(xor_reference(&a, &b).unwrap().bits(), &[0, 0, 1, 1]);
        assert_eq!(xor_reference(&a, &a).unwrap().bits(), &[0, 0, 0, 0]);
        let zero = BitSeq::coded(vec![0, 0, 0, 0]).unwrap();
        assert_eq!(xor_reference(&a, &zero).unwrap().bits(), a.bits());
    }

    #[test]
    fn xor_reference_length_mismatch() {
        let a = BitSeq::coded(vec![0, 1]).unwrap();
        let b = BitSeq::coded(vec![0]).unwrap();
        assert!(xor_reference(&a, &b).is_err());
    }

    #[test]
    fn frame_accessors() {
        let c = BitSeq::coded(vec![1, 0]).unwrap();
        let f = Frame::from_symbols(differential_encode(&c, 1, 1.0).unwrap()).unwrap();
        assert_eq!(f.reference_symbol().re, 1.0);
        assert_eq!(f.coded_len(), 2);
        assert_eq!(f.payload().len(), 2);
    }
}
