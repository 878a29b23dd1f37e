//! Rate-1/2 feedforward convolutional code with generators (23, 35) octal,
//! memory 4, zero-terminated with four tail bits, and its BCJR soft-in
//! soft-out decoder.
//!
//! The 16-state trellis starts and ends in the zero state. A block of `K`
//! information bits encodes to `2(K + 4)` coded bits. The BCJR runs in the
//! linear probability domain with per-step renormalization and is the exact
//! bitwise MAP for the terminated trellis. LLR convention:
//! `L = log Pr(bit = 1) / Pr(bit = 0)`.

use crate::error::{Error, Result};

const MEMORY: usize = 4;
const NUM_STATES: usize = 1 << MEMORY;
const TAIL: usize = MEMORY;
/// Generator masks over the augmented register (input bit is the MSB).
const GEN1: usize = 0o23; // 1 0 0 1 1
const GEN2: usize = 0o35; // 1 1 1 0 1
/// Input LLR magnitudes are clamped here before conversion to probability.
const LLR_CLAMP: f64 = 50.0;

/// The (23,35) convolutional code with precomputed trellis tables.
#[derive(Debug, Clone)]
pub struct ConvCode {
    next_state: [[usize; 2]; NUM_STATES],
    output: [[(u8, u8); 2]; NUM_STATES],
}

/// BCJR soft-in soft-out output.
#[derive(Debug, Clone)]
pub struct SisoOutput {
    /// Posterior LLR per coded bit.
    pub posterior: Vec<f64>,
    /// `posterior - input` per coded bit.
    pub extrinsic: Vec<f64>,
    /// Hard decision on the information bits.
    pub hard_info: Vec<u8>,
}

impl Default for ConvCode {
    fn default() -> Self {
        Self::new()
    }
}

impl ConvCode {
    pub fn new() -> Self {
        let mut next_state = [[0usize; 2]; NUM_STATES];
        let mut output = [[(0u8, 0u8); 2]; NUM_STATES];
        for s in 0..NUM_STATES {
            for b in 0..2usize {
                let augmented = (b << MEMORY) | s;
                let y1 = (augmented & GEN1).count_ones() as u8 & 1;
                let y2 = (augmented & GEN2).count_ones() as u8 & 1;
                next_state[s][b] = augmented >> 1;
                output[s][b] = (y1, y2);
            }
        }
        Self { next_state, output }
    }

    /// Coded length for a given information length (termination included).
    pub fn coded_len(info_len: usize) -> usize {
        2 * (info_len + TAIL)
    }

    /// Information length recoverable from a coded length.
    pub fn info_len(coded_len: usize) -> Result<usize> {
        if coded_len % 2 != 0 || coded_len / 2 <= TAIL {
            return Err(Error::InvalidParameter {
                name: "coded_len",
                reason: format!("{coded_len} is not 2*(K + {TAIL}) for K >= 1"),
            });
        }
        Ok(coded_len / 2 - TAIL)
    }

    /// Feedforward encode with four zero tail bits.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.is_empty() {
            return Err(Error::EmptyInput("info bits"));
        }
        let mut out = Vec::with_capacity(Self::coded_len(info.len()));
        let mut state = 0usize;
        for (index, &bit) in info.iter().enumerate() {
            if bit > 1 {
                return Err(Error::InvalidBit { index, value: bit });
            }
            let (y1, y2) = self.output[state][bit as usize];
            out.push(y1);
            out.push(y2);
            state = self.next_state[state][bit as usize];
        }
        for _ in 0..TAIL {
            let (y1, y2) = self.output[state][0];
            out.push(y1);
            out.push(y2);
            state = self.next_state[state][0];
        }
        debug_assert_eq!(state, 0);
        Ok(out)
    }

    /// Recovers the information bits from a valid codeword, or `None` if
    /// `coded` is not a codeword (wrong parity stream or termination).
    ///
    /// Both generators have the current input as their leading tap, so the
    /// input sequence is recoverable symbol by symbol from the first parity
    /// stream; the second stream and the final state then verify membership.
    pub fn invert(&self, coded: &[u8]) -> Option<Vec<u8>> {
        let info_len = Self::info_len(coded.len()).ok()?;
        let steps = info_len + TAIL;
        let mut state = 0usize;
        let mut inputs = Vec::with_capacity(steps);
        for k in 0..steps {
            let y1 = coded[2 * k];
            let y2 = coded[2 * k + 1];
            if y1 > 1 || y2 > 1 {
                return None;
            }
            let b = (y1 as usize) ^ ((state & GEN1).count_ones() as usize & 1);
            let augmented = (b << MEMORY) | state;
            let y2_expected = (augmented & GEN2).count_ones() as u8 & 1;
            if y2_expected != y2 {
                return None;
            }
            inputs.push(b as u8);
            state = augmented >> 1;
        }
        if state != 0 || inputs[info_len..].iter().any(|&b| b != 0) {
            return None;
        }
        inputs.truncate(info_len);
        Some(inputs)
    }

    pub fn is_codeword(&self, coded: &[u8]) -> bool {
        self.invert(coded).is_some()
    }

    /// Exact bitwise MAP over the terminated trellis.
    ///
    /// `channel_llr` holds one LLR per coded bit; `prior`, when given, is
    /// added elementwise (both refer to coded bits). Extrinsic output is
    /// `posterior - (channel + prior)`.
    pub fn bcjr_siso(&self, channel_llr: &[f64], prior: Option<&[f64]>) -> Result<SisoOutput> {
        let info_len = Self::info_len(channel_llr.len())?;
        let steps = info_len + TAIL;
        if let Some(p) = prior {
            if p.len() != channel_llr.len() {
                return Err(Error::LengthMismatch {
                    context: "bcjr prior",
                    left: p.len(),
                    right: channel_llr.len(),
                });
            }
        }

        // Per-coded-bit probability of the bit being 1.
        let p1: Vec<f64> = channel_llr
            .iter()
            .enumerate()
            .map(|(j, &l)| {
                let total = l + prior.map_or(0.0, |p| p[j]);
                sigmoid(total.clamp(-LLR_CLAMP, LLR_CLAMP))
            })
            .collect();
        let bit_prob = |j: usize, bit: u8| if bit == 1 { p1[j] } else { 1.0 - p1[j] };

        let mut alpha = vec![[0.0f64; NUM_STATES]; steps + 1];
        alpha[0][0] = 1.0;
        for k in 0..steps {
            let inputs: &[usize] = if k < info_len { &[0, 1] } else { &[0] };
            let mut next = [0.0f64; NUM_STATES];
            for s in 0..NUM_STATES {
                let a = alpha[k][s];
                if a == 0.0 {
                    continue;
                }
                for &b in inputs {
                    let (y1, y2) = self.output[s][b];
                    let g = bit_prob(2 * k, y1) * bit_prob(2 * k + 1, y2);
                    next[self.next_state[s][b]] += a * g;
                }
            }
            normalize(&mut next, k)?;
            alpha[k + 1] = next;
        }

        let mut beta = vec![[0.0f64; NUM_STATES]; steps + 1];
        beta[steps][0] = 1.0;
        for k in (0..steps).rev() {
            let inputs: &[usize] = if k < info_len { &[0, 1] } else { &[0] };
            let mut cur = [0.0f64; NUM_STATES];
            for s in 0..NUM_STATES {
                let mut acc = 0.0;
                for &b in inputs {
                    let (y1, y2) = self.output[s][b];
                    let g = bit_prob(2 * k, y1) * bit_prob(2 * k + 1, y2);
                    acc += g * beta[k + 1][self.next_state[s][b]];
                }
                cur[s] = acc;
            }
            normalize(&mut cur, k)?;
            beta[k] = cur;
        }

        let mut posterior = vec![0.0f64; channel_llr.len()];
        let mut hard_info = vec![0u8; info_len];
        for k in 0..steps {
            let inputs: &[usize] = if k < info_len { &[0, 1] } else { &[0] };
            // Branch posteriors, marginalized per coded position and input.
            let mut coded_one = [0.0f64; 2];
            let mut total = 0.0f64;
            let mut input_one = 0.0f64;
            for s in 0..NUM_STATES {
                let a = alpha[k][s];
                if a == 0.0 {
                    continue;
                }
                for &b in inputs {
                    let (y1, y2) = self.output[s][b];
                    let g = bit_prob(2 * k, y1) * bit_prob(2 * k + 1, y2);
                    let w = a * g * beta[k + 1][self.next_state[s][b]];
                    total += w;
                    if y1 == 1 {
                        coded_one[0] += w;
                    }
                    if y2 == 1 {
                        coded_one[1] += w;
                    }
                    if b == 1 {
                        input_one += w;
                    }
                }
            }
            if !(total > 0.0) || !total.is_finite() {
                return Err(Error::ZeroNormalizer(k));
            }
            for j in 0..2 {
                posterior[2 * k + j] =
                    clamped_ratio(coded_one[j], total - coded_one[j]);
            }
            if k < info_len {
                hard_info[k] = u8::from(input_one * 2.0 > total);
            }
        }

        let extrinsic: Vec<f64> = posterior
            .iter()
            .enumerate()
            .map(|(j, &p)| p - channel_llr[j] - prior.map_or(0.0, |q| q[j]))
            .collect();

        Ok(SisoOutput {
            posterior,
            extrinsic,
            hard_info,
        })
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn clamped_ratio(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        -LLR_CLAMP
    } else if den <= 0.0 {
        LLR_CLAMP
    } else {
        (num / den).ln().clamp(-LLR_CLAMP, LLR_CLAMP)
    }
}

fn normalize(values: &mut [f64; NUM_STATES], step: usize) -> Result<()> {
    let sum: f64 = values.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::ZeroNormalizer(step));
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn all_zero_info_gives_all_zero_codeword() {
        let code = ConvCode::new();
        let cw = code.encode(&[0; 10]).unwrap();
        assert_eq!(cw.len(), ConvCode::coded_len(10));
        assert!(cw.iter().all(|&b| b == 0));
    }

    #[test]
    fn impulse_response_interleaves_the_generator_taps() {
        // Input 1 followed by zeros: the two output streams spell out the
        // taps of 23 and 35 octal, pairwise interleaved.
        let code = ConvCode::new();
        let cw = code.encode(&[1, 0, 0, 0, 0]).unwrap();
        let g1 = [1, 0, 0, 1, 1];
        let g2 = [1, 1, 1, 0, 1];
        for k in 0..5 {
            assert_eq!(cw[2 * k], g1[k], "y1 at step {k}");
            assert_eq!(cw[2 * k + 1], g2[k], "y2 at step {k}");
        }
    }

    #[test]
    fn encoder_is_linear() {
        let code = ConvCode::new();
        let mut rng = crate::rng::derive_rng(21, 0, 0);
        for _ in 0..50 {
            let a: Vec<u8> = (0..64).map(|_| rng.random_range(0..=1)).collect();
            let b: Vec<u8> = (0..64).map(|_| rng.random_range(0..=1)).collect();
            let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let ca = code.encode(&a).unwrap();
            let cb = code.encode(&b).unwrap();
            let cab = code.encode(&ab).unwrap();
            let xor: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
            assert_eq!(cab, xor);
        }
    }

    #[test]
    fn invert_recovers_info_and_rejects_noise() {
        let code = ConvCode::new();
        let mut rng = crate::rng::derive_rng(22, 0, 0);
        for _ in 0..50 {
            let info: Vec<u8> = (0..40).map(|_| rng.random_range(0..=1)).collect();
            let cw = code.encode(&info).unwrap();
            assert_eq!(code.invert(&cw).unwrap(), info);
            let mut corrupted = cw.clone();
            let flip = rng.random_range(0..corrupted.len());
            corrupted[flip] ^= 1;
            assert!(!code.is_codeword(&corrupted));
        }
    }

    #[test]
    fn bcjr_noiseless_input_recovers_info() {
        let code = ConvCode::new();
        let mut rng = crate::rng::derive_rng(23, 0, 0);
        let info: Vec<u8> = (0..32).map(|_| rng.random_range(0..=1)).collect();
        let cw = code.encode(&info).unwrap();
        let llr: Vec<f64> = cw.iter().map(|&b| if b == 1 { 20.0 } else { -20.0 }).collect();
        let out = code.bcjr_siso(&llr, None).unwrap();
        assert_eq!(out.hard_info, info);
    }

    #[test]
    fn bcjr_uniform_input_gives_zero_posteriors() {
        let code = ConvCode::new();
        let llr = vec![0.0; ConvCode::coded_len(16)];
        let out = code.bcjr_siso(&llr, None).unwrap();
        // Tail positions are biased toward zero by termination, but the
        // information-carrying positions see a balanced trellis.
        for k in 0..12 {
            // Away from the tail, coded posteriors stay essentially zero.
            assert!(out.posterior[2 * k].abs() < 1e-9, "pos {k}");
        }
    }

    #[test]
    fn bcjr_matches_exhaustive_map_on_short_block() {
        let code = ConvCode::new();
        let info_len = 8;
        let coded_len = ConvCode::coded_len(info_len);
        let mut rng = crate::rng::derive_rng(24, 0, 0);
        for trial in 0..20 {
            let llr: Vec<f64> = (0..coded_len).map(|_| rng.random_range(-4.0..4.0)).collect();
            let out = code.bcjr_siso(&llr, None).unwrap();

            // Brute force: enumerate all 2^8 info words.
            let p1: Vec<f64> = llr.iter().map(|&l| 1.0 / (1.0 + (-l).exp())).collect();
            let mut coded_one = vec![0.0f64; coded_len];
            let mut info_one = vec![0.0f64; info_len];
            let mut total = 0.0f64;
            for word in 0..(1usize << info_len) {
                let info: Vec<u8> = (0..info_len).map(|k| ((word >> k) & 1) as u8).collect();
                let cw = code.encode(&info).unwrap();
                let mut w = 1.0f64;
                for (j, &b) in cw.iter().enumerate() {
                    w *= if b == 1 { p1[j] } else { 1.0 - p1[j] };
                }
                total += w;
                for (j, &b) in cw.iter().enumerate() {
                    if b == 1 {
                        coded_one[j] += w;
                    }
                }
                for (k, &b) in info.iter().enumerate() {
                    if b == 1 {
                        info_one[k] += w;
                    }
                }
            }

            for j in 0..coded_len {
                let brute = coded_one[j] / total;
                let bcjr = 1.0 / (1.0 + (-out.posterior[j]).exp());
                assert!(
                    (brute - bcjr).abs() < 1e-9,
                    "trial {trial} coded bit {j}: {brute} vs {bcjr}"
                );
            }
            for k in 0..info_len {
                let brute = u8::from(info_one[k] * 2.0 > total);
                assert_eq!(brute, out.hard_info[k], "trial {trial} info bit {k}");
            }
        }
    }

    #[test]
    fn extrinsic_identity_holds() {
        let code = ConvCode::new();
        let mut rng = crate::rng::derive_rng(25, 0, 0);
        let llr: Vec<f64> = (0..ConvCode::coded_len(20))
            .map(|_| rng.random_range(-3.0..3.0))
            .collect();
        let prior: Vec<f64> = (0..llr.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let out = code.bcjr_siso(&llr, Some(&prior)).unwrap();
        for j in 0..llr.len() {
            assert!((out.extrinsic[j] + llr[j] + prior[j] - out.posterior[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn info_len_round_trip_and_errors() {
        assert_eq!(ConvCode::info_len(ConvCode::coded_len(504)).unwrap(), 504);
        assert!(ConvCode::info_len(9).is_err());
        assert!(ConvCode::info_len(8).is_err());
    }
}
