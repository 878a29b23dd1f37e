//! LDPC encoding and sum-product decoding.
//!
//! The encoder is built by reducing the parity-check matrix to reduced
//! row-echelon form over GF(2). Information bits occupy the non-pivot
//! columns (in ascending order) and each pivot bit is the XOR of the
//! information bits selected by its reduced row, so `H·cᵀ = 0` holds by
//! construction. A rank-deficient matrix is still usable: the information
//! length grows to `n - rank` and the deficiency is recorded on the code.
//!
//! Decoding is the standard flooding sum-product algorithm on the Tanner
//! graph with the tanh rule, early exit on a satisfied syndrome, and
//! extrinsic output `posterior - channel`. LLR convention:
//! `L = log Pr(bit = 1) / Pr(bit = 0)`.

use crate::codec::alist::SparseBinaryMatrix;
use crate::error::{Error, Result};

/// Internal clamp on message magnitudes; keeps atanh finite.
const MSG_CLAMP: f64 = 40.0;

/// One LDPC code instance with its derived systematic encoder.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    matrix: SparseBinaryMatrix,
    rank: usize,
    /// Pivot column of each reduced row, ascending.
    pivot_cols: Vec<u32>,
    /// Non-pivot (information) columns, ascending.
    info_cols: Vec<u32>,
    /// Reduced rows as bitsets over all columns.
    reduced_rows: Vec<Vec<u64>>,
    /// Flattened check-to-variable adjacency for the decoder.
    row_offsets: Vec<u32>,
    row_vars: Vec<u32>,
    /// Edge ids incident to each variable.
    var_edges: Vec<Vec<u32>>,
}

/// Sum-product decoder output.
#[derive(Debug, Clone)]
pub struct SpaOutput {
    /// Posterior LLR per coded bit.
    pub posterior: Vec<f64>,
    /// `posterior - channel` per coded bit.
    pub extrinsic: Vec<f64>,
    /// Hard decision per coded bit.
    pub hard: Vec<u8>,
    /// Whether the hard decision satisfies every check.
    pub converged: bool,
    /// Iterations actually run (1-based; equals the iteration of the early
    /// exit, or the maximum).
    pub iterations: usize,
}

impl LdpcCode {
    /// Builds a code from its parity-check matrix, deriving the encoder.
    pub fn from_matrix(matrix: SparseBinaryMatrix) -> Result<Self> {
        let n = matrix.cols();
        let m = matrix.rows();
        let words = n.div_ceil(64);

        // Dense GF(2) Gaussian elimination to reduced row-echelon form.
        let mut rows: Vec<Vec<u64>> = (0..m)
            .map(|r| {
                let mut row = vec![0u64; words];
                for &c in matrix.row(r) {
                    row[c as usize / 64] |= 1u64 << (c % 64);
                }
                row
            })
            .collect();

        let mut pivot_cols = Vec::new();
        let mut rank = 0usize;
        for col in 0..n {
            let (w, b) = (col / 64, 1u64 << (col % 64));
            let Some(pivot) = (rank..m).find(|&r| rows[r][w] & b != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[w] & b != 0 {
                    for (dst, src) in row.iter_mut().zip(&pivot_row) {
                        *dst ^= src;
                    }
                }
            }
            pivot_cols.push(col as u32);
            rank += 1;
            if rank == m {
                break;
            }
        }
        rows.truncate(rank);

        let pivot_set: std::collections::HashSet<u32> = pivot_cols.iter().copied().collect();
        let info_cols: Vec<u32> = (0..n as u32).filter(|c| !pivot_set.contains(c)).collect();

        // Flatten adjacency for the decoder.
        let mut row_offsets = Vec::with_capacity(m + 1);
        let mut row_vars = Vec::new();
        row_offsets.push(0u32);
        for r in 0..m {
            row_vars.extend_from_slice(matrix.row(r));
            row_offsets.push(row_vars.len() as u32);
        }
        let mut var_edges = vec![Vec::new(); n];
        for (e, &v) in row_vars.iter().enumerate() {
            var_edges[v as usize].push(e as u32);
        }

        Ok(Self {
            matrix,
            rank,
            pivot_cols,
            info_cols,
            reduced_rows: rows,
            row_offsets,
            row_vars,
            var_edges,
        })
    }

    /// Codeword length.
    pub fn n(&self) -> usize {
        self.matrix.cols()
    }

    /// Information length, `n - rank`.
    pub fn k(&self) -> usize {
        self.n() - self.rank
    }

    /// GF(2) rank of the parity-check matrix.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &SparseBinaryMatrix {
        &self.matrix
    }

    /// Columns holding information bits in [`encode`](Self::encode) output.
    pub fn info_columns(&self) -> &[u32] {
        &self.info_cols
    }

    /// Systematic encode: places `info` on the non-pivot columns and solves
    /// each pivot bit from its reduced row.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::LengthMismatch {
                context: "ldpc info length",
                left: info.len(),
                right: self.k(),
            });
        }
        let n = self.n();
        let words = n.div_ceil(64);
        let mut cw = vec![0u64; words];
        for (&col, &bit) in self.info_cols.iter().zip(info) {
            if bit > 1 {
                return Err(Error::InvalidBit {
                    index: col as usize,
                    value: bit,
                });
            }
            if bit == 1 {
                cw[col as usize / 64] |= 1u64 << (col % 64);
            }
        }
        for (row, &pivot) in self.reduced_rows.iter().zip(&self.pivot_cols) {
            // Pivot bit is still zero here, so the row product is the XOR
            // of the selected information bits.
            let parity = row
                .iter()
                .zip(&cw)
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                & 1;
            if parity == 1 {
                cw[pivot as usize / 64] |= 1u64 << (pivot % 64);
            }
        }
        Ok((0..n).map(|c| ((cw[c / 64] >> (c % 64)) & 1) as u8).collect())
    }

    /// Checks `H·cᵀ = 0`.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        if bits.len() != self.n() {
            return false;
        }
        (0..self.matrix.rows()).all(|r| {
            self.matrix
                .row(r)
                .iter()
                .fold(0u8, |acc, &v| acc ^ bits[v as usize])
                == 0
        })
    }

    /// Flooding sum-product decode.
    pub fn spa_decode(&self, channel_llr: &[f64], max_iterations: usize) -> Result<SpaOutput> {
        let n = self.n();
        if channel_llr.len() != n {
            return Err(Error::LengthMismatch {
                context: "ldpc channel LLRs",
                left: channel_llr.len(),
                right: n,
            });
        }
        if max_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iterations",
                reason: "must be at least 1".into(),
            });
        }

        let num_edges = self.row_vars.len();
        let mut v2c = vec![0.0f64; num_edges];
        let mut c2v = vec![0.0f64; num_edges];
        for (e, &v) in self.row_vars.iter().enumerate() {
            v2c[e] = channel_llr[v as usize];
        }

        let mut posterior = vec![0.0f64; n];
        let mut hard = vec![0u8; n];
        let mut converged = false;
        let mut iterations = 0;

        for it in 1..=max_iterations {
            iterations = it;

            // Check update: tanh product with zero tracking. The XOR
            // marginalization carries a (-1)^deg sign under the
            // L = log(p1/p0) convention.
            for r in 0..self.matrix.rows() {
                let span = self.row_offsets[r] as usize..self.row_offsets[r + 1] as usize;
                let deg = span.len();
                let sign = if deg % 2 == 0 { 1.0 } else { -1.0 };
                let mut product = 1.0f64;
                let mut zeros = 0usize;
                let mut zero_at = usize::MAX;
                for e in span.clone() {
                    let t = (v2c[e].clamp(-MSG_CLAMP, MSG_CLAMP) / 2.0).tanh();
                    if t == 0.0 {
                        zeros += 1;
                        zero_at = e;
                        if zeros > 1 {
                            break;
                        }
                    } else {
                        product *= t;
                    }
                }
                for e in span {
                    let others = match zeros {
                        0 => {
                            let t = (v2c[e].clamp(-MSG_CLAMP, MSG_CLAMP) / 2.0).tanh();
                            product / t
                        }
                        1 if e == zero_at => product,
                        _ => 0.0,
                    };
                    let arg = (sign * others).clamp(-(1.0 - 1e-15), 1.0 - 1e-15);
                    c2v[e] = (2.0 * arg.atanh()).clamp(-MSG_CLAMP, MSG_CLAMP);
                }
            }

            // Variable update and posterior.
            for v in 0..n {
                let total: f64 = self.var_edges[v].iter().map(|&e| c2v[e as usize]).sum();
                posterior[v] = channel_llr[v] + total;
                hard[v] = u8::from(posterior[v] > 0.0);
                for &e in &self.var_edges[v] {
                    v2c[e as usize] = posterior[v] - c2v[e as usize];
                }
            }

            // A bit with an exactly zero posterior is undecided; the
            // syndrome of an arbitrary tie-break does not count as
            // convergence (the all-zero input would otherwise "converge"
            // while carrying no information).
            let decided = posterior.iter().all(|&p| p != 0.0);
            if decided && self.is_codeword(&hard) {
                converged = true;
                break;
            }
        }

        let extrinsic: Vec<f64> = posterior
            .iter()
            .zip(channel_llr)
            .map(|(p, c)| p - c)
            .collect();
        Ok(SpaOutput {
            posterior,
            extrinsic,
            hard,
            converged,
            iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::peg::peg_matrix;
    use rand::Rng;

    fn small_code() -> LdpcCode {
        LdpcCode::from_matrix(peg_matrix(24, 48, 3, 6, 99).unwrap()).unwrap()
    }

    #[test]
    fn all_zero_info_encodes_to_all_zero() {
        let code = small_code();
        let cw = code.encode(&vec![0; code.k()]).unwrap();
        assert!(cw.iter().all(|&b| b == 0));
        assert!(code.is_codeword(&cw));
    }

    #[test]
    fn encoder_is_linear_and_valid() {
        let code = small_code();
        let mut rng = crate::rng::derive_rng(11, 0, 0);
        for _ in 0..100 {
            let a: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..=1)).collect();
            let b: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..=1)).collect();
            let ca = code.encode(&a).unwrap();
            let cb = code.encode(&b).unwrap();
            assert!(code.is_codeword(&ca));
            assert!(code.is_codeword(&cb));
            let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let cab = code.encode(&ab).unwrap();
            let xor: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
            assert_eq!(cab, xor);
        }
    }

    #[test]
    fn systematic_embedding_recovers_info() {
        let code = small_code();
        let mut rng = crate::rng::derive_rng(12, 0, 0);
        let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..=1)).collect();
        let cw = code.encode(&info).unwrap();
        let back: Vec<u8> = code
            .info_columns()
            .iter()
            .map(|&c| cw[c as usize])
            .collect();
        assert_eq!(back, info);
    }

    #[test]
    fn noiseless_llrs_converge_immediately() {
        let code = small_code();
        let mut rng = crate::rng::derive_rng(13, 0, 0);
        let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..=1)).collect();
        let cw = code.encode(&info).unwrap();
        let llr: Vec<f64> = cw.iter().map(|&b| if b == 1 { 50.0 } else { -50.0 }).collect();
        let out = code.spa_decode(&llr, 20).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.hard, cw);
    }

    #[test]
    fn all_zero_input_is_a_fixed_point() {
        let code = small_code();
        let out = code.spa_decode(&vec![0.0; code.n()], 5).unwrap();
        assert!(!out.converged);
        assert!(out.extrinsic.iter().all(|&e| e == 0.0));
        assert!(out.posterior.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn corrects_a_single_flipped_sign() {
        let code = small_code();
        let mut rng = crate::rng::derive_rng(14, 0, 0);
        let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..=1)).collect();
        let cw = code.encode(&info).unwrap();
        let mut llr: Vec<f64> = cw.iter().map(|&b| if b == 1 { 8.0 } else { -8.0 }).collect();
        llr[7] = -llr[7];
        let out = code.spa_decode(&llr, 20).unwrap();
        assert!(out.converged);
        assert_eq!(out.hard, cw);
    }

    #[test]
    fn extrinsic_plus_channel_equals_posterior() {
        let code = small_code();
        let mut rng = crate::rng::derive_rng(15, 0, 0);
        let llr: Vec<f64> = (0..code.n()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let out = code.spa_decode(&llr, 4).unwrap();
        for v in 0..code.n() {
            assert!((out.extrinsic[v] + llr[v] - out.posterior[v]).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_and_dimensions_of_peg_instance() {
        let code = small_code();
        assert_eq!(code.n(), 48);
        assert_eq!(code.rank(), 24, "PEG instance expected full rank");
        assert_eq!(code.k(), 24);
    }

    #[test]
    fn wrong_info_length_is_rejected() {
        let code = small_code();
        assert!(code.encode(&vec![0; code.k() + 1]).is_err());
    }
}
