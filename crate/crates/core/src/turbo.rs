//! The iterative relay receiver: joint-trellis demodulator and outer
//! soft-in soft-out decoder exchanging extrinsic information about the XOR
//! codeword.
//!
//! Per iteration: demodulate with the current label priors, deinterleave
//! the posterior XOR LLRs, run the outer decoder on the XOR word, then
//! interleave the outer *extrinsic* — never the outer posterior — and
//! split it into the next label priors. The split is the pragmatic
//! equal-probability assignment: the XOR reliability says nothing about
//! which of the two label pairs produced it, so both pairs of each XOR
//! class share the mass equally.
//!
//! The demodulator's posterior is forwarded as-is. For BPSK the
//! noncoherent branch likelihood turns out to be state-independent, so a
//! "posterior with the prior divided out" would not depend on the prior at
//! all and the loop would never gain anything noncoherently; forwarding
//! the posterior is what makes the feedback effective in both modes.

use std::sync::Arc;

use num_complex::Complex64;

use crate::channel::{ChannelParams, ChannelRealization};
use crate::codec::{ConvCode, Interleaver, LdpcCode};
use crate::demod::{demodulate, DetectionMode, PriorTable};
use crate::error::{Error, Result};

/// Outer code selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterCodeKind {
    Ldpc,
    Conv,
}

impl std::fmt::Display for OuterCodeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OuterCodeKind::Ldpc => write!(f, "ldpc"),
            OuterCodeKind::Conv => write!(f, "conv"),
        }
    }
}

/// Receiver configuration.
#[derive(Debug, Clone, Copy)]
pub struct TurboConfig {
    /// Demodulate-decode iterations (at least 1).
    pub iterations: usize,
    pub mode: DetectionMode,
    /// Clamp applied to every LLR exchanged between the stages.
    pub llr_clamp: f64,
    /// Inner sum-product iterations per LDPC decode call.
    pub ldpc_iterations: usize,
}

impl TurboConfig {
    /// Defaults reflecting where iterative gains saturate: 3 iterations
    /// coherent, 2 noncoherent.
    pub fn default_for(mode: DetectionMode) -> Self {
        Self {
            iterations: match mode {
                DetectionMode::Coherent => 3,
                DetectionMode::Noncoherent => 2,
            },
            mode,
            llr_clamp: crate::demod::DEFAULT_LLR_CLAMP,
            ldpc_iterations: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "iterations",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.llr_clamp > 0.0) {
            return Err(Error::InvalidParameter {
                name: "llr_clamp",
                reason: "must be positive".into(),
            });
        }
        if self.ldpc_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "ldpc_iterations",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct IterationStats {
    /// XOR-bit errors of this iteration's hard decision against the
    /// reference word, when one was supplied.
    pub xor_bit_errors: Option<usize>,
    /// Outer-decoder convergence (LDPC: syndrome satisfied; the one-shot
    /// convolutional BCJR always reports true).
    pub outer_converged: bool,
    /// Mean magnitude of the outer extrinsic fed back to the demodulator.
    pub mean_abs_extrinsic: f64,
}

/// Diagnostics for every configured iteration. When the receiver exits
/// early, the converged entry is replicated so the trace always has
/// exactly `iterations` entries.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    entries: Vec<IterationStats>,
}

impl IterationTrace {
    pub fn entries(&self) -> &[IterationStats] {
        &self.entries
    }

    /// Stats after `iteration` passes (1-based).
    pub fn at(&self, iteration: usize) -> &IterationStats {
        &self.entries[iteration - 1]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Receiver output: the hard decision on the XOR codeword plus diagnostics.
#[derive(Debug, Clone)]
pub struct RelayDecision {
    pub hard_xor: Vec<u8>,
    pub trace: IterationTrace,
}

/// Outer soft-in soft-out decoder.
#[derive(Debug, Clone)]
pub enum OuterDecoder {
    Ldpc(Arc<LdpcCode>),
    Conv(ConvCode),
}

impl OuterDecoder {
    pub fn kind(&self) -> OuterCodeKind {
        match self {
            OuterDecoder::Ldpc(_) => OuterCodeKind::Ldpc,
            OuterDecoder::Conv(_) => OuterCodeKind::Conv,
        }
    }
}

/// The iterative relay receiver for one (code, interleaver, mode) setup.
/// One instance serves any number of frames; calls do not share state.
#[derive(Debug, Clone)]
pub struct RelayReceiver {
    config: TurboConfig,
    outer: OuterDecoder,
    interleaver: Arc<Interleaver>,
    coded_len: usize,
}

impl RelayReceiver {
    pub fn new(
        config: TurboConfig,
        outer: OuterDecoder,
        interleaver: Arc<Interleaver>,
    ) -> Result<Self> {
        config.validate()?;
        let coded_len = match &outer {
            OuterDecoder::Ldpc(code) => code.n(),
            OuterDecoder::Conv(_) => {
                ConvCode::info_len(interleaver.len())?;
                interleaver.len()
            }
        };
        if interleaver.len() != coded_len {
            return Err(Error::LengthMismatch {
                context: "relay interleaver vs coded frame",
                left: interleaver.len(),
                right: coded_len,
            });
        }
        Ok(Self {
            config,
            outer,
            interleaver,
            coded_len,
        })
    }

    /// Coded bits per frame (the received frame carries one more symbol,
    /// the differential reference).
    pub fn coded_len(&self) -> usize {
        self.coded_len
    }

    pub fn config(&self) -> &TurboConfig {
        &self.config
    }

    pub fn outer(&self) -> &OuterDecoder {
        &self.outer
    }

    pub fn interleaver(&self) -> &Interleaver {
        &self.interleaver
    }

    /// Runs the iterative receiver on one received frame.
    ///
    /// `reference`, when given, is the true XOR codeword used to fill the
    /// per-iteration error counts of the trace.
    pub fn receive(
        &self,
        r: &[Complex64],
        csi: Option<&ChannelRealization>,
        params: &ChannelParams,
        reference: Option<&[u8]>,
    ) -> Result<RelayDecision> {
        let n = self.coded_len;
        if r.len() != n + 1 {
            return Err(Error::LengthMismatch {
                context: "received frame",
                left: r.len(),
                right: n + 1,
            });
        }
        if let Some(reference) = reference {
            if reference.len() != n {
                return Err(Error::LengthMismatch {
                    context: "reference XOR codeword",
                    left: reference.len(),
                    right: n,
                });
            }
        }

        let clamp = self.config.llr_clamp;
        let mut entries = Vec::with_capacity(self.config.iterations);
        // Outer extrinsic from the previous iteration, in interleaved
        // (transmit) order. Zero before the first outer decode.
        let mut feedback = vec![0.0f64; n];
        let mut previous_hard: Option<Vec<u8>> = None;
        let mut hard_xor = vec![0u8; n];

        for _iteration in 1..=self.config.iterations {
            let prior = split_extrinsic(&feedback);
            let (llr, _) = demodulate(r, self.config.mode, csi, &prior, params)?;
            let outer_input = self.interleaver.deinterleave(&llr)?;

            let (hard, outer_extrinsic, converged) = match &self.outer {
                OuterDecoder::Ldpc(code) => {
                    let out = code.spa_decode(&outer_input, self.config.ldpc_iterations)?;
                    (out.hard, out.extrinsic, out.converged)
                }
                OuterDecoder::Conv(code) => {
                    let out = code.bcjr_siso(&outer_input, None)?;
                    // The relay's decision is the re-encoded info word, a
                    // codeword by construction.
                    let hard = code.encode(&out.hard_info)?;
                    (hard, out.extrinsic, true)
                }
            };

            let mean_abs =
                outer_extrinsic.iter().map(|v| v.abs()).sum::<f64>() / outer_extrinsic.len() as f64;
            entries.push(IterationStats {
                xor_bit_errors: reference.map(|truth| {
                    truth
                        .iter()
                        .zip(&hard)
                        .filter(|(a, b)| a != b)
                        .count()
                }),
                outer_converged: converged,
                mean_abs_extrinsic: mean_abs,
            });

            let clamped: Vec<f64> = outer_extrinsic
                .iter()
                .map(|v| v.clamp(-clamp, clamp))
                .collect();
            feedback = self.interleaver.interleave(&clamped)?;

            let stable = previous_hard.as_deref() == Some(hard.as_slice());
            previous_hard = Some(hard.clone());
            hard_xor = hard;
            if converged && stable {
                break;
            }
        }

        // Early exit: later iterations would reproduce the same decision.
        while entries.len() < self.config.iterations {
            let last = *entries.last().expect("at least one iteration ran");
            entries.push(last);
        }

        Ok(RelayDecision {
            hard_xor,
            trace: IterationTrace { entries },
        })
    }
}

/// Splits an XOR extrinsic LLR sequence into joint label priors.
///
/// Per epoch, with `e± = exp(±Le/2)` and `Z = 2e⁺ + 2e⁻`:
/// `P(0,0) = P(1,1) = e⁻/Z` and `P(0,1) = P(1,0) = e⁺/Z`, so the XOR
/// log-ratio of the table equals `Le` and both labels of each XOR class
/// stay equally likely.
pub fn split_extrinsic(le: &[f64]) -> PriorTable {
    let rows: Vec<[f64; 4]> = le
        .iter()
        .map(|&l| {
            let ep = (0.5 * l).exp();
            let em = (-0.5 * l).exp();
            let z = 2.0 * (ep + em);
            [em / z, ep / z, ep / z, em / z]
        })
        .collect();
    PriorTable::from_epochs(rows).expect("split tables are positive and normalized")
}
