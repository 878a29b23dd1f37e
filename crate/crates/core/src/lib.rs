//! Simulation library for iterative demodulation and decoding of two
//! superimposed differentially-encoded BPSK signals at the relay of a
//! two-way relaying system.
//!
//! The receive chain decodes the bitwise XOR of the two source codewords
//! directly (joint channel-and-network decoding): a four-state joint
//! trellis demodulator with coherent or noncoherent branch metrics feeds
//! XOR log-likelihood ratios to an outer soft-in soft-out decoder (LDPC
//! sum-product or convolutional BCJR), whose extrinsic output is folded
//! back into the demodulator priors for a handful of turbo iterations.
//!
//! Entry points:
//! * [`turbo::RelayReceiver`] — the iterative relay receiver.
//! * [`sim::run_sweep`] — Monte Carlo BER sweeps over Eb/N0.
//! * [`oracle`] — brute-force references used by the test suites.

pub mod assets;
pub mod channel;
pub mod codec;
pub mod demod;
pub mod error;
pub mod math;
pub mod oracle;
pub mod rng;
pub mod signal;
pub mod sim;
pub mod turbo;

pub use error::{Error, Result};
