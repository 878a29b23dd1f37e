//! Outer channel codes and interleaving: a (3,6)-regular LDPC code with
//! sum-product decoding, a rate-1/2 convolutional code with BCJR soft-in
//! soft-out decoding, and the frame interleaver shared by both sources.
//!
//! Both codes are linear, so the XOR of two codewords is again a codeword;
//! the relay exploits this by decoding the XOR word directly.

pub mod alist;
pub mod conv;
pub mod interleave;
pub mod ldpc;
pub mod peg;

pub use alist::SparseBinaryMatrix;
pub use conv::{ConvCode, SisoOutput};
pub use interleave::Interleaver;
pub use ldpc::{LdpcCode, SpaOutput};
