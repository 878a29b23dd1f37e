//! Shipped code assets and their loading rules.
//!
//! The parity-check matrix and the two interleaver permutations are fixed
//! files, embedded at build time so a bare binary reproduces published
//! numbers without any setup. Each was generated once from a documented
//! seed (see the constants below); a test regenerates them and asserts
//! byte equality, so the assets cannot drift from the construction code.
//!
//! Resolution order for every asset: an explicit path (from the config
//! file) wins, then a directory named by the `TURBO_DPSK_ASSETS`
//! environment variable, then the embedded copy.

use std::path::Path;

use crate::codec::{Interleaver, LdpcCode, SparseBinaryMatrix};
use crate::error::{Error, Result};

/// Environment variable overriding the asset directory.
pub const ASSET_DIR_ENV: &str = "TURBO_DPSK_ASSETS";

/// Embedded (3,6)-regular 504x1008 parity-check matrix in alist format.
pub const LDPC_ALIST: &str = include_str!("../assets/ldpc_504x1008.alist");
/// Embedded length-1008 interleaver permutation (LDPC frames).
pub const INTERLEAVER_1008: &str = include_str!("../assets/interleaver_1008.txt");
/// Embedded length-1016 interleaver permutation (convolutional frames).
pub const INTERLEAVER_1016: &str = include_str!("../assets/interleaver_1016.txt");

/// Default asset file names inside an override directory.
pub const LDPC_FILE_NAME: &str = "ldpc_504x1008.alist";
pub const INTERLEAVER_1008_FILE_NAME: &str = "interleaver_1008.txt";
pub const INTERLEAVER_1016_FILE_NAME: &str = "interleaver_1016.txt";

/// Seed the parity-check matrix was generated from (progressive edge
/// growth, 504x1008, column weight 3, row weight 6).
pub const LDPC_PEG_SEED: u64 = 20110527;
/// Seed for both interleaver permutations (Fisher-Yates over ChaCha8).
pub const INTERLEAVER_SEED: u64 = 3103;

/// LDPC codeword length.
pub const LDPC_N: usize = 1008;
/// LDPC check count.
pub const LDPC_M: usize = 504;
/// Convolutional coded frame length: 2 * (504 + 4).
pub const CONV_N: usize = 1016;

fn read_override(path_override: Option<&Path>, default_name: &str) -> Result<Option<String>> {
    if let Some(path) = path_override {
        return Ok(Some(std::fs::read_to_string(path).map_err(|e| {
            Error::Asset(format!("cannot read {}: {e}", path.display()))
        })?));
    }
    if let Ok(dir) = std::env::var(ASSET_DIR_ENV) {
        let path = Path::new(&dir).join(default_name);
        return Ok(Some(std::fs::read_to_string(&path).map_err(|e| {
            Error::Asset(format!("cannot read {}: {e}", path.display()))
        })?));
    }
    Ok(None)
}

/// Loads and validates the shipped (or overridden) LDPC code: dimensions
/// 504x1008, (3,6)-regular, with the GF(2) rank computed on construction.
pub fn load_ldpc(path_override: Option<&Path>) -> Result<LdpcCode> {
    let text = read_override(path_override, LDPC_FILE_NAME)?;
    let matrix = SparseBinaryMatrix::from_alist(text.as_deref().unwrap_or(LDPC_ALIST))?;
    if matrix.rows() != LDPC_M || matrix.cols() != LDPC_N {
        return Err(Error::Asset(format!(
            "parity-check matrix is {}x{}, expected {LDPC_M}x{LDPC_N}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    if !matrix.is_regular(3, 6) {
        return Err(Error::Asset(
            "parity-check matrix is not (3,6)-regular".into(),
        ));
    }
    LdpcCode::from_matrix(matrix)
}

/// Loads the interleaver for a coded frame length (1008 or 1016 embedded;
/// any length via an override file).
pub fn load_interleaver(len: usize, path_override: Option<&Path>) -> Result<Interleaver> {
    let default_name = match len {
        LDPC_N => INTERLEAVER_1008_FILE_NAME,
        CONV_N => INTERLEAVER_1016_FILE_NAME,
        _ if path_override.is_none() => {
            return Err(Error::Asset(format!(
                "no embedded interleaver of length {len}; supply a file"
            )))
        }
        _ => "",
    };
    let text = read_override(path_override, default_name)?;
    let embedded = match len {
        LDPC_N => INTERLEAVER_1008,
        CONV_N => INTERLEAVER_1016,
        _ => "",
    };
    let interleaver = Interleaver::parse(text.as_deref().unwrap_or(embedded))?;
    if interleaver.len() != len {
        return Err(Error::Asset(format!(
            "interleaver has length {}, expected {len}",
            interleaver.len()
        )));
    }
    Ok(interleaver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::peg::peg_matrix;
    use std::io::Write;

    #[test]
    fn shipped_ldpc_matches_its_generator() {
        let regenerated = peg_matrix(LDPC_M, LDPC_N, 3, 6, LDPC_PEG_SEED).unwrap();
        assert_eq!(regenerated.to_alist(), LDPC_ALIST);
    }

    #[test]
    fn shipped_interleavers_match_their_generator() {
        for (len, text) in [(LDPC_N, INTERLEAVER_1008), (CONV_N, INTERLEAVER_1016)] {
            let regenerated = Interleaver::pseudorandom(len, INTERLEAVER_SEED).unwrap();
            assert_eq!(regenerated.serialize(), text, "length {len}");
        }
    }

    #[test]
    fn shipped_ldpc_properties() {
        let code = load_ldpc(None).unwrap();
        assert_eq!(code.n(), LDPC_N);
        assert_eq!(code.matrix().rows(), LDPC_M);
        assert!(code.matrix().is_regular(3, 6));
        assert!(code.matrix().has_no_four_cycle(), "girth must be at least 6");
        assert_eq!(code.rank(), LDPC_M, "shipped matrix must have full rank");
        assert_eq!(code.k(), 504);
    }

    #[test]
    fn interleavers_load_and_have_right_lengths() {
        assert_eq!(load_interleaver(LDPC_N, None).unwrap().len(), LDPC_N);
        assert_eq!(load_interleaver(CONV_N, None).unwrap().len(), CONV_N);
        assert!(load_interleaver(999, None).is_err());
    }

    #[test]
    fn explicit_path_override_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("perm.txt");
        let perm = Interleaver::pseudorandom(16, 1).unwrap();
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(perm.serialize().as_bytes()).unwrap();
        let loaded = load_interleaver(16, Some(&path)).unwrap();
        assert_eq!(loaded, perm);
    }

    /// Regenerates the shipped asset files in place. Run explicitly with
    /// `cargo test -p turbo-dpsk regenerate_shipped_assets -- --ignored`
    /// after changing a construction seed.
    #[test]
    #[ignore]
    fn regenerate_shipped_assets() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
        let matrix = peg_matrix(LDPC_M, LDPC_N, 3, 6, LDPC_PEG_SEED).unwrap();
        std::fs::write(dir.join(LDPC_FILE_NAME), matrix.to_alist()).unwrap();
        for (len, name) in [
            (LDPC_N, INTERLEAVER_1008_FILE_NAME),
            (CONV_N, INTERLEAVER_1016_FILE_NAME),
        ] {
            let perm = Interleaver::pseudorandom(len, INTERLEAVER_SEED).unwrap();
            std::fs::write(dir.join(name), perm.serialize()).unwrap();
        }
    }
}
