//! On-disk formats and raw-record demodulation.
//!
//! A trace bundle is a directory with `manifest.json`, `traces.f32` holding
//! little-endian `f32` pairs `I0, Q0, I1, Q1, ...` trace after trace, and
//! `labels.u8` holding the prepared block, then the optional initial-check
//! and final-state blocks, one byte per trace with 255 for unknown.

mod bundle;
mod csv_import;
mod demod;
mod feature_file;

pub use bundle::{load_bundle, save_bundle, TraceBundleManifest, BUNDLE_VERSION, UNKNOWN_LABEL};
pub use csv_import::import_csv;
pub use demod::demodulate;
pub use feature_file::{load_features, save_features, FeatureBundle, FeatureManifest};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn check_size(path: &Path, expected: u64, actual: u64) -> Result<()> {
    if expected != actual {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected,
            actual,
        });
    }
    Ok(())
}
