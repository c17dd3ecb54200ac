use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{check_size, create_dir, read, write, UNKNOWN_LABEL};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::pipeline::FeatureSpec;
use crate::traces::Label;

const FEATURE_VERSION: u32 = 1;

/// Manifest of a feature directory: `features.json`, `features.f64`
/// (row-major little-endian `f64`) and `labels.u8` (prepared block, then
/// final block; 255 for unknown).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub version: u32,
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_states: usize,
    pub data_file: String,
    pub labels_file: String,
    /// How the features were made, when they come from records.
    #[serde(default)]
    pub spec: Option<FeatureSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub features: FeatureMatrix,
    pub n_states: usize,
    pub prepared: Vec<Label>,
    pub final_state: Vec<Option<Label>>,
    pub spec: Option<FeatureSpec>,
}

pub fn save_features(bundle: &FeatureBundle, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let n = bundle.features.n_rows;
    if bundle.prepared.len() != n || bundle.final_state.len() != n {
        return Err(Error::invalid(
            "label vectors must have one entry per feature row",
        ));
    }
    create_dir(dir)?;
    let manifest = FeatureManifest {
        version: FEATURE_VERSION,
        n_rows: n,
        n_cols: bundle.features.n_cols,
        n_states: bundle.n_states,
        data_file: "features.f64".into(),
        labels_file: "labels.u8".into(),
        spec: bundle.spec.clone(),
    };
    let data: Vec<u8> = bundle
        .features
        .data
        .iter()
        .flat_map(|x| x.to_le_bytes())
        .collect();
    let labels: Vec<u8> = bundle
        .prepared
        .iter()
        .copied()
        .chain(
            bundle
                .final_state
                .iter()
                .map(|l| l.unwrap_or(UNKNOWN_LABEL)),
        )
        .collect();
    write(&dir.join(&manifest.data_file), &data)?;
    write(&dir.join(&manifest.labels_file), &labels)?;
    let path = dir.join("features.json");
    write(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(path)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureBundle> {
    let mut path = path.as_ref().to_path_buf();
    if path.is_dir() {
        path.push("features.json");
    }
    let manifest: FeatureManifest = serde_json::from_slice(&read(&path)?)?;
    if manifest.version != FEATURE_VERSION {
        return Err(Error::Unsupported {
            field: "version",
            value: manifest.version.to_string(),
        });
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let data_path = dir.join(&manifest.data_file);
    let bytes = read(&data_path)?;
    check_size(
        &data_path,
        (manifest.n_rows * manifest.n_cols * 8) as u64,
        bytes.len() as u64,
    )?;
    let labels_path = dir.join(&manifest.labels_file);
    let labels = read(&labels_path)?;
    check_size(
        &labels_path,
        (2 * manifest.n_rows) as u64,
        labels.len() as u64,
    )?;
    let data = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    let (prepared, finals) = labels.split_at(manifest.n_rows);
    Ok(FeatureBundle {
        features: FeatureMatrix::from_vec(manifest.n_rows, manifest.n_cols, data)?,
        n_states: manifest.n_states,
        prepared: prepared.to_vec(),
        final_state: finals
            .iter()
            .map(|&b| (b != UNKNOWN_LABEL).then_some(b))
            .collect(),
        spec: manifest.spec,
    })
}
