use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_size, create_dir, read, write};
use crate::error::{Error, Result};
use crate::traces::{Label, TraceSet};

pub const BUNDLE_VERSION: u32 = 1;
pub const UNKNOWN_LABEL: u8 = 255;
const DTYPE: &str = "f32le";
const LAYOUT: &str = "trace-major-iq-interleaved";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceBundleManifest {
    pub version: u32,
    pub n_traces: usize,
    pub n_samples: usize,
    pub sample_period_ns: f64,
    pub n_states: usize,
    pub has_initial_check: bool,
    pub has_final_labels: bool,
    pub data_file: String,
    pub labels_file: String,
    pub dtype: String,
    pub layout: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl TraceBundleManifest {
    fn label_blocks(&self) -> usize {
        1 + self.has_initial_check as usize + self.has_final_labels as usize
    }

    fn validate(&self) -> Result<()> {
        if self.version != BUNDLE_VERSION {
            return Err(Error::Unsupported {
                field: "version",
                value: self.version.to_string(),
            });
        }
        if self.dtype != DTYPE {
            return Err(Error::Unsupported {
                field: "dtype",
                value: self.dtype.clone(),
            });
        }
        if self.layout != LAYOUT {
            return Err(Error::Unsupported {
                field: "layout",
                value: self.layout.clone(),
            });
        }
        for (field, v) in [
            ("n_traces", self.n_traces),
            ("n_samples", self.n_samples),
            ("n_states", self.n_states),
        ] {
            if v == 0 {
                return Err(Error::Format {
                    field: field.into(),
                    reason: "must be positive".into(),
                });
            }
        }
        if !(self.sample_period_ns > 0.0 && self.sample_period_ns.is_finite()) {
            return Err(Error::Format {
                field: "sample_period_ns".into(),
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

fn encode_labels(labels: impl Iterator<Item = Option<Label>>) -> Vec<u8> {
    labels.map(|l| l.unwrap_or(UNKNOWN_LABEL)).collect()
}

/// Writes `traces` into `dir` and returns the manifest path. Samples are
/// stored as `f32`, so a load returns `traces.quantized()`.
pub fn save_bundle(traces: &TraceSet, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    traces.validate()?;
    if traces.is_empty() {
        return Err(Error::invalid("cannot save an empty trace set"));
    }
    create_dir(dir)?;
    let manifest = TraceBundleManifest {
        version: BUNDLE_VERSION,
        n_traces: traces.n_traces,
        n_samples: traces.n_samples,
        sample_period_ns: traces.sample_period * 1e3,
        n_states: traces.n_states,
        has_initial_check: traces.has_initial_check(),
        has_final_labels: traces.has_final_labels(),
        data_file: "traces.f32".into(),
        labels_file: "labels.u8".into(),
        dtype: DTYPE.into(),
        layout: LAYOUT.into(),
        meta: traces.meta.clone(),
    };

    let mut data = Vec::with_capacity(traces.traces.len() * 8);
    for z in &traces.traces {
        data.extend_from_slice(&(z.re as f32).to_le_bytes());
        data.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    let mut labels = encode_labels(traces.prepared.iter().map(|&l| Some(l)));
    if manifest.has_initial_check {
        labels.extend(encode_labels(traces.initial_check.iter().copied()));
    }
    if manifest.has_final_labels {
        labels.extend(encode_labels(traces.final_state.iter().copied()));
    }

    write(&dir.join(&manifest.data_file), &data)?;
    write(&dir.join(&manifest.labels_file), &labels)?;
    let path = dir.join("manifest.json");
    write(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(path)
}

/// Reads a bundle from its manifest path (or the directory holding it).
pub fn load_bundle(path: impl AsRef<Path>) -> Result<TraceSet> {
    let mut path = path.as_ref().to_path_buf();
    if path.is_dir() {
        path.push("manifest.json");
    }
    let manifest: TraceBundleManifest = serde_json::from_slice(&read(&path)?)?;
    manifest.validate()?;
    let dir = path.parent().unwrap_or(Path::new("."));

    let data_path = dir.join(&manifest.data_file);
    let data = read(&data_path)?;
    let n = manifest.n_traces * manifest.n_samples;
    check_size(&data_path, (n * 8) as u64, data.len() as u64)?;
    let labels_path = dir.join(&manifest.labels_file);
    let labels = read(&labels_path)?;
    check_size(
        &labels_path,
        (manifest.n_traces * manifest.label_blocks()) as u64,
        labels.len() as u64,
    )?;

    let traces: Vec<Complex64> = data
        .chunks_exact(8)
        .map(|b| {
            let re = f32::from_le_bytes(b[..4].try_into().expect("4 bytes"));
            let im = f32::from_le_bytes(b[4..].try_into().expect("4 bytes"));
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let mut blocks = labels.chunks_exact(manifest.n_traces);
    let prepared = blocks.next().expect("prepared block").to_vec();
    if prepared.contains(&UNKNOWN_LABEL) {
        return Err(Error::Format {
            field: "labels_file".into(),
            reason: "prepared labels cannot be unknown".into(),
        });
    }
    let decode = |block: &[u8]| -> Vec<Option<Label>> {
        block
            .iter()
            .map(|&b| (b != UNKNOWN_LABEL).then_some(b))
            .collect()
    };
    let none = vec![None; manifest.n_traces];
    let initial_check = if manifest.has_initial_check {
        decode(blocks.next().expect("initial block"))
    } else {
        none.clone()
    };
    let final_state = if manifest.has_final_labels {
        decode(blocks.next().expect("final block"))
    } else {
        none
    };
    TraceSet::new(
        manifest.n_samples,
        manifest.n_states,
        manifest.sample_period_ns / 1e3,
        traces,
        prepared,
        initial_check,
        final_state,
        manifest.meta,
    )
    .map_err(|e| Error::Format {
        field: "labels_file".into(),
        reason: e.to_string(),
    })
}
