//! Batches of demodulated I/Q measurement records.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A qubit state label (0 = ground). `None` marks an unknown label.
pub type Label = u8;

/// A batch of complex (I, Q) time series with per-trace labels.
///
/// `traces` is trace-major: sample `j` of trace `r` lives at `r * n_samples + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSet {
    pub n_traces: usize,
    pub n_samples: usize,
    pub n_states: usize,
    /// Microseconds per demodulated sample.
    pub sample_period: f64,
    pub traces: Vec<Complex64>,
    /// Intended (prepared) state of every trace.
    pub prepared: Vec<Label>,
    /// Outcome of the pre-measurement ground-state check.
    pub initial_check: Vec<Option<Label>>,
    /// State at the end of the measurement window.
    pub final_state: Vec<Option<Label>>,
    pub meta: BTreeMap<String, String>,
}

impl TraceSet {
    /// Builds a trace set, checking every shape and label invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_samples: usize,
        n_states: usize,
        sample_period: f64,
        traces: Vec<Complex64>,
        prepared: Vec<Label>,
        initial_check: Vec<Option<Label>>,
        final_state: Vec<Option<Label>>,
        meta: BTreeMap<String, String>,
    ) -> Result<Self> {
        let n_traces = prepared.len();
        let ts = TraceSet {
            n_traces,
            n_samples,
            n_states,
            sample_period,
            traces,
            prepared,
            initial_check,
            final_state,
            meta,
        };
        ts.validate()?;
        Ok(ts)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states < 2 || self.n_states > Label::MAX as usize {
            return Err(Error::invalid(format!(
                "n_states must lie in 2..255, got {}",
                self.n_states
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("traces must have at least one sample"));
        }
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return Err(Error::invalid("sample_period must be positive"));
        }
        if self.prepared.len() != self.n_traces
            || self.initial_check.len() != self.n_traces
            || self.final_state.len() != self.n_traces
        {
            return Err(Error::invalid(
                "label vectors must have one entry per trace",
            ));
        }
        if self.traces.len() != self.n_traces * self.n_samples {
            return Err(Error::invalid(format!(
                "trace array holds {} samples, expected {} x {}",
                self.traces.len(),
                self.n_traces,
                self.n_samples
            )));
        }
        let k = self.n_states;
        let bad = self.prepared.iter().any(|&l| l as usize >= k)
            || self
                .initial_check
                .iter()
                .chain(&self.final_state)
                .flatten()
                .any(|&l| l as usize >= k);
        if bad {
            return Err(Error::invalid(format!("label outside 0..{k}")));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.n_traces == 0
    }

    pub fn trace(&self, r: usize) -> &[Complex64] {
        &self.traces[r * self.n_samples..(r + 1) * self.n_samples]
    }

    pub fn iter_traces(&self) -> impl ExactSizeIterator<Item = &[Complex64]> {
        self.traces.chunks_exact(self.n_samples)
    }

    pub fn has_initial_check(&self) -> bool {
        self.initial_check.iter().any(Option::is_some)
    }

    pub fn has_final_labels(&self) -> bool {
        self.final_state.iter().any(Option::is_some)
    }

    /// Number of traces per prepared state.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_states];
        for &p in &self.prepared {
            counts[p as usize] += 1;
        }
        counts
    }

    /// Final labels, failing if any trace lacks one.
    pub fn final_labels(&self) -> Result<Vec<Label>> {
        self.final_state
            .iter()
            .enumerate()
            .map(|(r, l)| l.ok_or_else(|| Error::invalid(format!("trace {r} has no final label"))))
            .collect()
    }

    /// New set holding the listed traces, in the listed order.
    pub fn subset(&self, rows: &[usize]) -> TraceSet {
        let mut traces = Vec::with_capacity(rows.len() * self.n_samples);
        for &r in rows {
            traces.extend_from_slice(self.trace(r));
        }
        TraceSet {
            n_traces: rows.len(),
            n_samples: self.n_samples,
            n_states: self.n_states,
            sample_period: self.sample_period,
            traces,
            prepared: rows.iter().map(|&r| self.prepared[r]).collect(),
            initial_check: rows.iter().map(|&r| self.initial_check[r]).collect(),
            final_state: rows.iter().map(|&r| self.final_state[r]).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Copy with every sample rounded through `f32`, i.e. what a bundle stores.
    pub fn quantized(&self) -> TraceSet {
        let mut out = self.clone();
        for z in &mut out.traces {
            *z = Complex64::new(z.re as f32 as f64, z.im as f32 as f64);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TraceSet {
        TraceSet::new(
            2,
            2,
            0.5,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(3.0, 1.0),
                Complex64::new(4.0, 1.0),
            ],
            vec![0, 1],
            vec![Some(0), None],
            vec![Some(0), Some(1)],
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn subset_reorders_rows() {
        let ts = tiny();
        let sub = ts.subset(&[1, 0]);
        assert_eq!(sub.prepared, vec![1, 0]);
        assert_eq!(sub.trace(0), ts.trace(1));
        assert_eq!(sub.initial_check, vec![None, Some(0)]);
    }

    #[test]
    fn rejects_out_of_range_labels() {
        let mut ts = tiny();
        ts.final_state[0] = Some(5);
        assert!(ts.validate().is_err());
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut ts = tiny();
        ts.traces.pop();
        assert!(ts.validate().is_err());
    }
}
