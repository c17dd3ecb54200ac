use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::traces::{Label, TraceSet};

fn format_err(reason: impl Into<String>) -> Error {
    Error::Format {
        field: "csv".into(),
        reason: reason.into(),
    }
}

fn parse_label(raw: Option<&str>, line: usize, column: &str) -> Result<Option<Label>> {
    match raw.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s
            .parse::<Label>()
            .map(Some)
            .map_err(|_| format_err(format!("line {line}: bad {column} label {s:?}"))),
    }
}

/// Reads a small trace set from CSV with header
/// `trace_id,sample_idx,I,Q[,prepared,initial,final]`.
///
/// Every trace must list samples `0..n` exactly once (any row order); empty
/// label cells mean unknown. Without a `prepared` column every trace is
/// taken as prepared in state 0. `n_states` defaults to the largest label + 1
/// (at least 2).
pub fn import_csv(
    path: impl AsRef<Path>,
    sample_period: f64,
    n_states: Option<usize>,
) -> Result<TraceSet> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => format_err(format!("{other:?}")),
    })?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let expected = ["trace_id", "sample_idx", "I", "Q"];
    if headers.len() < 4 || headers[..4] != expected {
        return Err(format_err(format!(
            "header must start with {}",
            expected.join(",")
        )));
    }
    let optional = ["prepared", "initial", "final"];
    for (h, want) in headers[4..].iter().zip(optional) {
        if h != want {
            return Err(format_err(format!(
                "unexpected column {h:?}, expected {want:?}"
            )));
        }
    }
    if headers.len() > 7 {
        return Err(format_err("too many columns"));
    }
    let has = |name: &str| headers.iter().any(|h| h == name);

    struct Row {
        samples: BTreeMap<usize, Complex64>,
        labels: [Option<Label>; 3],
    }
    let mut traces: BTreeMap<u64, Row> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let field = |k: usize| record.get(k).map(str::trim).unwrap_or("");
        let id: u64 = field(0)
            .parse()
            .map_err(|_| format_err(format!("line {line}: bad trace_id")))?;
        let idx: usize = field(1)
            .parse()
            .map_err(|_| format_err(format!("line {line}: bad sample_idx")))?;
        let re: f64 = field(2)
            .parse()
            .map_err(|_| format_err(format!("line {line}: bad I")))?;
        let im: f64 = field(3)
            .parse()
            .map_err(|_| format_err(format!("line {line}: bad Q")))?;
        let mut labels = [None; 3];
        for (slot, (k, name)) in labels.iter_mut().zip((4..).zip(optional)) {
            *slot = parse_label(record.get(k), line, name)?;
        }
        let row = traces.entry(id).or_insert(Row {
            samples: BTreeMap::new(),
            labels,
        });
        if row.labels != labels {
            return Err(format_err(format!(
                "line {line}: labels of trace {id} change between rows"
            )));
        }
        if row.samples.insert(idx, Complex64::new(re, im)).is_some() {
            return Err(format_err(format!(
                "line {line}: sample {idx} of trace {id} repeated"
            )));
        }
    }
    let Some(first) = traces.values().next() else {
        return Err(Error::invalid("CSV holds no samples"));
    };
    let n_samples = first.samples.len();
    let mut data = Vec::with_capacity(traces.len() * n_samples);
    let mut prepared = Vec::new();
    let mut initial = Vec::new();
    let mut final_state = Vec::new();
    for (id, row) in &traces {
        if row.samples.len() != n_samples
            || row.samples.keys().next_back() != Some(&(n_samples - 1))
        {
            return Err(format_err(format!(
                "trace {id} does not have samples 0..{n_samples}"
            )));
        }
        data.extend(row.samples.values());
        if has("prepared") && row.labels[0].is_none() {
            return Err(format_err(format!("trace {id} has no prepared label")));
        }
        prepared.push(row.labels[0].unwrap_or(0));
        initial.push(row.labels[1]);
        final_state.push(row.labels[2]);
    }
    let max_label = prepared
        .iter()
        .chain(initial.iter().flatten())
        .chain(final_state.iter().flatten())
        .copied()
        .max()
        .unwrap_or(0) as usize;
    let k = n_states.unwrap_or((max_label + 1).max(2));
    let mut meta = BTreeMap::new();
    meta.insert("source".into(), path.display().to_string());
    TraceSet::new(
        n_samples,
        k,
        sample_period,
        data,
        prepared,
        initial,
        final_state,
        meta,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_unordered_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(
            &path,
            "trace_id,sample_idx,I,Q,prepared,initial,final\n\
             7,1,0.5,-1,1,0,\n\
             3,0,1,2,0,0,0\n\
             7,0,0.25,0,1,0,\n\
             3,1,3,4,0,0,0\n",
        )
        .unwrap();
        let ts = import_csv(&path, 0.5, None).unwrap();
        assert_eq!(ts.n_traces, 2);
        assert_eq!(ts.n_samples, 2);
        assert_eq!(ts.n_states, 2);
        assert_eq!(ts.prepared, vec![0, 1]);
        assert_eq!(ts.final_state, vec![Some(0), None]);
        assert_eq!(
            ts.trace(1),
            &[Complex64::new(0.25, 0.0), Complex64::new(0.5, -1.0)]
        );
    }

    #[test]
    fn rejects_gaps_and_bad_headers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "trace_id,sample_idx,I,Q\n0,0,1,1\n0,2,1,1\n").unwrap();
        assert!(import_csv(&path, 1.0, None).is_err());
        std::fs::write(&path, "id,sample,I,Q\n0,0,1,1\n").unwrap();
        assert!(import_csv(&path, 1.0, None).is_err());
        std::fs::write(&path, "trace_id,sample_idx,I,Q\n").unwrap();
        assert!(import_csv(&path, 1.0, None).is_err());
        assert!(matches!(
            import_csv(dir.path().join("missing.csv"), 1.0, None),
            Err(Error::Io { .. })
        ));
    }
}
