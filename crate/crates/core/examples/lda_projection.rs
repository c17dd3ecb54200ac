//! Two-dimensional LDA projection of signature features; writes projection.csv.
//!
//! cargo run --release --example lda_projection -- [output csv]

use sigreadout::classify::{lda_fit, lda_project};
use sigreadout::pipeline::{post_select, FeatureSpec, Method};
use sigreadout::sim::{simulate_traces, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "projection.csv".into());
    let (ts, stats) = post_select(&simulate_traces(&SimConfig::stress(), 500)?)?;
    println!(
        "post-selection kept {:?} of each prepared state",
        stats.kept_fraction()
    );

    let spec = FeatureSpec::learn(Method::SigRf, &ts, ts.n_samples, 3, true)?;
    let x = spec.featurize(&ts)?;
    let lda = lda_fit(&x, &ts.prepared)?;
    let proj = lda_project(&lda, &x, 2)?;
    println!("discriminant eigenvalues {:?}", lda.eigenvalues);

    let mut csv = csv::Writer::from_path(&out)?;
    csv.write_record(["x", "y", "prepared", "final"])?;
    for (r, p) in proj.rows().enumerate() {
        let fin = ts.final_state[r].map(|l| l.to_string()).unwrap_or_default();
        csv.write_record([
            p[0].to_string(),
            p[1].to_string(),
            ts.prepared[r].to_string(),
            fin,
        ])?;
    }
    csv.flush()?;

    // records that decayed sit between the clusters of their start and end states
    for s in 0..ts.n_states as u8 {
        let rows: Vec<usize> = (0..ts.n_traces)
            .filter(|&r| ts.prepared[r] == s && ts.final_state[r] == Some(s))
            .collect();
        let c = |j: usize| rows.iter().map(|&r| proj.row(r)[j]).sum::<f64>() / rows.len() as f64;
        println!("state {s} centroid ({:+.3}, {:+.3})", c(0), c(1));
    }
    println!("wrote {out}");
    Ok(())
}
