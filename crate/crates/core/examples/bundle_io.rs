//! Saving and loading trace bundles, CSV import and digital demodulation.
//!
//! cargo run --example bundle_io

use std::io::Write;

use sigreadout::io::{demodulate, import_csv, load_bundle, save_bundle};
use sigreadout::sim::{simulate_traces, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;

    let ts = simulate_traces(&SimConfig::stress(), 20)?;
    let manifest = save_bundle(&ts, dir.path())?;
    let back = load_bundle(&manifest)?;
    println!(
        "{} records of {} samples round-tripped via {}",
        back.n_traces,
        back.n_samples,
        manifest.display()
    );
    println!(
        "stored as f32: equal to the quantized input: {}",
        back == ts.quantized()
    );

    let csv_path = dir.path().join("records.csv");
    let mut f = std::fs::File::create(&csv_path)?;
    writeln!(f, "trace_id,sample_idx,I,Q,prepared")?;
    for (id, prepared) in [(0, 0), (1, 1)] {
        for k in 0..4 {
            writeln!(
                f,
                "{id},{k},{},{},{prepared}",
                0.1 * k as f64,
                -0.2 * id as f64
            )?;
        }
    }
    drop(f);
    let imported = import_csv(&csv_path, 0.5, Some(2))?;
    println!(
        "imported {} records of {} samples from CSV",
        imported.n_traces, imported.n_samples
    );

    // a 125 MHz tone sampled at 1 GS/s, averaged over 256-sample segments
    let (amp, phase) = (0.4, 0.9);
    let raw: Vec<f64> = (0..2048)
        .map(|k| amp * (2.0 * std::f64::consts::PI * 125e6 * k as f64 / 1e9 + phase).cos())
        .collect();
    for z in demodulate(&raw, 125e6, 1e9, 256)?.iter().take(2) {
        println!(
            "demodulated: amplitude {:.6}, phase {:.6}",
            z.norm(),
            z.arg()
        );
    }
    Ok(())
}
