//! Infidelity against integration window length; writes curves.csv.
//!
//! cargo run --release --example window_sweep -- [output csv]

use sigreadout::pipeline::{window_sweep, DataSource, ExperimentConfig, Method, SearchSpace};
use sigreadout::sim::SimConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "curves.csv".into());
    let mut cfg = ExperimentConfig::new(DataSource::Simulator {
        config: SimConfig::stress(),
        n_per_state: 1000,
    });
    cfg.methods = vec![Method::Gmm, Method::SigRf];
    cfg.n_repetitions = 2;
    cfg.search = SearchSpace {
        n_candidates: 1,
        ..SearchSpace::default()
    };

    let report = window_sweep(&cfg, &[8, 16, 24, 32, 40])?;
    let mut csv = csv::Writer::from_path(&out)?;
    csv.write_record(["window", "method", "mean_infidelity", "std"])?;
    for m in report.methods() {
        for (w, mean, std) in report.curve(m) {
            println!("{:>7} window {w:>2}: {:.2}%", m.name(), 100.0 * mean);
            csv.write_record([
                w.to_string(),
                m.name().to_string(),
                mean.to_string(),
                std.to_string(),
            ])?;
        }
        if let Some(best) = report.best_window(m) {
            println!("{:>7} is best at window {}", m.name(), best.window);
        }
    }
    csv.flush()?;
    println!("wrote {out}");
    Ok(())
}
