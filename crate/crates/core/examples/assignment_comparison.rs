//! GMM against signature features with a random forest on the stress preset.
//!
//! cargo run --release --example assignment_comparison -- [repetitions] [traces per state]

use sigreadout::pipeline::{run_experiment, DataSource, ExperimentConfig, Method, SearchSpace};
use sigreadout::sim::SimConfig;

fn main() -> sigreadout::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);
    let n_per_state = args.next().and_then(|a| a.parse().ok()).unwrap_or(1000);

    let mut cfg = ExperimentConfig::new(DataSource::Simulator {
        config: SimConfig::stress(),
        n_per_state,
    });
    cfg.methods = vec![Method::Gmm, Method::Rf, Method::SigRf];
    cfg.n_repetitions = reps;
    cfg.seed = 1;
    cfg.search = SearchSpace {
        n_candidates: 1,
        ..SearchSpace::default()
    };

    let report = run_experiment(&cfg)?;
    print!("{}", report.render_table());
    for r in &report.results {
        println!(
            "{:>7}: per repetition {:?}",
            r.method.name(),
            r.per_rep_infidelity
        );
    }
    Ok(())
}
