//! Predicting the state at the end of the window rather than the prepared one.
//!
//! cargo run --release --example eom_tracking -- [repetitions]

use sigreadout::pipeline::{
    run_experiment, DataSource, ExperimentConfig, Method, SearchSpace, Target,
};
use sigreadout::sim::SimConfig;

fn main() -> sigreadout::Result<()> {
    let reps = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(3);
    let mut cfg = ExperimentConfig::new(DataSource::Simulator {
        config: SimConfig::stress(),
        n_per_state: 1000,
    });
    cfg.methods = vec![Method::Rf, Method::SigRf];
    cfg.target = Target::Eom;
    cfg.n_repetitions = reps;
    cfg.search = SearchSpace {
        n_candidates: 1,
        ..SearchSpace::default()
    };

    let report = run_experiment(&cfg)?;
    // the baseline reports the prepared state as the final one
    print!("{}", report.render_table());
    Ok(())
}
