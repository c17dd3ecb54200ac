//! Simulated dispersive readout: mean trajectories, noisy records and decays.
//!
//! cargo run --release --example simulate_readout

use num_complex::Complex64;
use sigreadout::sim::{cavity_mean, simulate, SimConfig};

fn main() -> sigreadout::Result<()> {
    let cfg = SimConfig::stress();
    println!(
        "{} states, {} samples of {} us, noise {}",
        cfg.n_states,
        cfg.n_samples(),
        cfg.sample_period,
        cfg.noise_sigma
    );

    for s in 0..cfg.n_states as u8 {
        let end = cavity_mean(s, cfg.readout_time, &cfg, Complex64::new(0.0, 0.0));
        println!(
            "state {s}: mean field at the end of the window ({:+.3}, {:+.3})",
            end.re, end.im
        );
    }

    let sim = simulate(&cfg, 500)?;
    let ts = &sim.traces;
    for s in 0..cfg.n_states as u8 {
        let rows: Vec<usize> = (0..ts.n_traces).filter(|&r| ts.prepared[r] == s).collect();
        let changed = rows
            .iter()
            .filter(|&&r| ts.final_state[r] != Some(s))
            .count();
        let failed_check = rows
            .iter()
            .filter(|&&r| ts.initial_check[r] != Some(0))
            .count();
        println!(
            "prepared {s}: {:.1}% left the state during readout, {:.1}% failed the ground check",
            100.0 * changed as f64 / rows.len() as f64,
            100.0 * failed_check as f64 / rows.len() as f64
        );
    }

    let jumpy = sim.truth.iter().position(|t| !t.jumps.is_empty());
    if let Some(r) = jumpy {
        let t = &sim.truth[r];
        println!(
            "record {r} starts in {} and jumps at {:?}",
            t.start,
            t.jumps
                .iter()
                .map(|j| (j.time, j.state))
                .collect::<Vec<_>>()
        );
    }
    Ok(())
}
