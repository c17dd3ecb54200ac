//! Synthetic dispersive readout.
//!
//! The resonator field obeys the driven linear-cavity equation
//!
//! ```text
//! d(alpha)/dt = -i eps - (kappa/2 + i chi_s) alpha
//! ```
//!
//! with `chi_s` switching whenever the qubit jumps. Rates in the config are
//! given as ordinary frequencies (`kappa/2pi`, `chi/2pi` in MHz) and times in
//! microseconds, so the angular decay constant is `pi * kappa + 2 pi i * chi_s`
//! per microsecond. `drive_amp` is the drive rate `eps` in rad/us, which makes
//! `alpha` dimensionless. Qubit dynamics are a continuous-time Markov chain
//! with user-set rates; each demodulated sample is the mean field at the
//! sample midpoint plus white complex Gaussian noise.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::traces::{Label, TraceSet};

/// Simulator parameters. Field names are the JSON keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_states: usize,
    /// Readout window (us).
    #[serde(rename = "T_r")]
    pub readout_time: f64,
    /// Microseconds per demodulated sample.
    pub sample_period: f64,
    /// Resonator linewidth kappa/2pi (MHz).
    pub kappa: f64,
    /// Dispersive shift chi_s/2pi (MHz) per state.
    pub chi: Vec<f64>,
    pub drive_amp: f64,
    /// Per-quadrature noise standard deviation of one sample.
    pub noise_sigma: f64,
    /// `rates[s][t]`: transition rate s -> t (1/us).
    pub rates: Vec<Vec<f64>>,
    /// Probability that the qubit starts in a state other than the prepared one.
    pub prep_error: f64,
    pub seed: u64,
    /// Record the pre-measurement check; when false `initial_check` is unknown.
    #[serde(default = "default_true")]
    pub emit_initial_check: bool,
}

fn default_true() -> bool {
    true
}

impl SimConfig {
    /// Qutrit scales of a 3D-transmon setup: T_r = 10 us, kappa/2pi = 0.5 MHz,
    /// 2 chi/2pi = -0.29 MHz, T_1 = 189 us.
    pub fn oxf_qt() -> Self {
        let t1 = 189.0;
        SimConfig {
            n_states: 3,
            readout_time: 10.0,
            sample_period: 0.25,
            kappa: 0.5,
            chi: vec![0.145, -0.145, -0.435],
            drive_amp: 1.8,
            noise_sigma: 1.0,
            rates: vec![
                vec![0.0, 0.0, 0.0],
                vec![1.0 / t1, 0.0, 0.0],
                vec![0.0, 2.0 / t1, 0.0],
            ],
            prep_error: 0.005,
            seed: 0,
            emit_initial_check: true,
        }
    }

    /// Same device with T_1 shortened to the readout window, so a large share
    /// of excited-state records relax mid-measurement. The noise is lowered
    /// so that relaxation, not noise, dominates the integrated-signal error
    /// (about 17% for the Gaussian model on full-length records).
    pub fn stress() -> Self {
        let mut cfg = SimConfig::oxf_qt();
        cfg.noise_sigma = 0.5;
        let t1 = cfg.readout_time;
        cfg.rates = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0 / t1, 0.0, 0.0],
            vec![0.0, 1.0 / t1, 0.0],
        ];
        cfg
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "oxf_qt" => Some(SimConfig::oxf_qt()),
            "stress" => Some(SimConfig::stress()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.n_states;
        if !(2..=3).contains(&k) {
            return Err(Error::config(
                "n_states",
                format!("must be 2 or 3, got {k}"),
            ));
        }
        positive("T_r", self.readout_time)?;
        positive("sample_period", self.sample_period)?;
        positive("kappa", self.kappa)?;
        if self.sample_period > self.readout_time {
            return Err(Error::config(
                "sample_period",
                "longer than the readout window T_r",
            ));
        }
        if self.chi.len() != k || self.chi.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("chi", format!("need {k} finite entries")));
        }
        if !self.drive_amp.is_finite() {
            return Err(Error::config("drive_amp", "must be finite"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config("noise_sigma", "must be finite and >= 0"));
        }
        if self.rates.len() != k || self.rates.iter().any(|r| r.len() != k) {
            return Err(Error::config(
                "rates",
                format!("must be a {k} x {k} matrix"),
            ));
        }
        for (s, row) in self.rates.iter().enumerate() {
            for (t, &g) in row.iter().enumerate() {
                if !(g >= 0.0 && g.is_finite()) {
                    return Err(Error::config(
                        "rates",
                        format!("rates[{s}][{t}] must be >= 0"),
                    ));
                }
                if s == t && g != 0.0 {
                    return Err(Error::config("rates", format!("rates[{s}][{s}] must be 0")));
                }
            }
        }
        if !(0.0..1.0).contains(&self.prep_error) {
            return Err(Error::config("prep_error", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Samples per record, `round(T_r / sample_period)`.
    pub fn n_samples(&self) -> usize {
        ((self.readout_time / self.sample_period).round() as usize).max(1)
    }

    /// Complex decay constant `kappa/2 + i chi_s` in rad/us.
    pub fn decay(&self, state: Label) -> Complex64 {
        Complex64::new(PI * self.kappa, 2.0 * PI * self.chi[state as usize])
    }

    pub fn steady_state(&self, state: Label) -> Complex64 {
        Complex64::new(0.0, -self.drive_amp) / self.decay(state)
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, "must be finite and > 0"))
    }
}

/// Mean resonator field `t` microseconds after it held `alpha0`, with the
/// qubit fixed in `state`.
pub fn cavity_mean(state: Label, t: f64, config: &SimConfig, alpha0: Complex64) -> Complex64 {
    let ss = config.steady_state(state);
    ss + (alpha0 - ss) * (-config.decay(state) * t).exp()
}

/// A qubit transition at `time` (us) into `state`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub state: Label,
}

/// Markov-chain jumps on `[0, T_r]` starting from `initial`, in time order.
pub fn sample_jump_trajectory<R: Rng + ?Sized>(
    initial: Label,
    config: &SimConfig,
    rng: &mut R,
) -> Vec<Jump> {
    let mut jumps = Vec::new();
    let mut state = initial;
    let mut t = 0.0;
    loop {
        let row = &config.rates[state as usize];
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            break;
        }
        t += Exp::new(total).expect("positive rate").sample(rng);
        if t > config.readout_time {
            break;
        }
        let mut pick = rng.random::<f64>() * total;
        let mut next = state;
        for (s, &g) in row.iter().enumerate() {
            if g <= 0.0 {
                continue;
            }
            next = s as Label;
            if pick < g {
                break;
            }
            pick -= g;
        }
        state = next;
        jumps.push(Jump { time: t, state });
    }
    jumps
}

/// Trajectory detail behind one simulated record.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTruth {
    pub start: Label,
    pub jumps: Vec<Jump>,
}

impl TraceTruth {
    pub fn state_at(&self, t: f64) -> Label {
        self.jumps
            .iter()
            .take_while(|j| j.time <= t)
            .last()
            .map_or(self.start, |j| j.state)
    }
}

/// Records plus the hidden trajectories that produced them.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub traces: TraceSet,
    pub truth: Vec<TraceTruth>,
}

/// `n_per_state` records per prepared state, ordered by state.
pub fn simulate_traces(config: &SimConfig, n_per_state: usize) -> Result<TraceSet> {
    simulate(config, n_per_state).map(|s| s.traces)
}

/// Like [`simulate_traces`] but also returns each record's trajectory.
///
/// Record `r` draws from its own stream keyed by `(seed, r)`, so the output
/// does not depend on how the work is scheduled.
pub fn simulate(config: &SimConfig, n_per_state: usize) -> Result<Simulation> {
    config.validate()?;
    if n_per_state == 0 {
        return Err(Error::invalid("n_per_state must be at least 1"));
    }
    let k = config.n_states;
    let n = config.n_samples();
    let n_traces = k * n_per_state;

    let records: Vec<(Vec<Complex64>, TraceTruth)> = (0..n_traces)
        .into_par_iter()
        .map(|r| simulate_one(config, (r / n_per_state) as Label, r as u64, n))
        .collect();

    let mut traces = Vec::with_capacity(n_traces * n);
    let mut prepared = Vec::with_capacity(n_traces);
    let mut initial_check = Vec::with_capacity(n_traces);
    let mut final_state = Vec::with_capacity(n_traces);
    let mut truth = Vec::with_capacity(n_traces);
    for (r, (samples, t)) in records.into_iter().enumerate() {
        let p = (r / n_per_state) as Label;
        traces.extend(samples);
        prepared.push(p);
        // the check runs before the preparation pulses; a preparation
        // that starts from an excited state shifts the result cyclically
        initial_check.push(
            config
                .emit_initial_check
                .then(|| ((t.start as usize + k - p as usize) % k) as Label),
        );
        final_state.push(Some(t.state_at(config.readout_time)));
        truth.push(t);
    }

    let mut meta = BTreeMap::new();
    meta.insert("source".to_string(), "sigreadout simulator".to_string());
    meta.insert("seed".to_string(), config.seed.to_string());
    meta.insert("n_per_state".to_string(), n_per_state.to_string());
    let traces = TraceSet::new(
        n,
        k,
        config.sample_period,
        traces,
        prepared,
        initial_check,
        final_state,
        meta,
    )?;
    Ok(Simulation { traces, truth })
}

fn simulate_one(
    config: &SimConfig,
    prepared: Label,
    r: u64,
    n: usize,
) -> (Vec<Complex64>, TraceTruth) {
    let mut rng = rng::stream(config.seed, r);
    let k = config.n_states as Label;
    let mut start = prepared;
    if rng.random::<f64>() < config.prep_error {
        let other = rng.random_range(0..k - 1);
        start = if other >= prepared { other + 1 } else { other };
    }
    let jumps = sample_jump_trajectory(start, config, &mut rng);

    let mut samples = Vec::with_capacity(n);
    let mut state = start;
    let mut seg_start = 0.0;
    let mut alpha_at_seg = Complex64::new(0.0, 0.0);
    let mut pending = jumps.iter().peekable();
    for j in 0..n {
        let t = (j as f64 + 0.5) * config.sample_period;
        while let Some(jump) = pending.next_if(|jump| jump.time <= t) {
            alpha_at_seg = cavity_mean(state, jump.time - seg_start, config, alpha_at_seg);
            seg_start = jump.time;
            state = jump.state;
        }
        let mean = cavity_mean(state, t - seg_start, config, alpha_at_seg);
        let (ni, nq) = if config.noise_sigma > 0.0 {
            let ni: f64 = StandardNormal.sample(&mut rng);
            let nq: f64 = StandardNormal.sample(&mut rng);
            (ni * config.noise_sigma, nq * config.noise_sigma)
        } else {
            (0.0, 0.0)
        };
        samples.push(mean + Complex64::new(ni, nq));
    }
    (samples, TraceTruth { start, jumps })
}
