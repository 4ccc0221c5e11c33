//! `sweep`: the same perturbed start integrated over a grid of delays.
//!
//! Rows run concurrently on a bounded rayon pool; the output is always in
//! grid order.

use std::fmt::Write as _;

use lpdelay::diagnostics::{decay_report, detect_limit_cycle, DEFAULT_TRANSIENT_FRACTION};
use lpdelay::scalar::fmt17;
use rayon::prelude::*;

use crate::config::{InitialSpec, ModelConfig, RunConfig};
use crate::error::CliError;
use crate::simulate::run;

/// A run counts as decayed when its distance from the rest state over the
/// final tenth of the run is below this fraction of the initial distance.
pub const DECAY_RATIO: f64 = 0.1;

pub const CSV_HEADER: &str = "tau,decayed,amplitude,period,converged,decay_ratio,status";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tau: f64,
    pub decayed: bool,
    pub amplitude: f64,
    /// `NaN` when no periodic orbit was detected.
    pub period: f64,
    pub converged: bool,
    pub decay_ratio: f64,
    /// `ok`, or the failure for this row.
    pub status: String,
}

impl SweepRow {
    fn failed(tau: f64, status: String) -> Self {
        Self {
            tau,
            decayed: false,
            amplitude: f64::NAN,
            period: f64::NAN,
            converged: false,
            decay_ratio: f64::NAN,
            status,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// `n` evenly spaced delays from `tau_min` to `tau_max` inclusive.
pub fn tau_grid(tau_min: f64, tau_max: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if n == 0 {
        return Err(CliError::config("--points must be at least 1"));
    }
    if !(tau_min > 0.0 && tau_max >= tau_min && tau_max.is_finite()) {
        return Err(CliError::config(format!(
            "invalid delay range [{tau_min}, {tau_max}]; need 0 < tau-min <= tau-max"
        )));
    }
    if n == 1 {
        return Ok(vec![tau_min]);
    }
    let step = (tau_max - tau_min) / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { tau_max } else { tau_min + step * i as f64 }).collect())
}

/// Rest state a perturbed run relaxes to. For the rigid body `‖M‖` is
/// conserved, so that is the equilibrium on the initial momentum sphere,
/// `(±‖M(0)‖, 0, 0)`, rather than the configured `(m, 0, 0)`.
pub fn rest_state(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let InitialSpec::Perturbed { equilibrium, .. } = &cfg.initial else {
        return Err(CliError::config("key `initial`: sweep needs `initial = perturbed` to define the rest state"));
    };
    match &cfg.model {
        ModelConfig::RigidBody(p) => {
            let x0 = cfg.initial.build(p.tau)?.eval(0.0).map_err(|e| CliError::config(e.to_string()))?;
            let r = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(vec![r.copysign(p.m), 0.0, 0.0])
        }
        _ => Ok(equilibrium.clone()),
    }
}

/// Oscillating component watched by the cycle detector.
fn watched_component(dim: usize) -> usize {
    usize::from(dim > 1)
}

pub fn sweep_row(cfg: &RunConfig, reference: &[f64], tau: f64) -> SweepRow {
    let model = match cfg.model.with_tau(tau) {
        Ok(m) => m,
        Err(e) => return SweepRow::failed(tau, e.to_string()),
    };
    let (traj, _) = match run(&model, cfg) {
        Ok(r) => r,
        Err(e) => return SweepRow::failed(tau, e.to_string()),
    };
    let decay = decay_report(&traj, reference);
    let decayed = decay.ratio < DECAY_RATIO;
    let cycle = detect_limit_cycle(&traj, watched_component(model.dim()), DEFAULT_TRANSIENT_FRACTION).ok();
    let (amplitude, period, converged) = match cycle {
        Some(c) if !decayed && !c.equilibrium => (c.amplitude, c.period, c.converged),
        _ => (decay.final_max, f64::NAN, false),
    };
    SweepRow { tau, decayed, amplitude, period, converged, decay_ratio: decay.ratio, status: "ok".into() }
}

/// Runs every grid point on a pool of at most `threads` workers
/// (default: available parallelism).
pub fn sweep(cfg: &RunConfig, taus: &[f64], threads: Option<usize>) -> Result<Vec<SweepRow>, CliError> {
    let reference = rest_state(cfg)?;
    cfg.model.with_tau(taus.first().copied().unwrap_or(1.0))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| taus.par_iter().map(|&tau| sweep_row(cfg, &reference, tau)).collect()))
}

/// First grid delay at which a decayed row is followed by an oscillating one.
pub fn onset(rows: &[SweepRow]) -> Option<f64> {
    rows.windows(2).find(|w| w[0].is_ok() && w[1].is_ok() && w[0].decayed && !w[1].decayed).map(|w| w[1].tau)
}

fn field(x: f64) -> String {
    if x.is_finite() {
        fmt17(x)
    } else {
        String::new()
    }
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let status = r.status.replace([',', '\n'], ";");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt17(r.tau),
            r.decayed,
            field(r.amplitude),
            field(r.period),
            r.converged,
            field(r.decay_ratio),
            status
        );
    }
    out
}
