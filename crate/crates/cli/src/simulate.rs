//! `simulate`: one integration run, trajectory CSV plus a JSON summary.

use std::path::Path;

use lpdelay::diagnostics::{casimir_drift, energy_rate_check};
use lpdelay::history::Trajectory;
use lpdelay::integrator::{adjust_step, integrate, IntegratorConfig, IntegratorError};
use lpdelay::report::{R17, SCHEMA_VERSION};
use serde::Serialize;

use crate::config::{ModelConfig, RunConfig};
use crate::error::{write_file, CliError};

/// Displacement below which a run counts as motionless.
pub const ZERO_MOTION_TOL: f64 = 1e-12;
/// Number of `(t, E)` samples in the summary's energy profile.
const ENERGY_PROFILE_POINTS: usize = 101;

/// Step actually used and whether it differs from the request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepChoice {
    pub requested: R17,
    pub used: R17,
    pub adjusted: bool,
}

/// Shrinks `h` to the largest divisor of `τ`, logging any change.
pub fn choose_step(tau: f64, h: f64) -> StepChoice {
    let (used, adjusted) = adjust_step(tau, h);
    if adjusted {
        eprintln!("note: step adjusted from h = {h} to h = {used} so that tau = {tau} is a whole number of steps");
    }
    StepChoice { requested: R17(h), used: R17(used), adjusted }
}

pub(crate) fn integration_error(e: IntegratorError) -> CliError {
    match e {
        IntegratorError::Divergence { .. } | IntegratorError::NonFinite { .. } => CliError::Divergence(e.to_string()),
        other => CliError::config(other.to_string()),
    }
}

/// Integrates the configured model.
pub fn run(model: &ModelConfig, cfg: &RunConfig) -> Result<(Trajectory<f64>, StepChoice), CliError> {
    let tau = model.tau();
    let step = choose_step(tau, cfg.h);
    let initial = cfg.initial.build(tau)?;
    let problem = model.problem(initial)?;
    let config = IntegratorConfig::new(step.used.0, cfg.t_end).with_pruning(cfg.prune);
    let traj = integrate(&problem, &config).map_err(integration_error)?;
    Ok((traj, step))
}

#[derive(Debug, Clone, Serialize)]
pub struct CasimirSummary {
    pub reference: R17,
    pub max_drift: R17,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergySummary {
    pub initial: R17,
    #[serde(rename = "final")]
    pub last: R17,
    pub min: R17,
    pub max: R17,
    /// `[t, E]` at evenly spaced nodes.
    pub profile: Vec<[R17; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyRateSummary {
    pub printed_law: R17,
    pub exact_law: R17,
    pub nodes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub schema_version: &'static str,
    pub model: &'static str,
    pub tau: R17,
    pub step: StepChoice,
    pub t_end: R17,
    pub nodes: usize,
    pub final_time: R17,
    pub final_state: Vec<R17>,
    pub max_displacement: R17,
    pub zero_motion: bool,
    pub casimir: Option<CasimirSummary>,
    pub energy: Option<EnergySummary>,
    pub energy_rate: Option<EnergyRateSummary>,
}

fn first_nonneg(traj: &Trajectory<f64>) -> usize {
    traj.times().partition_point(|&t| t < 0.0)
}

pub fn summarize(model: &ModelConfig, cfg: &RunConfig, traj: &Trajectory<f64>, step: StepChoice) -> SimulationSummary {
    let i0 = first_nonneg(traj);
    let n = traj.len();
    let last = traj.state(n - 1);
    let x0 = traj.state(i0);
    let max_displacement =
        (i0..n).flat_map(|i| traj.state(i).iter().zip(x0).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);

    let casimir =
        model.casimir().map(|c| CasimirSummary { reference: R17(c(x0)), max_drift: R17(casimir_drift(traj, c)) });

    let energy = model.energy().map(|e| {
        let values: Vec<f64> = (i0..n).map(|i| e(traj.state(i))).collect();
        let stride = (values.len().saturating_sub(1) / (ENERGY_PROFILE_POINTS - 1)).max(1);
        let mut profile: Vec<[R17; 2]> =
            (0..values.len()).step_by(stride).map(|k| [R17(traj.time(i0 + k)), R17(values[k])]).collect();
        if !(values.len() - 1).is_multiple_of(stride) {
            profile.push([R17(traj.time(n - 1)), R17(values[values.len() - 1])]);
        }
        EnergySummary {
            initial: R17(values[0]),
            last: R17(values[values.len() - 1]),
            min: R17(values.iter().copied().fold(f64::INFINITY, f64::min)),
            max: R17(values.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            profile,
        }
    });

    let energy_rate = match (&model, cfg.prune) {
        (ModelConfig::RigidBody(p), false) => energy_rate_check(traj, p).ok().map(|c| EnergyRateSummary {
            printed_law: R17(c.printed_law),
            exact_law: R17(c.exact_law),
            nodes: c.nodes,
        }),
        _ => None,
    };

    SimulationSummary {
        schema_version: SCHEMA_VERSION,
        model: model.name(),
        tau: R17(model.tau()),
        step,
        t_end: R17(cfg.t_end),
        nodes: n,
        final_time: R17(traj.time(n - 1)),
        final_state: last.iter().map(|&v| R17(v)).collect(),
        max_displacement: R17(max_displacement),
        zero_motion: max_displacement <= ZERO_MOTION_TOL,
        casimir,
        energy,
        energy_rate,
    }
}

/// Runs the configured simulation and writes the CSV and JSON outputs.
pub fn cmd_simulate(config_path: &Path) -> Result<SimulationSummary, CliError> {
    let cfg = RunConfig::load(config_path)?;
    let (traj, step) = run(&cfg.model, &cfg)?;
    let summary = summarize(&cfg.model, &cfg, &traj, step);
    let stem = config_path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    let dir = config_path.parent().unwrap_or(Path::new("."));
    let csv = cfg.output_csv.clone().unwrap_or_else(|| dir.join(format!("{stem}.csv")));
    let json = cfg.output_json.clone().unwrap_or_else(|| dir.join(format!("{stem}.summary.json")));
    write_file(&csv, &traj.to_csv_string())?;
    write_file(&json, &lpdelay::report::to_json_string(&summary))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_without_damping_does_not_move() {
        let cfg = RunConfig::parse(
            "model = rigid_body\nI1 = 0.8\nI2 = 0.5\nI3 = 0.4\nalpha = 0\ntau = 0.5\nm = 1.5\nh = 0.01\nt_end = 5\neps = 0\n",
        )
        .unwrap();
        let (traj, step) = run(&cfg.model, &cfg).unwrap();
        let s = summarize(&cfg.model, &cfg, &traj, step);
        assert!(s.zero_motion);
        assert!(s.casimir.unwrap().max_drift.0 <= 1e-12);
        assert!(!s.step.adjusted);
    }

    #[test]
    fn step_adjustment_is_reported() {
        let s = choose_step(0.5, 0.03);
        assert!(s.adjusted);
        assert_eq!(s.used.0, 0.5 / 17.0);
    }

    #[test]
    fn divergence_maps_to_exit_two() {
        let cfg = RunConfig::parse(
            "model = cylinder\nb = -5\nc = 0\ntau = 0.1\nh = 0.01\nt_end = 100\ninitial = constant\nx0 = 0, 1\n",
        )
        .unwrap();
        let e = run(&cfg.model, &cfg).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{e}");
    }
}
