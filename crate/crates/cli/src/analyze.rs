//! `analyze`: spectral and Hopf analysis of the rigid body with delayed damping.

use lpdelay::models::RigidBodyParams;
use lpdelay::report::{analyze, AnalysisError, AnalysisReport, AnalysisStatus};
use lpdelay::spectral::CoefficientVariant;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeArgs {
    pub inertia: [f64; 3],
    pub alpha: f64,
    pub m: f64,
    pub variant: CoefficientVariant,
}

/// Builds the report. A missing crossing still yields a report, marked
/// [`AnalysisStatus::NoCrossing`]; use [`outcome`] for the exit status.
pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<AnalysisReport, CliError> {
    let p = RigidBodyParams::new(args.inertia, args.alpha, 0.0, args.m);
    analyze(&p, args.variant).map_err(|e| match e {
        AnalysisError::Hypothesis(e) => CliError::config(e.to_string()),
        AnalysisError::Numerical(m) => CliError::config(format!("analysis failed: {m}")),
    })
}

pub fn outcome(report: &AnalysisReport) -> Result<(), CliError> {
    match report.status {
        AnalysisStatus::Ok => Ok(()),
        AnalysisStatus::NoCrossing => Err(CliError::NoCrossing(
            "no delay within the search bound puts a root on the imaginary axis; evidence is in the report".into(),
        )),
    }
}
