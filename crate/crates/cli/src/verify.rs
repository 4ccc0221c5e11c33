//! `verify`: the invariant battery of every module, as machine-readable JSON.

use std::time::Instant;

use lpdelay::algebra::{AlgebraSpec, Casimir, JACOBI_TOL};
use lpdelay::diagnostics::{decay_report, detect_limit_cycle};
use lpdelay::history::Trajectory;
use lpdelay::linalg::Matrix;
use lpdelay::report::{R17, SCHEMA_VERSION};
use serde::Serialize;

use crate::error::CliError;
use crate::suite;

/// Structure-constant offset applied by the `structure-constant` fault.
pub const FAULT_DELTA: f64 = 0.25;

/// Deliberate defects for exercising the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Perturb one so(3) structure constant (antisymmetrically), breaking Jacobi.
    StructureConstant,
}

impl std::str::FromStr for Fault {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "structure-constant" | "jacobi" => Ok(Fault::StructureConstant),
            other => {
                Err(CliError::config(format!("--fault-inject: unknown fault `{other}`; expected structure-constant")))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub value: R17,
    /// Upper bound, or `[low, high]` for range checks.
    pub tolerance: Vec<R17>,
    /// Informational checks are reported but never fail the suite.
    pub gating: bool,
    pub seconds: R17,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: &'static str,
    pub passed: bool,
    pub fault: Option<&'static str>,
    pub failed: Vec<&'static str>,
    pub checks: Vec<Check>,
}

struct Battery {
    checks: Vec<Check>,
}

impl Battery {
    fn push(
        &mut self,
        name: &'static str,
        start: Instant,
        value: f64,
        tolerance: &[f64],
        gating: bool,
        detail: String,
    ) {
        let passed = match tolerance {
            [hi] => value <= *hi,
            [lo, hi] => (*lo..=*hi).contains(&value),
            _ => false,
        };
        self.checks.push(Check {
            name,
            passed,
            value: R17(value),
            tolerance: tolerance.iter().map(|&t| R17(t)).collect(),
            gating,
            seconds: R17(start.elapsed().as_secs_f64()),
            detail,
        });
    }

    fn bound(&mut self, name: &'static str, start: Instant, r: Result<f64, CliError>, tol: f64, detail: &str) {
        match r {
            Ok(v) => self.push(name, start, v, &[tol], true, detail.into()),
            Err(e) => self.push(name, start, f64::NAN, &[tol], true, e.to_string()),
        }
    }
}

fn synthetic(f: impl Fn(f64) -> f64, t_end: f64, dt: f64) -> Trajectory<f64> {
    let mut tr = Trajectory::new(1);
    let n = (t_end / dt).round() as usize;
    for i in 0..=n {
        let t = i as f64 * dt;
        let d = (f(t + 1e-6) - f(t - 1e-6)) / 2e-6;
        tr.append(t, &[f(t)], &[d]).expect("increasing times");
    }
    tr
}

/// Runs the whole battery. Never fails itself; failures are in the report.
pub fn run_battery(fault: Option<Fault>) -> VerifyReport {
    let mut b = Battery { checks: Vec::new() };

    // algebra
    let t = Instant::now();
    let constants = suite::so3_constants(fault.map(|_| FAULT_DELTA));
    let (dual, anti) = suite::bracket_identities(200, 1);
    b.push(
        "algebra.antisymmetry",
        t,
        suite::antisymmetry_defect(&constants, 3).max(anti),
        &[1e-14],
        true,
        "C[d][a][b] = -C[d][b][a] and [x,y] = -[y,x] on random pairs".into(),
    );
    let t = Instant::now();
    let verdict = match AlgebraSpec::new(3, constants.clone(), Matrix::identity(3), Casimir::ConstantOne) {
        Ok(_) => "algebra constructor accepts the constants".to_string(),
        Err(e) => format!("algebra constructor rejects the constants: {e}"),
    };
    b.push("algebra.jacobi", t, suite::jacobi_defect(&constants, 3), &[JACOBI_TOL], true, verdict);
    let t = Instant::now();
    b.push("algebra.coadjoint_duality", t, dual, &[1e-14], true, "<ad*_x mu, y> = <mu, [x,y]>".into());
    let t = Instant::now();
    b.push(
        "algebra.projection_idempotent",
        t,
        suite::projection_idempotence(200, 2),
        &[1e-12],
        true,
        "complement projection applied twice equals once".into(),
    );

    // history and integrator
    let t = Instant::now();
    b.push(
        "history.hermite_cubic_exact",
        t,
        suite::hermite_cubic_error(),
        &[1e-12],
        true,
        "cubic reproduced by the dense output".into(),
    );
    let t = Instant::now();
    match suite::convergence_ratio(0.05, 5.0) {
        Ok(r) => b.push("integrator.fourth_order", t, r, &[12.0, 20.0], true, "error ratio under step halving".into()),
        Err(e) => b.push("integrator.fourth_order", t, f64::NAN, &[12.0, 20.0], true, e.to_string()),
    }
    let t = Instant::now();
    b.bound(
        "integrator.sphere_invariance",
        t,
        suite::sphere_drift(0.01, 20.0),
        1e-8,
        "| |q| - 1 | on the sphere example",
    );

    // models
    let t = Instant::now();
    b.bound(
        "models.casimir_conservation",
        t,
        suite::casimir_conservation(1e-3, 50.0),
        1e-8,
        "| |M(t)| - |M(0)| | over t in [0, 50]",
    );
    let t = Instant::now();
    match suite::energy_law(1e-3, 50.0, 0.1) {
        Ok(c) => {
            b.push(
                "models.energy_rate_exact",
                t,
                c.exact_law,
                &[1e-5],
                true,
                format!("dE/dt against -alpha (M x Omega).(M~ x Omega~) at {} nodes", c.nodes),
            );
            b.push(
                "models.energy_rate_printed",
                t,
                c.printed_law,
                &[1e-5],
                false,
                "dE/dt against -alpha |M~ x Omega~|^2; the two agree only when M~ = M".into(),
            );
        }
        Err(e) => b.push("models.energy_rate_exact", t, f64::NAN, &[1e-5], true, e.to_string()),
    }
    let t = Instant::now();
    b.push(
        "models.generic_engine_equivalence",
        t,
        suite::generic_engine_gap(1000, 3),
        &[1e-12],
        true,
        "compact-algebra engine on so(3) against the rigid body".into(),
    );

    // spectral
    let t = Instant::now();
    b.bound(
        "spectral.linearization_fd",
        t,
        suite::linearization_gap(&suite::inertia_grid()),
        1e-6,
        "27-point inertia grid",
    );
    let t = Instant::now();
    b.bound("spectral.hopf_residual", t, suite::hopf_residuals(&suite::hopf_grid()), 1e-10, "10 parameter sets");
    let t = Instant::now();
    let gap = suite::transversality_pair(&suite::default_params(0.0)).map(|(a, s)| (a - s).abs() / a.abs());
    b.bound("spectral.transversality_tracking", t, gap, 1e-3, "implicit Re dlambda/dtau against root tracking");

    // hopf
    let t = Instant::now();
    match suite::normal_form_pair(&suite::default_params(0.0)) {
        Ok((a, oracle)) => {
            let g21 = a.normal_form.g21;
            b.push(
                "hopf.g21_oracle",
                t,
                (g21 - oracle).norm() / g21.norm(),
                &[1e-5],
                true,
                format!("closed form {g21} against Taylor-coefficient oracle {oracle}"),
            );
            let q = a.quantities;
            let identity = if q.beta2 == 2.0 * q.c1.re { 0.0 } else { (q.beta2 - 2.0 * q.c1.re).abs() };
            b.push("hopf.beta2_identity", Instant::now(), identity, &[0.0], true, "beta2 = 2 Re C1 bit for bit".into());
        }
        Err(e) => b.push("hopf.g21_oracle", t, f64::NAN, &[1e-5], true, e.to_string()),
    }

    // diagnostics
    let t = Instant::now();
    let sine = synthetic(|t| (std::f64::consts::TAU * t / 3.0).sin(), 60.0, 0.01);
    match detect_limit_cycle(&sine, 0, 0.5) {
        Ok(c) => b.push(
            "diagnostics.limit_cycle_synthetic",
            t,
            if c.converged { (c.period - 3.0).abs() / 3.0 } else { f64::INFINITY },
            &[1e-4],
            true,
            format!("period {} amplitude {} of sin(2 pi t / 3)", c.period, c.amplitude),
        ),
        Err(e) => b.push("diagnostics.limit_cycle_synthetic", t, f64::NAN, &[1e-4], true, e.to_string()),
    }
    let t = Instant::now();
    let decay = decay_report(&synthetic(|t| (-t).exp(), 20.0, 0.01), &[0.0]);
    b.push("diagnostics.decay_synthetic", t, decay.ratio, &[0.1], true, "exp(-t) over [0, 20]".into());

    let failed: Vec<&'static str> = b.checks.iter().filter(|c| c.gating && !c.passed).map(|c| c.name).collect();
    VerifyReport {
        schema_version: SCHEMA_VERSION,
        passed: failed.is_empty(),
        fault: fault.map(|_| "structure-constant"),
        failed,
        checks: b.checks,
    }
}

/// Exit-code view of a report: `Err(Verification)` naming failed invariants.
pub fn outcome(report: &VerifyReport) -> Result<(), CliError> {
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Verification(report.failed.iter().map(|s| s.to_string()).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fault_names_parse() {
        assert_eq!("structure-constant".parse::<Fault>().unwrap(), Fault::StructureConstant);
        assert_eq!("nope".parse::<Fault>().unwrap_err().exit_code(), 1);
    }
}
