//! Measurements behind `verify` and the acceptance tests.
//!
//! Each function runs one experiment with fixed seeds and parameters and
//! returns the measured quantity; deciding pass or fail is left to the caller.

use lpdelay::algebra::{so3_structure_constants, AlgebraElement, AlgebraSpec, Casimir, CoalgebraElement};
use lpdelay::diagnostics::{
    casimir_drift, decay_report, detect_limit_cycle, energy_rate_check, CycleEstimate, DecayReport, EnergyRateCheck,
    DEFAULT_TRANSIENT_FRACTION,
};
use lpdelay::history::{InitialFunction, Trajectory};
use lpdelay::hopf::{analyze_hopf, taylor_oracle, HopfAnalysis, W11Choice};
use lpdelay::integrator::{integrate, IntegratorConfig};
use lpdelay::linalg::Matrix;
use lpdelay::models::{
    generic_dissipative_rhs, rigid_body_delay_rhs, rigid_body_perturbed_history, rigid_body_problem, sphere_problem,
    RigidBodyParams,
};
use lpdelay::spectral::{
    char_residual, coefficients, crossing_system, hopf_point, linearization_fd_error, tracked_slope, transversality,
    CoefficientVariant, HopfPoint, SpectralCoefficients,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{InitialSpec, ModelConfig, RunConfig};
use crate::error::CliError;
use crate::sweep::{onset, rest_state, sweep, tau_grid, SweepRow};

pub const DEFAULT_INERTIA: [f64; 3] = [0.8, 0.5, 0.4];
pub const DEFAULT_ALPHA: f64 = 0.3;
pub const DEFAULT_M: f64 = 1.5;
/// Delay of the conservation and energy runs.
pub const CONSERVATION_TAU: f64 = 0.5;
pub const PERTURBATION_DIRECTION: [f64; 3] = [0.0, 1.0, 1.0];

pub fn default_params(tau: f64) -> RigidBodyParams<f64> {
    RigidBodyParams::new(DEFAULT_INERTIA, DEFAULT_ALPHA, tau, DEFAULT_M)
}

fn err(e: impl std::fmt::Display) -> CliError {
    CliError::config(e.to_string())
}

// ---------------------------------------------------------------------------
// Algebra

/// Flattened so(3) constants, optionally with `C[0][0][1] = −C[0][1][0] = δ`
/// added. The perturbation keeps antisymmetry but breaks Jacobi.
pub fn so3_constants(fault: Option<f64>) -> Vec<f64> {
    let mut c = so3_structure_constants::<f64>();
    if let Some(delta) = fault {
        c[1] += delta; // [d=0][a=0][b=1]
        c[3] -= delta; // [d=0][a=1][b=0]
    }
    c
}

/// Largest antisymmetry defect `|C[d][a][b] + C[d][b][a]|`.
pub fn antisymmetry_defect(c: &[f64], n: usize) -> f64 {
    let at = |d: usize, a: usize, b: usize| c[(d * n + a) * n + b];
    let mut worst = 0.0f64;
    for d in 0..n {
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((at(d, a, b) + at(d, b, a)).abs());
            }
        }
    }
    worst
}

/// Largest Jacobi residual over all index quadruples, computed directly
/// from the flat constants.
pub fn jacobi_defect(c: &[f64], n: usize) -> f64 {
    let at = |d: usize, a: usize, b: usize| c[(d * n + a) * n + b];
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                for f in 0..n {
                    let r: f64 = (0..n)
                        .map(|e| at(e, a, b) * at(f, e, cc) + at(e, b, cc) * at(f, e, a) + at(e, cc, a) * at(f, e, b))
                        .sum();
                    worst = worst.max(r.abs());
                }
            }
        }
    }
    worst
}

fn random3(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
}

/// Largest `|⟨ad*_ξ μ, η⟩ − ⟨μ, [ξ, η]⟩|` and `|[ξ,η] + [η,ξ]|` over random samples.
pub fn bracket_identities(samples: usize, seed: u64) -> (f64, f64) {
    let spec = AlgebraSpec::<f64>::so3_standard();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut dual, mut anti) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let xi = AlgebraElement(random3(&mut rng).to_vec());
        let eta = AlgebraElement(random3(&mut rng).to_vec());
        let mu = CoalgebraElement(random3(&mut rng).to_vec());
        let ad = spec.coadjoint(&xi, &mu).expect("dimensions match");
        let br = spec.bracket(&xi, &eta).expect("dimensions match");
        let rb = spec.bracket(&eta, &xi).expect("dimensions match");
        let lhs: f64 = ad.0.iter().zip(&eta.0).map(|(a, b)| a * b).sum();
        let rhs: f64 = mu.0.iter().zip(&br.0).map(|(a, b)| a * b).sum();
        dual = dual.max((lhs - rhs).abs());
        anti = anti.max(br.0.iter().zip(&rb.0).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max));
    }
    (dual, anti)
}

/// Largest `‖P(Pξ) − Pξ‖` for the projection onto the complement of the isotropy algebra.
pub fn projection_idempotence(samples: usize, seed: u64) -> f64 {
    let gamma =
        Matrix::from_rows(&[vec![1.5, 0.2, 0.0], vec![0.2, 1.0, 0.1], vec![0.0, 0.1, 0.7]]).expect("square matrix");
    let spec = AlgebraSpec::so3(gamma, Casimir::NormSquared).expect("valid algebra");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let xi = AlgebraElement(random3(&mut rng).to_vec());
        let mu = CoalgebraElement(random3(&mut rng).to_vec());
        let once = spec.project_complement(&xi, &mu).expect("valid projection");
        let twice = spec.project_complement(&once, &mu).expect("valid projection");
        worst = worst.max(once.0.iter().zip(&twice.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    worst
}

// ---------------------------------------------------------------------------
// History and integrator

/// Worst Hermite interpolation error for the cubic `t³ − 2t² + t/2 − 1`
/// stored with exact derivatives on a coarse grid.
pub fn hermite_cubic_error() -> f64 {
    let f = |t: f64| t * t * t - 2.0 * t * t + 0.5 * t - 1.0;
    let df = |t: f64| 3.0 * t * t - 4.0 * t + 0.5;
    let mut traj = Trajectory::new(1);
    for i in 0..=20 {
        let t = -1.0 + 0.15 * i as f64;
        traj.append(t, &[f(t)], &[df(t)]).expect("increasing times");
    }
    let (mut x, mut dx) = ([0.0], [0.0]);
    let mut worst = 0.0f64;
    for k in 0..=597 {
        let t = -1.0 + 0.005 * k as f64;
        traj.sample_into(t, &mut x, &mut dx).expect("inside the table");
        worst = worst.max((x[0] - f(t)).abs()).max((dx[0] - df(t)).abs());
    }
    worst
}

/// Perturbed start used by the conservation, energy and order runs.
pub fn perturbed_run(tau: f64, eps: f64, h: f64, t_end: f64) -> Result<Trajectory<f64>, CliError> {
    let p = default_params(tau);
    let init = rigid_body_perturbed_history(&p, eps, PERTURBATION_DIRECTION);
    let prob = rigid_body_problem(&p, init).map_err(err)?;
    integrate(&prob, &IntegratorConfig::new(h, t_end)).map_err(err)
}

fn final_state(traj: &Trajectory<f64>) -> Vec<f64> {
    traj.last_state().expect("non-empty trajectory").to_vec()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Convergence ratio `‖x_h − x_{h/2}‖ / ‖x_{h/2} − x_{h/4}‖` at the final time
/// of the delayed rigid body; close to 16 for a fourth-order method.
pub fn convergence_ratio(h: f64, t_end: f64) -> Result<f64, CliError> {
    let runs: Vec<Vec<f64>> = [h, h / 2.0, h / 4.0]
        .iter()
        .map(|&hh| perturbed_run(CONSERVATION_TAU, 0.1, hh, t_end).map(|t| final_state(&t)))
        .collect::<Result<_, _>>()?;
    Ok(max_diff(&runs[0], &runs[1]) / max_diff(&runs[1], &runs[2]))
}

/// Largest `|‖q(t)‖ − 1|` for the sphere example started on the unit sphere.
pub fn sphere_drift(h: f64, t_end: f64) -> Result<f64, CliError> {
    let tau = 1.0;
    let s = 3f64.sqrt().recip();
    let prob = sphere_problem(tau, InitialFunction::constant(vec![s, s, s], tau)).map_err(err)?;
    let traj = integrate(&prob, &IntegratorConfig::new(h, t_end)).map_err(err)?;
    let i0 = traj.times().partition_point(|&t| t < 0.0);
    Ok((i0..traj.len())
        .map(|i| (traj.state(i).iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs())
        .fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// Models

pub fn norm_casimir(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `max |‖M(t)‖ − ‖M(0)‖|` on the conservation run.
pub fn casimir_conservation(h: f64, t_end: f64) -> Result<f64, CliError> {
    let traj = perturbed_run(CONSERVATION_TAU, 0.1, h, t_end)?;
    Ok(casimir_drift(&traj, norm_casimir))
}

/// Energy-rate discrepancies on the conservation run.
pub fn energy_law(h: f64, t_end: f64, eps: f64) -> Result<EnergyRateCheck<f64>, CliError> {
    let traj = perturbed_run(CONSERVATION_TAU, eps, h, t_end)?;
    energy_rate_check(&traj, &default_params(CONSERVATION_TAU)).map_err(err)
}

/// Largest difference between the generic compact-algebra engine on so(3)
/// (Γ = id, C ≡ 1, ∇h = ∇k = identity) and the hand-coded rigid body with
/// unit inertia and α = 1, over random `(M, M̃)` pairs.
pub fn generic_engine_gap(samples: usize, seed: u64) -> f64 {
    let spec = AlgebraSpec::<f64>::so3_standard();
    let grad = |m: &[f64]| m.to_vec();
    let p = RigidBodyParams::new([1.0; 3], 1.0, 0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (m, md) = (random3(&mut rng), random3(&mut rng));
        let g =
            generic_dissipative_rhs(&CoalgebraElement(m.to_vec()), &CoalgebraElement(md.to_vec()), &spec, &grad, &grad)
                .expect("so(3) with C = 1 has no singular points");
        worst = worst.max(max_diff(&g.0, &rigid_body_delay_rhs(&m, &md, &p)));
    }
    worst
}

// ---------------------------------------------------------------------------
// Spectral and Hopf

/// Ten parameter sets with `I1 > I2, I3`.
pub fn hopf_grid() -> Vec<RigidBodyParams<f64>> {
    [
        ([0.8, 0.5, 0.4], 0.3, 1.5),
        ([0.8, 0.5, 0.4], 0.3, 1.8),
        ([1.0, 0.6, 0.3], 0.2, 1.0),
        ([1.2, 0.9, 0.5], 0.5, 2.0),
        ([2.0, 1.0, 1.5], 0.1, 3.0),
        ([1.5, 0.7, 0.7], 0.4, 0.8),
        ([0.9, 0.3, 0.6], 0.25, 1.2),
        ([3.0, 2.0, 1.0], 0.05, 5.0),
        ([1.1, 1.0, 0.2], 0.6, 0.7),
        ([0.7, 0.2, 0.1], 1.0, 0.5),
    ]
    .into_iter()
    .map(|(i, a, m)| RigidBodyParams::new(i, a, 0.0, m))
    .collect()
}

/// 27 inertia triples `Iₖ ∈ {0.4, 0.7, 1.1}` at α = 0.3, m = 1.5.
pub fn inertia_grid() -> Vec<RigidBodyParams<f64>> {
    let vals = [0.4, 0.7, 1.1];
    let mut out = Vec::with_capacity(27);
    for &a in &vals {
        for &b in &vals {
            for &c in &vals {
                out.push(RigidBodyParams::new([a, b, c], DEFAULT_ALPHA, 0.0, DEFAULT_M));
            }
        }
    }
    out
}

pub fn spectral_setup(p: &RigidBodyParams<f64>) -> Result<(SpectralCoefficients<f64>, HopfPoint<f64>), CliError> {
    let co = coefficients(p, CoefficientVariant::Determinant).map_err(err)?;
    let hp = hopf_point(&co, p.m, p.alpha).map_err(err)?;
    Ok((co, hp))
}

/// Worst of `|F(iω₀, τ₀)|` and both crossing-system residuals over the grid.
pub fn hopf_residuals(grid: &[RigidBodyParams<f64>]) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for p in grid {
        let (co, hp) = spectral_setup(p)?;
        let r = char_residual(lpdelay::Complex::new(0.0, hp.omega0), hp.tau0, &co).norm();
        let (e1, e2) = crossing_system(hp.omega0, hp.tau0, &co);
        worst = worst.max(r).max(e1.abs()).max(e2.abs());
    }
    Ok(worst)
}

/// Largest entry-wise gap between the analytic linearization and central
/// finite differences over the grid.
pub fn linearization_gap(grid: &[RigidBodyParams<f64>]) -> Result<f64, CliError> {
    grid.iter().map(|p| linearization_fd_error(p, 1e-5).map_err(err)).try_fold(0.0f64, |m, r| r.map(|v| m.max(v)))
}

/// `(Re dλ/dτ implicit, Re of the root-tracking slope)` at `p`.
pub fn transversality_pair(p: &RigidBodyParams<f64>) -> Result<(f64, f64), CliError> {
    let (co, hp) = spectral_setup(p)?;
    let t = transversality(&co, &hp).map_err(err)?;
    let s = tracked_slope(&co, &hp, 1e-4).map_err(err)?;
    Ok((t.re, s.re))
}

/// Closed-form normal form and the Taylor-coefficient oracle's `g21`.
pub fn normal_form_pair(p: &RigidBodyParams<f64>) -> Result<(HopfAnalysis<f64>, lpdelay::Complex<f64>), CliError> {
    let (co, hp) = spectral_setup(p)?;
    let trans = transversality(&co, &hp).map_err(err)?;
    let analysis = analyze_hopf(p, &hp, trans, W11Choice::Casimir).map_err(err)?;
    let oracle = taylor_oracle(p, &hp, &analysis.eigen, W11Choice::Casimir).map_err(err)?;
    Ok((analysis, oracle.g21))
}

// ---------------------------------------------------------------------------
// End-to-end Hopf

/// Settings of the end-to-end runs around the computed Hopf delay.
#[derive(Debug, Clone, Copy)]
pub struct EndToEndSettings {
    pub eps: f64,
    pub h: f64,
    pub t_end: f64,
    pub sweep_points: usize,
    pub sweep_t_end: f64,
}

impl Default for EndToEndSettings {
    fn default() -> Self {
        Self { eps: 0.05, h: 0.005, t_end: 600.0, sweep_points: 15, sweep_t_end: 300.0 }
    }
}

#[derive(Debug, Clone)]
pub struct EndToEnd {
    pub omega0: f64,
    pub tau0: f64,
    pub below: DecayReport<f64>,
    pub above: CycleEstimate<f64>,
    /// Offset of the inner start in the watched component.
    pub inside_offset: f64,
    /// Limit cycle reached from a start on the same momentum sphere but
    /// outside the orbit.
    pub above_outside: CycleEstimate<f64>,
    pub outside_offset: f64,
    pub sweep_rows: Vec<SweepRow>,
    pub sweep_cell: f64,
    pub onset: Option<f64>,
}

fn rigid_config(tau: f64, eps: f64, h: f64, t_end: f64) -> RunConfig {
    let p = default_params(tau);
    RunConfig {
        model: ModelConfig::RigidBody(p),
        h,
        t_end,
        initial: InitialSpec::Perturbed {
            equilibrium: p.equilibrium().to_vec(),
            eps,
            direction: PERTURBATION_DIRECTION.to_vec(),
        },
        output_csv: None,
        output_json: None,
        prune: false,
    }
}

fn run_at(tau: f64, eps: f64, s: &EndToEndSettings) -> Result<Trajectory<f64>, CliError> {
    let cfg = rigid_config(tau, eps, s.h, s.t_end);
    crate::simulate::run(&cfg.model, &cfg).map(|(t, _)| t)
}

/// Offset in `M₂` of the start outside the orbit, on the inner start's sphere.
pub const OUTSIDE_OFFSET: f64 = 0.9;

fn run_outside(tau: f64, s: &EndToEndSettings) -> Result<(Trajectory<f64>, f64), CliError> {
    let mut cfg = rigid_config(tau, s.eps, s.h, s.t_end);
    let r = rest_state(&cfg)?[0];
    let x1 = (r * r - OUTSIDE_OFFSET * OUTSIDE_OFFSET).sqrt().copysign(r);
    cfg.initial = InitialSpec::Constant(vec![x1, OUTSIDE_OFFSET, 0.0]);
    crate::simulate::run(&cfg.model, &cfg).map(|(t, _)| (t, OUTSIDE_OFFSET))
}

pub fn end_to_end(s: &EndToEndSettings) -> Result<EndToEnd, CliError> {
    let p = default_params(0.0);
    let (_, hp) = spectral_setup(&p)?;
    let (omega0, tau0) = (hp.omega0, hp.tau0);
    let below_cfg = rigid_config(0.9 * tau0, s.eps, s.h, s.t_end);
    let below = decay_report(&run_at(0.9 * tau0, s.eps, s)?, &rest_state(&below_cfg)?);
    let above = detect_limit_cycle(&run_at(1.1 * tau0, s.eps, s)?, 1, DEFAULT_TRANSIENT_FRACTION).map_err(err)?;
    let inside_offset = s.eps * PERTURBATION_DIRECTION[1] / norm_casimir(&PERTURBATION_DIRECTION);
    let (outside, outside_offset) = run_outside(1.1 * tau0, s)?;
    let above_outside = detect_limit_cycle(&outside, 1, DEFAULT_TRANSIENT_FRACTION).map_err(err)?;

    let taus = tau_grid(0.1 * tau0, 1.5 * tau0, s.sweep_points)?;
    let cell = taus[1] - taus[0];
    let rows = sweep(&rigid_config(taus[0], 0.01, 0.01, s.sweep_t_end), &taus, None)?;
    let on = onset(&rows);
    Ok(EndToEnd {
        omega0,
        tau0,
        below,
        above,
        inside_offset,
        above_outside,
        outside_offset,
        sweep_rows: rows,
        sweep_cell: cell,
        onset: on,
    })
}
