//! Post-hoc trajectory analysis: conserved-quantity drift, energy-rate laws,
//! decay to equilibrium and limit-cycle extraction. Everything here is a
//! pure function of a finished [`Trajectory`].

use serde::Serialize;
use thiserror::Error;

use crate::history::Trajectory;
use crate::models::{
    landau_lifschitz_energy_rate_printed, rigid_body_energy_rate, rigid_body_energy_rate_printed,
    LandauLifschitzParams, RigidBodyParams,
};
use crate::scalar::Real;

/// Amplitude below which a run is classified as sitting at an equilibrium.
pub const EQUILIBRIUM_AMPLITUDE: f64 = 1e-6;
pub const DEFAULT_TRANSIENT_FRACTION: f64 = 0.5;
/// Relative spread allowed in the last five inter-peak intervals.
pub const PERIOD_AGREEMENT: f64 = 0.01;
/// Relative spread allowed in the last five peak heights.
pub const HEIGHT_AGREEMENT: f64 = 0.02;
const PEAK_WINDOW: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("need at least {needed} nodes beyond t = tau, found {found}")]
    TooFewNodes { needed: usize, found: usize },
    #[error("component index {index} out of range for dimension {dim}")]
    Component { index: usize, dim: usize },
    #[error("trajectory has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

fn arr3<T: Real>(x: &[T]) -> [T; 3] {
    [x[0], x[1], x[2]]
}

/// Index of the first node with `t ≥ 0`.
fn start_index<T: Real>(traj: &Trajectory<T>) -> usize {
    traj.times().iter().position(|&t| t >= T::zero()).unwrap_or(traj.len())
}

/// Largest `|C(x(t)) − C(x(0))|` over stored nodes with `t ≥ 0`.
pub fn casimir_drift<T: Real>(traj: &Trajectory<T>, casimir: impl Fn(&[T]) -> T) -> T {
    let i0 = start_index(traj);
    if i0 >= traj.len() {
        return T::zero();
    }
    let c0 = casimir(traj.state(i0));
    (i0..traj.len()).map(|i| (casimir(traj.state(i)) - c0).abs()).fold(T::zero(), T::max)
}

/// Central-difference energy rate at interior nodes compared to a
/// prescribed rate law `rate(x(t), x(t − τ))`. Only nodes whose stencil
/// lies beyond `t = τ` are used, so the kink the initial data creates at
/// `t = 0` does not enter. Returns the maximum absolute discrepancy.
pub fn energy_rate_discrepancy<T: Real>(
    traj: &Trajectory<T>,
    tau: T,
    energy: impl Fn(&[T]) -> T,
    rate: impl Fn(&[T], &[T]) -> T,
) -> Result<(T, usize), DiagnosticsError> {
    let dim = traj.dim();
    let mut delayed = vec![T::zero(); dim];
    let mut scratch = vec![T::zero(); dim];
    let mut worst = T::zero();
    let mut used = 0;
    for i in 1..traj.len().saturating_sub(1) {
        if traj.time(i - 1) < tau {
            continue;
        }
        let (tm, tp) = (traj.time(i - 1), traj.time(i + 1));
        let de = (energy(traj.state(i + 1)) - energy(traj.state(i - 1))) / (tp - tm);
        if traj.sample_into(traj.time(i) - tau, &mut delayed, &mut scratch).is_err() {
            continue;
        }
        worst = worst.max((de - rate(traj.state(i), &delayed)).abs());
        used += 1;
    }
    if used < 10 {
        return Err(DiagnosticsError::TooFewNodes { needed: 10, found: used });
    }
    Ok((worst, used))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyRateCheck<T> {
    /// Against `−α‖M̃×Ω̃‖²`.
    pub printed_law: T,
    /// Against `−α(M×Ω)·(M̃×Ω̃)`, the rate implied by the equations of motion.
    pub exact_law: T,
    pub nodes: usize,
}

/// Energy-rate check for the rigid body, against both the printed
/// dissipation law and the rate implied by the vector field.
pub fn energy_rate_check<T: Real>(
    traj: &Trajectory<T>,
    p: &RigidBodyParams<T>,
) -> Result<EnergyRateCheck<T>, DiagnosticsError> {
    if traj.dim() != 3 {
        return Err(DiagnosticsError::Dimension { expected: 3, found: traj.dim() });
    }
    let energy = |x: &[T]| p.energy(&arr3(x));
    let (printed_law, nodes) =
        energy_rate_discrepancy(traj, p.tau, energy, |_, xd| rigid_body_energy_rate_printed(&arr3(xd), p))?;
    let (exact_law, _) =
        energy_rate_discrepancy(traj, p.tau, energy, |x, xd| rigid_body_energy_rate(&arr3(x), &arr3(xd), p))?;
    Ok(EnergyRateCheck { printed_law, exact_law, nodes })
}

/// Landau–Lifschitz energy `M·B` against its printed rate law.
pub fn landau_lifschitz_energy_check<T: Real>(
    traj: &Trajectory<T>,
    p: &LandauLifschitzParams<T>,
) -> Result<T, DiagnosticsError> {
    if traj.dim() != 3 {
        return Err(DiagnosticsError::Dimension { expected: 3, found: traj.dim() });
    }
    energy_rate_discrepancy(
        traj,
        p.tau,
        |x| p.energy(&arr3(x)),
        |x, xd| landau_lifschitz_energy_rate_printed(&arr3(x), &arr3(xd), p),
    )
    .map(|(d, _)| d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayReport<T> {
    /// `‖x(0) − x*‖`.
    pub initial: T,
    /// Largest `‖x(t) − x*‖` over the final tenth of the run.
    pub final_max: T,
    pub ratio: T,
}

/// Distance from a reference state at the start and over the tail of the run.
pub fn decay_report<T: Real>(traj: &Trajectory<T>, reference: &[T]) -> DecayReport<T> {
    let dist = |x: &[T]| x.iter().zip(reference).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
    let i0 = start_index(traj);
    let n = traj.len();
    if i0 >= n {
        return DecayReport { initial: T::zero(), final_max: T::zero(), ratio: T::zero() };
    }
    let initial = dist(traj.state(i0));
    let t_end = traj.time(n - 1);
    let t_cut = t_end - (t_end - traj.time(i0)) * T::lit(0.1);
    let final_max = (i0..n).filter(|&i| traj.time(i) >= t_cut).map(|i| dist(traj.state(i))).fold(T::zero(), T::max);
    let ratio = if initial > T::zero() { final_max / initial } else { T::zero() };
    DecayReport { initial, final_max, ratio }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleEstimate<T> {
    pub amplitude: T,
    pub period: T,
    pub converged: bool,
    /// Start time of the analysed window.
    pub transient_cut: T,
    pub peaks: usize,
    /// Amplitude fell below [`EQUILIBRIUM_AMPLITUDE`].
    pub equilibrium: bool,
}

/// Vertex of the parabola through three points.
fn parabola_vertex<T: Real>(t: [T; 3], x: [T; 3]) -> (T, T) {
    let (d1, d2) = (t[1] - t[0], t[2] - t[1]);
    let s1 = (x[1] - x[0]) / d1;
    let s2 = (x[2] - x[1]) / d2;
    let curv = (s2 - s1) / (t[2] - t[0]);
    if curv == T::zero() {
        return (t[1], x[1]);
    }
    // x(s) = x1 + b (s − t1) + curv (s − t1)², with b the slope at t1
    let b = s1 + curv * d1;
    let ts = t[1] - b / (T::lit(2.0) * curv);
    let xs = x[1] - b * b / (T::lit(4.0) * curv);
    (ts, xs)
}

fn spread<T: Real>(v: &[T]) -> (T, T) {
    let mean = v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len());
    let lo = v.iter().copied().fold(T::infinity(), T::min);
    let hi = v.iter().copied().fold(T::neg_infinity(), T::max);
    (mean, hi - lo)
}

/// Peak-based period and amplitude of one state component after
/// discarding the first `transient_fraction` of the run.
pub fn detect_limit_cycle<T: Real>(
    traj: &Trajectory<T>,
    component: usize,
    transient_fraction: T,
) -> Result<CycleEstimate<T>, DiagnosticsError> {
    if component >= traj.dim() {
        return Err(DiagnosticsError::Component { index: component, dim: traj.dim() });
    }
    let i0 = start_index(traj);
    let n = traj.len();
    let t_start = if i0 < n { traj.time(i0) } else { T::zero() };
    let t_end = if n > 0 { traj.time(n - 1) } else { T::zero() };
    let transient_cut = t_start + (t_end - t_start) * transient_fraction;
    let idx: Vec<usize> = (i0..n).filter(|&i| traj.time(i) >= transient_cut).collect();
    let val = |i: usize| traj.state(i)[component];

    let mut peaks = Vec::new();
    let mut troughs = Vec::new();
    for w in idx.windows(3) {
        let (a, b, c) = (val(w[0]), val(w[1]), val(w[2]));
        let ts = [traj.time(w[0]), traj.time(w[1]), traj.time(w[2])];
        if b > a && b >= c {
            peaks.push(parabola_vertex(ts, [a, b, c]));
        } else if b < a && b <= c {
            troughs.push(parabola_vertex(ts, [a, b, c]).1);
        }
    }

    // amplitude over the final window: the last five periods when available
    let window_start = if peaks.len() > PEAK_WINDOW { peaks[peaks.len() - 1 - PEAK_WINDOW].0 } else { transient_cut };
    let (mut hi, mut lo) = (T::neg_infinity(), T::infinity());
    for &i in idx.iter().filter(|&&i| traj.time(i) >= window_start) {
        hi = hi.max(val(i));
        lo = lo.min(val(i));
    }
    for &(_, x) in peaks.iter().filter(|p| p.0 >= window_start) {
        hi = hi.max(x);
    }
    let trough_tail = troughs.len().saturating_sub(PEAK_WINDOW + 1);
    for &x in &troughs[trough_tail..] {
        lo = lo.min(x);
    }
    let amplitude = if hi >= lo { (hi - lo) * T::lit(0.5) } else { T::zero() };
    let equilibrium = amplitude < T::lit(EQUILIBRIUM_AMPLITUDE);

    let mut converged = false;
    let mut period = T::zero();
    if peaks.len() >= 2 {
        let tail = &peaks[peaks.len().saturating_sub(PEAK_WINDOW + 1)..];
        let intervals: Vec<T> = tail.windows(2).map(|w| w[1].0 - w[0].0).collect();
        let heights: Vec<T> = tail[1..].iter().map(|p| p.1).collect();
        let (mean_i, spread_i) = spread(&intervals);
        let (mean_h, spread_h) = spread(&heights);
        period = mean_i;
        converged = peaks.len() > PEAK_WINDOW
            && !equilibrium
            && mean_i > T::zero()
            && spread_i <= T::lit(PERIOD_AGREEMENT) * mean_i
            && spread_h <= T::lit(HEIGHT_AGREEMENT) * mean_h.abs();
    }
    Ok(CycleEstimate { amplitude, period, converged, transient_cut, peaks: peaks.len(), equilibrium })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::InitialFunction;
    use crate::integrator::{integrate, IntegratorConfig};
    use crate::models::rigid_body_problem;

    fn synthetic(h: f64, t_end: f64, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Trajectory<f64> {
        let mut tr = Trajectory::new(1);
        let n = (t_end / h).round() as usize;
        for k in 0..=n {
            let t = k as f64 * h;
            tr.append(t, &[f(t)], &[df(t)]).unwrap();
        }
        tr
    }

    #[test]
    fn sinusoid_period_and_amplitude() {
        let tr = synthetic(0.01, 100.0, |t| 0.1 * (2.0 * t).sin(), |t| 0.2 * (2.0 * t).cos());
        let c = detect_limit_cycle(&tr, 0, 0.5).unwrap();
        assert!(c.converged);
        assert!((c.period - std::f64::consts::PI).abs() < 1e-4, "{}", c.period);
        assert!((c.amplitude - 0.1).abs() < 1e-4, "{}", c.amplitude);
        assert_eq!(c.transient_cut, 50.0);
    }

    #[test]
    fn period_error_shrinks_quadratically() {
        let err = |h: f64| {
            let tr = synthetic(h, 60.0, |t| (2.0 * t + 0.3).sin(), |t| 2.0 * (2.0 * t + 0.3).cos());
            // single-peak positions carry the interpolation error
            let c = detect_limit_cycle(&tr, 0, 0.5).unwrap();
            (c.period - std::f64::consts::PI).abs().max(1e-15)
        };
        let (e1, e2) = (err(0.08), err(0.04));
        assert!(e2 <= e1 / 3.0 || e2 < 1e-9, "{e1:e} {e2:e}");
    }

    #[test]
    fn decay_is_not_a_cycle() {
        let tr =
            synthetic(0.01, 200.0, |t| (-0.2 * t).exp() * t.sin(), |t| (-0.2 * t).exp() * (t.cos() - 0.2 * t.sin()));
        let c = detect_limit_cycle(&tr, 0, 0.5).unwrap();
        assert!(!c.converged);
        assert!(c.equilibrium);
        let tr = synthetic(0.01, 20.0, |t| 1.0 + 0.0 * t, |_| 0.0);
        let c = detect_limit_cycle(&tr, 0, 0.5).unwrap();
        assert!(!c.converged && c.peaks == 0 && c.equilibrium);
        assert!(matches!(detect_limit_cycle(&tr, 1, 0.5), Err(DiagnosticsError::Component { .. })));
    }

    #[test]
    fn diagnostics_are_deterministic() {
        let tr = synthetic(0.05, 50.0, |t| t.sin() + 0.3 * (3.0 * t).cos(), |t| t.cos() - 0.9 * (3.0 * t).sin());
        assert_eq!(detect_limit_cycle(&tr, 0, 0.5).unwrap(), detect_limit_cycle(&tr, 0, 0.5).unwrap());
        assert_eq!(casimir_drift(&tr, |x| x[0] * x[0]), casimir_drift(&tr, |x| x[0] * x[0]));
    }

    fn run(p: &RigidBodyParams<f64>, x0: [f64; 3], h: f64, t_end: f64) -> Trajectory<f64> {
        let prob = rigid_body_problem(p, InitialFunction::constant(x0.to_vec(), p.tau)).unwrap();
        integrate(&prob, &IntegratorConfig::new(h, t_end)).unwrap()
    }

    #[test]
    fn conservative_body_energy_rate_vanishes() {
        let p = RigidBodyParams::new([0.8, 0.5, 0.4], 0.0, 0.5, 1.0);
        let tr = run(&p, [0.9, 0.3, 0.2], 1e-3, 5.0);
        let chk = energy_rate_check(&tr, &p).unwrap();
        assert!(chk.printed_law <= 1e-9 && chk.exact_law <= 1e-9, "{chk:?}");
        let drift = casimir_drift(&tr, |x| x.iter().map(|v| v * v).sum::<f64>());
        assert!(drift <= 1e-10);
    }

    #[test]
    fn relative_equilibrium_has_zero_rate() {
        let p = RigidBodyParams::new([0.8, 0.5, 0.4], 0.3, 0.5, 1.5);
        let tr = run(&p, [1.5, 0.0, 0.0], 1e-2, 5.0);
        let chk = energy_rate_check(&tr, &p).unwrap();
        assert!(chk.printed_law == 0.0 && chk.exact_law == 0.0);
        let d = decay_report(&tr, &[1.5, 0.0, 0.0]);
        assert_eq!(d.initial, 0.0);
    }

    #[test]
    fn exact_law_is_second_order() {
        let p = RigidBodyParams::new([0.8, 0.5, 0.4], 0.3, 0.5, 1.5);
        let x0 = [1.45, 0.2, 0.3];
        let d1 = energy_rate_check(&run(&p, x0, 2e-3, 10.0), &p).unwrap().exact_law;
        let d2 = energy_rate_check(&run(&p, x0, 1e-3, 10.0), &p).unwrap().exact_law;
        let ratio = d1 / d2;
        assert!((3.0..5.0).contains(&ratio), "{d1:e} {d2:e}");
    }

    #[test]
    fn too_few_nodes() {
        let p = RigidBodyParams::new([0.8, 0.5, 0.4], 0.3, 0.5, 1.5);
        let tr = run(&p, [1.4, 0.2, 0.3], 0.1, 0.8);
        assert!(matches!(energy_rate_check(&tr, &p), Err(DiagnosticsError::TooFewNodes { .. })));
    }
}
