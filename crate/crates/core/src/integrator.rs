//! Fixed-step RK4 method of steps for `ẋ(t) = f(t, x(t), x(t − τ))`.
//!
//! The delay must be an integer multiple `k` of the step `h`. Nodes sit at
//! `t_n = n·h`, so the delayed arguments of the three RK stage times
//! `t_n, t_n + h/2, t_n + h` are node `n − k`, the Hermite midpoint of segment
//! `[n − k, n − k + 1]`, and node `n − k + 1` — all already computed. On the
//! initial interval the delayed value is read from φ directly.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::history::{HistoryError, InitialFunction, Trajectory};
use crate::scalar::{norm, Real};

/// Default abort threshold on ‖x‖.
pub const DEFAULT_DIVERGENCE_GUARD: f64 = 1e6;

/// Relative tolerance for accepting `τ/h` as an integer.
const STEP_MULTIPLE_TOL: f64 = 1e-9;

/// Failure reported by a right-hand side.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct RhsError(pub String);

type RhsFn<T> = Arc<dyn Fn(T, &[T], &[T], &mut [T]) -> Result<(), RhsError> + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("delay {tau} is not an integer multiple of step {h}; use adjust_step")]
    StepNotDivisor { tau: f64, h: f64 },
    #[error("divergence guard tripped at t = {t} (|x| = {norm:e})")]
    Divergence { t: f64, norm: f64 },
    #[error("right-hand side produced a non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error("right-hand side failed at t = {t}: {source}")]
    Rhs { t: f64, source: RhsError },
    #[error(transparent)]
    History(#[from] HistoryError),
}

/// A constant-delay initial value problem.
#[derive(Clone)]
pub struct DDEProblem<T> {
    dim: usize,
    tau: T,
    rhs: RhsFn<T>,
    initial: InitialFunction<T>,
}

impl<T: fmt::Debug> fmt::Debug for DDEProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DDEProblem").field("dim", &self.dim).field("tau", &self.tau).finish_non_exhaustive()
    }
}

impl<T: Real> DDEProblem<T> {
    /// `rhs(t, x, x_delayed, out)` writes `ẋ` into `out`.
    pub fn new(
        dim: usize,
        tau: T,
        initial: InitialFunction<T>,
        rhs: impl Fn(T, &[T], &[T], &mut [T]) -> Result<(), RhsError> + Send + Sync + 'static,
    ) -> Result<Self, IntegratorError> {
        if !(tau >= T::zero()) || !tau.is_finite() {
            return Err(IntegratorError::InvalidConfig(format!("delay must be finite and >= 0, got {tau}")));
        }
        if initial.dim() != dim {
            return Err(IntegratorError::InvalidConfig(format!(
                "initial function has dimension {}, problem has {dim}",
                initial.dim()
            )));
        }
        if initial.tau() < tau {
            return Err(IntegratorError::InvalidConfig(format!(
                "initial function covers [-{}, 0] but delay is {tau}",
                initial.tau()
            )));
        }
        Ok(Self { dim, tau, rhs: Arc::new(rhs), initial })
    }

    /// Same right-hand side with a different delay and initial function.
    pub fn with_initial(&self, tau: T, initial: InitialFunction<T>) -> Result<Self, IntegratorError> {
        let rhs = Arc::clone(&self.rhs);
        let mut p = Self::new(self.dim, tau, initial, |_, _, _, _| Ok(()))?;
        p.rhs = rhs;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn initial(&self) -> &InitialFunction<T> {
        &self.initial
    }

    pub fn eval_rhs(&self, t: T, x: &[T], xd: &[T], out: &mut [T]) -> Result<(), IntegratorError> {
        (self.rhs)(t, x, xd, out).map_err(|source| IntegratorError::Rhs { t: t.as_f64(), source })?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(IntegratorError::NonFinite { t: t.as_f64() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub h: T,
    pub t_end: T,
    pub divergence_guard: T,
    /// Drop history older than `t − τ − h` while integrating.
    pub prune: bool,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn new(h: T, t_end: T) -> Self {
        Self { h, t_end, divergence_guard: T::lit(DEFAULT_DIVERGENCE_GUARD), prune: false }
    }

    pub fn with_guard(mut self, guard: T) -> Self {
        self.divergence_guard = guard;
        self
    }

    pub fn with_pruning(mut self, prune: bool) -> Self {
        self.prune = prune;
        self
    }

    fn validate(&self) -> Result<(), IntegratorError> {
        if !(self.h > T::zero()) || !self.h.is_finite() {
            return Err(IntegratorError::InvalidConfig(format!("step h must be > 0, got {}", self.h)));
        }
        if !(self.t_end > T::zero()) || !self.t_end.is_finite() {
            return Err(IntegratorError::InvalidConfig(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if !(self.divergence_guard > T::zero()) {
            return Err(IntegratorError::InvalidConfig("divergence guard must be > 0".into()));
        }
        Ok(())
    }
}

/// Number of steps per delay, or an error if `τ/h` is not integral.
pub fn delay_steps<T: Real>(tau: T, h: T) -> Result<usize, IntegratorError> {
    if tau == T::zero() {
        return Ok(0);
    }
    let ratio = tau / h;
    let k = ratio.round();
    if k < T::one() || (ratio - k).abs() > T::lit(STEP_MULTIPLE_TOL) * k.max(T::one()) {
        return Err(IntegratorError::StepNotDivisor { tau: tau.as_f64(), h: h.as_f64() });
    }
    Ok(k.to_usize().expect("positive step count"))
}

/// Largest step `≤ h_requested` that divides `τ` exactly. Returns the new
/// step and whether it differs from the request.
pub fn adjust_step<T: Real>(tau: T, h_requested: T) -> (T, bool) {
    if tau == T::zero() || delay_steps(tau, h_requested).is_ok() {
        return (h_requested, false);
    }
    let k = (tau / h_requested).ceil().max(T::one());
    (tau / k, true)
}

fn step_count<T: Real>(config: &IntegratorConfig<T>) -> usize {
    let n = (config.t_end / config.h - T::lit(1e-9)).ceil();
    n.to_usize().unwrap_or(0).max(1)
}

/// Integrates `problem` on `[0, t_end]` (rounded up to a whole step).
///
/// The returned trajectory starts with the tabulated initial function on
/// `[−τ, 0]` whose derivatives come from finite differences of φ; the node at
/// `t = 0` carries the right derivative `f(0, φ(0), φ(−τ))` and remembers the
/// finite-difference value as its left derivative.
pub fn integrate<T: Real>(
    problem: &DDEProblem<T>,
    config: &IntegratorConfig<T>,
) -> Result<Trajectory<T>, IntegratorError> {
    config.validate()?;
    let h = config.h;
    let k = delay_steps(problem.tau, h)?;
    let n_steps = step_count(config);
    let dim = problem.dim;
    let phi = &problem.initial;
    let mut traj = Trajectory::with_capacity(dim, if config.prune { 2 * k + 4 } else { k + n_steps + 1 });

    let node_time = |j: isize| T::from_isize(j).expect("index representable") * h;

    // Initial segment.
    let history: Vec<Vec<T>> =
        (0..=k).map(|j| phi.eval(node_time(j as isize - k as isize))).collect::<Result<_, _>>()?;
    let fd = initial_derivatives(&history, h);
    for j in 0..k {
        traj.append(node_time(j as isize - k as isize), &history[j], &fd[j])?;
    }

    let mut x = history[k].clone();
    let mut xd = history[0].clone();
    let mut k1 = vec![T::zero(); dim];
    problem.eval_rhs(T::zero(), &x, &xd, &mut k1)?;
    traj.append(T::zero(), &x, &k1)?;
    if k > 0 {
        traj.mark_breakpoint(&fd[k])?;
    }

    let mut k2 = vec![T::zero(); dim];
    let mut k3 = vec![T::zero(); dim];
    let mut k4 = vec![T::zero(); dim];
    let mut stage = vec![T::zero(); dim];
    let mut xd_mid = vec![T::zero(); dim];
    let mut xd_end = vec![T::zero(); dim];
    let half = T::lit(0.5);
    let sixth = h / T::lit(6.0);

    for n in 0..n_steps {
        let t = node_time(n as isize);
        let t_mid = t + half * h;
        let t_next = node_time(n as isize + 1);

        // Delayed values at t_mid − τ and t_next − τ.
        if k > 0 {
            if n < k {
                xd_mid = phi.eval(t_mid - problem.tau)?;
                xd_end = phi.eval(node_time(n as isize + 1 - k as isize))?;
            } else {
                // Global index of node at time (n − k)·h is n.
                traj.midpoint_global(n, &mut xd_mid);
                xd_end.copy_from_slice(traj.state_global(n + 1));
            }
        }

        for i in 0..dim {
            stage[i] = x[i] + half * h * k1[i];
        }
        if k == 0 {
            problem.eval_rhs(t_mid, &stage, &stage, &mut k2)?;
        } else {
            problem.eval_rhs(t_mid, &stage, &xd_mid, &mut k2)?;
        }
        for i in 0..dim {
            stage[i] = x[i] + half * h * k2[i];
        }
        if k == 0 {
            problem.eval_rhs(t_mid, &stage, &stage, &mut k3)?;
        } else {
            problem.eval_rhs(t_mid, &stage, &xd_mid, &mut k3)?;
        }
        for i in 0..dim {
            stage[i] = x[i] + h * k3[i];
        }
        if k == 0 {
            problem.eval_rhs(t_next, &stage, &stage, &mut k4)?;
        } else {
            problem.eval_rhs(t_next, &stage, &xd_end, &mut k4)?;
        }
        for i in 0..dim {
            x[i] = x[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }

        let nx = norm(&x);
        if !nx.is_finite() {
            return Err(IntegratorError::NonFinite { t: t_next.as_f64() });
        }
        if nx > config.divergence_guard {
            return Err(IntegratorError::Divergence { t: t_next.as_f64(), norm: nx.as_f64() });
        }

        // Derivative at the new node doubles as the next step's first stage.
        if k == 0 {
            problem.eval_rhs(t_next, &x, &x, &mut k1)?;
        } else {
            xd.copy_from_slice(&xd_end);
            problem.eval_rhs(t_next, &x, &xd, &mut k1)?;
        }
        traj.append(t_next, &x, &k1)?;

        if config.prune && k > 0 {
            traj.prune_before(t_next - problem.tau - h);
        }
    }
    Ok(traj)
}

/// Finite-difference derivatives of tabulated φ at spacing `h`: central
/// inside, second-order one-sided at the ends.
fn initial_derivatives<T: Real>(xs: &[Vec<T>], h: T) -> Vec<Vec<T>> {
    let m = xs.len();
    let dim = xs[0].len();
    if m == 1 {
        return vec![vec![T::zero(); dim]];
    }
    let two_h = T::lit(2.0) * h;
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    (0..m)
        .map(|j| {
            (0..dim)
                .map(|i| {
                    if m == 2 {
                        (xs[1][i] - xs[0][i]) / h
                    } else if j == 0 {
                        (-three * xs[0][i] + four * xs[1][i] - xs[2][i]) / two_h
                    } else if j == m - 1 {
                        (three * xs[j][i] - four * xs[j - 1][i] + xs[j - 2][i]) / two_h
                    } else {
                        (xs[j + 1][i] - xs[j - 1][i]) / two_h
                    }
                })
                .collect()
        })
        .collect()
}

/// Maximum Casimir deviation over nodes with `t ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftReport<T> {
    pub reference: T,
    pub max_drift: T,
    pub t_at_max: T,
}

/// Runs [`integrate`] and measures `max |C(x(t)) − C(x(0))|` over `t ≥ 0`.
pub fn integrate_on_orbit<T: Real>(
    problem: &DDEProblem<T>,
    config: &IntegratorConfig<T>,
    casimir: impl Fn(&[T]) -> T,
) -> Result<(Trajectory<T>, DriftReport<T>), IntegratorError> {
    let traj = integrate(problem, config)?;
    let report = casimir_drift_report(&traj, casimir);
    Ok((traj, report))
}

pub(crate) fn casimir_drift_report<T: Real>(traj: &Trajectory<T>, casimir: impl Fn(&[T]) -> T) -> DriftReport<T> {
    let start = traj.times().partition_point(|&t| t < T::zero());
    let reference = casimir(traj.state(start));
    let mut report = DriftReport { reference, max_drift: T::zero(), t_at_max: T::zero() };
    for i in start..traj.len() {
        let d = (casimir(traj.state(i)) - reference).abs();
        if d > report.max_drift {
            report.max_drift = d;
            report.t_at_max = traj.time(i);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_problem(tau: f64, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> DDEProblem<f64> {
        DDEProblem::new(1, tau, InitialFunction::constant(vec![1.0], tau), move |t, x, xd, out| {
            out[0] = f(t, x[0], xd[0]);
            Ok(())
        })
        .unwrap()
    }

    #[test]
    fn zero_rhs_is_constant() {
        let p = DDEProblem::new(2, 0.5, InitialFunction::constant(vec![0.3, -2.0], 0.5), |_, _, _, out| {
            out.fill(0.0);
            Ok(())
        })
        .unwrap();
        let tr = integrate(&p, &IntegratorConfig::new(0.01, 2.0)).unwrap();
        for (_, x, _) in tr.iter() {
            assert_eq!(x, &[0.3, -2.0]);
        }
        let (_, drift) =
            integrate_on_orbit(&p, &IntegratorConfig::new(0.01, 2.0), |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        assert_eq!(drift.max_drift, 0.0);
    }

    #[test]
    fn harmonic_oscillator_without_delay() {
        let p = DDEProblem::<f64>::new(2, 0.0, InitialFunction::constant(vec![1.0, 0.0], 0.0), |_, x, _, out| {
            out[0] = x[1];
            out[1] = -x[0];
            Ok(())
        })
        .unwrap();
        let tr = integrate(&p, &IntegratorConfig::new(0.01, 10.0)).unwrap();
        let e0 = 1.0;
        for (t, x, _) in tr.iter() {
            assert!((x[0] * x[0] + x[1] * x[1] - e0).abs() <= 1e-8);
            assert!((x[0] - t.cos()).abs() < 1e-8);
        }
        assert!((tr.t_max().unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn method_of_steps_piecewise_polynomials() {
        let p = scalar_problem(1.0, |_, _, xd| -xd);
        let tr = integrate(&p, &IntegratorConfig::new(0.001, 2.0)).unwrap();
        let at = |t: f64| tr.sample(t).unwrap().0[0];
        assert!(at(1.0).abs() <= 1e-12, "x(1) = {}", at(1.0));
        // x(t) = 1 − t + (t − 1)²/2 on [1, 2]
        assert!((at(2.0) + 0.5).abs() <= 1e-10, "x(2) = {}", at(2.0));
        assert!((at(1.5) - (1.0 - 1.5 + 0.125)).abs() <= 1e-10);
        assert!((at(0.5) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn step_must_divide_delay() {
        let p = scalar_problem(1.0, |_, _, xd| -xd);
        assert!(matches!(integrate(&p, &IntegratorConfig::new(0.3, 1.0)), Err(IntegratorError::StepNotDivisor { .. })));
        let (h, changed) = adjust_step(1.0f64, 0.3);
        assert!(changed);
        assert!((h - 0.25).abs() < 1e-15);
        assert_eq!(adjust_step(1.0f64, 0.25), (0.25, false));
        assert_eq!(adjust_step(0.0, 0.3), (0.3, false));
    }

    #[test]
    fn invalid_config_rejected() {
        let p = scalar_problem(0.0, |_, x, _| x);
        assert!(integrate(&p, &IntegratorConfig::new(0.0, 1.0)).is_err());
        assert!(integrate(&p, &IntegratorConfig::new(0.1, -1.0)).is_err());
        assert!(DDEProblem::new(1, -1.0, InitialFunction::constant(vec![0.0], 1.0), |_, _, _, _| Ok(())).is_err());
    }

    #[test]
    fn divergence_guard_trips() {
        let p = scalar_problem(0.0, |_, x, _| 5.0 * x);
        let err = integrate(&p, &IntegratorConfig::new(0.01, 10.0).with_guard(1e3)).unwrap_err();
        match err {
            IntegratorError::Divergence { t, norm } => {
                assert!(norm > 1e3);
                assert!(t > 1.0 && t < 1.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_rhs_is_error() {
        let p = scalar_problem(0.0, |_, _, _| f64::NAN);
        assert!(matches!(integrate(&p, &IntegratorConfig::new(0.1, 1.0)), Err(IntegratorError::NonFinite { .. })));
    }

    #[test]
    fn pruning_does_not_change_the_solution() {
        let p = scalar_problem(0.5, |t, x, xd| -xd + 0.1 * x * t.sin());
        let c = IntegratorConfig::new(0.01, 5.0);
        let full = integrate(&p, &c).unwrap();
        let pruned = integrate(&p, &c.with_pruning(true)).unwrap();
        assert_eq!(full.last_state(), pruned.last_state());
        assert!(pruned.len() < 60);
    }

    #[test]
    fn deterministic() {
        let p = scalar_problem(0.5, |t, x, xd| -xd + 0.1 * x * t.sin());
        let c = IntegratorConfig::new(0.01, 5.0);
        assert_eq!(integrate(&p, &c).unwrap(), integrate(&p, &c).unwrap());
    }

    #[test]
    fn single_precision_runs() {
        let p = DDEProblem::<f32>::new(1, 1.0, InitialFunction::constant(vec![1.0], 1.0), |_, _, xd, out| {
            out[0] = -xd[0];
            Ok(())
        })
        .unwrap();
        let tr = integrate(&p, &IntegratorConfig::new(0.01, 2.0)).unwrap();
        assert!((tr.last_state().unwrap()[0] + 0.5).abs() < 1e-4);
    }
}
