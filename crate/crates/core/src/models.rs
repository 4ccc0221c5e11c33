//! Right-hand sides of the concrete delayed systems and the generic
//! Lie-algebra double-bracket engines.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{AlgebraError, AlgebraSpec, CoalgebraElement};
use crate::history::InitialFunction;
use crate::integrator::{DDEProblem, IntegratorError, RhsError};
use crate::scalar::{cross, dot, dot3, norm3, Real};

/// Below this `|cos θ|` the Landau–Lifschitz metric is treated as singular.
pub const LL_SINGULAR_COS: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("singular configuration: |cos θ| = {0:e} (M nearly orthogonal to its delayed value)")]
    SingularCone(f64),
    #[error("zero magnetization")]
    ZeroMagnetization,
    #[error("Casimir value {0:e} is not positive")]
    NonPositiveCasimir(f64),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
}

fn check_positive<T: Real>(name: &'static str, v: T) -> Result<(), ModelError> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, reason: format!("must be positive and finite, got {v}") })
    }
}

fn check_nonneg<T: Real>(name: &'static str, v: T) -> Result<(), ModelError> {
    if v >= T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, reason: format!("must be >= 0 and finite, got {v}") })
    }
}

fn check_finite<T: Real>(name: &'static str, v: T) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, reason: format!("must be finite, got {v}") })
    }
}

fn arr3<T: Real>(x: &[T]) -> [T; 3] {
    [x[0], x[1], x[2]]
}

// ---------------------------------------------------------------------------
// Rigid body

/// Free rigid body with delayed dissipation `Ṁ = M×Ω + α M×(M̃×Ω̃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyParams<T> {
    pub inertia: [T; 3],
    pub alpha: T,
    pub tau: T,
    /// Angular-momentum magnitude of the equilibrium `M = (m, 0, 0)`.
    pub m: T,
    /// Use `α/‖M‖²` instead of the bare `α` in front of the delayed term.
    pub casimir_scaled: bool,
}

impl<T: Real> RigidBodyParams<T> {
    pub fn new(inertia: [T; 3], alpha: T, tau: T, m: T) -> Self {
        Self { inertia, alpha, tau, m, casimir_scaled: false }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_positive("I1", self.inertia[0])?;
        check_positive("I2", self.inertia[1])?;
        check_positive("I3", self.inertia[2])?;
        check_finite("alpha", self.alpha)?;
        check_nonneg("tau", self.tau)?;
        check_finite("m", self.m)
    }

    pub fn omega(&self, m: &[T; 3]) -> [T; 3] {
        [m[0] / self.inertia[0], m[1] / self.inertia[1], m[2] / self.inertia[2]]
    }

    pub fn momentum(&self, omega: &[T; 3]) -> [T; 3] {
        [omega[0] * self.inertia[0], omega[1] * self.inertia[1], omega[2] * self.inertia[2]]
    }

    /// `E = ½ Ω·M`.
    pub fn energy(&self, m: &[T; 3]) -> T {
        T::lit(0.5) * dot3(&self.omega(m), m)
    }

    /// Equilibrium momentum `(m, 0, 0)`.
    pub fn equilibrium(&self) -> [T; 3] {
        [self.m, T::zero(), T::zero()]
    }

    pub fn with_tau(mut self, tau: T) -> Self {
        self.tau = tau;
        self
    }
}

pub fn rigid_body_delay_rhs<T: Real>(m: &[T; 3], m_delayed: &[T; 3], p: &RigidBodyParams<T>) -> [T; 3] {
    let omega = p.omega(m);
    let omega_d = p.omega(m_delayed);
    let free = cross(m, &omega);
    let inner = cross(m_delayed, &omega_d);
    let damp = cross(m, &inner);
    let coef = if p.casimir_scaled { p.alpha / dot3(m, m) } else { p.alpha };
    [free[0] + coef * damp[0], free[1] + coef * damp[1], free[2] + coef * damp[2]]
}

/// Energy rate along the exact flow: `dE/dt = −α (M×Ω)·(M̃×Ω̃)`.
///
/// Coincides with `−α‖M̃×Ω̃‖²` when `M̃ = M`.
pub fn rigid_body_energy_rate<T: Real>(m: &[T; 3], m_delayed: &[T; 3], p: &RigidBodyParams<T>) -> T {
    let a = cross(m, &p.omega(m));
    let b = cross(m_delayed, &p.omega(m_delayed));
    let coef = if p.casimir_scaled { p.alpha / dot3(m, m) } else { p.alpha };
    -coef * dot3(&a, &b)
}

/// The printed dissipation law `−α‖M̃×Ω̃‖²`.
pub fn rigid_body_energy_rate_printed<T: Real>(m_delayed: &[T; 3], p: &RigidBodyParams<T>) -> T {
    let b = cross(m_delayed, &p.omega(m_delayed));
    -p.alpha * dot3(&b, &b)
}

/// State is the body angular momentum `M`.
pub fn rigid_body_problem<T: Real>(
    p: &RigidBodyParams<T>,
    initial: InitialFunction<T>,
) -> Result<DDEProblem<T>, ModelError> {
    p.validate()?;
    let p = *p;
    Ok(DDEProblem::new(3, p.tau, initial, move |_, x, xd, out| {
        out.copy_from_slice(&rigid_body_delay_rhs(&arr3(x), &arr3(xd), &p));
        Ok(())
    })?)
}

/// Constant history `(m, 0, 0) + ε·direction` on `[−τ, 0]`.
pub fn rigid_body_perturbed_history<T: Real>(p: &RigidBodyParams<T>, eps: T, direction: [T; 3]) -> InitialFunction<T> {
    let n = norm3(&direction);
    let eq = p.equilibrium();
    let x0: Vec<T> = (0..3).map(|i| eq[i] + eps * direction[i] / n).collect();
    InitialFunction::constant(x0, p.tau)
}

// ---------------------------------------------------------------------------
// Landau–Lifschitz

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandauLifschitzParams<T> {
    pub gamma_ratio: T,
    pub lambda_damp: T,
    pub b: [T; 3],
    pub tau: T,
}

impl<T: Real> LandauLifschitzParams<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_finite("gamma_ratio", self.gamma_ratio)?;
        check_finite("lambda_damp", self.lambda_damp)?;
        for &c in &self.b {
            check_finite("B", c)?;
        }
        check_nonneg("tau", self.tau)
    }

    /// Zeeman-type energy `E = M·B`, whose rate at zero delay is the printed
    /// law `−(λ/(‖M‖² cos θ))‖M̃×B̃‖²`.
    pub fn energy(&self, m: &[T; 3]) -> T {
        dot3(m, &self.b)
    }
}

/// `Ṁ = γ M×B + (λ/(‖M‖² cos θ)) M×(M̃×B̃)`, θ the angle between `M` and `M̃`.
pub fn landau_lifschitz_delay_rhs<T: Real>(
    m: &[T; 3],
    m_delayed: &[T; 3],
    b: &[T; 3],
    b_delayed: &[T; 3],
    p: &LandauLifschitzParams<T>,
) -> Result<[T; 3], ModelError> {
    let n = norm3(m);
    let nd = norm3(m_delayed);
    if n == T::zero() || nd == T::zero() {
        return Err(ModelError::ZeroMagnetization);
    }
    let cos_theta = dot3(m, m_delayed) / (n * nd);
    if cos_theta.abs() < T::lit(LL_SINGULAR_COS) {
        return Err(ModelError::SingularCone(cos_theta.abs().as_f64()));
    }
    let prec = cross(m, b);
    let damp = cross(m, &cross(m_delayed, b_delayed));
    let coef = p.lambda_damp / (n * n * cos_theta);
    Ok([
        p.gamma_ratio * prec[0] + coef * damp[0],
        p.gamma_ratio * prec[1] + coef * damp[1],
        p.gamma_ratio * prec[2] + coef * damp[2],
    ])
}

/// Printed energy law `−(λ/(‖M‖² cos θ))‖M̃×B̃‖²`.
pub fn landau_lifschitz_energy_rate_printed<T: Real>(
    m: &[T; 3],
    m_delayed: &[T; 3],
    p: &LandauLifschitzParams<T>,
) -> T {
    let n = norm3(m);
    let cos_theta = dot3(m, m_delayed) / (n * norm3(m_delayed));
    let c = cross(m_delayed, &p.b);
    -p.lambda_damp / (n * n * cos_theta) * dot3(&c, &c)
}

/// Constant applied field, so `B̃ = B`.
pub fn landau_lifschitz_problem<T: Real>(
    p: &LandauLifschitzParams<T>,
    initial: InitialFunction<T>,
) -> Result<DDEProblem<T>, ModelError> {
    p.validate()?;
    let p = *p;
    Ok(DDEProblem::new(3, p.tau, initial, move |_, x, xd, out| {
        let r = landau_lifschitz_delay_rhs(&arr3(x), &arr3(xd), &p.b, &p.b, &p).map_err(|e| RhsError(e.to_string()))?;
        out.copy_from_slice(&r);
        Ok(())
    })?)
}

// ---------------------------------------------------------------------------
// Generic Lie-algebra engines

fn casimir_pair<T: Real>(spec: &AlgebraSpec<T>, mu: &[T], mu_d: &[T]) -> Result<(T, T), ModelError> {
    let c = spec.casimir().value(mu);
    let cd = spec.casimir().value(mu_d);
    for v in [c, cd] {
        if !(v > T::zero()) {
            return Err(ModelError::NonPositiveCasimir(v.as_f64()));
        }
    }
    Ok((c, cd))
}

fn check_dims<T: Real>(spec: &AlgebraSpec<T>, mu: &[T], mu_d: &[T]) -> Result<(), ModelError> {
    for len in [mu.len(), mu_d.len()] {
        if len != spec.dimension() {
            return Err(AlgebraError::DimensionMismatch { expected: spec.dimension(), got: len }.into());
        }
    }
    Ok(())
}

/// `[Γμ, Γμ̃]^μ` and `⟨Γ∇k(μ), [Γμ, Γμ̃]⟩`.
fn normal_direction<T: Real>(
    spec: &AlgebraSpec<T>,
    mu: &[T],
    mu_d: &[T],
    grad_k_mu: &[T],
) -> Result<(Vec<T>, T), ModelError> {
    let g = spec.gamma();
    let gmu = g.mul_vec(mu);
    let gmu_d = g.mul_vec(mu_d);
    let br = spec.bracket_coords(&gmu, &gmu_d);
    let weight = dot(&g.mul_vec(grad_k_mu), &br);
    let proj = spec.project_complement(&br.into(), &CoalgebraElement(mu.to_vec()))?;
    Ok((proj.0, weight))
}

/// The three terms of the compact-algebra form, in order:
/// `−[∇h(μ), μ]`, `(1/C(μ̃))[μ, Γ[μ̃, ∇k(μ̃)]]`, and
/// `−(1/(C(μ)C(μ̃)))⟨Γ∇k(μ), [Γμ,Γμ̃]⟩ [μ, [Γμ,Γμ̃]^μ]`.
pub fn generic_dissipative_terms<T: Real>(
    mu: &[T],
    mu_delayed: &[T],
    spec: &AlgebraSpec<T>,
    grad_h: &dyn Fn(&[T]) -> Vec<T>,
    grad_k: &dyn Fn(&[T]) -> Vec<T>,
) -> Result<[Vec<T>; 3], ModelError> {
    check_dims(spec, mu, mu_delayed)?;
    let (c, cd) = casimir_pair(spec, mu, mu_delayed)?;
    let hamiltonian: Vec<T> = spec.bracket_coords(&grad_h(mu), mu).into_iter().map(|v| -v).collect();

    let inner = spec.bracket_coords(mu_delayed, &grad_k(mu_delayed));
    let delayed: Vec<T> = spec.bracket_coords(mu, &spec.gamma().mul_vec(&inner)).into_iter().map(|v| v / cd).collect();

    let (normal, weight) = normal_direction(spec, mu, mu_delayed, &grad_k(mu))?;
    let s = weight / (c * cd);
    let correction: Vec<T> = spec.bracket_coords(mu, &normal).into_iter().map(|v| -s * v).collect();
    Ok([hamiltonian, delayed, correction])
}

/// Lie–Poisson equations with delayed double-bracket forcing on a compact
/// algebra identified with its dual.
pub fn generic_dissipative_rhs<T: Real>(
    mu: &CoalgebraElement<T>,
    mu_delayed: &CoalgebraElement<T>,
    spec: &AlgebraSpec<T>,
    grad_h: &dyn Fn(&[T]) -> Vec<T>,
    grad_k: &dyn Fn(&[T]) -> Vec<T>,
) -> Result<CoalgebraElement<T>, ModelError> {
    let [a, b, c] = generic_dissipative_terms(&mu.0, &mu_delayed.0, spec, grad_h, grad_k)?;
    Ok(CoalgebraElement((0..a.len()).map(|i| a[i] + b[i] + c[i]).collect()))
}

/// Dual form using coadjoint actions:
/// `ad*_{∇h}μ + (1/C(μ̃)) ad*_{Γ(ad*_{∇k(μ̃)} μ̃)} μ
///  − (1/(C(μ)C(μ̃)))⟨Γ∇k(μ), [Γμ,Γμ̃]⟩ ad*_{[Γμ,Γμ̃]^μ} μ`.
pub fn lie_poisson_delay_rhs<T: Real>(
    mu: &CoalgebraElement<T>,
    mu_delayed: &CoalgebraElement<T>,
    spec: &AlgebraSpec<T>,
    grad_h: &dyn Fn(&[T]) -> Vec<T>,
    grad_k: &dyn Fn(&[T]) -> Vec<T>,
) -> Result<CoalgebraElement<T>, ModelError> {
    let (mu, mu_d) = (&mu.0, &mu_delayed.0);
    check_dims(spec, mu, mu_d)?;
    let (c, cd) = casimir_pair(spec, mu, mu_d)?;
    let ham = spec.coadjoint_coords(&grad_h(mu), mu);
    let xi = spec.gamma().mul_vec(&spec.coadjoint_coords(&grad_k(mu_d), mu_d));
    let forcing = spec.coadjoint_coords(&xi, mu);
    let (normal, weight) = normal_direction(spec, mu, mu_d, &grad_k(mu))?;
    let corr = spec.coadjoint_coords(&normal, mu);
    let s = weight / (c * cd);
    Ok(CoalgebraElement((0..mu.len()).map(|i| ham[i] + forcing[i] / cd - s * corr[i]).collect()))
}

/// Gradient vector field of `k` on the coadjoint orbit for the normal
/// metric: `−(1/C(μ̃)) ad*_{Γ∇k(μ̃)} μ̃ + (1/(C(μ)C(μ̃)))⟨Γ∇k(μ), [Γμ,Γμ̃]⟩ [Γμ,Γμ̃]^μ`.
pub fn orbit_gradient_rhs<T: Real>(
    mu: &CoalgebraElement<T>,
    mu_delayed: &CoalgebraElement<T>,
    spec: &AlgebraSpec<T>,
    grad_k: &dyn Fn(&[T]) -> Vec<T>,
) -> Result<CoalgebraElement<T>, ModelError> {
    let (mu, mu_d) = (&mu.0, &mu_delayed.0);
    check_dims(spec, mu, mu_d)?;
    let (c, cd) = casimir_pair(spec, mu, mu_d)?;
    let first = spec.coadjoint_coords(&spec.gamma().mul_vec(&grad_k(mu_d)), mu_d);
    let (normal, weight) = normal_direction(spec, mu, mu_d, &grad_k(mu))?;
    let s = weight / (c * cd);
    Ok(CoalgebraElement((0..mu.len()).map(|i| -first[i] / cd + s * normal[i]).collect()))
}

type GradFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// Which generic engine a [`generic_problem`] should wrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenericForm {
    Compact,
    Coadjoint,
    OrbitGradient,
}

/// Wraps one of the generic engines as a DDE on coalgebra coordinates.
pub fn generic_problem<T: Real>(
    spec: AlgebraSpec<T>,
    form: GenericForm,
    grad_h: GradFn<T>,
    grad_k: GradFn<T>,
    tau: T,
    initial: InitialFunction<T>,
) -> Result<DDEProblem<T>, ModelError> {
    let n = spec.dimension();
    Ok(DDEProblem::new(n, tau, initial, move |_, x, xd, out| {
        let mu = CoalgebraElement(x.to_vec());
        let mu_d = CoalgebraElement(xd.to_vec());
        let r = match form {
            GenericForm::Compact => generic_dissipative_rhs(&mu, &mu_d, &spec, &*grad_h, &*grad_k),
            GenericForm::Coadjoint => lie_poisson_delay_rhs(&mu, &mu_d, &spec, &*grad_h, &*grad_k),
            GenericForm::OrbitGradient => orbit_gradient_rhs(&mu, &mu_d, &spec, &*grad_k),
        }
        .map_err(|e| RhsError(e.to_string()))?;
        out.copy_from_slice(&r.0);
        Ok(())
    })?)
}

// ---------------------------------------------------------------------------
// Section-one and section-three examples

/// `q̇(t) = c sin(q(t − τ))` on the circle (τ = 1 in the classical example).
pub fn circle_problem<T: Real>(c: T, tau: T, initial: InitialFunction<T>) -> Result<DDEProblem<T>, ModelError> {
    check_finite("c", c)?;
    check_nonneg("tau", tau)?;
    Ok(DDEProblem::new(1, tau, initial, move |_, _, xd, out| {
        out[0] = c * xd[0].sin();
        Ok(())
    })?)
}

/// `q̇¹ = q²`, `q̇² = c sin(q¹(t − τ)) − b q²` on the cylinder.
pub fn cylinder_problem<T: Real>(b: T, c: T, tau: T, initial: InitialFunction<T>) -> Result<DDEProblem<T>, ModelError> {
    check_finite("b", b)?;
    check_finite("c", c)?;
    check_nonneg("tau", tau)?;
    Ok(DDEProblem::new(2, tau, initial, move |_, x, xd, out| {
        out[0] = x[1];
        out[1] = c * xd[0].sin() - b * x[1];
        Ok(())
    })?)
}

pub fn sphere_rhs<T: Real>(q: &[T; 3], q_delayed: &[T; 3]) -> [T; 3] {
    [-q_delayed[0] * q[1] - q[2], q_delayed[0] * q[0] - q[2], q[0] + q[1]]
}

/// The three-component system on S² whose solutions satisfy `Σ qⁱ q̇ⁱ = 0`.
pub fn sphere_problem<T: Real>(tau: T, initial: InitialFunction<T>) -> Result<DDEProblem<T>, ModelError> {
    check_nonneg("tau", tau)?;
    Ok(DDEProblem::new(3, tau, initial, move |_, x, xd, out| {
        out.copy_from_slice(&sphere_rhs(&arr3(x), &arr3(xd)));
        Ok(())
    })?)
}

/// Activation of the inertial neuron network.
#[derive(Clone)]
pub enum Activation<T> {
    Tanh,
    Custom(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T: Real> Activation<T> {
    pub fn apply(&self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Custom(f) => f(x),
        }
    }
}

impl<T> fmt::Debug for Activation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Tanh => f.write_str("Tanh"),
            Activation::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NeuronParams<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub h_gain: T,
    pub n: usize,
    pub tau: T,
    pub activation: Activation<T>,
}

impl<T: Real> NeuronParams<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_positive("a", self.a)?;
        check_positive("b", self.b)?;
        check_positive("c", self.c)?;
        check_positive("d", self.d)?;
        check_nonneg("h", self.h_gain)?;
        check_nonneg("tau", self.tau)?;
        if self.n == 0 {
            return Err(ModelError::InvalidParameter { name: "n", reason: "must be >= 1".into() });
        }
        Ok(())
    }
}

/// Inertial neuron network written first order: state `(q¹…qⁿ, q̇¹…q̇ⁿ)`,
/// `q̈ⁱ = −a q̇ⁱ − b qⁱ + c f(qⁱ − h q̃ⁱ) + d Σ_{j≠i} f(qʲ − h q̃ʲ)`.
pub fn neuron_problem<T: Real>(p: &NeuronParams<T>, initial: InitialFunction<T>) -> Result<DDEProblem<T>, ModelError> {
    p.validate()?;
    let p = p.clone();
    let n = p.n;
    Ok(DDEProblem::new(2 * n, p.tau, initial, move |_, x, xd, out| {
        let act: Vec<T> = (0..n).map(|j| p.activation.apply(x[j] - p.h_gain * xd[j])).collect();
        let total: T = act.iter().copied().sum();
        for i in 0..n {
            out[i] = x[n + i];
            out[n + i] = -p.a * x[n + i] - p.b * x[i] + p.c * act[i] + p.d * (total - act[i]);
        }
        Ok(())
    })?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineToolParams<T> {
    pub k_damp: T,
    pub omega_nat: T,
    pub mass: T,
    pub k1: T,
    pub beta: T,
    pub omega_rot: T,
}

impl<T: Real> MachineToolParams<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_positive("k_damp", self.k_damp)?;
        check_positive("omega_nat", self.omega_nat)?;
        check_positive("mass", self.mass)?;
        check_positive("k1", self.k1)?;
        check_positive("beta", self.beta)?;
        check_positive("omega_rot", self.omega_rot)
    }

    /// One revolution of the work-piece, `τ = 2π/Ω`.
    pub fn delay(&self) -> T {
        T::TAU() / self.omega_rot
    }

    /// Cutting force `−(2πk₁/(8βΩm))[(q̇ − q̃) + (5/β)(q − q̃)³]`.
    pub fn cutting_force(&self, q: T, qdot: T, q_delayed: T) -> T {
        let pre = -(T::TAU() * self.k1) / (T::lit(8.0) * self.beta * self.omega_rot * self.mass);
        let dq = q - q_delayed;
        pre * ((qdot - q_delayed) + T::lit(5.0) / self.beta * dq * dq * dq)
    }
}

/// Regenerative machine-tool vibration, state `(q, q̇)`:
/// `q̈ + 2kα q̇ + α² q = f(q̃, q̇, β)/m`.
pub fn machine_tool_problem<T: Real>(
    p: &MachineToolParams<T>,
    initial: InitialFunction<T>,
) -> Result<DDEProblem<T>, ModelError> {
    p.validate()?;
    let p = *p;
    Ok(DDEProblem::new(2, p.delay(), initial, move |_, x, xd, out| {
        out[0] = x[1];
        out[1] = -T::lit(2.0) * p.k_damp * p.omega_nat * x[1] - p.omega_nat * p.omega_nat * x[0]
            + p.cutting_force(x[0], x[1], xd[0]) / p.mass;
        Ok(())
    })?)
}

/// Reduces an angle to `(−π, π]`; applied to angle components only when
/// reporting, never inside the integration.
pub fn wrap_angle<T: Real>(q: T) -> T {
    let two_pi = T::TAU();
    let mut r = q % two_pi;
    if r > T::PI() {
        r = r - two_pi;
    } else if r <= -T::PI() {
        r = r + two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::scalar::{add3, scale3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rv(rng: &mut ChaCha8Rng) -> [f64; 3] {
        [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
    }

    fn set1() -> RigidBodyParams<f64> {
        RigidBodyParams::new([0.8, 0.5, 0.4], 0.3, 0.5, 1.5)
    }

    #[test]
    fn rigid_body_hand_values() {
        let p = set1();
        assert_eq!(rigid_body_delay_rhs(&[1.5, 0.0, 0.0], &[1.5, 0.0, 0.0], &p), [0.0; 3]);
        let unit = RigidBodyParams::new([1.0; 3], 1.0, 0.0, 1.0);
        assert_eq!(rigid_body_delay_rhs(&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &unit), [0.0; 3]);
        let free = RigidBodyParams { alpha: 0.0, ..p };
        let m = [0.3, -0.4, 1.2];
        assert_eq!(rigid_body_delay_rhs(&m, &[1.0, 2.0, 3.0], &free), cross(&m, &free.omega(&m)));
    }

    #[test]
    fn rigid_body_rhs_orthogonal_to_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = set1();
        for _ in 0..200 {
            let m = rv(&mut rng);
            let r = rigid_body_delay_rhs(&m, &rv(&mut rng), &p);
            assert!(dot3(&r, &m).abs() < 1e-15);
        }
    }

    #[test]
    fn casimir_scaled_prefactor() {
        let p = RigidBodyParams { casimir_scaled: true, ..set1() };
        let m = [0.0, 2.0, 0.0];
        let md = [0.3, 0.2, 0.9];
        let bare = rigid_body_delay_rhs(&m, &md, &RigidBodyParams { alpha: p.alpha / 4.0, ..set1() });
        let scaled = rigid_body_delay_rhs(&m, &md, &p);
        for i in 0..3 {
            assert!((bare[i] - scaled[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn landau_lifschitz_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = LandauLifschitzParams { gamma_ratio: 1.7, lambda_damp: 0.2, b: [0.1, 0.3, 1.0], tau: 0.1 };
        let mut checked = 0;
        while checked < 100 {
            let m = rv(&mut rng);
            let md = rv(&mut rng);
            match landau_lifschitz_delay_rhs(&m, &md, &p.b, &p.b, &p) {
                Ok(r) => {
                    assert!(dot3(&r, &m).abs() <= 1e-14 * (1.0 + norm3(&r)));
                    checked += 1;
                }
                Err(ModelError::SingularCone(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
        let undamped = LandauLifschitzParams { lambda_damp: 0.0, ..p };
        let m = [0.2, 0.5, -0.1];
        let r = landau_lifschitz_delay_rhs(&m, &[1.0, 0.0, 0.0], &p.b, &p.b, &undamped).unwrap();
        assert_eq!(r, scale3(1.7, &cross(&m, &p.b)));
        // θ = 0: classical damping λ M×(M×B)/‖M‖².
        let r = landau_lifschitz_delay_rhs(&m, &m, &p.b, &p.b, &p).unwrap();
        let classical = add3(&scale3(1.7, &cross(&m, &p.b)), &scale3(0.2 / dot3(&m, &m), &cross(&m, &cross(&m, &p.b))));
        for i in 0..3 {
            assert!((r[i] - classical[i]).abs() < 1e-14);
        }
        assert!(matches!(
            landau_lifschitz_delay_rhs(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &p.b, &p.b, &p),
            Err(ModelError::SingularCone(_))
        ));
    }

    fn so3() -> AlgebraSpec<f64> {
        AlgebraSpec::so3_standard()
    }

    #[test]
    fn generic_engine_matches_rigid_body_under_unit_inertia() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let spec = so3();
        let grad = |m: &[f64]| m.to_vec();
        let p = RigidBodyParams::new([1.0; 3], 1.0, 0.0, 1.0);
        for _ in 0..100 {
            let (m, md) = (rv(&mut rng), rv(&mut rng));
            let g = generic_dissipative_rhs(
                &CoalgebraElement(m.to_vec()),
                &CoalgebraElement(md.to_vec()),
                &spec,
                &grad,
                &grad,
            )
            .unwrap();
            let r = rigid_body_delay_rhs(&m, &md, &p);
            for i in 0..3 {
                assert!((g.0[i] - r[i]).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn generic_engine_with_inertia_and_parallel_delay() {
        // With μ̃ ∥ μ the normal-correction term vanishes and the compact form
        // reproduces the rigid body exactly for any inertia.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spec = so3();
        let inertia = [0.8, 0.5, 0.4];
        let alpha = 0.3;
        let p = RigidBodyParams::new(inertia, alpha, 0.0, 1.0);
        let gh = move |m: &[f64]| vec![m[0] / inertia[0], m[1] / inertia[1], m[2] / inertia[2]];
        let gk = move |m: &[f64]| vec![alpha * m[0] / inertia[0], alpha * m[1] / inertia[1], alpha * m[2] / inertia[2]];
        for _ in 0..100 {
            let m = rv(&mut rng);
            let s = rng.gen_range(0.5..1.5);
            let md = scale3(s, &m);
            let g =
                generic_dissipative_rhs(&CoalgebraElement(m.to_vec()), &CoalgebraElement(md.to_vec()), &spec, &gh, &gk)
                    .unwrap();
            let r = rigid_body_delay_rhs(&m, &md, &p);
            for i in 0..3 {
                assert!((g.0[i] - r[i]).abs() <= 1e-13 * (1.0 + r[i].abs()));
            }
            // general μ̃: the difference is exactly the correction term
            let md = rv(&mut rng);
            let [t1, t2, t3] = generic_dissipative_terms(&m, &md, &spec, &gh, &gk).unwrap();
            let r = rigid_body_delay_rhs(&m, &md, &p);
            let omega = p.omega(&m);
            let mxmd = cross(&m, &md);
            let expect3 = scale3(-alpha * dot3(&omega, &mxmd), &cross(&m, &mxmd));
            for i in 0..3 {
                assert!((t1[i] + t2[i] - r[i]).abs() <= 1e-14);
                assert!((t3[i] - expect3[i]).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn coadjoint_form_agrees_with_compact_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gamma = Matrix::from_rows(&[vec![1.5, 0.2, 0.0], vec![0.2, 1.0, 0.1], vec![0.0, 0.1, 0.7]]).unwrap();
        let spec = AlgebraSpec::so3(gamma, crate::algebra::Casimir::NormSquared).unwrap();
        let gh = |m: &[f64]| vec![m[0] / 0.8, m[1] / 0.5, m[2] / 0.4];
        let gk = |m: &[f64]| vec![0.3 * m[0], 0.7 * m[1], 0.2 * m[2]];
        for _ in 0..100 {
            let m = CoalgebraElement(rv(&mut rng).to_vec());
            let md = CoalgebraElement(rv(&mut rng).to_vec());
            let a = generic_dissipative_rhs(&m, &md, &spec, &gh, &gk).unwrap();
            let b = lie_poisson_delay_rhs(&m, &md, &spec, &gh, &gk).unwrap();
            for i in 0..3 {
                assert!((a.0[i] - b.0[i]).abs() <= 1e-12);
            }
        }
        let zero = |_: &[f64]| vec![0.0; 3];
        let m = CoalgebraElement(vec![0.3, 0.1, -0.5]);
        let r = lie_poisson_delay_rhs(&m, &m, &spec, &gh, &zero).unwrap();
        let expect = spec.coadjoint(&gh(&m.0).into(), &m).unwrap();
        assert_eq!(r.0, expect.0);
        let z = generic_dissipative_rhs(&m, &m, &spec, &zero, &zero).unwrap();
        assert!(z.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_positive_casimir_rejected() {
        let spec = AlgebraSpec::so3(Matrix::identity(3), crate::algebra::Casimir::NormSquared).unwrap();
        let g = |m: &[f64]| m.to_vec();
        let zero = CoalgebraElement(vec![0.0; 3]);
        let m = CoalgebraElement(vec![1.0, 0.0, 0.0]);
        assert!(matches!(generic_dissipative_rhs(&zero, &m, &spec, &g, &g), Err(ModelError::NonPositiveCasimir(_))));
    }

    #[test]
    fn orbit_gradient_critical_point() {
        let spec = so3();
        let g = |m: &[f64]| vec![2.0 * m[0], 2.0 * m[1], 2.0 * m[2]];
        let m = CoalgebraElement(vec![0.3, -0.2, 0.9]);
        let r = orbit_gradient_rhs(&m, &m, &spec, &g).unwrap();
        assert!(r.norm() < 1e-15);
    }

    #[test]
    fn sphere_rhs_is_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let q = rv(&mut rng);
            let r = sphere_rhs(&q, &rv(&mut rng));
            assert!(dot3(&q, &r).abs() < 1e-15);
        }
    }

    #[test]
    fn small_examples() {
        let phi = InitialFunction::constant(vec![0.7], 1.0);
        let p = circle_problem(0.0, 1.0, phi).unwrap();
        let mut out = [1.0];
        p.eval_rhs(0.0, &[0.7], &[0.7], &mut out).unwrap();
        assert_eq!(out, [0.0]);

        let mt = MachineToolParams {
            k_damp: 0.1,
            omega_nat: 2.0,
            mass: 1.0,
            k1: 1.0,
            beta: 1.0,
            omega_rot: std::f64::consts::TAU,
        };
        assert!((mt.delay() - 1.0).abs() < 1e-15);
        assert!(MachineToolParams { mass: 0.0, ..mt }.validate().is_err());

        let np =
            NeuronParams { a: 1.0, b: 1.0, c: 1.0, d: 1.0, h_gain: 0.5, n: 2, tau: 0.5, activation: Activation::Tanh };
        let prob = neuron_problem(&np, InitialFunction::constant(vec![0.1, 0.2, 0.0, 0.0], 0.5)).unwrap();
        let mut out = [0.0; 4];
        prob.eval_rhs(0.0, &[0.1, 0.2, 0.3, 0.4], &[0.0, 0.0, 0.0, 0.0], &mut out).unwrap();
        let expect1 = -0.3 - 0.1 + 0.1f64.tanh() + 0.2f64.tanh();
        assert!((out[2] - expect1).abs() < 1e-15);
        assert_eq!(out[0], 0.3);

        assert!((wrap_angle(7.0) - (7.0 - std::f64::consts::TAU)).abs() < 1e-15);
        assert!((wrap_angle(-4.0) - (-4.0 + std::f64::consts::TAU)).abs() < 1e-15);
    }
}
