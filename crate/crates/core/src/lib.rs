//! Delay differential equations with Lie–Poisson structure.
//!
//! The crate integrates constant-delay systems whose dissipation takes the
//! double-bracket form `μ × (μ̃ × ∇k(μ̃))`, checks their conservation and
//! dissipation laws, and carries out the linear stability and Hopf analysis
//! of the free rigid body with delayed damping.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`, which is what the analysis pipeline uses.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod diagnostics;
pub mod history;
pub mod hopf;
pub mod integrator;
pub mod linalg;
pub mod models;
pub mod report;
pub mod scalar;
pub mod spectral;

pub use num_complex::Complex;
pub use scalar::Real;

pub type Algebra = algebra::AlgebraSpec<f64>;
pub type Trajectory = history::Trajectory<f64>;
pub type InitialFunction = history::InitialFunction<f64>;
pub type DDEProblem = integrator::DDEProblem<f64>;
pub type IntegratorConfig = integrator::IntegratorConfig<f64>;
pub type RigidBodyParams = models::RigidBodyParams<f64>;
pub type Complex64 = Complex<f64>;
