//! Center-manifold reduction and Hopf normal form at `(ω₀, τ₀)`.
//!
//! Conventions. The perturbation `V = Ω − Ω₁` obeys
//! `V̇ = AV + αGṼ + N(V, Ṽ)` with
//! `N = ½B(X, X) + ⅙C(X, X, X)`, `X = (V, Ṽ)`. The center eigenfunction is
//! `q(θ) = v e^{iω₀θ}` with `v = (0, v₂, v₃)`, and the adjoint
//! `ψ(s) = w e^{iω₀s}` satisfies `w(A + αGe^{iω₀τ₀} + iω₀) = 0`. Pairings
//! are conjugate-linear in the first slot:
//!
//! ```text
//! ⟨ψ, φ⟩ = ψ̄(0)·φ(0) + α ∫_{−τ}^0 ψ̄(ξ+τ) G φ(ξ) dξ
//! ```
//!
//! With `ψ̃` normalized so that `⟨ψ̃, q⟩ = 1`, `⟨ψ̃, q̄⟩ = 0`, the reduced
//! equation is `ż = iω₀z + ½g₂₁z²z̄ + …` and
//! `g₂₁ = w̃̄·[2B(Q, W₁₁) + B(Q̄, W₂₀) + C(Q, Q, Q̄)]`.
//!
//! The quadratic coefficients `g₂₀, g₁₁, g₀₂` vanish because the quadratic
//! part of `N` points along the Casimir direction `e₁`, which the adjoint
//! annihilates. Along that direction the linear operator at `λ = 0` is
//! singular, so `W₁₁` is fixed only up to a multiple of `e₁`; the default
//! choice pins it by requiring the center manifold to stay on the
//! coadjoint orbit `‖IΩ‖ = m`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{solve_complex, LinalgError};
use crate::models::RigidBodyParams;
use crate::scalar::Real;
use crate::spectral::{linearize, HopfPoint, Linearization, SpectralError};

/// Relative residual accepted for eigenvectors and normalization identities.
pub const EIGEN_TOL: f64 = 1e-10;
/// Threshold above which a printed closed form is reported as inconsistent.
pub const PRINTED_FORM_TOL: f64 = 1e-8;
/// `|z|` below which `(e^z − 1)/z`-type divided differences switch to series.
pub const SERIES_SWITCH: f64 = 1e-6;

pub type CVec<T> = [Complex<T>; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HopfError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("characteristic matrix is nonsingular at the candidate (relative det {0:e}); not a Hopf point")]
    NotSingular(f64),
    #[error("normalization system is singular (|d| = {0:e})")]
    SingularNormalization(f64),
    #[error("resonance: 2iω₀ is a characteristic root")]
    Resonance,
    #[error("transversality has zero real part; μ₂ undefined")]
    ZeroTransversality,
    #[error("normalization identity violated: {0}")]
    Normalization(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn cross_c<T: Real>(a: &CVec<T>, b: &CVec<T>) -> CVec<T> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn add_c<T: Real>(a: &CVec<T>, b: &CVec<T>) -> CVec<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale_c<T: Real>(s: Complex<T>, a: &CVec<T>) -> CVec<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn conj_c<T: Real>(a: &CVec<T>) -> CVec<T> {
    [a[0].conj(), a[1].conj(), a[2].conj()]
}

/// Bilinear (non-conjugating) contraction `a·b`.
fn dot_c<T: Real>(a: &CVec<T>, b: &CVec<T>) -> Complex<T> {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm_c<T: Real>(a: &CVec<T>) -> T {
    (a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()).sqrt()
}

fn real_matrix_mul<T: Real>(m: &crate::linalg::Matrix<T>, v: &CVec<T>) -> CVec<T> {
    let mut out = [czero(); 3];
    for (i, o) in out.iter_mut().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            *o = *o + *vj * m[(i, j)];
        }
    }
    out
}

/// `Δ(λ) = λ − A − αGe^{−λτ}` as a row-major complex 3×3 matrix.
pub fn characteristic_matrix<T: Real>(lin: &Linearization<T>, alpha: T, tau: T, lambda: Complex<T>) -> Vec<Complex<T>> {
    let e = (-lambda * tau).exp();
    let mut m = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            let d = if i == j { lambda } else { czero() };
            m.push(d - lin.a[(i, j)] - e * (alpha * lin.g[(i, j)]));
        }
    }
    m
}

fn mat_vec_c<T: Real>(m: &[Complex<T>], v: &CVec<T>) -> CVec<T> {
    let mut out = [czero(); 3];
    for i in 0..3 {
        out[i] = m[3 * i] * v[0] + m[3 * i + 1] * v[1] + m[3 * i + 2] * v[2];
    }
    out
}

fn vec_mat_c<T: Real>(u: &CVec<T>, m: &[Complex<T>]) -> CVec<T> {
    let mut out = [czero(); 3];
    for (j, o) in out.iter_mut().enumerate() {
        *o = u[0] * m[j] + u[1] * m[3 + j] + u[2] * m[6 + j];
    }
    out
}

fn mat_scale<T: Real>(m: &[Complex<T>]) -> T {
    m.iter().fold(T::one(), |acc, z| acc.max(z.norm()))
}

// ---------------------------------------------------------------------------
// Nonlinearity

/// Argument of the nonlinearity: current and delayed deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub now: CVec<T>,
    pub delayed: CVec<T>,
}

impl<T: Real> Segment<T> {
    /// `(v, v e^{−λτ})`, the value of `v e^{λθ}` at `θ = 0` and `θ = −τ`.
    pub fn exponential(v: CVec<T>, lambda: Complex<T>, tau: T) -> Self {
        Self { now: v, delayed: scale_c((-lambda * tau).exp(), &v) }
    }

    pub fn conj(&self) -> Self {
        Self { now: conj_c(&self.now), delayed: conj_c(&self.delayed) }
    }
}

fn inertia_mul<T: Real>(p: &RigidBodyParams<T>, v: &CVec<T>) -> CVec<T> {
    [v[0] * p.inertia[0], v[1] * p.inertia[1], v[2] * p.inertia[2]]
}

fn inertia_div<T: Real>(p: &RigidBodyParams<T>, v: &CVec<T>) -> CVec<T> {
    [v[0] / p.inertia[0], v[1] / p.inertia[1], v[2] / p.inertia[2]]
}

/// Symmetric part of `(Ix) × y`.
fn sym_q<T: Real>(p: &RigidBodyParams<T>, x: &CVec<T>, y: &CVec<T>) -> CVec<T> {
    let s = add_c(&cross_c(&inertia_mul(p, x), y), &cross_c(&inertia_mul(p, y), x));
    scale_c(c(T::lit(0.5)), &s)
}

fn equilibrium_c<T: Real>(p: &RigidBodyParams<T>) -> CVec<T> {
    [c(p.m / p.inertia[0]), czero(), czero()]
}

/// Second derivative of the angular-velocity vector field at `(Ω₁, Ω₁)`.
pub fn quadratic_form<T: Real>(p: &RigidBodyParams<T>, x: &Segment<T>, y: &Segment<T>) -> CVec<T> {
    let e = equilibrium_c(p);
    let two = c(T::lit(2.0));
    let alpha = c(p.alpha);
    let free = scale_c(two, &sym_q(p, &x.now, &y.now));
    let mixed = add_c(
        &cross_c(&inertia_mul(p, &x.now), &sym_q(p, &e, &y.delayed)),
        &cross_c(&inertia_mul(p, &y.now), &sym_q(p, &e, &x.delayed)),
    );
    let delayed = cross_c(&inertia_mul(p, &e), &sym_q(p, &x.delayed, &y.delayed));
    let total = add_c(&free, &scale_c(two * alpha, &add_c(&mixed, &delayed)));
    inertia_div(p, &total)
}

/// Third derivative of the angular-velocity vector field (constant).
pub fn cubic_form<T: Real>(p: &RigidBodyParams<T>, x: &Segment<T>, y: &Segment<T>, z: &Segment<T>) -> CVec<T> {
    let t1 = cross_c(&inertia_mul(p, &x.now), &sym_q(p, &y.delayed, &z.delayed));
    let t2 = cross_c(&inertia_mul(p, &y.now), &sym_q(p, &x.delayed, &z.delayed));
    let t3 = cross_c(&inertia_mul(p, &z.now), &sym_q(p, &x.delayed, &y.delayed));
    let s = add_c(&add_c(&t1, &t2), &t3);
    inertia_div(p, &scale_c(c(T::lit(2.0) * p.alpha), &s))
}

/// The nonlinear part of the vector field as printed in the literature
/// (component formulas with their scaling factors); kept for comparison.
pub fn printed_nonlinearity<T: Real>(p: &RigidBodyParams<T>, v: &[T; 3], vd: &[T; 3]) -> [T; 3] {
    let [i1, i2, i3] = p.inertia;
    let (a, m) = (p.alpha, p.m);
    let [x1, x2, x3] = *v;
    let [y1, y2, y3] = *vd;
    let n1 = (i2 - i3) / i1 * x2 * x3
        + a * m * (i2 * (i1 - i2) / i1 * x2 * y2 - i3 * (i3 - i1) / i1 * x3 * y3)
        + a * (i2 * (i1 - i2) / i1 * x1 * x2 * y2 - i3 * (i3 - i1) / i1 * y1 * x3 * y3);
    let n2 = (i3 - i1) / i2 * x1 * x3
        + a * m * i1 * (i2 - i1) / i2 * (x1 + y1) * y2
        + a * (i3 * (i2 - i3) / i2 * y2 * x3 * y3 - i1 * (i1 - i2) / i2 * x1 * y1 * y2);
    let n3 = (i1 - i2) / i3 * x1 * x2
        + a * m * i1 * (i3 - i1) / i3 * (x1 + y1) * y3
        + a * (i1 * (i3 - i1) / i3 * x1 * y1 * y3 - i2 * (i2 - i3) / i3 * x2 * y2 * y3);
    [n1, n2, n3]
}

// ---------------------------------------------------------------------------
// Pairings

/// `h_n(z) = ∫₀¹ tⁿ e^{zt} dt`.
fn h_fun<T: Real>(n: usize, z: Complex<T>) -> Complex<T> {
    if z.norm() < T::one() {
        let mut sum = czero();
        let mut pow = c(T::one());
        let mut fact = T::one();
        for k in 0..60 {
            let term = pow / (fact * T::from_usize_lossy(n + k + 1));
            sum = sum + term;
            if term.norm() <= T::epsilon() * sum.norm() * T::lit(0.01) {
                break;
            }
            pow = pow * z;
            fact = fact * T::from_usize_lossy(k + 1);
        }
        sum
    } else {
        let ez = z.exp();
        let mut h = (ez - T::one()) / z;
        for j in 1..=n {
            h = (ez - h * T::from_usize_lossy(j)) / z;
        }
        h
    }
}

/// `M_n(k) = ∫_{−τ}^0 θⁿ e^{kθ} dθ`.
fn moment<T: Real>(n: usize, k: Complex<T>, tau: T) -> Complex<T> {
    let sign = if n.is_multiple_of(2) { T::one() } else { -T::one() };
    h_fun(n, -k * tau) * (sign * tau.powi(n as i32 + 1))
}

/// Context for pairings: delay, damping coefficient and the delayed matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingContext<T> {
    pub alpha: T,
    pub tau: T,
    pub g: crate::linalg::Matrix<T>,
}

impl<T: Real> PairingContext<T> {
    pub fn new(p: &RigidBodyParams<T>, tau: T) -> Result<Self, HopfError> {
        let lin = linearize(p)?;
        Ok(Self { alpha: p.alpha, tau, g: lin.g })
    }

    fn gram(&self, psi: &CVec<T>, phi: &CVec<T>) -> Complex<T> {
        dot_c(&conj_c(psi), &real_matrix_mul(&self.g, phi))
    }
}

/// Pairing with the point-delay measure,
/// `ψ̄(0)φ(0) + α∫_{−τ}^0 ψ̄(ξ+τ)Gφ(ξ)dξ`, for `ψ(s) = ψ_c e^{λ_ψ s}` and
/// `φ(θ) = φ_c e^{λ_φ θ}`.
pub fn pairing<T: Real>(
    ctx: &PairingContext<T>,
    psi: &CVec<T>,
    phi: &CVec<T>,
    lambda_psi: Complex<T>,
    lambda_phi: Complex<T>,
) -> Complex<T> {
    let lp = lambda_psi.conj();
    let integral = (lp * ctx.tau).exp() * moment(0, lp + lambda_phi, ctx.tau);
    dot_c(&conj_c(psi), phi) + ctx.gram(psi, phi) * integral * ctx.alpha
}

/// The double-integral form
/// `ψ̄(0)φ(0) − α∫_{−τ}^0∫_{ξ=0}^θ ψ̄(ξ−θ)Gφ(ξ)dξdθ`, in closed form.
pub fn bilinear_form<T: Real>(
    ctx: &PairingContext<T>,
    psi: &CVec<T>,
    phi: &CVec<T>,
    lambda_psi: Complex<T>,
    lambda_phi: Complex<T>,
) -> Complex<T> {
    let r = -lambda_psi.conj();
    let s = lambda_psi.conj() + lambda_phi;
    let tau = ctx.tau;
    // ∫_{−τ}^0 e^{rθ} (e^{sθ} − 1)/s dθ, a divided difference of M₀.
    let j = if (s * tau).norm() >= T::lit(SERIES_SWITCH) {
        (moment(0, r + s, tau) - moment(0, r, tau)) / s
    } else {
        moment(1, r, tau) + moment(2, r, tau) * s * T::lit(0.5)
    };
    dot_c(&conj_c(psi), phi) - ctx.gram(psi, phi) * j * ctx.alpha
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// [`bilinear_form`] by composite Gauss–Legendre quadrature over the
/// triangle, `panels` sub-intervals per direction with 16 nodes each.
pub fn bilinear_form_quadrature<T: Real>(
    ctx: &PairingContext<T>,
    psi: &CVec<T>,
    phi: &CVec<T>,
    lambda_psi: Complex<T>,
    lambda_phi: Complex<T>,
    panels: usize,
) -> Complex<T> {
    let gl = gauss_legendre(16);
    let tau = ctx.tau;
    let panels = panels.max(1);
    let lp = lambda_psi.conj();
    // θ ∈ [−τ, 0]; ξ = θ t, t ∈ [0, 1]; dξ = θ dt.
    let mut total = czero();
    let width = tau / T::from_usize_lossy(panels);
    let half = T::lit(0.5);
    for a in 0..panels {
        let lo = -tau + width * T::from_usize_lossy(a);
        for &(xa, wa) in &gl {
            let theta = lo + width * half * (T::lit(xa) + T::one());
            let wt = width * half * T::lit(wa);
            let mut inner = czero();
            let tw = T::one() / T::from_usize_lossy(panels);
            for b in 0..panels {
                let tlo = tw * T::from_usize_lossy(b);
                for &(xb, wb) in &gl {
                    let t = tlo + tw * half * (T::lit(xb) + T::one());
                    let xi = theta * t;
                    inner = inner + (lp * (xi - theta) + lambda_phi * xi).exp() * (tw * half * T::lit(wb));
                }
            }
            total = total + inner * (theta * wt);
        }
    }
    dot_c(&conj_c(psi), phi) - ctx.gram(psi, phi) * total * ctx.alpha
}

// ---------------------------------------------------------------------------
// Eigenvectors and normalization

#[derive(Debug, Clone, PartialEq)]
pub struct EigenData<T> {
    pub omega0: T,
    pub tau0: T,
    /// Right eigenvector `(0, v₂, v₃)` of `Δ(iω₀)`.
    pub v: CVec<T>,
    /// Left null vector `(0, w₂, w₃)` of `A + αGe^{iω₀τ₀} + iω₀`.
    pub w: CVec<T>,
    /// Closed-form adjoint candidate `w₂ = I₂(I₁−I₂)m`,
    /// `w₃ = (iω₀I₁I₂ − (I₂−I₁)m²αe^{iω₀τ₀})I₃`.
    pub printed_w: CVec<T>,
    pub v_residual: T,
    pub w_residual: T,
    pub printed_w_residual: T,
    pub printed_w_valid: bool,
    /// Normalized adjoint `ψ̃(0)`.
    pub w_tilde: CVec<T>,
    pub a11: Complex<T>,
    pub a12: Complex<T>,
    pub b11: Complex<T>,
    pub b12: Complex<T>,
    /// Whether `b₁₁ = a₁₁/d` (with `d = |a₁₁|² − |a₁₂|²`) matches the solve.
    pub printed_b11_consistent: bool,
    pub notes: Vec<String>,
}

fn relative_residual<T: Real>(r: &CVec<T>, m: &[Complex<T>], x: &CVec<T>) -> T {
    norm_c(r) / (mat_scale(m) * norm_c(x).max(T::min_positive_value()))
}

/// Eigenvector `v` from the printed closed form and adjoint vector `w` from
/// the left nullspace, both residual-checked. The printed adjoint candidate
/// is evaluated and recorded; it is used only if it passes the check.
pub fn eigenvectors<T: Real>(p: &RigidBodyParams<T>, hp: &HopfPoint<T>) -> Result<EigenData<T>, HopfError> {
    let lin = linearize(p)?;
    let [i1, i2, i3] = p.inertia;
    let (m, alpha) = (p.m, p.alpha);
    let lambda = Complex::new(T::zero(), hp.omega0);
    let delta = characteristic_matrix(&lin, alpha, hp.tau0, lambda);
    let mut notes = Vec::new();

    let det2 = delta[4] * delta[8] - delta[5] * delta[7];
    let rel_det = det2.norm() / (mat_scale(&delta) * mat_scale(&delta));
    if rel_det > T::lit(1e-8) {
        return Err(HopfError::NotSingular(rel_det.as_f64()));
    }

    let e_minus = (-lambda * hp.tau0).exp();
    let mut v = [czero(), c((i3 - i1) * m), lambda * (i1 * i2) - e_minus * ((i2 - i1) * m * m * alpha)];
    let mut v_residual = relative_residual(&mat_vec_c(&delta, &v), &delta, &v);
    if !(v_residual <= T::lit(PRINTED_FORM_TOL)) {
        notes.push(format!("closed-form eigenvector residual {:e}; using nullspace vector", v_residual.as_f64()));
        v = nullspace_right(&delta);
        v_residual = relative_residual(&mat_vec_c(&delta, &v), &delta, &v);
    }

    // Adjoint: w (A + αGe^{iωτ} + iω) = 0, i.e. w·M = 0 with M = −Δ(−iω).
    let adj: Vec<Complex<T>> = characteristic_matrix(&lin, alpha, hp.tau0, -lambda).iter().map(|z| -*z).collect();
    let e_plus = (lambda * hp.tau0).exp();
    let printed_w = [czero(), c(i2 * (i1 - i2) * m), (lambda * (i1 * i2) - e_plus * ((i2 - i1) * m * m * alpha)) * i3];
    let printed_w_residual = relative_residual(&vec_mat_c(&printed_w, &adj), &adj, &printed_w);
    let printed_w_valid = printed_w_residual <= T::lit(PRINTED_FORM_TOL);
    let w = if printed_w_valid {
        printed_w
    } else {
        notes.push(format!(
            "closed-form adjoint vector fails the adjoint equation (relative residual {:.3e}); using the left nullspace",
            printed_w_residual.as_f64()
        ));
        let w2 = printed_w[1];
        let w3 = if adj[7].norm() >= adj[8].norm() { -w2 * adj[4] / adj[7] } else { -w2 * adj[5] / adj[8] };
        [czero(), w2, w3]
    };
    let w_residual = relative_residual(&vec_mat_c(&w, &adj), &adj, &w);
    let tol = T::lit(EIGEN_TOL);
    if !(v_residual <= tol && w_residual <= tol) {
        return Err(HopfError::NotSingular(v_residual.max(w_residual).as_f64()));
    }
    Ok(EigenData {
        omega0: hp.omega0,
        tau0: hp.tau0,
        v,
        w,
        printed_w,
        v_residual,
        w_residual,
        printed_w_residual,
        printed_w_valid,
        w_tilde: w,
        a11: czero(),
        a12: czero(),
        b11: c(T::one()),
        b12: czero(),
        printed_b11_consistent: true,
        notes,
    })
}

fn nullspace_right<T: Real>(delta: &[Complex<T>]) -> CVec<T> {
    // lower 2×2 block rows (d22 d23; d32 d33): pick the row with larger norm
    let (r0, r1) = if delta[4].norm() + delta[5].norm() >= delta[7].norm() + delta[8].norm() {
        (delta[4], delta[5])
    } else {
        (delta[7], delta[8])
    };
    [czero(), r1, -r0]
}

/// Solves `⟨ψ̃, q⟩ = 1`, `⟨ψ̃, q̄⟩ = 0` for `ψ̃ = b₁₁ψ + b₁₂ψ̄`.
pub fn normalize_adjoint<T: Real>(p: &RigidBodyParams<T>, e: &EigenData<T>) -> Result<EigenData<T>, HopfError> {
    let ctx = PairingContext::new(p, e.tau0)?;
    let l = Complex::new(T::zero(), e.omega0);
    let a11 = pairing(&ctx, &e.w, &e.v, l, l);
    let a12 = pairing(&ctx, &e.w, &conj_c(&e.v), l, l.conj());
    // ⟨ψ̄, q⟩ = conj⟨ψ, q̄⟩ and ⟨ψ̄, q̄⟩ = conj⟨ψ, q⟩ by realness of the data.
    let a21 = a12.conj();
    let a22 = a11.conj();
    // The pairing is conjugate-linear in ψ, so the unknowns are conj(b).
    let d = a11 * a22 - a21 * a12;
    if d.norm() <= T::lit(1e-14) * a11.norm_sqr() {
        return Err(HopfError::SingularNormalization(d.norm().as_f64()));
    }
    let cb11 = a22 / d;
    let cb12 = -a12 / d;
    let (b11, b12) = (cb11.conj(), cb12.conj());
    let w_tilde = add_c(&scale_c(b11, &e.w), &scale_c(b12, &conj_c(&e.w)));

    let n1 = cb11 * a11 + cb12 * a21;
    let n2 = cb11 * a12 + cb12 * a22;
    let tol = T::lit(EIGEN_TOL);
    if !((n1 - T::one()).norm() <= tol && n2.norm() <= tol) {
        return Err(HopfError::Normalization(format!("<psi~,q> = {n1}, <psi~,conj q> = {n2}")));
    }
    let d_real = a11.norm_sqr() - a12.norm_sqr();
    let printed_b11 = a11 / d_real;
    let printed_b11_consistent = (printed_b11 - b11).norm() <= T::lit(PRINTED_FORM_TOL) * b11.norm();
    let mut notes = e.notes.clone();
    if !printed_b11_consistent {
        notes.push(format!("b11 = a11/d gives {printed_b11}, the normalization solve gives {b11}"));
    }
    Ok(EigenData { w_tilde, a11, a12, b11, b12, printed_b11_consistent, notes, ..e.clone() })
}

/// The printed closed forms for `a₁₁ = ⟨ψ, φ⟩` and `a₁₂ = ⟨ψ, φ̄⟩` in
/// terms of `v` and `w`.
pub fn printed_a_coefficients<T: Real>(
    p: &RigidBodyParams<T>,
    e: &EigenData<T>,
    w: &CVec<T>,
) -> (Complex<T>, Complex<T>) {
    let [i1, i2, i3] = p.inertia;
    let (m, alpha, tau) = (p.m, p.alpha, e.tau0);
    let l2 = Complex::new(T::zero(), -e.omega0);
    let (v2, v3) = (e.v[1], e.v[2]);
    let (w2, w3b) = (w[1], w[2].conj());
    let pref = alpha * m * m / (i1 * i1 * i2 * i3);
    let el = (l2 * tau).exp();
    let a11 = v2 * w2 + v3 * w3b
        - (el + l2 * el - T::one()) / (l2 * l2)
            * (pref * alpha * tau)
            * (v2 * w2 * (i3 * (i2 - i1)) + v3 * w3b * (i2 * (i3 - i1)));
    let a12 = v2 * w2 + v3.conj() * w3b
        - (c(T::lit(2.0)) - (-l2 * tau).exp() - el) / (l2 * l2 * T::lit(2.0))
            * (pref * alpha)
            * (v2 * w2 * (i3 * (i2 - i1)) + v3.conj() * w3b * (i2 * (i3 - i1)));
    (a11, a12)
}

// ---------------------------------------------------------------------------
// Cubic coefficients

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum W11Choice {
    /// Fixed by keeping the center manifold on `‖IΩ‖ = m`.
    Casimir,
    /// `w₁₁ ≡ 0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormData<T> {
    pub f20: CVec<T>,
    pub f11: CVec<T>,
    pub f02: CVec<T>,
    pub f21: CVec<T>,
    /// `W₂₀(0)` from the linear solve `Δ(2iω₀)E₁ = F₂₀`.
    pub w20: CVec<T>,
    pub w11: CVec<T>,
    pub w20_1: Complex<T>,
    /// `F₂₀¹/(2iω₀)`.
    pub w20_closed_form: Complex<T>,
    /// First component of `W₂₀` implied by the orbit constraint.
    pub w20_casimir: Complex<T>,
    pub g20: Complex<T>,
    pub g11: Complex<T>,
    pub g02: Complex<T>,
    pub g21: Complex<T>,
    pub w11_choice: W11Choice,
}

fn casimir_w11<T: Real>(p: &RigidBodyParams<T>, v: &CVec<T>) -> Complex<T> {
    let [_, i2, i3] = p.inertia;
    c(-(i2 * i2 * v[1].norm_sqr() + i3 * i3 * v[2].norm_sqr()) / (p.m * p.inertia[0]))
}

fn casimir_w20<T: Real>(p: &RigidBodyParams<T>, v: &CVec<T>) -> Complex<T> {
    let [_, i2, i3] = p.inertia;
    -(v[1] * v[1] * (i2 * i2) + v[2] * v[2] * (i3 * i3)) / (p.m * p.inertia[0])
}

/// `F₂₀, F₁₁, F₀₂, F₂₁`, the second-order center-manifold terms and the
/// normal-form coefficients `g₂₀, g₁₁, g₀₂, g₂₁`.
pub fn cubic_coefficients<T: Real>(
    p: &RigidBodyParams<T>,
    hp: &HopfPoint<T>,
    e: &EigenData<T>,
    choice: W11Choice,
) -> Result<NormalFormData<T>, HopfError> {
    let lin = linearize(p)?;
    let lambda = Complex::new(T::zero(), hp.omega0);
    let tau = hp.tau0;
    let q = Segment::exponential(e.v, lambda, tau);
    let qb = q.conj();
    let f20 = quadratic_form(p, &q, &q);
    let f11 = quadratic_form(p, &q, &qb);
    let f02 = quadratic_form(p, &qb, &qb);
    let pn = conj_c(&e.w_tilde);
    let (g20, g11, g02) = (dot_c(&pn, &f20), dot_c(&pn, &f11), dot_c(&pn, &f02));

    // W₂₀(θ) = E₁e^{2iωθ} with Δ(2iω)E₁ = F₂₀ (the g₂₀, g₀₂ projections vanish).
    let two_l = lambda * T::lit(2.0);
    let delta2 = characteristic_matrix(&lin, p.alpha, tau, two_l);
    let e1 = match solve_complex(&delta2, &f20) {
        Ok(x) => [x[0], x[1], x[2]],
        Err(LinalgError::Singular { .. }) => return Err(HopfError::Resonance),
        Err(err) => return Err(err.into()),
    };
    let w20 = e1;
    let w20_closed_form = f20[0] / two_l;
    let w11 = match choice {
        W11Choice::Casimir => [casimir_w11(p, &e.v), czero(), czero()],
        W11Choice::Zero => [czero(); 3],
    };
    let w20_seg = Segment::exponential(w20, two_l, tau);
    let w11_seg = Segment { now: w11, delayed: w11 };
    let f21 = add_c(
        &add_c(&scale_c(c(T::lit(2.0)), &quadratic_form(p, &q, &w11_seg)), &quadratic_form(p, &qb, &w20_seg)),
        &cubic_form(p, &q, &q, &qb),
    );
    let g21 = dot_c(&pn, &f21);
    Ok(NormalFormData {
        f20,
        f11,
        f02,
        f21,
        w20,
        w11,
        w20_1: w20[0],
        w20_closed_form,
        w20_casimir: casimir_w20(p, &e.v),
        g20,
        g11,
        g02,
        g21,
        w11_choice: choice,
    })
}

/// The printed component formulas for `F₂₀¹, F₁₁¹, F₀₂¹` and `F₂₁`, with
/// `w₂₀¹(0) = F₂₀¹/(2λ₁)` and `w₁₁ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrintedNormalForm<T> {
    pub f20_1: Complex<T>,
    pub f11_1: Complex<T>,
    pub f02_1: Complex<T>,
    pub w20_1: Complex<T>,
    pub f21: CVec<T>,
    pub g21: Complex<T>,
}

pub fn printed_normal_form<T: Real>(p: &RigidBodyParams<T>, e: &EigenData<T>) -> PrintedNormalForm<T> {
    let [i1, i2, i3] = p.inertia;
    let (m, alpha, tau) = (p.m, p.alpha, e.tau0);
    let l1 = Complex::new(T::zero(), e.omega0);
    let (v2, v3) = (e.v[1], e.v[2]);
    let (ep, em) = ((l1 * tau).exp(), (-l1 * tau).exp());
    let am = alpha * m / i1;
    let f20_1 =
        v2 * v3 * (T::lit(2.0) * (i2 - i3) / i1) + (v2 * v2 * (i2 * (i1 - i2)) - v3 * v3 * (i3 * (i3 - i1))) * em * am;
    let f11_1 = v2 * (v3 + v3.conj()) * ((i2 - i3) / i1)
        + (v2 * v2 * (i2 * (i1 - i2)) - v3 * v3.conj() * (i3 * (i3 - i1))) * (ep + em) * am;
    let f02_1 = v2 * v3.conj() * (T::lit(2.0) * (i2 - i3) / i1)
        + (v2 * v2 * (i2 * (i1 - i2)) - v3.conj() * v3.conj() * (i3 * (i3 - i1))) * ep * am;
    let w20_1 = f20_1 / (l1 * T::lit(2.0));
    // with w₁₁ = 0 and w₂₀² = w₂₀³ = 0 the first component vanishes
    let f21_1 = czero();
    let two_am = T::lit(2.0) * alpha * m;
    let f21_2 = v3.conj() * w20_1 * ((i3 - i1) / i2) - v2 * w20_1 * ep * (two_am * i1 * (i1 - i2) / i2);
    let f21_3 = v2 * w20_1 * ((i1 - i2) / i3) - v3.conj() * w20_1 * ep * (two_am * i1 * (i1 - i3) / i3);
    let f21 = [f21_1, f21_2, f21_3];
    let g21 = dot_c(&conj_c(&e.w_tilde), &f21);
    PrintedNormalForm { f20_1, f11_1, f02_1, w20_1, f21, g21 }
}

// ---------------------------------------------------------------------------
// Taylor-coefficient oracle

/// Normal-form coefficients recovered from Cauchy integrals of the full
/// vector field on a torus `|z₁| = |z₂| = r`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorOracle<T> {
    pub f20: CVec<T>,
    pub f11: CVec<T>,
    pub g21: Complex<T>,
}

/// Complexified angular-velocity field `I⁻¹[M×Ω + αM×(M̃×Ω̃)]`, `M = IΩ`.
fn omega_field_c<T: Real>(p: &RigidBodyParams<T>, om: &CVec<T>, om_d: &CVec<T>) -> CVec<T> {
    let mm = inertia_mul(p, om);
    let md = inertia_mul(p, om_d);
    let free = cross_c(&mm, om);
    let damp = cross_c(&mm, &cross_c(&md, om_d));
    inertia_div(p, &add_c(&free, &scale_c(c(p.alpha), &damp)))
}

fn torus_coefficient<T: Real, F>(n: usize, r: T, (a, b): (i32, i32), f: F) -> CVec<T>
where
    F: Fn(Complex<T>, Complex<T>) -> CVec<T>,
{
    let mut acc = [czero(); 3];
    let two_pi = T::lit(2.0) * T::PI();
    for j in 0..n {
        let zj = Complex::from_polar(r, two_pi * T::from_usize_lossy(j) / T::from_usize_lossy(n));
        for k in 0..n {
            let zk = Complex::from_polar(r, two_pi * T::from_usize_lossy(k) / T::from_usize_lossy(n));
            let val = f(zj, zk);
            let weight = zj.powi(-a) * zk.powi(-b);
            for i in 0..3 {
                acc[i] = acc[i] + val[i] * weight;
            }
        }
    }
    let nn = T::from_usize_lossy(n * n);
    [acc[0] / nn, acc[1] / nn, acc[2] / nn]
}

/// Independent evaluation of `F₂₀`, `F₁₁` and `g₂₁`: the state
/// `z₁q + z₂q̄ + ½W₂₀z₁² + W₁₁z₁z₂ + ½W̄₂₀z₂²` is pushed through the full
/// complexified vector field and the required monomial coefficients are
/// extracted by a 16×16 discrete Fourier transform on the torus (exact for
/// the polynomial field up to roundoff). `W₂₀` is re-derived from the
/// extracted `F₂₀` by a fresh 3×3 solve.
pub fn taylor_oracle<T: Real>(
    p: &RigidBodyParams<T>,
    hp: &HopfPoint<T>,
    e: &EigenData<T>,
    choice: W11Choice,
) -> Result<TaylorOracle<T>, HopfError> {
    let lin = linearize(p)?;
    let n = 16;
    let r = T::lit(0.5);
    let lambda = Complex::new(T::zero(), hp.omega0);
    let tau = hp.tau0;
    let eq = equilibrium_c(p);
    let ed = (-lambda * tau).exp();
    let v = e.v;
    let vb = conj_c(&v);
    let field = |now: CVec<T>, del: CVec<T>| omega_field_c(p, &add_c(&eq, &now), &add_c(&eq, &del));

    let lin_part = |z1: Complex<T>, z2: Complex<T>| {
        let now = add_c(&scale_c(z1, &v), &scale_c(z2, &vb));
        let del = add_c(&scale_c(z1 * ed, &v), &scale_c(z2 * ed.conj(), &vb));
        (now, del)
    };
    let c20 = torus_coefficient(n, r, (2, 0), |z1, z2| {
        let (a, b) = lin_part(z1, z2);
        field(a, b)
    });
    let c11 = torus_coefficient(n, r, (1, 1), |z1, z2| {
        let (a, b) = lin_part(z1, z2);
        field(a, b)
    });
    let f20 = scale_c(c(T::lit(2.0)), &c20);

    let two_l = lambda * T::lit(2.0);
    let delta2 = characteristic_matrix(&lin, p.alpha, tau, two_l);
    let x = solve_complex(&delta2, &f20).map_err(|_| HopfError::Resonance)?;
    let w20 = [x[0], x[1], x[2]];
    let w20d = scale_c((-two_l * tau).exp(), &w20);
    let w11 = match choice {
        W11Choice::Casimir => {
            let [_, i2, i3] = p.inertia;
            let s = i2 * i2 * v[1].norm_sqr() + i3 * i3 * v[2].norm_sqr();
            [c(-s / (p.m * p.inertia[0])), czero(), czero()]
        }
        W11Choice::Zero => [czero(); 3],
    };
    let half = c(T::lit(0.5));
    let pn = conj_c(&e.w_tilde);
    let c21 = torus_coefficient(n, r, (2, 1), |z1, z2| {
        let (mut now, mut del) = lin_part(z1, z2);
        let quad_now = add_c(
            &add_c(&scale_c(half * z1 * z1, &w20), &scale_c(z1 * z2, &w11)),
            &scale_c(half * z2 * z2, &conj_c(&w20)),
        );
        let quad_del = add_c(
            &add_c(&scale_c(half * z1 * z1, &w20d), &scale_c(z1 * z2, &w11)),
            &scale_c(half * z2 * z2, &conj_c(&w20d)),
        );
        now = add_c(&now, &quad_now);
        del = add_c(&del, &quad_del);
        let f = field(now, del);
        [dot_c(&pn, &f), czero(), czero()]
    });
    Ok(TaylorOracle { f20, f11: c11, g21: c21[0] * T::lit(2.0) })
}

// ---------------------------------------------------------------------------
// Bifurcation quantities

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Supercritical,
    Subcritical,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitStability {
    Stable,
    Unstable,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfQuantities<T> {
    pub c1: Complex<T>,
    pub mu2: T,
    pub t2: T,
    pub beta2: T,
    pub direction: Direction,
    pub stability: OrbitStability,
}

/// `C₁ = g₂₁/2`, `μ₂ = −Re C₁/Re λ'`, `T₂ = −(Im C₁ + μ₂ Im λ')/ω₀`,
/// `β₂ = 2 Re C₁`.
pub fn hopf_quantities<T: Real>(g21: Complex<T>, trans: Complex<T>, omega0: T) -> Result<HopfQuantities<T>, HopfError> {
    if trans.re == T::zero() || !trans.re.is_finite() {
        return Err(HopfError::ZeroTransversality);
    }
    let c1 = g21 * T::lit(0.5);
    let mu2 = -c1.re / trans.re;
    let t2 = -(c1.im + mu2 * trans.im) / omega0;
    let beta2 = T::lit(2.0) * c1.re;
    let direction = if mu2 > T::zero() {
        Direction::Supercritical
    } else if mu2 < T::zero() {
        Direction::Subcritical
    } else {
        Direction::Degenerate
    };
    let stability = if beta2 < T::zero() {
        OrbitStability::Stable
    } else if beta2 > T::zero() {
        OrbitStability::Unstable
    } else {
        OrbitStability::Degenerate
    };
    Ok(HopfQuantities { c1, mu2, t2, beta2, direction, stability })
}

/// Leading-order period of the bifurcating orbit at delay `tau`:
/// `(2π/ω₀)(1 + T₂(τ − τ₀)/μ₂)`.
pub fn predicted_period<T: Real>(q: &HopfQuantities<T>, omega0: T, tau0: T, tau: T) -> T {
    T::lit(2.0) * T::PI() / omega0 * (T::one() + q.t2 * (tau - tau0) / q.mu2)
}

// ---------------------------------------------------------------------------
// Center-manifold trajectory

#[derive(Debug, Clone, PartialEq)]
pub struct CenterManifoldPath<T> {
    pub times: Vec<T>,
    pub u: Vec<Complex<T>>,
    /// Reconstructed angular velocity `Ω(t)`.
    pub omega: Vec<[T; 3]>,
}

/// State on the center manifold for amplitude `u`:
/// `Ω₁ + 2Re(u v) + Re(W₂₀u²) + W₁₁|u|²`.
pub fn center_manifold_state<T: Real>(
    p: &RigidBodyParams<T>,
    e: &EigenData<T>,
    nf: &NormalFormData<T>,
    u: Complex<T>,
) -> [T; 3] {
    let eq = [p.m / p.inertia[0], T::zero(), T::zero()];
    let two = T::lit(2.0);
    let mut out = eq;
    for i in 0..3 {
        out[i] = out[i] + two * (u * e.v[i]).re + (nf.w20[i] * u * u).re + nf.w11[i].re * u.norm_sqr();
    }
    out
}

/// Integrates `u̇ = iω₀u + ½g₂₁u²ū` (classical RK4, `substeps` per grid
/// interval) and reconstructs `Ω(t)` on the center manifold. The rotation
/// term only affects the phase; `|u|` obeys `d|u|²/dt = Re(g₂₁)|u|⁴`.
pub fn center_manifold_trajectory<T: Real>(
    p: &RigidBodyParams<T>,
    e: &EigenData<T>,
    nf: &NormalFormData<T>,
    u0: Complex<T>,
    t_grid: &[T],
    substeps: usize,
) -> Result<CenterManifoldPath<T>, HopfError> {
    if u0.norm() > T::lit(0.1) {
        return Err(HopfError::InvalidInput(format!("|u0| = {} exceeds 0.1", u0.norm())));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(HopfError::InvalidInput("time grid must be strictly increasing".into()));
    }
    let l1 = Complex::new(T::zero(), e.omega0);
    let half_g = nf.g21 * T::lit(0.5);
    let rhs = |u: Complex<T>| l1 * u + half_g * u * u * u.conj();
    let substeps = substeps.max(1);
    let mut u = u0;
    let mut us = Vec::with_capacity(t_grid.len());
    let mut omegas = Vec::with_capacity(t_grid.len());
    for (k, &t) in t_grid.iter().enumerate() {
        if k > 0 {
            let h = (t - t_grid[k - 1]) / T::from_usize_lossy(substeps);
            let half = T::lit(0.5);
            for _ in 0..substeps {
                let k1 = rhs(u);
                let k2 = rhs(u + k1 * (h * half));
                let k3 = rhs(u + k2 * (h * half));
                let k4 = rhs(u + k3 * h);
                u = u + (k1 + k2 * T::lit(2.0) + k3 * T::lit(2.0) + k4) * (h / T::lit(6.0));
            }
            if !(u.re.is_finite() && u.im.is_finite()) || u.norm() > T::lit(1e6) {
                return Err(HopfError::InvalidInput(format!("amplitude diverged at t = {t}")));
            }
        }
        us.push(u);
        omegas.push(center_manifold_state(p, e, nf, u));
    }
    Ok(CenterManifoldPath { times: t_grid.to_vec(), u: us, omega: omegas })
}

/// Full pipeline output at one Hopf point.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfAnalysis<T> {
    pub eigen: EigenData<T>,
    pub normal_form: NormalFormData<T>,
    pub quantities: HopfQuantities<T>,
}

/// Eigenvectors → normalization → cubic coefficients → quantities.
pub fn analyze_hopf<T: Real>(
    p: &RigidBodyParams<T>,
    hp: &HopfPoint<T>,
    trans: Complex<T>,
    choice: W11Choice,
) -> Result<HopfAnalysis<T>, HopfError> {
    let eigen = normalize_adjoint(p, &eigenvectors(p, hp)?)?;
    let normal_form = cubic_coefficients(p, hp, &eigen, choice)?;
    let quantities = hopf_quantities(normal_form.g21, trans, hp.omega0)?;
    Ok(HopfAnalysis { eigen, normal_form, quantities })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{coefficients, hopf_point, transversality, CoefficientVariant};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(m: f64) -> (RigidBodyParams<f64>, HopfPoint<f64>, Complex<f64>) {
        let p = RigidBodyParams::new([0.8, 0.5, 0.4], 0.3, 0.0, m);
        let co = coefficients(&p, CoefficientVariant::Determinant).unwrap();
        let hp = hopf_point(&co, p.m, p.alpha).unwrap();
        let tr = transversality(&co, &hp).unwrap();
        (p.with_tau(hp.tau0), hp, tr)
    }

    #[test]
    fn eigenvector_residuals_and_conjugation() {
        let (p, hp, _) = setup(1.5);
        let e = eigenvectors(&p, &hp).unwrap();
        assert!(e.v_residual <= 1e-10);
        assert!(e.w_residual <= 1e-10);
        assert!(!e.printed_w_valid);
        let lin = linearize(&p).unwrap();
        let l = Complex::new(0.0, hp.omega0);
        let dm = characteristic_matrix(&lin, p.alpha, hp.tau0, l.conj());
        let r = mat_vec_c(&dm, &conj_c(&e.v));
        assert!(norm_c(&r) <= 1e-10 * norm_c(&e.v));
    }

    #[test]
    fn normalization_identities() {
        let (p, hp, _) = setup(1.5);
        let e = normalize_adjoint(&p, &eigenvectors(&p, &hp).unwrap()).unwrap();
        let ctx = PairingContext::new(&p, hp.tau0).unwrap();
        let l = Complex::new(0.0, hp.omega0);
        let one = pairing(&ctx, &e.w_tilde, &e.v, l, l);
        let zero = pairing(&ctx, &e.w_tilde, &conj_c(&e.v), l, l.conj());
        assert!((one - 1.0).norm() <= 1e-10);
        assert!(zero.norm() <= 1e-10);
        // a true adjoint is biorthogonal to q̄, so the system is diagonal
        assert!(e.a12.norm() <= 1e-10 * e.a11.norm());
        assert!((e.b11 - 1.0 / e.a11.conj()).norm() <= 1e-12 * e.b11.norm());
    }

    #[test]
    fn pairing_reduces_without_delay_coupling() {
        let (p, hp, _) = setup(1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rv =
            || [Complex::new(0.0, 0.0), Complex::new(rng.gen(), rng.gen()), Complex::new(rng.gen(), rng.gen())];
        let (psi, phi) = (rv(), rv());
        let l1 = Complex::new(0.1, 1.3);
        let l2 = Complex::new(-0.2, 0.7);
        let plain = dot_c(&conj_c(&psi), &phi);
        let ctx0 = PairingContext { alpha: 0.0, ..PairingContext::new(&p, hp.tau0).unwrap() };
        assert_eq!(bilinear_form(&ctx0, &psi, &phi, l1, l2), plain);
        assert_eq!(pairing(&ctx0, &psi, &phi, l1, l2), plain);
        let ctxg =
            PairingContext { g: crate::linalg::Matrix::zeros(3, 3), ..PairingContext::new(&p, hp.tau0).unwrap() };
        assert_eq!(bilinear_form(&ctxg, &psi, &phi, l1, l2), plain);
    }

    #[test]
    fn bilinear_form_matches_quadrature() {
        let (p, _, _) = setup(1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let tau = rng.gen_range(0.2..2.0);
            let ctx = PairingContext::new(&p, tau).unwrap();
            let psi = [
                Complex::new(0.3, 0.1),
                Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Complex::new(1.0, -0.5),
            ];
            let phi = [Complex::new(-0.2, 0.4), Complex::new(0.5, 0.5), Complex::new(rng.gen_range(-1.0..1.0), 0.3)];
            let l1 = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0));
            // include a near-degenerate exponent sum
            let l2 = if trial % 5 == 0 {
                -l1.conj() + Complex::new(1e-8, -3e-9)
            } else {
                Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0))
            };
            let exact = bilinear_form(&ctx, &psi, &phi, l1, l2);
            let quad = bilinear_form_quadrature(&ctx, &psi, &phi, l1, l2, 4);
            let rel = (exact - quad).norm() / exact.norm();
            assert!(rel <= 1e-9, "trial {trial}: rel {rel:e}");
        }
    }

    #[test]
    fn normal_form_structure() {
        let (p, hp, _) = setup(1.5);
        let e = normalize_adjoint(&p, &eigenvectors(&p, &hp).unwrap()).unwrap();
        let nf = cubic_coefficients(&p, &hp, &e, W11Choice::Casimir).unwrap();
        for f in [nf.f20, nf.f11, nf.f02] {
            assert_eq!(f[1], Complex::new(0.0, 0.0));
            assert_eq!(f[2], Complex::new(0.0, 0.0));
        }
        assert!(nf.f11[0].norm() <= 1e-12 * nf.f20[0].norm().max(1.0));
        assert!((nf.w20[0] - nf.w20_closed_form).norm() <= 1e-10 * nf.w20[0].norm());
        assert!(nf.w20[1].norm() <= 1e-12 && nf.w20[2].norm() <= 1e-12);
        assert!((nf.w20_casimir - nf.w20_closed_form).norm() <= 1e-10 * nf.w20_casimir.norm());
        assert!(nf.g20.norm() + nf.g11.norm() + nf.g02.norm() <= 1e-12);
    }

    #[test]
    fn quadratic_and_cubic_forms_match_field_expansion() {
        // real directions: N(sX) = s²/2 B(X,X) + s³/6 C(X,X,X) for the polynomial field
        let (p, _, _) = setup(1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let mut r = || Complex::new(rng.gen_range(-1.0..1.0), 0.0);
            let x = Segment { now: [r(), r(), r()], delayed: [r(), r(), r()] };
            let eq = equilibrium_c(&p);
            let lin = linearize(&p).unwrap();
            let s = 0.37;
            let now = add_c(&eq, &scale_c(c(s), &x.now));
            let del = add_c(&eq, &scale_c(c(s), &x.delayed));
            let full = omega_field_c(&p, &now, &del);
            let linear =
                add_c(&real_matrix_mul(&lin.a, &x.now), &scale_c(c(p.alpha), &real_matrix_mul(&lin.g, &x.delayed)));
            let b = quadratic_form(&p, &x, &x);
            let cc = cubic_form(&p, &x, &x, &x);
            for i in 0..3 {
                let pred = linear[i] * s + b[i] * (s * s / 2.0) + cc[i] * (s * s * s / 6.0);
                assert!((full[i] - pred).norm() <= 1e-13, "{i}");
            }
        }
    }

    #[test]
    fn oracle_agrees_with_pipeline() {
        for m in [1.5, 1.8] {
            let (p, hp, _) = setup(m);
            let e = normalize_adjoint(&p, &eigenvectors(&p, &hp).unwrap()).unwrap();
            for choice in [W11Choice::Casimir, W11Choice::Zero] {
                let nf = cubic_coefficients(&p, &hp, &e, choice).unwrap();
                let or = taylor_oracle(&p, &hp, &e, choice).unwrap();
                assert!((or.g21 - nf.g21).norm() <= 1e-9 * nf.g21.norm());
                assert!((or.f20[0] - nf.f20[0]).norm() <= 1e-9 * nf.f20[0].norm());
                assert!(or.f11[0].norm() <= 1e-9 * nf.f20[0].norm());
            }
        }
    }

    #[test]
    fn set1_quantities() {
        let (p, hp, tr) = setup(1.5);
        let a = analyze_hopf(&p, &hp, tr, W11Choice::Casimir).unwrap();
        let g = a.normal_form.g21;
        assert!((g.re + 0.15635).abs() < 5e-5 && (g.im + 0.31811).abs() < 5e-5, "{g}");
        let q = a.quantities;
        assert!(q.mu2 > 0.0 && q.beta2 < 0.0);
        assert_eq!(q.beta2, 2.0 * q.c1.re);
        assert_eq!(q.direction, Direction::Supercritical);
        assert_eq!(q.stability, OrbitStability::Stable);
        let per = predicted_period(&q, hp.omega0, hp.tau0, 1.1 * hp.tau0);
        assert!((per - 3.243).abs() < 5e-3, "{per}");
    }

    #[test]
    fn quantities_identities() {
        let q = hopf_quantities(Complex::new(0.0, 0.4), Complex::new(1.0, -0.5), 2.0).unwrap();
        assert_eq!((q.mu2, q.beta2), (0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let g: Complex<f64> = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let t = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let q: HopfQuantities<f64> = hopf_quantities(g, t, 1.7).unwrap();
            assert_eq!(q.mu2.signum() * t.re.signum(), -q.c1.re.signum());
        }
        assert_eq!(
            hopf_quantities(Complex::new(1.0, 0.0), Complex::new(0.0, 1.0), 1.0),
            Err(HopfError::ZeroTransversality)
        );
    }

    #[test]
    fn amplitude_equation_behaviour() {
        let (p, hp, tr) = setup(1.5);
        let a = analyze_hopf(&p, &hp, tr, W11Choice::Casimir).unwrap();
        let grid: Vec<f64> = (0..=200).map(|k| k as f64 * 0.5).collect();
        let path =
            center_manifold_trajectory(&p, &a.eigen, &a.normal_form, Complex::new(0.05, 0.02), &grid, 20).unwrap();
        for w in path.u.windows(2) {
            assert!(w[1].norm() < w[0].norm());
        }
        let still = center_manifold_trajectory(&p, &a.eigen, &a.normal_form, Complex::new(0.0, 0.0), &grid, 4).unwrap();
        for om in &still.omega {
            assert_eq!(*om, [p.m / 0.8, 0.0, 0.0]);
        }
        // Casimir drift is at most K|u₀|³; the cubic terms in fact cancel,
        // so drift/|u₀|³ shrinks with u₀
        let mut drifts = Vec::new();
        for u0 in [0.01, 0.02, 0.04] {
            let path = center_manifold_trajectory(&p, &a.eigen, &a.normal_form, Complex::new(u0, 0.0), &grid[..20], 10)
                .unwrap();
            let d = path
                .omega
                .iter()
                .map(|om| {
                    let mm = [om[0] * 0.8, om[1] * 0.5, om[2] * 0.4];
                    ((mm[0] * mm[0] + mm[1] * mm[1] + mm[2] * mm[2]).sqrt() - p.m).abs()
                })
                .fold(0.0, f64::max);
            drifts.push(d / u0.powi(3));
        }
        assert!(drifts[0] < drifts[1] && drifts[1] < drifts[2], "{drifts:?}");
        assert!(drifts[2] < 1e-3, "{drifts:?}");
    }

    #[test]
    fn printed_variants_are_reported() {
        let (p, hp, _) = setup(1.5);
        let e = normalize_adjoint(&p, &eigenvectors(&p, &hp).unwrap()).unwrap();
        let pr = printed_normal_form(&p, &e);
        assert_eq!(pr.f21[0], Complex::new(0.0, 0.0));
        assert!((pr.w20_1 - pr.f20_1 / Complex::new(0.0, 2.0 * hp.omega0)).norm() < 1e-14);
        let (a11, _) = printed_a_coefficients(&p, &e, &e.printed_w);
        assert!(a11.is_finite());
        let n = printed_nonlinearity(&p, &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]);
        assert_eq!(n, [0.0; 3]);
    }
}
