//! Linear stability of the rigid-body equilibrium `Ω₁ = (m/I₁, 0, 0)`.
//!
//! In angular-velocity coordinates the linearization is
//! `δΩ̇ = A δΩ + αG δΩ̃`. The first row and column vanish (the Casimir
//! direction), and on the remaining 2×2 block
//!
//! ```text
//! det(λ − A₂ − αG₂e^{−τλ}) = λ² + aλe^{−τλ} + be^{−2τλ} + c
//! ```
//!
//! with `a, b, c > 0` when `I₁` is the largest moment. This sign pattern is
//! the one whose real and imaginary parts at `λ = iω` give the two-equation
//! crossing system used throughout, and whose implicit τ-derivative is the
//! transversality formula implemented in [`transversality`].

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::models::{rigid_body_delay_rhs, ModelError, RigidBodyParams};
use crate::scalar::Real;

/// Newton stopping tolerance on `|F|` (scaled by `max(1, |λ|²)`).
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
/// Residual accepted for a Hopf point.
pub const HOPF_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("m = 0: the equilibrium family degenerates")]
    ZeroMomentum,
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("negative discriminant a² − 4(b − c) = {0:e}")]
    NegativeDiscriminant(f64),
    #[error("no imaginary-axis crossing found for τ in [0, {tau_max}]")]
    NoCrossing { tau_max: f64, evidence: Vec<(f64, f64, f64)> },
    #[error("degenerate crossing: vanishing derivative of the characteristic function")]
    DegenerateCrossing,
    #[error("Newton iteration failed at τ = {tau} (last iterate {re} + {im}i, residual {residual:e})")]
    NewtonDivergence { tau: f64, re: f64, im: f64, residual: f64 },
    #[error("seed residual {0:e} exceeds 1e-8")]
    InvalidSeed(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `δΩ̇ = A δΩ + αG δΩ̃` at `Ω₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization<T> {
    pub a: Matrix<T>,
    /// Delayed part before multiplication by α.
    pub g: Matrix<T>,
}

impl<T: Real> Linearization<T> {
    pub fn lower_a(&self) -> [[T; 2]; 2] {
        [[self.a[(1, 1)], self.a[(1, 2)]], [self.a[(2, 1)], self.a[(2, 2)]]]
    }

    pub fn lower_g(&self) -> [[T; 2]; 2] {
        [[self.g[(1, 1)], self.g[(1, 2)]], [self.g[(2, 1)], self.g[(2, 2)]]]
    }
}

fn check_params<T: Real>(p: &RigidBodyParams<T>) -> Result<(), SpectralError> {
    p.validate()?;
    if p.m == T::zero() {
        return Err(SpectralError::ZeroMomentum);
    }
    if p.casimir_scaled {
        return Err(SpectralError::Hypothesis("analysis assumes the unscaled damping coefficient alpha".into()));
    }
    Ok(())
}

pub fn linearize<T: Real>(p: &RigidBodyParams<T>) -> Result<Linearization<T>, SpectralError> {
    check_params(p)?;
    let [i1, i2, i3] = p.inertia;
    let m = p.m;
    let mut a = Matrix::zeros(3, 3);
    a[(1, 2)] = (i3 - i1) * m / (i1 * i2);
    a[(2, 1)] = (i1 - i2) * m / (i1 * i3);
    let mut g = Matrix::zeros(3, 3);
    g[(1, 1)] = (i2 - i1) * m * m / (i1 * i2);
    g[(2, 2)] = (i3 - i1) * m * m / (i1 * i3);
    Ok(Linearization { a, g })
}

/// Angular-velocity form of the vector field: `Ω̇ = I⁻¹ f(IΩ, IΩ̃)`.
pub fn omega_rhs<T: Real>(omega: &[T; 3], omega_delayed: &[T; 3], p: &RigidBodyParams<T>) -> [T; 3] {
    let r = rigid_body_delay_rhs(&p.momentum(omega), &p.momentum(omega_delayed), p);
    p.omega(&r)
}

/// Central finite-difference Jacobians of [`omega_rhs`] at `(Ω₁, Ω₁)` with
/// respect to the current and delayed arguments: `(A, αG)`.
pub fn finite_difference_jacobians<T: Real>(p: &RigidBodyParams<T>, step: T) -> (Matrix<T>, Matrix<T>) {
    let eq = [p.m / p.inertia[0], T::zero(), T::zero()];
    let two = T::lit(2.0);
    let mut ja = Matrix::zeros(3, 3);
    let mut jg = Matrix::zeros(3, 3);
    for j in 0..3 {
        let mut plus = eq;
        let mut minus = eq;
        plus[j] = plus[j] + step;
        minus[j] = minus[j] - step;
        let fp = omega_rhs(&plus, &eq, p);
        let fm = omega_rhs(&minus, &eq, p);
        let gp = omega_rhs(&eq, &plus, p);
        let gm = omega_rhs(&eq, &minus, p);
        for i in 0..3 {
            ja[(i, j)] = (fp[i] - fm[i]) / (two * step);
            jg[(i, j)] = (gp[i] - gm[i]) / (two * step);
        }
    }
    (ja, jg)
}

/// Largest entrywise gap between the closed-form linearization and the
/// finite-difference Jacobians.
pub fn linearization_fd_error<T: Real>(p: &RigidBodyParams<T>, step: T) -> Result<T, SpectralError> {
    let lin = linearize(p)?;
    let (ja, jg) = finite_difference_jacobians(p, step);
    let mut err = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            err = err.max((lin.a[(i, j)] - ja[(i, j)]).abs());
            err = err.max((p.alpha * lin.g[(i, j)] - jg[(i, j)]).abs());
        }
    }
    Ok(err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientVariant {
    /// From the determinant of the linearization.
    Determinant,
    /// The printed closed form, whose `a` carries an extra factor `1/I₁`.
    Paper,
}

impl std::str::FromStr for CoefficientVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "determinant" => Ok(Self::Determinant),
            "paper" => Ok(Self::Paper),
            other => Err(format!("unknown variant `{other}` (expected determinant|paper)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCoefficients<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub variant: CoefficientVariant,
}

pub fn coefficients<T: Real>(
    p: &RigidBodyParams<T>,
    variant: CoefficientVariant,
) -> Result<SpectralCoefficients<T>, SpectralError> {
    let lin = linearize(p)?;
    let [[_, a23], [a32, _]] = lin.lower_a();
    let [[g22, _], [_, g33]] = lin.lower_g();
    let alpha = p.alpha;
    let a_det = -alpha * (g22 + g33);
    let b = alpha * alpha * g22 * g33;
    let c = -a23 * a32;
    let a = match variant {
        CoefficientVariant::Determinant => a_det,
        CoefficientVariant::Paper => a_det / p.inertia[0],
    };
    Ok(SpectralCoefficients { a, b, c, variant })
}

fn hypotheses<T: Real>(p: &RigidBodyParams<T>) -> Result<(), SpectralError> {
    check_params(p)?;
    let [i1, i2, i3] = p.inertia;
    if !(i1 > i2 && i1 > i3) {
        return Err(SpectralError::Hypothesis(format!("requires I1 > I2 and I1 > I3, got I = ({i1}, {i2}, {i3})")));
    }
    if p.alpha == T::zero() {
        return Err(SpectralError::Hypothesis("requires alpha != 0".into()));
    }
    Ok(())
}

/// `τ_c = I₁[I₃(I₁−I₂) + I₂(I₁−I₃)] / (3|α|m²(I₁−I₂)(I₁−I₃))`.
pub fn critical_delay<T: Real>(p: &RigidBodyParams<T>) -> Result<T, SpectralError> {
    hypotheses(p)?;
    let [i1, i2, i3] = p.inertia;
    let num = i1 * (i3 * (i1 - i2) + i2 * (i1 - i3));
    let den = T::lit(3.0) * p.alpha.abs() * p.m * p.m * (i1 - i2) * (i1 - i3);
    Ok(num / den)
}

/// `F(λ, τ) = λ² + aλe^{−τλ} + be^{−2τλ} + c`.
pub fn char_residual<T: Real>(lambda: Complex<T>, tau: T, co: &SpectralCoefficients<T>) -> Complex<T> {
    let e = (-lambda * tau).exp();
    lambda * lambda + lambda * e * co.a + e * e * co.b + co.c
}

/// The full cubic `λ·F(λ, τ)`, including the Casimir-direction factor.
pub fn char_residual_full<T: Real>(lambda: Complex<T>, tau: T, co: &SpectralCoefficients<T>) -> Complex<T> {
    lambda * char_residual(lambda, tau, co)
}

/// `(∂F/∂λ, ∂F/∂τ)`.
pub fn char_derivatives<T: Real>(lambda: Complex<T>, tau: T, co: &SpectralCoefficients<T>) -> (Complex<T>, Complex<T>) {
    let e = (-lambda * tau).exp();
    let two = T::lit(2.0);
    let one = Complex::new(T::one(), T::zero());
    let d_lambda = lambda * two + e * (one - lambda * tau) * co.a - e * e * (two * tau * co.b);
    let d_tau = -(lambda * lambda * e * co.a + lambda * e * e * (two * co.b));
    (d_lambda, d_tau)
}

/// Roots of `λ² + aλ + (b + c)`, the zero-delay characteristic polynomial.
pub fn tau_zero_roots<T: Real>(co: &SpectralCoefficients<T>) -> [Complex<T>; 2] {
    let disc = co.a * co.a - T::lit(4.0) * (co.b + co.c);
    let half = T::lit(0.5);
    if disc >= T::zero() {
        let s = disc.sqrt();
        [Complex::new(half * (-co.a + s), T::zero()), Complex::new(half * (-co.a - s), T::zero())]
    } else {
        let s = (-disc).sqrt();
        [Complex::new(-half * co.a, half * s), Complex::new(-half * co.a, -half * s)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopfBranch {
    /// `ω₀τ₀ = π/2`, `ω₀ = (a + √(a² − 4(b − c)))/2`.
    CaseI,
    /// `ω₀τ₀ = 3π/2`, `ω₀ = (−a + √(a² − 4(b − c)))/2`.
    CaseIi,
    /// Earliest delay at which `F(iω, τ) = 0` has a solution, found by
    /// scanning the crossing condition over `ω`.
    Scanned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopfPoint<T> {
    pub omega0: T,
    pub tau0: T,
    pub branch: HopfBranch,
    /// Branch prescribed by comparing `|m|` with `1/|α|`.
    pub prescribed: HopfBranch,
    /// Set when the prescribed branch failed validation and the point came
    /// from the crossing scan instead.
    pub fallback_note: Option<String>,
    pub residual: T,
}

/// `ω₀` and `τ₀` of one closed-form branch (not validated).
pub fn branch_formula<T: Real>(co: &SpectralCoefficients<T>, branch: HopfBranch) -> Result<(T, T), SpectralError> {
    let disc = co.a * co.a - T::lit(4.0) * (co.b - co.c);
    if disc < T::zero() {
        return Err(SpectralError::NegativeDiscriminant(disc.as_f64()));
    }
    let s = disc.sqrt();
    let half = T::lit(0.5);
    match branch {
        HopfBranch::CaseI => {
            let w = half * (co.a + s);
            Ok((w, T::FRAC_PI_2() / w))
        }
        HopfBranch::CaseIi => {
            let w = half * (-co.a + s);
            Ok((w, T::lit(3.0) * T::FRAC_PI_2() / w))
        }
        HopfBranch::Scanned => Err(SpectralError::Hypothesis("no closed form for the scanned branch".into())),
    }
}

/// Both equations of the crossing system at `(ω, τ)`:
/// `ω² − c − aω sin ωτ − b cos 2ωτ` and `aω cos ωτ − b sin 2ωτ`.
pub fn crossing_system<T: Real>(omega: T, tau: T, co: &SpectralCoefficients<T>) -> (T, T) {
    let wt = omega * tau;
    let two = T::lit(2.0);
    (
        omega * omega - co.c - co.a * omega * wt.sin() - co.b * (two * wt).cos(),
        co.a * omega * wt.cos() - co.b * (two * wt).sin(),
    )
}

fn validate_point<T: Real>(omega: T, tau: T, co: &SpectralCoefficients<T>) -> Option<T> {
    if !(omega > T::zero() && tau > T::zero() && omega.is_finite() && tau.is_finite()) {
        return None;
    }
    let r = char_residual(Complex::new(T::zero(), omega), tau, co).norm();
    let (e1, e2) = crossing_system(omega, tau, co);
    let tol = T::lit(HOPF_RESIDUAL_TOL);
    (r <= tol && e1.abs() <= tol && e2.abs() <= tol).then_some(r)
}

/// Hopf point with the branch chosen by `|m|` versus `1/|α|`, validated by
/// residual; falls back to the earliest crossing found by
/// [`crossing_candidates`] when the prescribed branch does not produce a
/// valid one.
pub fn hopf_point<T: Real>(co: &SpectralCoefficients<T>, m: T, alpha: T) -> Result<HopfPoint<T>, SpectralError> {
    let prescribed = if m.abs() * alpha.abs() < T::one() { HopfBranch::CaseI } else { HopfBranch::CaseIi };
    let reason = match branch_formula(co, prescribed) {
        Ok((w, t)) => match validate_point(w, t, co) {
            Some(residual) => {
                return Ok(HopfPoint {
                    omega0: w,
                    tau0: t,
                    branch: prescribed,
                    prescribed,
                    fallback_note: None,
                    residual,
                })
            }
            None => format!("prescribed branch gives omega0 = {w}, tau0 = {t}, which fails validation"),
        },
        Err(e) => format!("prescribed branch unavailable: {e}"),
    };
    let (w, t) = first_crossing(co, None)?;
    let residual = validate_point(w, t, co).ok_or(SpectralError::DegenerateCrossing)?;
    Ok(HopfPoint { omega0: w, tau0: t, branch: HopfBranch::Scanned, prescribed, fallback_note: Some(reason), residual })
}

/// `dλ/dτ` at `(iω₀, τ₀)` by implicit differentiation of `F`.
pub fn transversality<T: Real>(co: &SpectralCoefficients<T>, hp: &HopfPoint<T>) -> Result<Complex<T>, SpectralError> {
    let lambda = Complex::new(T::zero(), hp.omega0);
    let (fl, ft) = char_derivatives(lambda, hp.tau0, co);
    if fl.norm() <= T::epsilon() * T::lit(1e3) * (T::one() + ft.norm()) {
        return Err(SpectralError::DegenerateCrossing);
    }
    Ok(-ft / fl)
}

/// The printed closed form `ω₀(ω₀+a)(a−2b) / (τ₀(aω₀−2b)² + (ω₀+a)²)`.
pub fn transversality_closed_form<T: Real>(co: &SpectralCoefficients<T>, hp: &HopfPoint<T>) -> T {
    let w = hp.omega0;
    let two = T::lit(2.0);
    let q = co.a * w - two * co.b;
    w * (w + co.a) * (co.a - two * co.b) / (hp.tau0 * q * q + (w + co.a) * (w + co.a))
}

fn newton<T: Real>(co: &SpectralCoefficients<T>, mut lambda: Complex<T>, tau: T) -> Result<Complex<T>, SpectralError> {
    let tol = |l: Complex<T>| T::lit(NEWTON_TOL) * T::one().max(l.norm_sqr());
    for _ in 0..NEWTON_MAX_ITER {
        let f = char_residual(lambda, tau, co);
        if f.norm() <= tol(lambda) {
            return Ok(lambda);
        }
        let (fl, _) = char_derivatives(lambda, tau, co);
        lambda = lambda - f / fl;
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            break;
        }
    }
    let f = char_residual(lambda, tau, co);
    if f.norm() <= tol(lambda) {
        return Ok(lambda);
    }
    Err(SpectralError::NewtonDivergence {
        tau: tau.as_f64(),
        re: lambda.re.as_f64(),
        im: lambda.im.as_f64(),
        residual: f.norm().as_f64(),
    })
}

/// Continues a characteristic root from `tau_from` to `tau_to` over `steps`
/// equal increments, using an Euler predictor and Newton corrector.
pub fn track_root<T: Real>(
    co: &SpectralCoefficients<T>,
    lambda_seed: Complex<T>,
    tau_from: T,
    tau_to: T,
    steps: usize,
) -> Result<Vec<(T, Complex<T>)>, SpectralError> {
    let r0 = char_residual(lambda_seed, tau_from, co).norm();
    if !(r0 <= T::lit(1e-8)) {
        return Err(SpectralError::InvalidSeed(r0.as_f64()));
    }
    let steps = steps.max(1);
    let dtau = (tau_to - tau_from) / T::from_usize_lossy(steps);
    let mut lambda = newton(co, lambda_seed, tau_from)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((tau_from, lambda));
    for s in 1..=steps {
        let tau_prev = tau_from + dtau * T::from_usize_lossy(s - 1);
        let tau = if s == steps { tau_to } else { tau_from + dtau * T::from_usize_lossy(s) };
        let (fl, ft) = char_derivatives(lambda, tau_prev, co);
        let predictor = if fl.norm() > T::zero() { lambda - ft / fl * (tau - tau_prev) } else { lambda };
        lambda = newton(co, predictor, tau)?;
        out.push((tau, lambda));
    }
    Ok(out)
}

/// Refines `(ω, τ)` so that `F(iω, τ) = 0` by two-dimensional Newton.
fn refine_crossing<T: Real>(co: &SpectralCoefficients<T>, mut omega: T, mut tau: T) -> Result<(T, T), SpectralError> {
    for _ in 0..NEWTON_MAX_ITER {
        let lambda = Complex::new(T::zero(), omega);
        let f = char_residual(lambda, tau, co);
        if f.norm() <= T::lit(NEWTON_TOL) * T::one().max(omega * omega) {
            return Ok((omega, tau));
        }
        let (fl, ft) = char_derivatives(lambda, tau, co);
        // ∂F/∂ω = i ∂F/∂λ
        let fw = Complex::new(-fl.im, fl.re);
        let det = fw.re * ft.im - ft.re * fw.im;
        if det == T::zero() {
            return Err(SpectralError::DegenerateCrossing);
        }
        let dw = (f.re * ft.im - ft.re * f.im) / det;
        let dt = (fw.re * f.im - f.re * fw.im) / det;
        omega = omega - dw;
        tau = tau - dt;
    }
    let f = char_residual(Complex::new(T::zero(), omega), tau, co);
    Err(SpectralError::NewtonDivergence {
        tau: tau.as_f64(),
        re: T::zero().as_f64(),
        im: omega.as_f64(),
        residual: f.norm().as_f64(),
    })
}

/// Number of frequency samples in the crossing scan.
const SCAN_POINTS: usize = 4000;

/// Roots `E` of `bE² + aλE + (λ² + c) = 0` at `λ = iω`.
fn delay_factor_roots<T: Real>(omega: T, co: &SpectralCoefficients<T>) -> Vec<Complex<T>> {
    let lambda = Complex::new(T::zero(), omega);
    let q = lambda * lambda + co.c;
    let la = lambda * co.a;
    if co.b == T::zero() {
        return if la.norm() > T::zero() { vec![-q / la] } else { Vec::new() };
    }
    let disc = (la * la - q * co.b * T::lit(4.0)).sqrt();
    let two_b = co.b * T::lit(2.0);
    vec![(-la + disc) / two_b, (-la - disc) / two_b]
}

/// `∏(|E| − 1)` over the delay-factor roots; its sign changes bracket
/// crossing frequencies and it is insensitive to how the roots are labelled.
fn modulus_gap<T: Real>(omega: T, co: &SpectralCoefficients<T>) -> T {
    delay_factor_roots(omega, co).iter().fold(T::one(), |acc, e| acc * (e.norm() - T::one()))
}

/// Every solution `(ω, τ)` of `F(iω, τ) = 0` with `ω > 0`, taking the
/// smallest positive `τ` for each frequency, sorted by delay.
///
/// On the imaginary axis `F` is quadratic in `E = e^{−iωτ}`, so a crossing
/// frequency is one where a root `E` has unit modulus, and `τ` follows from
/// its argument. Frequencies are bounded by `|λ² + c| ≤ |a||λ| + |b|`.
pub fn crossing_candidates<T: Real>(co: &SpectralCoefficients<T>) -> Vec<(T, T)> {
    let (a, b, c) = (co.a.abs(), co.b.abs(), co.c.abs());
    let omega_max = T::lit(0.5) * (a + (a * a + T::lit(4.0) * (b + c)).sqrt()) * T::lit(1.01) + T::lit(1e-9);
    let dw = omega_max / T::from_usize_lossy(SCAN_POINTS);
    let mut out = Vec::new();
    let mut w0 = dw * T::lit(1e-3);
    let mut g0 = modulus_gap(w0, co);
    for k in 1..=SCAN_POINTS {
        let w1 = dw * T::from_usize_lossy(k);
        let g1 = modulus_gap(w1, co);
        if g0 == T::zero() || g0 * g1 < T::zero() {
            let (mut lo, mut hi, mut glo) = (w0, w1, g0);
            for _ in 0..200 {
                let mid = T::lit(0.5) * (lo + hi);
                let gm = modulus_gap(mid, co);
                if glo * gm <= T::zero() {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
                if hi - lo <= T::epsilon() * hi {
                    break;
                }
            }
            let omega = T::lit(0.5) * (lo + hi);
            if let Some(e) = delay_factor_roots(omega, co)
                .into_iter()
                .min_by(|x, y| (x.norm() - T::one()).abs().partial_cmp(&(y.norm() - T::one()).abs()).expect("finite"))
            {
                let phase = {
                    let r = (-e.arg()) % T::TAU();
                    if r < T::zero() {
                        r + T::TAU()
                    } else {
                        r
                    }
                };
                let tau = if phase > T::zero() { phase / omega } else { T::TAU() / omega };
                if let Ok((w, t)) = refine_crossing(co, omega, tau) {
                    if validate_point(w, t, co).is_some() {
                        out.push((w, t));
                    }
                }
            }
        }
        w0 = w1;
        g0 = g1;
    }
    out.sort_by(|x, y| x.1.partial_cmp(&y.1).expect("finite delays"));
    out.dedup_by(|x, y| (x.0 - y.0).abs() <= T::lit(1e-9) * y.0 && (x.1 - y.1).abs() <= T::lit(1e-9) * y.1);
    out
}

/// Path of the zero-delay root, continued until `tau_max` or until the
/// corrector fails (for instance where two real roots collide).
fn continuation_evidence<T: Real>(co: &SpectralCoefficients<T>, seed: Complex<T>, tau_max: T) -> Vec<(f64, f64, f64)> {
    let steps = 400;
    let dt = tau_max / T::from_usize_lossy(steps);
    let mut out = vec![(0.0, seed.re.as_f64(), seed.im.as_f64())];
    let mut lambda = seed;
    for s in 1..=steps {
        let t0 = dt * T::from_usize_lossy(s - 1);
        match track_root(co, lambda, t0, t0 + dt, 1) {
            Ok(path) => lambda = path[1].1,
            Err(_) => break,
        }
        if s % 20 == 0 {
            out.push(((t0 + dt).as_f64(), lambda.re.as_f64(), lambda.im.as_f64()));
        }
    }
    out
}

/// Earliest delay at which a characteristic root reaches the imaginary
/// axis, starting from an equilibrium that is stable at zero delay.
/// `tau_max` caps the search; it defaults to `40π/|λ(0)|`.
pub fn first_crossing<T: Real>(co: &SpectralCoefficients<T>, tau_max: Option<T>) -> Result<(T, T), SpectralError> {
    let roots = tau_zero_roots(co);
    let seed = if roots[0].im != T::zero() {
        if roots[0].im > T::zero() {
            roots[0]
        } else {
            roots[1]
        }
    } else if roots[0].re >= roots[1].re {
        roots[0]
    } else {
        roots[1]
    };
    if seed.re >= T::zero() {
        return Err(SpectralError::Hypothesis("equilibrium is not stable at zero delay".into()));
    }
    let scale = seed.norm().max(T::lit(1e-3));
    let tau_max = tau_max.unwrap_or(T::lit(40.0) * T::PI() / scale);
    match crossing_candidates(co).into_iter().next() {
        Some((w, t)) if t <= tau_max => Ok((w, t)),
        _ => Err(SpectralError::NoCrossing {
            tau_max: tau_max.as_f64(),
            evidence: continuation_evidence(co, seed, tau_max),
        }),
    }
}

/// Central-difference slope `dλ/dτ` of the root continued through `τ₀ ± δ`.
pub fn tracked_slope<T: Real>(
    co: &SpectralCoefficients<T>,
    hp: &HopfPoint<T>,
    delta: T,
) -> Result<Complex<T>, SpectralError> {
    let seed = Complex::new(T::zero(), hp.omega0);
    let up = track_root(co, seed, hp.tau0, hp.tau0 + delta, 1)?;
    let down = track_root(co, seed, hp.tau0, hp.tau0 - delta, 1)?;
    Ok((up[1].1 - down[1].1) / (T::lit(2.0) * delta))
}
