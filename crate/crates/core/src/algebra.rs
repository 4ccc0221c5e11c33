//! Finite-dimensional Lie algebras given by structure constants.
//!
//! Conventions:
//!
//! * `[e_a, e_b] = Σ_d C[d][a][b] e_d`.
//! * Algebra and coalgebra elements are coordinate vectors; the pairing
//!   `⟨μ, ξ⟩` is the dot product of coordinates.
//! * The coadjoint action is fixed by `⟨ad*_ξ μ, η⟩ = ⟨μ, [ξ, η]⟩`, i.e.
//!   `(ad*_ξ μ)_b = Σ_{a,d} C[d][a][b] ξ^a μ_d`. On so(3) this is
//!   `ad*_ξ μ = μ × ξ`, so the Lie–Poisson equation `μ̇ = ad*_{∂h/∂μ} μ`
//!   with `h = ½ M·I⁻¹M` reads `Ṁ = M × Ω`.
//! * `Γ : g* → g` is a symmetric positive-definite matrix; the Γ⁻¹ inner
//!   product on g is `⟨ξ, η⟩_{Γ⁻¹} = ⟨Γ⁻¹η, ξ⟩`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};
use crate::scalar::{dot, norm, Real};

/// Relative singular-value cutoff used when none is given.
pub const DEFAULT_ISOTROPY_TOL: f64 = 1e-9;

/// Tolerance (relative to the squared structure-constant scale) for the
/// Jacobi check performed at construction.
pub const JACOBI_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("structure constants are not antisymmetric at C[{d}][{a}][{b}] (residual {residual:e})")]
    NotAntisymmetric { d: usize, a: usize, b: usize, residual: f64 },
    #[error("Jacobi identity violated for (a,b,c,f) = ({a},{b},{c},{f}) (residual {residual:e})")]
    JacobiViolated { a: usize, b: usize, c: usize, f: usize, residual: f64 },
    #[error("gamma is not symmetric (max asymmetry {0:e})")]
    GammaNotSymmetric(f64),
    #[error("gamma is not positive definite (smallest eigenvalue {0:e})")]
    GammaNotPositiveDefinite(f64),
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),
    #[error("linear algebra failure: {0}")]
    Linalg(#[from] LinalgError),
    #[error("invalid algebra document: {0}")]
    Document(String),
}

/// Element of the Lie algebra g.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement<T>(pub Vec<T>);

/// Element of the dual g*.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalgebraElement<T>(pub Vec<T>);

macro_rules! element_impl {
    ($ty:ident) => {
        impl<T: Real> $ty<T> {
            pub fn new(coords: Vec<T>) -> Self {
                Self(coords)
            }

            pub fn zeros(n: usize) -> Self {
                Self(vec![T::zero(); n])
            }

            pub fn basis(n: usize, i: usize) -> Self {
                let mut v = vec![T::zero(); n];
                v[i] = T::one();
                Self(v)
            }

            pub fn coords(&self) -> &[T] {
                &self.0
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn norm(&self) -> T {
                norm(&self.0)
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|x| x.is_finite())
            }
        }

        impl<T> From<Vec<T>> for $ty<T> {
            fn from(v: Vec<T>) -> Self {
                Self(v)
            }
        }
    };
}

element_impl!(AlgebraElement);
element_impl!(CoalgebraElement);

pub type CasimirFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type CasimirGradient<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// Casimir function on g* together with its gradient.
#[derive(Clone)]
pub enum Casimir<T> {
    /// `C(μ) = ‖μ‖²`.
    NormSquared,
    /// `C(μ) = 1`.
    ConstantOne,
    Custom {
        name: String,
        value: CasimirFn<T>,
        gradient: CasimirGradient<T>,
    },
}

impl<T> fmt::Debug for Casimir<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Casimir::NormSquared => f.write_str("NormSquared"),
            Casimir::ConstantOne => f.write_str("ConstantOne"),
            Casimir::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl<T: Real> Casimir<T> {
    pub fn value(&self, mu: &[T]) -> T {
        match self {
            Casimir::NormSquared => dot(mu, mu),
            Casimir::ConstantOne => T::one(),
            Casimir::Custom { value, .. } => value(mu),
        }
    }

    pub fn gradient(&self, mu: &[T]) -> Vec<T> {
        match self {
            Casimir::NormSquared => mu.iter().map(|&x| T::lit(2.0) * x).collect(),
            Casimir::ConstantOne => vec![T::zero(); mu.len()],
            Casimir::Custom { gradient, .. } => gradient(mu),
        }
    }
}

/// Named Casimir choices accepted in algebra documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CasimirKind {
    NormSquared,
    ConstantOne,
}

/// JSON layout of an algebra specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraDocument {
    pub dimension: usize,
    /// Indexed `[d][a][b]`.
    pub structure_constants: Vec<Vec<Vec<f64>>>,
    pub gamma: Vec<Vec<f64>>,
    pub casimir: CasimirKind,
}

/// A validated finite-dimensional Lie algebra with metric data.
///
/// Immutable after construction; every operation is a pure function.
#[derive(Debug, Clone)]
pub struct AlgebraSpec<T> {
    dim: usize,
    constants: Vec<T>,
    gamma: Matrix<T>,
    gamma_inv: Matrix<T>,
    casimir: Casimir<T>,
}

impl<T: Real> AlgebraSpec<T> {
    /// Builds and validates a specification. `structure_constants` is the
    /// flattened `[d][a][b]` array of length `n³`.
    pub fn new(
        dimension: usize,
        structure_constants: Vec<T>,
        gamma: Matrix<T>,
        casimir: Casimir<T>,
    ) -> Result<Self, AlgebraError> {
        if dimension == 0 {
            return Err(AlgebraError::ZeroDimension);
        }
        let n = dimension;
        if structure_constants.len() != n * n * n {
            return Err(AlgebraError::DimensionMismatch { expected: n * n * n, got: structure_constants.len() });
        }
        if gamma.rows() != n || gamma.cols() != n {
            return Err(AlgebraError::DimensionMismatch { expected: n, got: gamma.rows() });
        }
        if !structure_constants.iter().all(|x| x.is_finite()) {
            return Err(AlgebraError::NonFinite("structure constants"));
        }
        if !gamma.all_finite() {
            return Err(AlgebraError::NonFinite("gamma"));
        }
        let scale = gamma.max_abs().max(T::one());
        let asym = gamma.asymmetry();
        if asym > T::lit(1e-12) * scale {
            return Err(AlgebraError::GammaNotSymmetric(asym.as_f64()));
        }
        let min_ev = gamma.symmetric_eigenvalues()?[0];
        if min_ev <= T::zero() {
            return Err(AlgebraError::GammaNotPositiveDefinite(min_ev.as_f64()));
        }
        let gamma_inv = gamma.inverse()?;
        let spec = Self { dim: n, constants: structure_constants, gamma, gamma_inv, casimir };
        spec.check_antisymmetry()?;
        spec.check_jacobi()?;
        Ok(spec)
    }

    /// so(3) ≅ (R³, ×) with the given Γ.
    pub fn so3(gamma: Matrix<T>, casimir: Casimir<T>) -> Result<Self, AlgebraError> {
        Self::new(3, so3_structure_constants(), gamma, casimir)
    }

    /// so(3) with Γ = identity and `C ≡ 1`.
    pub fn so3_standard() -> Self {
        Self::so3(Matrix::identity(3), Casimir::ConstantOne).expect("so(3) is a valid Lie algebra")
    }

    pub fn from_document(doc: &AlgebraDocument) -> Result<Self, AlgebraError> {
        let n = doc.dimension;
        if doc.structure_constants.len() != n {
            return Err(AlgebraError::Document(format!(
                "structure_constants has {} outer entries, expected {n}",
                doc.structure_constants.len()
            )));
        }
        let mut flat = Vec::with_capacity(n * n * n);
        for (d, plane) in doc.structure_constants.iter().enumerate() {
            if plane.len() != n || plane.iter().any(|row| row.len() != n) {
                return Err(AlgebraError::Document(format!("structure_constants[{d}] is not {n}x{n}")));
            }
            flat.extend(plane.iter().flatten().map(|&x| T::lit(x)));
        }
        let gamma_rows: Vec<Vec<T>> = doc.gamma.iter().map(|r| r.iter().map(|&x| T::lit(x)).collect()).collect();
        if gamma_rows.len() != n {
            return Err(AlgebraError::Document(format!("gamma has {} rows, expected {n}", gamma_rows.len())));
        }
        let gamma = Matrix::from_rows(&gamma_rows)?;
        let casimir = match doc.casimir {
            CasimirKind::NormSquared => Casimir::NormSquared,
            CasimirKind::ConstantOne => Casimir::ConstantOne,
        };
        Self::new(n, flat, gamma, casimir)
    }

    pub fn from_json(text: &str) -> Result<Self, AlgebraError> {
        let doc: AlgebraDocument = serde_json::from_str(text).map_err(|e| AlgebraError::Document(e.to_string()))?;
        Self::from_document(&doc)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn structure_constant(&self, d: usize, a: usize, b: usize) -> T {
        self.constants[(d * self.dim + a) * self.dim + b]
    }

    pub fn gamma(&self) -> &Matrix<T> {
        &self.gamma
    }

    pub fn gamma_inverse(&self) -> &Matrix<T> {
        &self.gamma_inv
    }

    pub fn casimir(&self) -> &Casimir<T> {
        &self.casimir
    }

    fn constant_scale(&self) -> T {
        self.constants.iter().fold(T::one(), |m, x| m.max(x.abs()))
    }

    fn check_antisymmetry(&self) -> Result<(), AlgebraError> {
        let n = self.dim;
        let tol = T::lit(1e-14) * self.constant_scale();
        for d in 0..n {
            for a in 0..n {
                for b in a..n {
                    let r = (self.structure_constant(d, a, b) + self.structure_constant(d, b, a)).abs();
                    if r > tol {
                        return Err(AlgebraError::NotAntisymmetric { d, a, b, residual: r.as_f64() });
                    }
                }
            }
        }
        Ok(())
    }

    /// Σ_e (C[e][a][b]C[f][e][c] + C[e][b][c]C[f][e][a] + C[e][c][a]C[f][e][b]).
    pub fn jacobi_residual(&self, a: usize, b: usize, c: usize, f: usize) -> T {
        (0..self.dim)
            .map(|e| {
                self.structure_constant(e, a, b) * self.structure_constant(f, e, c)
                    + self.structure_constant(e, b, c) * self.structure_constant(f, e, a)
                    + self.structure_constant(e, c, a) * self.structure_constant(f, e, b)
            })
            .sum()
    }

    fn check_jacobi(&self) -> Result<(), AlgebraError> {
        let n = self.dim;
        let s = self.constant_scale();
        let tol = T::lit(JACOBI_TOL) * s * s;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for f in 0..n {
                        let r = self.jacobi_residual(a, b, c, f).abs();
                        if r > tol {
                            return Err(AlgebraError::JacobiViolated { a, b, c, f, residual: r.as_f64() });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_dim(&self, got: usize) -> Result<(), AlgebraError> {
        if got != self.dim {
            Err(AlgebraError::DimensionMismatch { expected: self.dim, got })
        } else {
            Ok(())
        }
    }

    /// `[ξ, η]^d = Σ C[d][a][b] ξ^a η^b`.
    pub fn bracket(&self, xi: &AlgebraElement<T>, eta: &AlgebraElement<T>) -> Result<AlgebraElement<T>, AlgebraError> {
        self.check_dim(xi.dim())?;
        self.check_dim(eta.dim())?;
        Ok(AlgebraElement(self.bracket_coords(&xi.0, &eta.0)))
    }

    pub(crate) fn bracket_coords(&self, xi: &[T], eta: &[T]) -> Vec<T> {
        let n = self.dim;
        (0..n)
            .map(|d| {
                let mut s = T::zero();
                for a in 0..n {
                    if xi[a] == T::zero() {
                        continue;
                    }
                    for b in 0..n {
                        s = s + self.structure_constant(d, a, b) * xi[a] * eta[b];
                    }
                }
                s
            })
            .collect()
    }

    /// `ad*_ξ μ`, with `(ad*_ξ μ)_b = Σ_{a,d} C[d][a][b] ξ^a μ_d`.
    pub fn coadjoint(
        &self,
        xi: &AlgebraElement<T>,
        mu: &CoalgebraElement<T>,
    ) -> Result<CoalgebraElement<T>, AlgebraError> {
        self.check_dim(xi.dim())?;
        self.check_dim(mu.dim())?;
        Ok(CoalgebraElement(self.coadjoint_coords(&xi.0, &mu.0)))
    }

    pub(crate) fn coadjoint_coords(&self, xi: &[T], mu: &[T]) -> Vec<T> {
        let n = self.dim;
        (0..n)
            .map(|b| {
                let mut s = T::zero();
                for d in 0..n {
                    if mu[d] == T::zero() {
                        continue;
                    }
                    for a in 0..n {
                        s = s + self.structure_constant(d, a, b) * xi[a] * mu[d];
                    }
                }
                s
            })
            .collect()
    }

    /// `⟨μ, ξ⟩`.
    pub fn pairing(&self, mu: &CoalgebraElement<T>, xi: &AlgebraElement<T>) -> Result<T, AlgebraError> {
        self.check_dim(mu.dim())?;
        self.check_dim(xi.dim())?;
        Ok(dot(&mu.0, &xi.0))
    }

    /// `Γμ ∈ g`.
    pub fn gamma_apply(&self, mu: &CoalgebraElement<T>) -> Result<AlgebraElement<T>, AlgebraError> {
        self.check_dim(mu.dim())?;
        Ok(AlgebraElement(self.gamma.mul_vec(&mu.0)))
    }

    /// `⟨ξ, η⟩_{Γ⁻¹} = ⟨Γ⁻¹η, ξ⟩`.
    pub fn gamma_inverse_inner(&self, xi: &AlgebraElement<T>, eta: &AlgebraElement<T>) -> Result<T, AlgebraError> {
        self.check_dim(xi.dim())?;
        self.check_dim(eta.dim())?;
        Ok(self.gamma_inverse_inner_coords(&xi.0, &eta.0))
    }

    pub(crate) fn gamma_inverse_inner_coords(&self, xi: &[T], eta: &[T]) -> T {
        dot(&self.gamma_inv.mul_vec(eta), xi)
    }

    /// Matrix of the linear map `ξ ↦ ad*_ξ μ` (column `a` is `ad*_{e_a} μ`).
    pub fn coadjoint_matrix(&self, mu: &[T]) -> Matrix<T> {
        let n = self.dim;
        Matrix::from_fn(n, n, |b, a| (0..n).map(|d| self.structure_constant(d, a, b) * mu[d]).sum())
    }

    /// Γ⁻¹-orthonormal basis of the isotropy subalgebra
    /// `g_μ = {ξ : ad*_ξ μ = 0}`. Singular values at or below
    /// `tol · σ_max` count as zero.
    pub fn isotropy_basis(&self, mu: &CoalgebraElement<T>, tol: T) -> Result<Vec<AlgebraElement<T>>, AlgebraError> {
        self.check_dim(mu.dim())?;
        if !mu.is_finite() {
            return Err(AlgebraError::NonFinite("coalgebra element"));
        }
        let k = self.coadjoint_matrix(&mu.0);
        let (sv, v) = k.svd_right()?;
        let smax = sv.iter().fold(T::zero(), |m, &s| m.max(s));
        let cutoff = tol * smax;
        let raw: Vec<Vec<T>> = sv
            .iter()
            .enumerate()
            .filter(|(_, &s)| smax == T::zero() || s <= cutoff)
            .map(|(j, _)| v.column(j))
            .collect();
        Ok(self.orthonormalize(raw).into_iter().map(AlgebraElement).collect())
    }

    /// Modified Gram–Schmidt in the Γ⁻¹ inner product.
    fn orthonormalize(&self, vectors: Vec<Vec<T>>) -> Vec<Vec<T>> {
        let mut out: Vec<Vec<T>> = Vec::with_capacity(vectors.len());
        for mut v in vectors {
            for q in &out {
                let p = self.gamma_inverse_inner_coords(&v, q);
                for (vi, &qi) in v.iter_mut().zip(q) {
                    *vi = *vi - p * qi;
                }
            }
            let nn = self.gamma_inverse_inner_coords(&v, &v).sqrt();
            if nn > T::epsilon() * T::lit(1e3) {
                out.push(v.into_iter().map(|x| x / nn).collect());
            }
        }
        out
    }

    /// Component `ξ^μ` of ξ in the Γ⁻¹-orthogonal complement of `g_μ`.
    pub fn project_complement(
        &self,
        xi: &AlgebraElement<T>,
        mu: &CoalgebraElement<T>,
    ) -> Result<AlgebraElement<T>, AlgebraError> {
        self.project_complement_with_tol(xi, mu, T::lit(DEFAULT_ISOTROPY_TOL))
    }

    pub fn project_complement_with_tol(
        &self,
        xi: &AlgebraElement<T>,
        mu: &CoalgebraElement<T>,
        tol: T,
    ) -> Result<AlgebraElement<T>, AlgebraError> {
        self.check_dim(xi.dim())?;
        let basis = self.isotropy_basis(mu, tol)?;
        let mut out = xi.0.clone();
        for b in &basis {
            let p = self.gamma_inverse_inner_coords(&xi.0, &b.0);
            for (o, &bi) in out.iter_mut().zip(&b.0) {
                *o = *o - p * bi;
            }
        }
        Ok(AlgebraElement(out))
    }
}

/// Flattened `[d][a][b]` constants of so(3): `C[d][a][b] = ε_{abd}`.
pub fn so3_structure_constants<T: Real>() -> Vec<T> {
    let mut c = vec![T::zero(); 27];
    for (a, b, d, s) in
        [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0), (1, 0, 2, -1.0), (2, 1, 0, -1.0), (0, 2, 1, -1.0)]
    {
        c[(d * 3 + a) * 3 + b] = T::lit(s);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cross;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Flat index of `C[d][a][b]` for so(3).
    fn idx(d: usize, a: usize, b: usize) -> usize {
        d * 9 + a * 3 + b
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn so3_bracket_is_cross_product_on_basis() {
        let g = AlgebraSpec::<f64>::so3_standard();
        for a in 0..3 {
            for b in 0..3 {
                let ea = AlgebraElement::basis(3, a);
                let eb = AlgebraElement::basis(3, b);
                let br = g.bracket(&ea, &eb).unwrap();
                let mut x = [0.0; 3];
                let mut y = [0.0; 3];
                x[a] = 1.0;
                y[b] = 1.0;
                assert_eq!(br.0, cross(&x, &y).to_vec());
            }
        }
        let e1 = AlgebraElement::basis(3, 0);
        let e2 = AlgebraElement::basis(3, 1);
        assert_eq!(g.bracket(&e1, &e2).unwrap().0, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn so3_coadjoint_is_mu_cross_xi() {
        let g = AlgebraSpec::<f64>::so3_standard();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let xi = rand_vec(&mut rng, 3);
            let mu = rand_vec(&mut rng, 3);
            let r = g.coadjoint(&AlgebraElement(xi.clone()), &CoalgebraElement(mu.clone())).unwrap();
            let expect = cross(&[mu[0], mu[1], mu[2]], &[xi[0], xi[1], xi[2]]);
            for i in 0..3 {
                assert!((r.0[i] - expect[i]).abs() < 1e-15);
            }
            // ⟨result, e_j⟩ = μ·(ξ × e_j)
            for j in 0..3 {
                let mut e = [0.0; 3];
                e[j] = 1.0;
                let rhs = crate::scalar::dot3(&[mu[0], mu[1], mu[2]], &cross(&[xi[0], xi[1], xi[2]], &e));
                assert!((r.0[j] - rhs).abs() < 1e-15);
            }
        }
        let zero = g.coadjoint(&AlgebraElement(vec![1.0, 2.0, 3.0]), &CoalgebraElement::zeros(3)).unwrap();
        assert_eq!(zero.0, vec![0.0; 3]);
    }

    #[test]
    fn bracket_with_self_vanishes() {
        let g = AlgebraSpec::<f64>::so3_standard();
        let xi = AlgebraElement(vec![0.3, -1.2, 2.5]);
        assert!(g.bracket(&xi, &xi).unwrap().0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = AlgebraSpec::<f64>::so3_standard();
        let err = g.bracket(&AlgebraElement(vec![1.0, 0.0]), &AlgebraElement(vec![0.0, 1.0, 0.0]));
        assert!(matches!(err, Err(AlgebraError::DimensionMismatch { expected: 3, got: 2 })));
    }

    #[test]
    fn gamma_inverse_inner_hand_values() {
        let g = AlgebraSpec::<f64>::so3(Matrix::diagonal(&[2.0, 1.0, 1.0]), Casimir::ConstantOne).unwrap();
        let e1 = AlgebraElement::basis(3, 0);
        assert!((g.gamma_inverse_inner(&e1, &e1).unwrap() - 0.5).abs() < 1e-15);
        let id = AlgebraSpec::<f64>::so3_standard();
        let x = AlgebraElement(vec![1.0, 2.0, 3.0]);
        let y = AlgebraElement(vec![-1.0, 0.5, 2.0]);
        assert!((id.gamma_inverse_inner(&x, &y).unwrap() - 6.0).abs() < 1e-15);
    }

    #[test]
    fn isotropy_of_axis_and_zero() {
        let g = AlgebraSpec::<f64>::so3_standard();
        let mu = CoalgebraElement(vec![0.0, 0.0, 5.0]);
        let basis = g.isotropy_basis(&mu, 1e-9).unwrap();
        assert_eq!(basis.len(), 1);
        assert!((basis[0].0[2].abs() - 1.0).abs() < 1e-14);
        for b in &basis {
            assert!(g.coadjoint(b, &mu).unwrap().norm() <= 1e-9 * mu.norm());
        }
        assert_eq!(g.isotropy_basis(&CoalgebraElement::zeros(3), 1e-9).unwrap().len(), 3);
    }

    #[test]
    fn projection_hand_values() {
        let g = AlgebraSpec::<f64>::so3_standard();
        let p =
            g.project_complement(&AlgebraElement(vec![1.0, 1.0, 1.0]), &CoalgebraElement(vec![0.0, 0.0, 1.0])).unwrap();
        for (x, e) in p.0.iter().zip([1.0, 1.0, 0.0]) {
            assert!((x - e).abs() < 1e-14);
        }
        let zero = g.project_complement(&AlgebraElement(vec![1.0, -2.0, 3.0]), &CoalgebraElement::zeros(3)).unwrap();
        assert!(zero.norm() < 1e-14);
        let inside =
            g.project_complement(&AlgebraElement(vec![0.0, 0.0, 4.0]), &CoalgebraElement(vec![0.0, 0.0, 1.0])).unwrap();
        assert!(inside.norm() < 1e-14);
    }

    #[test]
    fn complement_is_gamma_orthogonal_to_isotropy() {
        let gamma = Matrix::from_rows(&[vec![2.0, 0.3, 0.1], vec![0.3, 1.5, -0.2], vec![0.1, -0.2, 1.0]]).unwrap();
        let g = AlgebraSpec::<f64>::so3(gamma, Casimir::NormSquared).unwrap();
        let mu = CoalgebraElement(vec![0.4, -0.7, 1.1]);
        let xi = AlgebraElement(vec![1.0, 0.5, -0.25]);
        let p = g.project_complement(&xi, &mu).unwrap();
        for b in g.isotropy_basis(&mu, 1e-9).unwrap() {
            assert!(g.gamma_inverse_inner(&p, &b).unwrap().abs() < 1e-13);
            assert!((g.gamma_inverse_inner(&b, &b).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut c = so3_structure_constants::<f64>();
        // antisymmetric perturbation of [e1,e2] keeps skew-symmetry but breaks Jacobi
        c[idx(0, 0, 1)] += 0.1;
        c[idx(0, 1, 0)] -= 0.1;
        let err = AlgebraSpec::new(3, c, Matrix::identity(3), Casimir::ConstantOne).unwrap_err();
        assert!(matches!(err, AlgebraError::JacobiViolated { .. }));

        let mut c = so3_structure_constants::<f64>();
        c[idx(2, 0, 1)] = 2.0;
        let err = AlgebraSpec::new(3, c, Matrix::identity(3), Casimir::ConstantOne).unwrap_err();
        assert!(matches!(err, AlgebraError::NotAntisymmetric { .. }));

        let bad = Matrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![2.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(AlgebraSpec::so3(bad, Casimir::ConstantOne), Err(AlgebraError::GammaNotPositiveDefinite(_))));
        let skew = Matrix::from_rows(&[vec![1.0, 0.5, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(AlgebraSpec::so3(skew, Casimir::ConstantOne), Err(AlgebraError::GammaNotSymmetric(_))));
    }

    #[test]
    fn json_document_roundtrip() {
        let text = r#"{
            "dimension": 3,
            "structure_constants": [
                [[0,0,0],[0,0,1],[0,-1,0]],
                [[0,0,-1],[0,0,0],[1,0,0]],
                [[0,1,0],[-1,0,0],[0,0,0]]
            ],
            "gamma": [[1,0,0],[0,1,0],[0,0,1]],
            "casimir": "norm_squared"
        }"#;
        let g = AlgebraSpec::<f64>::from_json(text).unwrap();
        let std = AlgebraSpec::<f64>::so3_standard();
        for d in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    assert_eq!(g.structure_constant(d, a, b), std.structure_constant(d, a, b));
                }
            }
        }
        assert_eq!(g.casimir().value(&[1.0, 2.0, 2.0]), 9.0);
        assert!(AlgebraSpec::<f64>::from_json(r#"{"dimension": 2}"#).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let g = AlgebraSpec::<f32>::so3_standard();
        let r = g.bracket(&AlgebraElement::basis(3, 1), &AlgebraElement::basis(3, 2)).unwrap();
        assert_eq!(r.0, vec![1.0f32, 0.0, 0.0]);
    }
}
