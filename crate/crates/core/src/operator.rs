//! Finite-dimensional linear maps and positive semi-definite operators.
//!
//! Every space is `R^n` with the Euclidean inner product. A [`LinearMap`] is a
//! small expression tree (dense, diagonal, scaled identity, sums, compositions
//! and adjoints) so that structured operators such as `tau I - rho A^T A` can
//! be applied without forming the dense product.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// Default iteration budget for power-iteration norm estimates.
pub const POWER_ITERATIONS: usize = 50;
/// Default relative stopping tolerance for power iteration.
pub const POWER_TOL: f64 = 1e-8;
/// Relative margin required by [`PsdMap::linearizing`].
pub const LINEARIZE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum LinearMap<T: Scalar> {
    Dense(DMatrix<T>),
    Diagonal(DVector<T>),
    ScaledIdentity {
        dim: usize,
        scale: T,
    },
    Zero {
        rows: usize,
        cols: usize,
    },
    Sum(Box<LinearMap<T>>, Box<LinearMap<T>>),
    /// `outer ∘ inner`, i.e. `v ↦ outer(inner(v))`.
    Compose {
        outer: Box<LinearMap<T>>,
        inner: Box<LinearMap<T>>,
    },
    Adjoint(Box<LinearMap<T>>),
    Scaled(T, Box<LinearMap<T>>),
}

impl<T: Scalar> LinearMap<T> {
    pub fn dense(m: DMatrix<T>) -> Self {
        LinearMap::Dense(m)
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[T]) -> Result<Self> {
        check_dim("dense map data", rows * cols, data.len())?;
        Ok(LinearMap::Dense(DMatrix::from_row_slice(rows, cols, data)))
    }

    pub fn identity(dim: usize) -> Self {
        LinearMap::ScaledIdentity {
            dim,
            scale: T::one(),
        }
    }

    pub fn scaled_identity(dim: usize, scale: T) -> Self {
        LinearMap::ScaledIdentity { dim, scale }
    }

    pub fn diagonal(values: DVector<T>) -> Self {
        LinearMap::Diagonal(values)
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        LinearMap::Zero { rows, cols }
    }

    pub fn sum(a: LinearMap<T>, b: LinearMap<T>) -> Result<Self> {
        check_dim("sum rows", a.rows(), b.rows())?;
        check_dim("sum cols", a.cols(), b.cols())?;
        Ok(LinearMap::Sum(Box::new(a), Box::new(b)))
    }

    /// `outer ∘ inner`; requires `outer.cols() == inner.rows()`.
    pub fn compose(outer: LinearMap<T>, inner: LinearMap<T>) -> Result<Self> {
        check_dim("composition", outer.cols(), inner.rows())?;
        Ok(LinearMap::Compose {
            outer: Box::new(outer),
            inner: Box::new(inner),
        })
    }

    pub fn adjoint(self) -> Self {
        LinearMap::Adjoint(Box::new(self))
    }

    pub fn scaled(self, s: T) -> Self {
        LinearMap::Scaled(s, Box::new(self))
    }

    /// `A^T A` as a lazily evaluated composition.
    pub fn gram(&self) -> Self {
        LinearMap::Compose {
            outer: Box::new(LinearMap::Adjoint(Box::new(self.clone()))),
            inner: Box::new(self.clone()),
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            LinearMap::Dense(m) => m.nrows(),
            LinearMap::Diagonal(d) => d.len(),
            LinearMap::ScaledIdentity { dim, .. } => *dim,
            LinearMap::Zero { rows, .. } => *rows,
            LinearMap::Sum(a, _) => a.rows(),
            LinearMap::Compose { outer, .. } => outer.rows(),
            LinearMap::Adjoint(a) => a.cols(),
            LinearMap::Scaled(_, a) => a.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            LinearMap::Dense(m) => m.ncols(),
            LinearMap::Diagonal(d) => d.len(),
            LinearMap::ScaledIdentity { dim, .. } => *dim,
            LinearMap::Zero { cols, .. } => *cols,
            LinearMap::Sum(a, _) => a.cols(),
            LinearMap::Compose { inner, .. } => inner.cols(),
            LinearMap::Adjoint(a) => a.rows(),
            LinearMap::Scaled(_, a) => a.cols(),
        }
    }

    pub fn apply(&self, v: &DVector<T>) -> Result<DVector<T>> {
        check_dim("apply", self.cols(), v.len())?;
        Ok(self.apply_unchecked(v))
    }

    pub fn adjoint_apply(&self, w: &DVector<T>) -> Result<DVector<T>> {
        check_dim("adjoint_apply", self.rows(), w.len())?;
        Ok(self.adjoint_apply_unchecked(w))
    }

    pub(crate) fn apply_unchecked(&self, v: &DVector<T>) -> DVector<T> {
        match self {
            LinearMap::Dense(m) => m * v,
            LinearMap::Diagonal(d) => d.component_mul(v),
            LinearMap::ScaledIdentity { scale, .. } => v * *scale,
            LinearMap::Zero { rows, .. } => DVector::zeros(*rows),
            LinearMap::Sum(a, b) => a.apply_unchecked(v) + b.apply_unchecked(v),
            LinearMap::Compose { outer, inner } => outer.apply_unchecked(&inner.apply_unchecked(v)),
            LinearMap::Adjoint(a) => a.adjoint_apply_unchecked(v),
            LinearMap::Scaled(s, a) => a.apply_unchecked(v) * *s,
        }
    }

    pub(crate) fn adjoint_apply_unchecked(&self, w: &DVector<T>) -> DVector<T> {
        match self {
            LinearMap::Dense(m) => m.tr_mul(w),
            LinearMap::Diagonal(d) => d.component_mul(w),
            LinearMap::ScaledIdentity { scale, .. } => w * *scale,
            LinearMap::Zero { cols, .. } => DVector::zeros(*cols),
            LinearMap::Sum(a, b) => a.adjoint_apply_unchecked(w) + b.adjoint_apply_unchecked(w),
            LinearMap::Compose { outer, inner } => {
                inner.adjoint_apply_unchecked(&outer.adjoint_apply_unchecked(w))
            }
            LinearMap::Adjoint(a) => a.apply_unchecked(w),
            LinearMap::Scaled(s, a) => a.adjoint_apply_unchecked(w) * *s,
        }
    }

    /// Materializes the map as a dense matrix.
    pub fn to_dense(&self) -> DMatrix<T> {
        match self {
            LinearMap::Dense(m) => m.clone(),
            LinearMap::Diagonal(d) => DMatrix::from_diagonal(d),
            LinearMap::ScaledIdentity { dim, scale } => DMatrix::identity(*dim, *dim) * *scale,
            LinearMap::Zero { rows, cols } => DMatrix::zeros(*rows, *cols),
            LinearMap::Sum(a, b) => a.to_dense() + b.to_dense(),
            LinearMap::Compose { outer, inner } => outer.to_dense() * inner.to_dense(),
            LinearMap::Adjoint(a) => a.to_dense().transpose(),
            LinearMap::Scaled(s, a) => a.to_dense() * *s,
        }
    }

    /// Returns `Some(s)` when the map is structurally `s·I`.
    pub fn as_scaled_identity(&self) -> Option<T> {
        match self {
            LinearMap::ScaledIdentity { scale, .. } => Some(*scale),
            LinearMap::Zero { rows, cols } if rows == cols => Some(T::zero()),
            LinearMap::Scaled(s, a) => a.as_scaled_identity().map(|t| t * *s),
            LinearMap::Adjoint(a) => a.as_scaled_identity(),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LinearMap::Zero { .. } => true,
            LinearMap::ScaledIdentity { scale, .. } => *scale == T::zero(),
            LinearMap::Diagonal(d) => d.iter().all(|v| *v == T::zero()),
            LinearMap::Scaled(s, a) => *s == T::zero() || a.is_zero(),
            LinearMap::Adjoint(a) => a.is_zero(),
            _ => false,
        }
    }

    /// Operator norm estimate by power iteration on `A^T A`.
    ///
    /// Power iteration approaches the norm from below. Use [`Self::norm_exact`]
    /// where an underestimate would break an inequality.
    pub fn norm_estimate(&self, max_iter: usize, tol: T) -> T {
        let n = self.cols();
        if n == 0 || self.rows() == 0 || self.is_zero() {
            return T::zero();
        }
        if let Some(s) = self.as_scaled_identity() {
            return s.abs();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0fa0);
        let mut v = DVector::<T>::from_fn(n, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::lit(z)
        });
        let nv = v.norm();
        if nv == T::zero() {
            return T::zero();
        }
        v /= nv;
        let mut sigma = T::zero();
        for _ in 0..max_iter {
            let w = self.adjoint_apply_unchecked(&self.apply_unchecked(&v));
            let lam = w.norm();
            if lam == T::zero() {
                return T::zero();
            }
            let next = lam.sqrt();
            v = w / lam;
            let done = (next - sigma).abs() <= tol * next;
            sigma = next;
            if done {
                break;
            }
        }
        sigma
    }

    pub fn norm(&self) -> T {
        self.norm_estimate(POWER_ITERATIONS, T::lit(POWER_TOL))
    }

    /// Spectral norm from a dense singular value decomposition.
    pub fn norm_exact(&self) -> T {
        if self.rows() == 0 || self.cols() == 0 || self.is_zero() {
            return T::zero();
        }
        if let Some(s) = self.as_scaled_identity() {
            return s.abs();
        }
        if let LinearMap::Diagonal(d) = self {
            return d.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        }
        let sv = self.to_dense().singular_values();
        sv.iter().fold(T::zero(), |m, v| m.max(*v))
    }

    /// Smallest singular value (dense SVD); used for coercivity margins.
    pub fn min_singular_value(&self) -> T {
        let sv = self.to_dense().singular_values();
        sv.iter().fold(T::infinity(), |m, v| m.min(*v))
    }
}

/// How a [`PsdMap`] was shown to be positive semi-definite.
#[derive(Debug, Clone, PartialEq)]
pub enum PsdCertificate<T: Scalar> {
    Zero,
    /// `s·I` with `s >= 0`.
    ScaledIdentity(T),
    /// Diagonal with nonnegative entries.
    Diagonal,
    /// `M^T M` for some map `M`.
    Gram,
    /// `tau I - rho M^T M` with `tau >= rho ||M||^2 (1 + margin)`.
    Linearizing {
        tau: T,
        rho: T,
        norm_sq: T,
    },
    Sum,
    /// `s·P` with `s >= 0` and `P` certified.
    Scaled,
}

/// A self-adjoint positive semi-definite operator together with the rule
/// that certifies it.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMap<T: Scalar> {
    map: LinearMap<T>,
    certificate: PsdCertificate<T>,
}

impl<T: Scalar> PsdMap<T> {
    pub fn zero(dim: usize) -> Self {
        PsdMap {
            map: LinearMap::zero(dim, dim),
            certificate: PsdCertificate::Zero,
        }
    }

    pub fn scaled_identity(dim: usize, scale: T) -> Result<Self> {
        if scale < T::zero() {
            return Err(Error::NotPsd(format!("scaled identity with scale {scale}")));
        }
        Ok(PsdMap {
            map: LinearMap::scaled_identity(dim, scale),
            certificate: PsdCertificate::ScaledIdentity(scale),
        })
    }

    pub fn diagonal(values: DVector<T>) -> Result<Self> {
        if let Some(i) = values
            .iter()
            .position(|v| *v < T::zero() || !v.is_finite_value())
        {
            return Err(Error::NotPsd(format!(
                "diagonal entry {i} is {}",
                values[i]
            )));
        }
        Ok(PsdMap {
            map: LinearMap::diagonal(values),
            certificate: PsdCertificate::Diagonal,
        })
    }

    /// `m^T m`.
    pub fn gram(m: &LinearMap<T>) -> Self {
        PsdMap {
            map: m.gram(),
            certificate: PsdCertificate::Gram,
        }
    }

    /// `tau I - rho m^T m`, the choice that turns a subproblem into one prox call.
    pub fn linearizing(tau: T, rho: T, m: &LinearMap<T>) -> Result<Self> {
        if rho <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "rho must be positive, got {rho}"
            )));
        }
        let norm = m.norm_exact();
        let norm_sq = norm * norm;
        let need = rho * norm_sq * (T::one() + T::lit(LINEARIZE_MARGIN));
        if tau < need {
            return Err(Error::NotPsd(format!(
                "tau = {tau} is below rho·||M||² = {} (margin {LINEARIZE_MARGIN:e})",
                rho * norm_sq
            )));
        }
        let map = LinearMap::Sum(
            Box::new(LinearMap::scaled_identity(m.cols(), tau)),
            Box::new(m.gram().scaled(-rho)),
        );
        Ok(PsdMap {
            map,
            certificate: PsdCertificate::Linearizing { tau, rho, norm_sq },
        })
    }

    pub fn sum(a: PsdMap<T>, b: PsdMap<T>) -> Result<Self> {
        Ok(PsdMap {
            map: LinearMap::sum(a.map, b.map)?,
            certificate: PsdCertificate::Sum,
        })
    }

    pub fn scaled(self, s: T) -> Result<Self> {
        if s < T::zero() {
            return Err(Error::NotPsd(format!("negative scaling {s}")));
        }
        Ok(PsdMap {
            map: self.map.scaled(s),
            certificate: PsdCertificate::Scaled,
        })
    }

    pub fn dim(&self) -> usize {
        self.map.cols()
    }

    pub fn map(&self) -> &LinearMap<T> {
        &self.map
    }

    pub fn certificate(&self) -> &PsdCertificate<T> {
        &self.certificate
    }

    pub fn apply(&self, v: &DVector<T>) -> Result<DVector<T>> {
        self.map.apply(v)
    }

    /// `<v, P v>`.
    pub fn quad_form(&self, v: &DVector<T>) -> Result<T> {
        Ok(v.dot(&self.map.apply(v)?))
    }

    /// Largest eigenvalue (equal to the operator norm for PSD maps).
    pub fn norm_exact(&self) -> T {
        match &self.certificate {
            PsdCertificate::Zero => T::zero(),
            PsdCertificate::ScaledIdentity(s) => *s,
            PsdCertificate::Linearizing { tau, .. } => *tau,
            _ => self.map.norm_exact(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.certificate, PsdCertificate::Zero) || self.map.is_zero()
    }
}
