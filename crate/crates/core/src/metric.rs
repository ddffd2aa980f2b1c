//! The weighted seminorm used as a Lyapunov function by proximal ADMM.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::operator::{LinearMap, PsdMap};
use crate::scalar::Scalar;

/// A primal-dual point `u = (x, y, λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate<T: Scalar> {
    pub x: DVector<T>,
    pub y: DVector<T>,
    pub lambda: DVector<T>,
}

impl<T: Scalar> Iterate<T> {
    pub fn new(x: DVector<T>, y: DVector<T>, lambda: DVector<T>) -> Self {
        Iterate { x, y, lambda }
    }

    pub fn zeros(nx: usize, ny: usize, m: usize) -> Self {
        Iterate {
            x: DVector::zeros(nx),
            y: DVector::zeros(ny),
            lambda: DVector::zeros(m),
        }
    }

    pub fn sub(&self, other: &Iterate<T>) -> Iterate<T> {
        Iterate {
            x: &self.x - &other.x,
            y: &self.y - &other.y,
            lambda: &self.lambda - &other.lambda,
        }
    }

    /// Plain Euclidean norm of the stacked vector.
    pub fn norm(&self) -> T {
        (self.x.norm_squared() + self.y.norm_squared() + self.lambda.norm_squared()).sqrt()
    }
}

/// `||u||²_G = ||x||²_P + ||y||²_{Q̂} + ||λ||²/ρ` with `Q̂ = ρ B^T B + Q`.
#[derive(Debug, Clone)]
pub struct GMetric<T: Scalar> {
    p: PsdMap<T>,
    q_hat: PsdMap<T>,
    rho: T,
    dual_dim: usize,
}

impl<T: Scalar> GMetric<T> {
    pub fn new(p: PsdMap<T>, q_hat: PsdMap<T>, rho: T, dual_dim: usize) -> Result<Self> {
        if !(rho > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "rho must be positive, got {rho}"
            )));
        }
        Ok(GMetric {
            p,
            q_hat,
            rho,
            dual_dim,
        })
    }

    /// Builds the metric of the method from `P`, `Q`, `B` and `ρ`.
    pub fn from_parts(p: &PsdMap<T>, q: &PsdMap<T>, b: &LinearMap<T>, rho: T) -> Result<Self> {
        let rho_btb = PsdMap::gram(b).scaled(rho)?;
        let q_hat = if q.is_zero() {
            rho_btb
        } else {
            PsdMap::sum(rho_btb, q.clone())?
        };
        GMetric::new(p.clone(), q_hat, rho, b.rows())
    }

    pub fn p(&self) -> &PsdMap<T> {
        &self.p
    }

    pub fn q_hat(&self) -> &PsdMap<T> {
        &self.q_hat
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn seminorm_sq(&self, u: &Iterate<T>) -> Result<T> {
        check_dim("G-metric x block", self.p.dim(), u.x.len())?;
        check_dim("G-metric y block", self.q_hat.dim(), u.y.len())?;
        check_dim("G-metric dual block", self.dual_dim, u.lambda.len())?;
        let px = self.p.quad_form(&u.x)?;
        let qy = self.q_hat.quad_form(&u.y)?;
        Ok(px + qy + u.lambda.norm_squared() / self.rho)
    }
}

pub fn g_seminorm_sq<T: Scalar>(metric: &GMetric<T>, u: &Iterate<T>) -> Result<T> {
    metric.seminorm_sq(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn s(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn unit_case() {
        let m = GMetric::new(
            PsdMap::scaled_identity(1, 1.0).unwrap(),
            PsdMap::scaled_identity(1, 1.0).unwrap(),
            1.0,
            1,
        )
        .unwrap();
        let u = Iterate::new(s(1.0), s(1.0), s(1.0));
        assert_eq!(g_seminorm_sq(&m, &u).unwrap(), 3.0);
    }

    #[test]
    fn only_dual_term() {
        let m = GMetric::new(PsdMap::zero(1), PsdMap::zero(1), 2.0, 1).unwrap();
        let u = Iterate::new(s(5.0), s(-3.0), s(2.0));
        assert_eq!(g_seminorm_sq(&m, &u).unwrap(), 2.0);
    }

    #[test]
    fn matches_expanded_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut gauss = |r: usize, c: usize| {
            DMatrix::<f64>::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng))
        };
        let a = gauss(3, 3);
        let b = gauss(4, 2);
        let qd = gauss(2, 2);
        let x = gauss(3, 1).column(0).into_owned();
        let y = gauss(2, 1).column(0).into_owned();
        let l = gauss(4, 1).column(0).into_owned();
        let rho = 0.7;
        let p = PsdMap::gram(&LinearMap::dense(a.clone()));
        let q = PsdMap::gram(&LinearMap::dense(qd.clone()));
        let metric = GMetric::from_parts(&p, &q, &LinearMap::dense(b.clone()), rho).unwrap();
        let pm = a.transpose() * &a;
        let qhat = (b.transpose() * &b) * rho + qd.transpose() * &qd;
        let expect = x.dot(&(&pm * &x)) + y.dot(&(&qhat * &y)) + l.norm_squared() / rho;
        let got = metric.seminorm_sq(&Iterate::new(x, y, l)).unwrap();
        assert!((got - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
    }

    #[test]
    fn homogeneous_of_degree_two() {
        let m = GMetric::from_parts(
            &PsdMap::scaled_identity(2, 0.5).unwrap(),
            &PsdMap::zero(1),
            &LinearMap::dense(DMatrix::from_row_slice(2, 1, &[1.0, -2.0])),
            1.3,
        )
        .unwrap();
        let u = Iterate::new(
            DVector::from_vec(vec![1.0, 2.0]),
            s(0.3),
            DVector::from_vec(vec![-1.0, 0.5]),
        );
        let scaled = Iterate::new(&u.x * -3.0, &u.y * -3.0, &u.lambda * -3.0);
        let a = m.seminorm_sq(&u).unwrap();
        assert!(a >= 0.0);
        assert!((m.seminorm_sq(&scaled).unwrap() - 9.0 * a).abs() <= 1e-12 * a);
    }

    #[test]
    fn dimension_checked() {
        let m = GMetric::new(PsdMap::zero(1), PsdMap::zero(1), 1.0, 1).unwrap();
        assert!(m.seminorm_sq(&Iterate::zeros(2, 1, 1)).is_err());
    }
}
