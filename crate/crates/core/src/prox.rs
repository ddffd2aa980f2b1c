//! Closed catalog of proper, lower semi-continuous convex functions with
//! closed-form proximal maps.
//!
//! Every kind is coordinate-separable, which lets the subproblem solvers use
//! a different step size per coordinate when the quadratic coupling term is
//! diagonal. Each kind also reports the distance from a vector to its
//! subdifferential so that computed minimizers can be certified.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum ProxFunction<T: Scalar> {
    /// `(weight/2)·||x - center||²`.
    Quadratic { weight: T, center: DVector<T> },
    /// `weight·||x||₁`.
    L1 { weight: T },
    /// Indicator of `{lower <= x <= upper}`.
    Box {
        lower: DVector<T>,
        upper: DVector<T>,
    },
    /// Indicator of the nonnegative orthant.
    NonNegative,
    /// The zero function, equivalently the indicator of the whole space.
    Zero,
    /// Block-separable sum; each entry is `(block length, function)`.
    Separable(Vec<(usize, ProxFunction<T>)>),
}

impl<T: Scalar> ProxFunction<T> {
    /// `½||x||²` on `R^dim`.
    pub fn half_norm_sq(dim: usize) -> Self {
        ProxFunction::Quadratic {
            weight: T::one(),
            center: DVector::zeros(dim),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ProxFunction::Quadratic { .. } => "quadratic",
            ProxFunction::L1 { .. } => "l1",
            ProxFunction::Box { .. } => "box",
            ProxFunction::NonNegative => "nonnegative",
            ProxFunction::Zero => "zero",
            ProxFunction::Separable(_) => "separable",
        }
    }

    /// Checks parameters against the dimension the function will act on.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ProxFunction::Quadratic { weight, center } => {
                check_dim("quadratic center", dim, center.len())?;
                if *weight < T::zero() {
                    return Err(Error::InvalidParameter(format!(
                        "quadratic weight {weight} < 0"
                    )));
                }
            }
            ProxFunction::L1 { weight } => {
                if *weight < T::zero() {
                    return Err(Error::InvalidParameter(format!("l1 weight {weight} < 0")));
                }
            }
            ProxFunction::Box { lower, upper } => {
                check_dim("box lower bound", dim, lower.len())?;
                check_dim("box upper bound", dim, upper.len())?;
                if let Some(i) = (0..dim).find(|&i| lower[i] > upper[i]) {
                    return Err(Error::InvalidParameter(format!(
                        "empty box at coordinate {i}"
                    )));
                }
            }
            ProxFunction::NonNegative | ProxFunction::Zero => {}
            ProxFunction::Separable(blocks) => {
                let total: usize = blocks.iter().map(|(n, _)| *n).sum();
                check_dim("separable blocks", dim, total)?;
                for (n, f) in blocks {
                    f.validate(*n)?;
                }
            }
        }
        Ok(())
    }

    pub fn is_indicator(&self) -> bool {
        match self {
            ProxFunction::Box { .. } | ProxFunction::NonNegative | ProxFunction::Zero => true,
            ProxFunction::Separable(blocks) => blocks.iter().all(|(_, f)| f.is_indicator()),
            _ => false,
        }
    }

    /// Modulus of convexity: the largest `c` with
    /// `f(tx+(1-t)y) + c·t(1-t)||x-y||² <= t f(x) + (1-t) f(y)`.
    /// For `(w/2)||·||²` this is `w/2`.
    pub fn modulus(&self) -> T {
        match self {
            ProxFunction::Quadratic { weight, .. } => *weight / T::lit(2.0),
            ProxFunction::Separable(blocks) => blocks
                .iter()
                .filter(|(n, _)| *n > 0)
                .map(|(_, f)| f.modulus())
                .fold(T::infinity(), |a, b| a.min(b)),
            _ => T::zero(),
        }
    }

    /// Per-coordinate `(weights, centers)` if the function is a (possibly
    /// degenerate) separable quadratic.
    pub fn quadratic_parts(&self, dim: usize) -> Option<(DVector<T>, DVector<T>)> {
        match self {
            ProxFunction::Quadratic { weight, center } => {
                Some((DVector::from_element(dim, *weight), center.clone()))
            }
            ProxFunction::Zero => Some((DVector::zeros(dim), DVector::zeros(dim))),
            ProxFunction::Separable(blocks) => {
                let mut w = Vec::with_capacity(dim);
                let mut c = Vec::with_capacity(dim);
                for (n, f) in blocks {
                    let (bw, bc) = f.quadratic_parts(*n)?;
                    w.extend(bw.iter().copied());
                    c.extend(bc.iter().copied());
                }
                Some((DVector::from_vec(w), DVector::from_vec(c)))
            }
            _ => None,
        }
    }

    /// Function value; `+inf` outside the domain of an indicator.
    pub fn value(&self, x: &DVector<T>) -> T {
        self.value_slice(x.as_slice())
    }

    fn value_slice(&self, x: &[T]) -> T {
        match self {
            ProxFunction::Quadratic { weight, center } => {
                let s = x
                    .iter()
                    .zip(center.iter())
                    .fold(T::zero(), |acc, (a, c)| acc + (*a - *c) * (*a - *c));
                *weight * s / T::lit(2.0)
            }
            ProxFunction::L1 { weight } => {
                *weight * x.iter().fold(T::zero(), |acc, a| acc + a.abs())
            }
            ProxFunction::Box { lower, upper } => {
                let inside = x
                    .iter()
                    .enumerate()
                    .all(|(i, v)| *v >= lower[i] && *v <= upper[i]);
                if inside {
                    T::zero()
                } else {
                    T::infinity()
                }
            }
            ProxFunction::NonNegative => {
                if x.iter().all(|v| *v >= T::zero()) {
                    T::zero()
                } else {
                    T::infinity()
                }
            }
            ProxFunction::Zero => T::zero(),
            ProxFunction::Separable(blocks) => {
                let mut off = 0;
                let mut total = T::zero();
                for (n, f) in blocks {
                    total += f.value_slice(&x[off..off + n]);
                    off += n;
                }
                total
            }
        }
    }

    /// `argmin_w f(w) + (1/(2t))||w - v||²`.
    pub fn prox(&self, t: T, v: &DVector<T>) -> Result<DVector<T>> {
        if !(t > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "prox step must be positive, got {t}"
            )));
        }
        let steps = DVector::from_element(v.len(), t);
        self.prox_diag(&steps, v)
    }

    /// Coordinate-wise prox with step `steps[i]` on coordinate `i`, i.e. the
    /// minimizer of `f(w) + ½ Σ (w_i - v_i)² / steps[i]`.
    pub fn prox_diag(&self, steps: &DVector<T>, v: &DVector<T>) -> Result<DVector<T>> {
        check_dim("prox steps", v.len(), steps.len())?;
        if let Some(i) = steps.iter().position(|s| !(*s > T::zero())) {
            return Err(Error::InvalidParameter(format!(
                "prox step {i} is not positive"
            )));
        }
        self.validate(v.len())?;
        let mut out = v.clone();
        self.prox_into(steps.as_slice(), v.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    fn prox_into(&self, steps: &[T], v: &[T], out: &mut [T]) {
        match self {
            ProxFunction::Quadratic { weight, center } => {
                for i in 0..v.len() {
                    let tw = steps[i] * *weight;
                    out[i] = (v[i] + tw * center[i]) / (T::one() + tw);
                }
            }
            ProxFunction::L1 { weight } => {
                for i in 0..v.len() {
                    let thr = steps[i] * *weight;
                    let a = v[i].abs() - thr;
                    out[i] = if a > T::zero() {
                        v[i].signum() * a
                    } else {
                        T::zero()
                    };
                }
            }
            ProxFunction::Box { lower, upper } => {
                for i in 0..v.len() {
                    out[i] = v[i].max(lower[i]).min(upper[i]);
                }
            }
            ProxFunction::NonNegative => {
                for i in 0..v.len() {
                    out[i] = v[i].max(T::zero());
                }
            }
            ProxFunction::Zero => out.copy_from_slice(v),
            ProxFunction::Separable(blocks) => {
                let mut off = 0;
                for (n, f) in blocks {
                    f.prox_into(
                        &steps[off..off + n],
                        &v[off..off + n],
                        &mut out[off..off + n],
                    );
                    off += n;
                }
            }
        }
    }

    /// Orthogonal projection onto the set of an indicator kind.
    pub fn project(&self, v: &DVector<T>) -> Result<DVector<T>> {
        if !self.is_indicator() {
            return Err(Error::NotIndicator(self.kind_name()));
        }
        self.prox(T::one(), v)
    }

    /// Euclidean distance from `g` to `∂f(x)`; `+inf` if `x ∉ dom ∂f`.
    pub fn subdifferential_distance(&self, x: &DVector<T>, g: &DVector<T>) -> Result<T> {
        check_dim("subgradient", x.len(), g.len())?;
        let sq = self.subdiff_dist_sq(x.as_slice(), g.as_slice());
        Ok(sq.sqrt())
    }

    fn subdiff_dist_sq(&self, x: &[T], g: &[T]) -> T {
        let inf = T::infinity();
        let mut acc = T::zero();
        match self {
            ProxFunction::Quadratic { weight, center } => {
                for i in 0..x.len() {
                    let r = g[i] - *weight * (x[i] - center[i]);
                    acc += r * r;
                }
            }
            ProxFunction::L1 { weight } => {
                for i in 0..x.len() {
                    let r = if x[i] == T::zero() {
                        (g[i].abs() - *weight).max(T::zero())
                    } else {
                        g[i] - *weight * x[i].signum()
                    };
                    acc += r * r;
                }
            }
            ProxFunction::Box { lower, upper } => {
                for i in 0..x.len() {
                    if x[i] < lower[i] || x[i] > upper[i] {
                        return inf;
                    }
                    let r = if lower[i] == upper[i] {
                        T::zero()
                    } else if x[i] == lower[i] {
                        g[i].max(T::zero())
                    } else if x[i] == upper[i] {
                        g[i].min(T::zero())
                    } else {
                        g[i]
                    };
                    acc += r * r;
                }
            }
            ProxFunction::NonNegative => {
                for i in 0..x.len() {
                    if x[i] < T::zero() {
                        return inf;
                    }
                    let r = if x[i] == T::zero() {
                        g[i].max(T::zero())
                    } else {
                        g[i]
                    };
                    acc += r * r;
                }
            }
            ProxFunction::Zero => {
                for gi in g {
                    acc += *gi * *gi;
                }
            }
            ProxFunction::Separable(blocks) => {
                let mut off = 0;
                for (n, f) in blocks {
                    acc += f.subdiff_dist_sq(&x[off..off + n], &g[off..off + n]);
                    off += n;
                }
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn analytic_prox_values() {
        let q = ProxFunction::half_norm_sq(1);
        assert_eq!(q.prox(1.0, &v(&[4.0])).unwrap(), v(&[2.0]));
        let l1 = ProxFunction::L1 { weight: 1.0 };
        assert_eq!(l1.prox(1.0, &v(&[3.0])).unwrap(), v(&[2.0]));
        assert_eq!(l1.prox(1.0, &v(&[-0.5])).unwrap(), v(&[0.0]));
        let nn = ProxFunction::<f64>::NonNegative;
        assert_eq!(nn.prox(7.0, &v(&[-1.0, 2.0])).unwrap(), v(&[0.0, 2.0]));
    }

    #[test]
    fn projections() {
        let nn = ProxFunction::<f64>::NonNegative;
        assert_eq!(nn.project(&v(&[-1.0, 2.0])).unwrap(), v(&[0.0, 2.0]));
        assert_eq!(nn.project(&v(&[0.0, 2.0])).unwrap(), v(&[0.0, 2.0]));
        let bx = ProxFunction::Box {
            lower: v(&[0.0, 0.0]),
            upper: v(&[1.0, 1.0]),
        };
        assert_eq!(bx.project(&v(&[2.0, -3.0])).unwrap(), v(&[1.0, 0.0]));
        assert!(matches!(
            ProxFunction::L1 { weight: 1.0 }.project(&v(&[1.0])),
            Err(Error::NotIndicator("l1"))
        ));
    }

    #[test]
    fn nonpositive_step_rejected() {
        assert!(ProxFunction::<f64>::Zero.prox(0.0, &v(&[1.0])).is_err());
    }

    #[test]
    fn values_and_moduli() {
        let q = ProxFunction::Quadratic {
            weight: 2.0,
            center: v(&[1.0, 0.0]),
        };
        assert_eq!(q.value(&v(&[0.0, 1.0])), 2.0);
        assert_eq!(q.modulus(), 1.0);
        assert_eq!(ProxFunction::<f64>::half_norm_sq(3).modulus(), 0.5);
        assert_eq!(ProxFunction::<f64>::L1 { weight: 1.0 }.modulus(), 0.0);
        assert!(ProxFunction::<f64>::NonNegative
            .value(&v(&[-1e-30]))
            .is_infinite());
        let sep = ProxFunction::Separable(vec![
            (1, ProxFunction::L1 { weight: 1.0 }),
            (1, ProxFunction::NonNegative),
        ]);
        assert_eq!(sep.value(&v(&[-2.0, 3.0])), 2.0);
        assert!(!sep.is_indicator());
    }

    #[test]
    fn modulus_matches_definition() {
        // f = ½||·||²: the convexity gap equals ½ t(1-t)||x-y||² exactly.
        let f = ProxFunction::<f64>::half_norm_sq(2);
        let x = v(&[1.0, -2.0]);
        let y = v(&[0.5, 3.0]);
        let t = 0.3;
        let gap = t * f.value(&x) + (1.0 - t) * f.value(&y) - f.value(&(&x * t + &y * (1.0 - t)));
        let expect = f.modulus() * t * (1.0 - t) * (&x - &y).norm_squared();
        assert!((gap - expect).abs() < 1e-12);
    }

    fn kinds(n: usize) -> Vec<ProxFunction<f64>> {
        vec![
            ProxFunction::Quadratic {
                weight: 1.5,
                center: DVector::from_fn(n, |i, _| i as f64 - 1.0),
            },
            ProxFunction::L1 { weight: 0.7 },
            ProxFunction::Box {
                lower: DVector::from_element(n, -0.5),
                upper: DVector::from_element(n, 0.8),
            },
            ProxFunction::NonNegative,
            ProxFunction::Zero,
            ProxFunction::Separable(vec![
                (1, ProxFunction::L1 { weight: 0.3 }),
                (n - 1, ProxFunction::NonNegative),
            ]),
        ]
    }

    proptest! {
        #[test]
        fn prox_satisfies_subgradient_inclusion(
            t in 0.01f64..10.0,
            xs in proptest::collection::vec(-5.0f64..5.0, 3),
        ) {
            let vin = DVector::from_vec(xs);
            for f in kinds(3) {
                let w = f.prox(t, &vin).unwrap();
                let g = (&vin - &w) / t;
                let r = f.subdifferential_distance(&w, &g).unwrap();
                prop_assert!(r <= 1e-8, "{} residual {}", f.kind_name(), r);
            }
        }

        #[test]
        fn projection_idempotent_and_nonexpansive(
            a in proptest::collection::vec(-5.0f64..5.0, 3),
            b in proptest::collection::vec(-5.0f64..5.0, 3),
        ) {
            let a = DVector::from_vec(a);
            let b = DVector::from_vec(b);
            for f in kinds(3).into_iter().filter(|f| f.is_indicator()) {
                let pa = f.project(&a).unwrap();
                let pb = f.project(&b).unwrap();
                prop_assert_eq!(f.project(&pa).unwrap(), pa.clone());
                prop_assert!((&pa - &pb).norm() <= (&a - &b).norm() + 1e-15);
            }
        }
    }
}
