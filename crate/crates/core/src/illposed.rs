//! Proximal ADMM as an iterative regularization method for
//! `min f(Lx) s.t. Ax = b, x ∈ C` with noisy data `b^δ`.
//!
//! The problem is split as `min f(y) + ι_C(x)` subject to `Az = b^δ`,
//! `Lz = y`, `z = x`, and each iteration runs
//!
//! ```text
//! z⁺ = (ρ₁A^T A + ρ₂L^T L + ρ₃I + Q)^{-1}(ρ₁A^T b^δ - A^T λ - ν - L^T μ + ρ₂L^T y + ρ₃x + Qz)
//! y⁺ = prox_{f/ρ₂}(L z⁺ + μ/ρ₂)
//! x⁺ = P_C(z⁺ + ν/ρ₃)
//! λ⁺ = λ + ρ₁(Az⁺ - b^δ),  μ⁺ = μ + ρ₂(Lz⁺ - y⁺),  ν⁺ = ν + ρ₃(z⁺ - x⁺)
//! ```
//!
//! The reduced scheme for `L = I`, `f = ½||·||²` and `C` the nonnegative
//! orthant folds `f` into the z-step and drops `y, μ`:
//!
//! ```text
//! z⁺ = ((1+ρ₃)I + Q + ρ₁A^T A)^{-1}(ρ₁A^T b^δ + ρ₃x + Qz - A^T λ - ν)
//! x⁺ = max(z⁺ + ν/ρ₃, 0)
//! ```
//!
//! with the same `λ, ν` updates. It produces the same `(z, x, λ, ν)` as the
//! general scheme run with `ρ₂ = 1` and `μ⁰ = y⁰`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::diagnostics::{CheckReport, SuiteReport};
use crate::error::{check_dim, Error, Result};
use crate::operator::{LinearMap, PsdMap};
use crate::prox::ProxFunction;
use crate::scalar::Scalar;

/// Relative tolerance for the source-condition identities.
pub const CERTIFICATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    General,
    /// `L = I`, `f = ½||·||²`, `C = {x >= 0}`; the splitting penalty is `ρ₃`.
    Reduced,
}

/// A cached explicit inverse of a symmetric positive definite system, plus
/// the system itself for residual checks.
#[derive(Debug)]
struct SpdSolver<T: Scalar> {
    system: DMatrix<T>,
    inverse: DMatrix<T>,
}

impl<T: Scalar> SpdSolver<T> {
    fn new(system: DMatrix<T>, what: &str) -> Result<Self> {
        let chol = nalgebra::Cholesky::new(system.clone())
            .ok_or_else(|| Error::Factorization(format!("{what} is not positive definite")))?;
        Ok(SpdSolver {
            inverse: chol.inverse(),
            system,
        })
    }

    fn solve(&self, rhs: &DVector<T>) -> Result<DVector<T>> {
        let z = &self.inverse * rhs;
        let resid = (&self.system * &z - rhs).norm();
        let scale = T::one() + rhs.norm();
        // Relative residual allowed: the working precision's certification tolerance.
        if resid <= T::certify_tol() * scale {
            Ok(z)
        } else {
            Err(Error::Certification {
                which: "z",
                residual: (resid / scale).to_f64_lossy(),
            })
        }
    }
}

#[derive(Debug, Clone)]
pub struct InverseProblemSpec<T: Scalar> {
    a: LinearMap<T>,
    l: LinearMap<T>,
    c_set: ProxFunction<T>,
    f: ProxFunction<T>,
    rho1: T,
    rho2: T,
    rho3: T,
    q: PsdMap<T>,
    b_delta: DVector<T>,
    delta: T,
    c0: T,
    general: Arc<SpdSolver<T>>,
    reduced: Option<Arc<SpdSolver<T>>>,
    at_b: DVector<T>,
}

impl<T: Scalar> InverseProblemSpec<T> {
    /// Validates the data, computes the coercivity constant
    /// `c₀ = λ_min(A^T A + L^T L)` and factors the z-step system.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: LinearMap<T>,
        l: LinearMap<T>,
        c_set: ProxFunction<T>,
        f: ProxFunction<T>,
        rho: (T, T, T),
        q: PsdMap<T>,
        b_delta: DVector<T>,
        delta: T,
    ) -> Result<Self> {
        let (rho1, rho2, rho3) = rho;
        for (name, r) in [("rho1", rho1), ("rho2", rho2), ("rho3", rho3)] {
            if !(r > T::zero()) || !r.is_finite_value() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {r}"
                )));
            }
        }
        if !(delta >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "delta must be nonnegative, got {delta}"
            )));
        }
        let n = a.cols();
        check_dim("columns of L", n, l.cols())?;
        check_dim("data length", a.rows(), b_delta.len())?;
        check_dim("Q dimension", n, q.dim())?;
        c_set.validate(n)?;
        if !c_set.is_indicator() {
            return Err(Error::NotIndicator("constraint set C"));
        }
        f.validate(l.rows())?;
        if !(f.modulus() > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "f must be strongly convex; `{}` has modulus 0",
                f.kind_name()
            )));
        }

        let ata = a.gram().to_dense();
        let ltl = l.gram().to_dense();
        let joint = &ata + &ltl;
        let c0 = joint.clone().symmetric_eigen().eigenvalues.min();
        let scale = joint.amax().max(T::one());
        if !(c0 > T::lit(1e-12) * scale) {
            return Err(Error::InvalidParameter(format!(
                "||Ax||² + ||Lx||² >= c₀||x||² fails: smallest eigenvalue {c0}"
            )));
        }

        let qd = q.map().to_dense();
        let mut sys = &ata * rho1 + &ltl * rho2 + &qd;
        for i in 0..n {
            sys[(i, i)] += rho3;
        }
        let general = Arc::new(SpdSolver::new(sys, "z-step system")?);

        let reduced_ok = matches!(c_set, ProxFunction::NonNegative)
            && l.as_scaled_identity() == Some(T::one())
            && is_half_norm_sq(&f);
        let reduced = if reduced_ok {
            let mut sys = &ata * rho1 + qd;
            for i in 0..n {
                sys[(i, i)] += T::one() + rho3;
            }
            Some(Arc::new(SpdSolver::new(sys, "reduced z-step system")?))
        } else {
            None
        };
        let at_b = a.adjoint_apply(&b_delta)?;
        Ok(InverseProblemSpec {
            a,
            l,
            c_set,
            f,
            rho1,
            rho2,
            rho3,
            q,
            b_delta,
            delta,
            c0,
            general,
            reduced,
            at_b,
        })
    }

    /// Same operators and parameters with new data; reuses the factorizations.
    pub fn with_data(&self, b_delta: DVector<T>, delta: T) -> Result<Self> {
        check_dim("data length", self.a.rows(), b_delta.len())?;
        if !(delta >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "delta must be nonnegative, got {delta}"
            )));
        }
        let mut s = self.clone();
        s.at_b = s.a.adjoint_apply(&b_delta)?;
        s.b_delta = b_delta;
        s.delta = delta;
        Ok(s)
    }

    pub fn a(&self) -> &LinearMap<T> {
        &self.a
    }
    pub fn l(&self) -> &LinearMap<T> {
        &self.l
    }
    pub fn c_set(&self) -> &ProxFunction<T> {
        &self.c_set
    }
    pub fn f(&self) -> &ProxFunction<T> {
        &self.f
    }
    pub fn rho1(&self) -> T {
        self.rho1
    }
    pub fn rho2(&self) -> T {
        self.rho2
    }
    pub fn rho3(&self) -> T {
        self.rho3
    }
    pub fn q(&self) -> &PsdMap<T> {
        &self.q
    }
    pub fn b_delta(&self) -> &DVector<T> {
        &self.b_delta
    }
    pub fn delta(&self) -> T {
        self.delta
    }
    /// Smallest eigenvalue of `A^T A + L^T L`.
    pub fn c0(&self) -> T {
        self.c0
    }
    pub fn dim(&self) -> usize {
        self.a.cols()
    }
    pub fn supports_reduced(&self) -> bool {
        self.reduced.is_some()
    }
}

fn is_half_norm_sq<T: Scalar>(f: &ProxFunction<T>) -> bool {
    matches!(f, ProxFunction::Quadratic { weight, center } if *weight == T::one() && center.iter().all(|c| *c == T::zero()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegState<T: Scalar> {
    pub k: usize,
    pub scheme: Scheme,
    pub z: DVector<T>,
    pub y: DVector<T>,
    pub x: DVector<T>,
    pub lambda: DVector<T>,
    pub mu: DVector<T>,
    pub nu: DVector<T>,
    pub dz: DVector<T>,
    pub dy: DVector<T>,
    pub dx: DVector<T>,
    pub dlambda: DVector<T>,
    pub dmu: DVector<T>,
    pub dnu: DVector<T>,
}

impl<T: Scalar> RegState<T> {
    pub fn zeros(spec: &InverseProblemSpec<T>, scheme: Scheme) -> Self {
        let (n, m, p) = (spec.dim(), spec.a.rows(), spec.l.rows());
        RegState::new(
            scheme,
            DVector::zeros(n),
            DVector::zeros(p),
            DVector::zeros(n),
            DVector::zeros(m),
            DVector::zeros(p),
            DVector::zeros(n),
        )
    }

    pub fn new(
        scheme: Scheme,
        z: DVector<T>,
        y: DVector<T>,
        x: DVector<T>,
        lambda: DVector<T>,
        mu: DVector<T>,
        nu: DVector<T>,
    ) -> Self {
        RegState {
            k: 0,
            scheme,
            dz: DVector::zeros(z.len()),
            dy: DVector::zeros(y.len()),
            dx: DVector::zeros(x.len()),
            dlambda: DVector::zeros(lambda.len()),
            dmu: DVector::zeros(mu.len()),
            dnu: DVector::zeros(nu.len()),
            z,
            y,
            x,
            lambda,
            mu,
            nu,
        }
    }

    fn check(&self, spec: &InverseProblemSpec<T>) -> Result<()> {
        let (n, m, p) = (spec.dim(), spec.a.rows(), spec.l.rows());
        check_dim("state z", n, self.z.len())?;
        check_dim("state x", n, self.x.len())?;
        check_dim("state nu", n, self.nu.len())?;
        check_dim("state lambda", m, self.lambda.len())?;
        check_dim("state y", p, self.y.len())?;
        check_dim("state mu", p, self.mu.len())
    }
}

/// One iteration of the general scheme.
pub fn padmm2_step<T: Scalar>(
    spec: &InverseProblemSpec<T>,
    s: &RegState<T>,
) -> Result<RegState<T>> {
    s.check(spec)?;
    let (r1, r2, r3) = (spec.rho1, spec.rho2, spec.rho3);
    let mut rhs = &spec.at_b * r1 - spec.a.adjoint_apply_unchecked(&s.lambda) - &s.nu
        + spec.l.adjoint_apply_unchecked(&(&s.y * r2 - &s.mu))
        + &s.x * r3;
    if !spec.q.is_zero() {
        rhs += spec.q.map().apply_unchecked(&s.z);
    }
    let z = spec.general.solve(&rhs)?;
    let lz = spec.l.apply_unchecked(&z);
    let y = spec.f.prox(T::one() / r2, &(&lz + &s.mu / r2))?;
    let x = spec.c_set.project(&(&z + &s.nu / r3))?;
    let dlambda = (spec.a.apply_unchecked(&z) - &spec.b_delta) * r1;
    let dmu = (lz - &y) * r2;
    let dnu = (&z - &x) * r3;
    Ok(RegState {
        k: s.k + 1,
        scheme: Scheme::General,
        lambda: &s.lambda + &dlambda,
        mu: &s.mu + &dmu,
        nu: &s.nu + &dnu,
        dz: &z - &s.z,
        dy: &y - &s.y,
        dx: &x - &s.x,
        z,
        y,
        x,
        dlambda,
        dmu,
        dnu,
    })
}

/// One iteration of the reduced scheme; `y` and `μ` are carried unchanged.
pub fn padmm26_step<T: Scalar>(
    spec: &InverseProblemSpec<T>,
    s: &RegState<T>,
) -> Result<RegState<T>> {
    let solver = spec.reduced.as_ref().ok_or_else(|| {
        Error::Unsupported(
            "reduced scheme needs L = I, f = ½||·||² and C = nonnegative orthant".into(),
        )
    })?;
    s.check(spec)?;
    let (r1, r3) = (spec.rho1, spec.rho3);
    let mut rhs = &spec.at_b * r1 + &s.x * r3 - spec.a.adjoint_apply_unchecked(&s.lambda) - &s.nu;
    if !spec.q.is_zero() {
        rhs += spec.q.map().apply_unchecked(&s.z);
    }
    let z = solver.solve(&rhs)?;
    let x = (&z + &s.nu / r3).map(|v| v.max(T::zero()));
    let dlambda = (spec.a.apply_unchecked(&z) - &spec.b_delta) * r1;
    let dnu = (&z - &x) * r3;
    Ok(RegState {
        k: s.k + 1,
        scheme: Scheme::Reduced,
        lambda: &s.lambda + &dlambda,
        nu: &s.nu + &dnu,
        mu: s.mu.clone(),
        y: s.y.clone(),
        dz: &z - &s.z,
        dx: &x - &s.x,
        dy: DVector::zeros(s.y.len()),
        dmu: DVector::zeros(s.mu.len()),
        z,
        x,
        dlambda,
        dnu,
    })
}

pub fn reg_step<T: Scalar>(spec: &InverseProblemSpec<T>, s: &RegState<T>) -> Result<RegState<T>> {
    match s.scheme {
        Scheme::General => padmm2_step(spec, s),
        Scheme::Reduced => padmm26_step(spec, s),
    }
}

/// `E_k = (1/2ρ₁)||Δλ||² + (1/2ρ₂)||Δμ||² + (1/2ρ₃)||Δν||² + (ρ₂/2)||Δy||²
/// + (ρ₃/2)||Δx||² + ½||Δz||²_Q`.
pub fn energy<T: Scalar>(spec: &InverseProblemSpec<T>, s: &RegState<T>) -> Result<T> {
    if s.k == 0 {
        return Err(Error::NoStepHistory);
    }
    s.check(spec)?;
    let half = T::lit(0.5);
    let (r1, r2, r3) = (spec.rho1, spec.rho2, spec.rho3);
    Ok(s.dlambda.norm_squared() * half / r1
        + s.dmu.norm_squared() * half / r2
        + s.dnu.norm_squared() * half / r3
        + s.dy.norm_squared() * half * r2
        + s.dx.norm_squared() * half * r3
        + spec.q.quad_form(&s.dz)? * half)
}

/// Multipliers certifying that `x_true` solves the exact-data problem:
/// `μ ∈ ∂f(L x_true)`, `ν ∈ N_C(x_true)` and `L^T μ + ν + A^T λ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceCertificate<T: Scalar> {
    pub x_true: DVector<T>,
    pub lambda: DVector<T>,
    pub mu: DVector<T>,
    pub nu: DVector<T>,
}

impl<T: Scalar> SourceCertificate<T> {
    /// Checks both inclusions and the stationarity identity to
    /// [`CERTIFICATE_TOL`] relative to the size of the terms.
    pub fn validate(&self, spec: &InverseProblemSpec<T>) -> Result<()> {
        let n = spec.dim();
        check_dim("x_true", n, self.x_true.len())?;
        check_dim("certificate nu", n, self.nu.len())?;
        check_dim("certificate lambda", spec.a.rows(), self.lambda.len())?;
        check_dim("certificate mu", spec.l.rows(), self.mu.len())?;
        let tol = T::lit(CERTIFICATE_TOL);
        let lx = spec.l.apply(&self.x_true)?;
        let r_mu = spec.f.subdifferential_distance(&lx, &self.mu)?;
        if !(r_mu <= tol * (T::one() + self.mu.norm())) {
            return Err(Error::Certification {
                which: "mu in subdifferential of f",
                residual: r_mu.to_f64_lossy(),
            });
        }
        let r_nu = spec
            .c_set
            .subdifferential_distance(&self.x_true, &self.nu)?;
        if !(r_nu <= tol * (T::one() + self.nu.norm())) {
            return Err(Error::Certification {
                which: "nu in normal cone of C",
                residual: r_nu.to_f64_lossy(),
            });
        }
        let t1 = spec.l.adjoint_apply(&self.mu)?;
        let t3 = spec.a.adjoint_apply(&self.lambda)?;
        let r = (&t1 + &self.nu + &t3).norm();
        let scale = T::one() + t1.norm().max(self.nu.norm()).max(t3.norm());
        if !(r <= tol * scale) {
            return Err(Error::Certification {
                which: "stationarity L^T mu + nu + A^T lambda = 0",
                residual: r.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

/// `Φ_k = (1/2ρ₁)||λ-λ†||² + (1/2ρ₂)||μ-μ†||² + (1/2ρ₃)||ν-ν†||² + ½||z-x†||²_Q
/// + (ρ₂/2)||y-Lx†||² + (ρ₃/2)||x-x†||²`.
///
/// The reduced scheme has no `y, μ`; their terms are omitted.
pub fn phi<T: Scalar>(
    spec: &InverseProblemSpec<T>,
    s: &RegState<T>,
    cert: &SourceCertificate<T>,
) -> Result<T> {
    s.check(spec)?;
    let half = T::lit(0.5);
    let (r1, r2, r3) = (spec.rho1, spec.rho2, spec.rho3);
    let dl = &s.lambda - &cert.lambda;
    let dn = &s.nu - &cert.nu;
    let dz = &s.z - &cert.x_true;
    let dx = &s.x - &cert.x_true;
    let mut v = dl.norm_squared() * half / r1
        + dn.norm_squared() * half / r3
        + spec.q.quad_form(&dz)? * half
        + dx.norm_squared() * half * r3;
    if s.scheme == Scheme::General {
        let dm = &s.mu - &cert.mu;
        let dy = &s.y - spec.l.apply(&cert.x_true)?;
        v += dm.norm_squared() * half / r2 + dy.norm_squared() * half * r2;
    }
    Ok(v)
}

/// `k_δ = ceil(c_stop / δ)`, at least 1. Quotients within rounding of an
/// integer (such as `2 / 1e-3`) are not pushed up by one.
pub fn a_priori_stop(delta: f64, c_stop: f64) -> Result<usize> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "a-priori stopping needs delta > 0 (got {delta}); use an iteration cap instead"
        )));
    }
    if !(c_stop > 0.0) || !c_stop.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "c_stop must be positive, got {c_stop}"
        )));
    }
    let r = c_stop / delta;
    let near = r.round();
    let k = if (r - near).abs() <= 1e-9 * near.max(1.0) {
        near
    } else {
        r.ceil()
    };
    Ok((k as usize).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegStop {
    /// `k_δ = ceil(c_stop/δ)`.
    APriori {
        c_stop: f64,
    },
    MaxIter(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegRecord<T: Scalar> {
    pub k: usize,
    /// `None` at `k = 0`.
    pub energy: Option<T>,
    pub phi: Option<T>,
    pub err_x: Option<T>,
    pub err_y: Option<T>,
    pub err_z: Option<T>,
    /// `||A z^k - b^δ||`.
    pub feas_az: T,
}

#[derive(Debug, Clone)]
pub struct RegTrace<T: Scalar> {
    pub records: Vec<RegRecord<T>>,
    pub final_state: RegState<T>,
    pub k_stop: usize,
    pub delta: T,
    pub rho1: T,
}

impl<T: Scalar> RegTrace<T> {
    /// `(k, err_x)` at the smallest error, if errors were recorded.
    pub fn error_minimum(&self) -> Option<(usize, T)> {
        self.records
            .iter()
            .filter_map(|r| r.err_x.map(|e| (r.k, e)))
            .fold(None, |best: Option<(usize, T)>, (k, e)| match best {
                Some((_, b)) if b <= e => best,
                _ => Some((k, e)),
            })
    }

    pub fn err_at_stop(&self) -> Option<T> {
        self.records.last().and_then(|r| r.err_x)
    }
}

/// What the run compares against: the true solution and, optionally, its
/// source certificate (needed for `Φ_k`).
#[derive(Debug, Clone, Copy, Default)]
pub struct Truth<'a, T: Scalar> {
    pub x_true: Option<&'a DVector<T>>,
    pub certificate: Option<&'a SourceCertificate<T>>,
}

fn reg_record<T: Scalar>(
    spec: &InverseProblemSpec<T>,
    s: &RegState<T>,
    truth: &Truth<'_, T>,
    y_true: Option<&DVector<T>>,
) -> Result<RegRecord<T>> {
    let energy = if s.k == 0 {
        None
    } else {
        Some(energy(spec, s)?)
    };
    let phi = truth.certificate.map(|c| phi(spec, s, c)).transpose()?;
    let (err_x, err_y, err_z) = match truth.x_true {
        Some(xt) => {
            let ey = match (s.scheme, y_true) {
                (Scheme::General, Some(yt)) => Some((&s.y - yt).norm()),
                _ => None,
            };
            (Some((&s.x - xt).norm()), ey, Some((&s.z - xt).norm()))
        }
        None => (None, None, None),
    };
    Ok(RegRecord {
        k: s.k,
        energy,
        phi,
        err_x,
        err_y,
        err_z,
        feas_az: (spec.a.apply_unchecked(&s.z) - &spec.b_delta).norm(),
    })
}

/// Runs the chosen scheme from `init` to the stopping index and records
/// energies, `Φ_k` and errors at every iteration.
pub fn run_regularized<T: Scalar>(
    spec: &InverseProblemSpec<T>,
    init: &RegState<T>,
    stop: RegStop,
    truth: Truth<'_, T>,
) -> Result<RegTrace<T>> {
    let k_stop = match stop {
        RegStop::APriori { c_stop } => a_priori_stop(spec.delta.to_f64_lossy(), c_stop)?,
        RegStop::MaxIter(0) => {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ))
        }
        RegStop::MaxIter(n) => n,
    };
    if let Some(c) = truth.certificate {
        c.validate(spec)?;
    }
    if let Some(xt) = truth.x_true {
        check_dim("x_true", spec.dim(), xt.len())?;
    }
    let y_true = truth.x_true.map(|xt| spec.l.apply_unchecked(xt));
    let mut state = init.clone();
    let mut records = Vec::with_capacity(k_stop + 1);
    records.push(reg_record(spec, &state, &truth, y_true.as_ref())?);
    for _ in 0..k_stop {
        state = reg_step(spec, &state)?;
        records.push(reg_record(spec, &state, &truth, y_true.as_ref())?);
    }
    Ok(RegTrace {
        records,
        final_state: state,
        k_stop,
        delta: spec.delta,
        rho1: spec.rho1,
    })
}

/// Verifies along a trace, with relative `slack`:
///
/// * `energy_monotone`: `E_{k+1} <= E_k`;
/// * `one_step`: `E_{k+1} <= Φ_k - Φ_{k+1} + √(2ρ₁Φ_{k+1}) δ`;
/// * `phi_accumulated`: `Φ_{k+1} <= Φ₀ + δ Σ_{j=1}^{k+1} √(2ρ₁Φ_j)`;
/// * `phi_growth`: `√Φ_k <= √Φ₀ + √(2ρ₁) k δ`;
/// * `energy_rate`: `E_k <= 2Φ₀/k + (5/2) ρ₁ k δ²` for `k >= 1`.
pub fn check_ip_bounds<T: Scalar>(trace: &RegTrace<T>, slack: f64) -> Result<SuiteReport> {
    let phis: Vec<f64> = trace
        .records
        .iter()
        .map(|r| {
            r.phi
                .map(|v| v.to_f64_lossy())
                .ok_or(Error::Missing("Phi records (no source certificate)"))
        })
        .collect::<Result<_>>()?;
    let es: Vec<f64> = trace
        .records
        .iter()
        .map(|r| r.energy.map_or(f64::NAN, |v| v.to_f64_lossy()))
        .collect();
    check_ip_bounds_raw(
        &es,
        &phis,
        trace.delta.to_f64_lossy(),
        trace.rho1.to_f64_lossy(),
        slack,
    )
}

/// [`check_ip_bounds`] on raw columns; `es[0]` is ignored.
pub fn check_ip_bounds_raw(
    es: &[f64],
    phis: &[f64],
    delta: f64,
    rho1: f64,
    slack: f64,
) -> Result<SuiteReport> {
    let n = es.len();
    if n < 2 || phis.len() != n {
        return Err(Error::InsufficientData(format!(
            "need at least 2 records with matching E and Phi columns (have {n} and {})",
            phis.len()
        )));
    }
    let mut mono = CheckReport::new("energy_monotone");
    let mut one = CheckReport::new("one_step");
    let mut acc = CheckReport::new("phi_accumulated");
    let mut growth = CheckReport::new("phi_growth");
    let mut rate = CheckReport::new("energy_rate");
    let phi0 = phis[0];
    let mut sum = 0.0;
    for k in 0..n {
        if k >= 1 {
            let kf = k as f64;
            growth.le(
                k,
                phis[k].sqrt(),
                phi0.sqrt() + (2.0 * rho1).sqrt() * kf * delta,
                &[],
                slack,
            );
            rate.le(
                k,
                es[k],
                2.0 * phi0 / kf + 2.5 * rho1 * kf * delta * delta,
                &[],
                slack,
            );
        }
        if k + 1 == n {
            break;
        }
        let root = (2.0 * rho1 * phis[k + 1]).sqrt();
        sum += root;
        if k >= 1 {
            mono.le(k + 1, es[k + 1], es[k], &[], slack);
        }
        one.le(
            k + 1,
            es[k + 1],
            phis[k] - phis[k + 1] + root * delta,
            &[phis[k]],
            slack,
        );
        acc.le(k + 1, phis[k + 1], phi0 + sum * delta, &[], slack);
    }
    Ok(SuiteReport {
        checks: vec![mono, one, acc, growth, rate],
    })
}
