//! Reference KKT points for validating iterates.
//!
//! Quadratic problems are solved directly from the linear KKT system; other
//! problems fall back to a long run of the method itself at a tight tolerance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::metric::Iterate;
use crate::padmm::{run, PadmmState, Reference, RunOptions, SeparableProblem, StopRule};
use crate::scalar::Scalar;

/// Solves
///
/// ```text
/// [ W_f  0    A^T ] [x]   [W_f a]
/// [ 0    W_g  B^T ] [y] = [W_g b]
/// [ A    B    0   ] [λ]   [c    ]
/// ```
///
/// for `f = Σ w_i/2 (x_i - a_i)²` and `g` alike. When the system is singular
/// the least-norm solution is returned, so `λ` is the multiplier of least norm.
pub fn quadratic_kkt_point<T: Scalar>(problem: &SeparableProblem<T>) -> Result<Iterate<T>> {
    let (nx, ny, m) = (problem.x_dim(), problem.y_dim(), problem.dual_dim());
    let (wf, af) = problem.f().quadratic_parts(nx).ok_or_else(|| {
        Error::Unsupported(format!("f is `{}`, not quadratic", problem.f().kind_name()))
    })?;
    let (wg, ag) = problem.g().quadratic_parts(ny).ok_or_else(|| {
        Error::Unsupported(format!("g is `{}`, not quadratic", problem.g().kind_name()))
    })?;
    let a = problem.a().to_dense();
    let b = problem.b().to_dense();
    let n = nx + ny + m;
    let mut k = DMatrix::<T>::zeros(n, n);
    for i in 0..nx {
        k[(i, i)] = wf[i];
    }
    for i in 0..ny {
        k[(nx + i, nx + i)] = wg[i];
    }
    k.view_mut((0, nx + ny), (nx, m)).copy_from(&a.transpose());
    k.view_mut((nx, nx + ny), (ny, m)).copy_from(&b.transpose());
    k.view_mut((nx + ny, 0), (m, nx)).copy_from(&a);
    k.view_mut((nx + ny, nx), (m, ny)).copy_from(&b);
    let mut rhs = DVector::<T>::zeros(n);
    rhs.rows_mut(0, nx).copy_from(&wf.component_mul(&af));
    rhs.rows_mut(nx, ny).copy_from(&wg.component_mul(&ag));
    rhs.rows_mut(nx + ny, m).copy_from(problem.c());

    let scale = k.amax().max(T::one());
    let svd = k.clone().svd(true, true);
    let eps = T::lit(1e-12) * scale * T::from_usize_lossy(n);
    let sol = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::Factorization(e.to_string()))?;
    let resid = (&k * &sol - &rhs).norm();
    if resid > T::lit(1e-8) * (T::one() + rhs.norm()) {
        return Err(Error::InvalidParameter(format!(
            "KKT system has no solution (residual {resid}); the constraint is infeasible"
        )));
    }
    Ok(Iterate::new(
        sol.rows(0, nx).into_owned(),
        sol.rows(nx, ny).into_owned(),
        sol.rows(nx + ny, m).into_owned(),
    ))
}

/// Runs the method from `init` until `||Δu||_G <= tol` and returns the final
/// iterate as a reference point.
pub fn long_run_reference<T: Scalar>(
    problem: &SeparableProblem<T>,
    init: &PadmmState<T>,
    tol: T,
    max_iter: usize,
) -> Result<Reference<T>> {
    let trace = run(
        problem,
        init,
        StopRule { max_iter, tol },
        &RunOptions::default(),
    )?;
    if !trace.converged {
        return Err(Error::InvalidParameter(format!(
            "reference run did not reach tolerance {tol} in {max_iter} iterations"
        )));
    }
    Reference::new(problem, trace.final_state.iterate())
}

/// Picks the direct oracle when both objectives are quadratic, otherwise a
/// long run.
pub fn reference_point<T: Scalar>(
    problem: &SeparableProblem<T>,
    init: &PadmmState<T>,
) -> Result<Reference<T>> {
    match quadratic_kkt_point(problem) {
        Ok(u) => Reference::new(problem, u),
        Err(Error::Unsupported(_)) => long_run_reference(problem, init, T::lit(1e-12), 200_000),
        Err(e) => Err(e),
    }
}
