//! Proximal ADMM for `min f(x) + g(y)  s.t.  A x + B y = c`.
//!
//! One iteration is
//!
//! ```text
//! x⁺ = argmin f(x) + <λ, A x> + ρ/2 ||A x + B y - c||² + ½ ||x - x||²_P
//! y⁺ = argmin g(y) + <λ, B y> + ρ/2 ||A x⁺ + B y - c||² + ½ ||y - y||²_Q
//! λ⁺ = λ + ρ (A x⁺ + B y⁺ - c)
//! ```
//!
//! Each subproblem is solved in closed form by one of three routes (a
//! factored normal system for quadratic objectives, a coordinate-wise prox
//! when the coupling term is diagonal, or a single prox call when the
//! proximal weight is the linearizing choice `τI - ρM^T M`), and the result is
//! certified through its first-order inclusion before the step is accepted.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{check_dim, Error, Result};
use crate::metric::{GMetric, Iterate};
use crate::operator::{LinearMap, PsdCertificate, PsdMap};
use crate::prox::ProxFunction;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Quadratic objective (factored system) or diagonal coupling (prox).
    Direct,
    /// Proximal weight `τI - ρM^T M`; the subproblem is one prox call.
    Linearized,
}

#[derive(Debug, Clone)]
enum BlockSolver<T: Scalar> {
    Quadratic {
        chol: Cholesky<T, Dyn>,
        weights: DVector<T>,
        centers: DVector<T>,
    },
    Diagonal {
        diag: DVector<T>,
    },
    Linearized {
        tau: T,
    },
}

/// Problem data, algorithm parameters and the pre-factored subproblem solvers.
#[derive(Debug, Clone)]
pub struct SeparableProblem<T: Scalar> {
    a: LinearMap<T>,
    b: LinearMap<T>,
    c: DVector<T>,
    f: ProxFunction<T>,
    g: ProxFunction<T>,
    p: PsdMap<T>,
    q: PsdMap<T>,
    rho: T,
    x_strategy: Strategy,
    y_strategy: Strategy,
    metric: GMetric<T>,
    x_solver: BlockSolver<T>,
    y_solver: BlockSolver<T>,
}

pub struct ProblemBuilder<T: Scalar> {
    a: LinearMap<T>,
    b: LinearMap<T>,
    c: DVector<T>,
    f: ProxFunction<T>,
    g: ProxFunction<T>,
    rho: T,
    p: Option<PsdMap<T>>,
    q: Option<PsdMap<T>>,
    x_tau: Option<T>,
    y_tau: Option<T>,
    x_strategy: Option<Strategy>,
    y_strategy: Option<Strategy>,
}

impl<T: Scalar> ProblemBuilder<T> {
    /// Proximal weight on the x-block (default: zero).
    pub fn p(mut self, p: PsdMap<T>) -> Self {
        self.p = Some(p);
        self
    }

    /// Proximal weight on the y-block (default: zero).
    pub fn q(mut self, q: PsdMap<T>) -> Self {
        self.q = Some(q);
        self
    }

    /// Sets `P = τI - ρA^T A` and the linearized x-strategy.
    pub fn linearize_x(mut self, tau: T) -> Self {
        self.x_tau = Some(tau);
        self
    }

    /// Sets `Q = τI - ρB^T B` and the linearized y-strategy.
    pub fn linearize_y(mut self, tau: T) -> Self {
        self.y_tau = Some(tau);
        self
    }

    pub fn x_strategy(mut self, s: Strategy) -> Self {
        self.x_strategy = Some(s);
        self
    }

    pub fn y_strategy(mut self, s: Strategy) -> Self {
        self.y_strategy = Some(s);
        self
    }

    pub fn build(self) -> Result<SeparableProblem<T>> {
        let ProblemBuilder {
            a,
            b,
            c,
            f,
            g,
            rho,
            p,
            q,
            x_tau,
            y_tau,
            x_strategy,
            y_strategy,
        } = self;
        if !(rho > T::zero()) || !rho.is_finite_value() {
            return Err(Error::InvalidParameter(format!(
                "rho must be positive, got {rho}"
            )));
        }
        check_dim("rows(A) vs dim(c)", c.len(), a.rows())?;
        check_dim("rows(B) vs dim(c)", c.len(), b.rows())?;
        let (nx, ny) = (a.cols(), b.cols());
        f.validate(nx)?;
        g.validate(ny)?;

        let (p, xs) = resolve_weight("x", p, x_tau, x_strategy, &a, rho)?;
        let (q, ys) = resolve_weight("y", q, y_tau, y_strategy, &b, rho)?;
        check_dim("P acts on x-space", nx, p.dim())?;
        check_dim("Q acts on y-space", ny, q.dim())?;

        let x_solver = block_solver("x", xs, &f, &a, &p, rho)?;
        let y_solver = block_solver("y", ys, &g, &b, &q, rho)?;
        let metric = GMetric::from_parts(&p, &q, &b, rho)?;
        Ok(SeparableProblem {
            a,
            b,
            c,
            f,
            g,
            p,
            q,
            rho,
            x_strategy: xs,
            y_strategy: ys,
            metric,
            x_solver,
            y_solver,
        })
    }
}

fn resolve_weight<T: Scalar>(
    which: &'static str,
    given: Option<PsdMap<T>>,
    tau: Option<T>,
    strategy: Option<Strategy>,
    m: &LinearMap<T>,
    rho: T,
) -> Result<(PsdMap<T>, Strategy)> {
    match (given, tau) {
        (Some(_), Some(_)) => Err(Error::InvalidParameter(format!(
            "{which}-block: give either an explicit proximal weight or a linearization tau"
        ))),
        (None, Some(tau)) => {
            if strategy == Some(Strategy::Direct) {
                return Err(Error::InvalidParameter(format!(
                    "{which}-block: linearization tau given with direct strategy"
                )));
            }
            Ok((PsdMap::linearizing(tau, rho, m)?, Strategy::Linearized))
        }
        (given, None) => {
            let w = given.unwrap_or_else(|| PsdMap::zero(m.cols()));
            let s = strategy.unwrap_or(Strategy::Direct);
            if s == Strategy::Linearized {
                check_linearizing(which, &w, m, rho)?;
            }
            Ok((w, s))
        }
    }
}

/// Confirms an explicitly supplied weight really is `τI - ρM^T M`.
fn check_linearizing<T: Scalar>(
    which: &str,
    w: &PsdMap<T>,
    m: &LinearMap<T>,
    rho: T,
) -> Result<()> {
    let PsdCertificate::Linearizing { tau, rho: r, .. } = w.certificate() else {
        return Err(Error::Unsupported(format!(
            "{which}-block: linearized strategy needs a weight built as tau I - rho M^T M"
        )));
    };
    if (*r - rho).abs() > T::lit(1e-12) * rho {
        return Err(Error::InvalidParameter(format!(
            "{which}-block: linearizing weight built with rho = {r}, problem uses {rho}"
        )));
    }
    let n = m.cols();
    for j in 0..n.min(3) {
        let mut e = DVector::zeros(n);
        e[j] = T::one();
        let expect = &e * *tau - m.adjoint_apply_unchecked(&m.apply_unchecked(&e)) * rho;
        let got = w.map().apply_unchecked(&e);
        if (got - &expect).amax() > T::lit(1e-10) * (T::one() + expect.amax()) {
            return Err(Error::InvalidParameter(format!(
                "{which}-block: linearizing weight was built from a different operator"
            )));
        }
    }
    Ok(())
}

fn block_solver<T: Scalar>(
    which: &'static str,
    strategy: Strategy,
    fun: &ProxFunction<T>,
    m: &LinearMap<T>,
    w: &PsdMap<T>,
    rho: T,
) -> Result<BlockSolver<T>> {
    let n = m.cols();
    match strategy {
        Strategy::Linearized => {
            let PsdCertificate::Linearizing { tau, .. } = w.certificate() else {
                unreachable!("checked in resolve_weight")
            };
            Ok(BlockSolver::Linearized { tau: *tau })
        }
        Strategy::Direct => {
            let coupling: DMatrix<T> = m.gram().to_dense() * rho + w.map().to_dense();
            if let Some((weights, centers)) = fun.quadratic_parts(n) {
                let mut sys = coupling;
                for i in 0..n {
                    sys[(i, i)] += weights[i];
                }
                let chol = Cholesky::new(sys).ok_or_else(|| {
                    Error::Factorization(format!(
                        "{which}-subproblem system is not positive definite"
                    ))
                })?;
                return Ok(BlockSolver::Quadratic {
                    chol,
                    weights,
                    centers,
                });
            }
            let scale = coupling.amax();
            let off_diag = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|(i, j)| i != j)
                .fold(T::zero(), |acc, (i, j)| acc.max(coupling[(i, j)].abs()));
            let diag = coupling.diagonal();
            if off_diag <= T::lit(1e-14) * scale && diag.iter().all(|d| *d > T::zero()) {
                Ok(BlockSolver::Diagonal { diag })
            } else {
                Err(Error::Unsupported(format!(
                    "{which}-subproblem: non-quadratic `{}` with a non-diagonal coupling ρM^T M + weight; \
                     use the linearized strategy",
                    fun.kind_name()
                )))
            }
        }
    }
}

impl<T: Scalar> SeparableProblem<T> {
    pub fn builder(
        a: LinearMap<T>,
        b: LinearMap<T>,
        c: DVector<T>,
        f: ProxFunction<T>,
        g: ProxFunction<T>,
        rho: T,
    ) -> ProblemBuilder<T> {
        ProblemBuilder {
            a,
            b,
            c,
            f,
            g,
            rho,
            p: None,
            q: None,
            x_tau: None,
            y_tau: None,
            x_strategy: None,
            y_strategy: None,
        }
    }

    pub fn a(&self) -> &LinearMap<T> {
        &self.a
    }
    pub fn b(&self) -> &LinearMap<T> {
        &self.b
    }
    pub fn c(&self) -> &DVector<T> {
        &self.c
    }
    pub fn f(&self) -> &ProxFunction<T> {
        &self.f
    }
    pub fn g(&self) -> &ProxFunction<T> {
        &self.g
    }
    pub fn p(&self) -> &PsdMap<T> {
        &self.p
    }
    pub fn q(&self) -> &PsdMap<T> {
        &self.q
    }
    pub fn rho(&self) -> T {
        self.rho
    }
    pub fn x_strategy(&self) -> Strategy {
        self.x_strategy
    }
    pub fn y_strategy(&self) -> Strategy {
        self.y_strategy
    }
    pub fn metric(&self) -> &GMetric<T> {
        &self.metric
    }
    pub fn x_dim(&self) -> usize {
        self.a.cols()
    }
    pub fn y_dim(&self) -> usize {
        self.b.cols()
    }
    pub fn dual_dim(&self) -> usize {
        self.c.len()
    }

    /// `A x + B y - c`.
    pub fn constraint_residual(&self, x: &DVector<T>, y: &DVector<T>) -> Result<DVector<T>> {
        Ok(self.a.apply(x)? + self.b.apply(y)? - &self.c)
    }

    /// `γ = max{2||P||, 2ρ||A||², ||Q||, 1/ρ}`, the constant bounding the
    /// squared KKT residual by `γ ||Δu||²_G`.
    pub fn gamma(&self) -> T {
        let two = T::lit(2.0);
        let na = self.a.norm_exact();
        [
            two * self.p.norm_exact(),
            two * self.rho * na * na,
            self.q.norm_exact(),
            T::one() / self.rho,
        ]
        .into_iter()
        .fold(T::zero(), |m, v| m.max(v))
    }

    pub fn g_seminorm_sq(&self, u: &Iterate<T>) -> Result<T> {
        self.metric.seminorm_sq(u)
    }
}

/// `(x^k, y^k, λ^k)` with the step differences that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PadmmState<T: Scalar> {
    pub k: usize,
    pub x: DVector<T>,
    pub y: DVector<T>,
    pub lambda: DVector<T>,
    pub dx: DVector<T>,
    pub dy: DVector<T>,
    pub dlambda: DVector<T>,
}

impl<T: Scalar> PadmmState<T> {
    pub fn new(x: DVector<T>, y: DVector<T>, lambda: DVector<T>) -> Self {
        let (nx, ny, m) = (x.len(), y.len(), lambda.len());
        PadmmState {
            k: 0,
            x,
            y,
            lambda,
            dx: DVector::zeros(nx),
            dy: DVector::zeros(ny),
            dlambda: DVector::zeros(m),
        }
    }

    pub fn zeros(problem: &SeparableProblem<T>) -> Self {
        PadmmState::new(
            DVector::zeros(problem.x_dim()),
            DVector::zeros(problem.y_dim()),
            DVector::zeros(problem.dual_dim()),
        )
    }

    pub fn from_iterate(u: &Iterate<T>) -> Self {
        PadmmState::new(u.x.clone(), u.y.clone(), u.lambda.clone())
    }

    pub fn iterate(&self) -> Iterate<T> {
        Iterate::new(self.x.clone(), self.y.clone(), self.lambda.clone())
    }

    pub fn delta(&self) -> Iterate<T> {
        Iterate::new(self.dx.clone(), self.dy.clone(), self.dlambda.clone())
    }

    fn check(&self, problem: &SeparableProblem<T>) -> Result<()> {
        check_dim("state x", problem.x_dim(), self.x.len())?;
        check_dim("state y", problem.y_dim(), self.y.len())?;
        check_dim("state lambda", problem.dual_dim(), self.lambda.len())
    }
}

/// Solves `min fun(v) + <λ, M v> + ρ/2 ||M v + s||² + ½ ||v - prev||²_W`.
#[allow(clippy::too_many_arguments)]
fn solve_block<T: Scalar>(
    which: &'static str,
    solver: &BlockSolver<T>,
    fun: &ProxFunction<T>,
    m: &LinearMap<T>,
    w: &PsdMap<T>,
    rho: T,
    lambda: &DVector<T>,
    shift: &DVector<T>,
    prev: &DVector<T>,
) -> Result<DVector<T>> {
    let next = match solver {
        BlockSolver::Quadratic {
            chol,
            weights,
            centers,
        } => {
            let rhs = -(m.adjoint_apply_unchecked(&(lambda + shift * rho)))
                + w.map().apply_unchecked(prev)
                + weights.component_mul(centers);
            chol.solve(&rhs)
        }
        BlockSolver::Diagonal { diag } => {
            let r = -(m.adjoint_apply_unchecked(&(lambda + shift * rho)))
                + w.map().apply_unchecked(prev);
            let target = r.component_div(diag);
            let steps = diag.map(|d| T::one() / d);
            fun.prox_diag(&steps, &target)?
        }
        BlockSolver::Linearized { tau } => {
            let inner = lambda + (m.apply_unchecked(prev) + shift) * rho;
            let target = prev - m.adjoint_apply_unchecked(&inner) / *tau;
            fun.prox(T::one() / *tau, &target)?
        }
    };
    certify_block(which, fun, m, w, rho, lambda, shift, prev, &next)?;
    Ok(next)
}

/// Distance from `-∇(smooth part)` to `∂fun(next)`, relative to the size of
/// the terms, must be below [`Scalar::certify_tol`].
#[allow(clippy::too_many_arguments)]
fn certify_block<T: Scalar>(
    which: &'static str,
    fun: &ProxFunction<T>,
    m: &LinearMap<T>,
    w: &PsdMap<T>,
    rho: T,
    lambda: &DVector<T>,
    shift: &DVector<T>,
    prev: &DVector<T>,
    next: &DVector<T>,
) -> Result<()> {
    let t1 = m.adjoint_apply_unchecked(lambda);
    let t2 = m.adjoint_apply_unchecked(&((m.apply_unchecked(next) + shift) * rho));
    let t3 = w.map().apply_unchecked(&(next - prev));
    let grad = &t1 + &t2 + &t3;
    let residual = fun.subdifferential_distance(next, &(-grad))?;
    let scale = T::one() + t1.norm().max(t2.norm()).max(t3.norm());
    if residual <= T::certify_tol() * scale {
        Ok(())
    } else {
        Err(Error::Certification {
            which,
            residual: residual.to_f64_lossy(),
        })
    }
}

pub fn solve_x_subproblem<T: Scalar>(
    problem: &SeparableProblem<T>,
    state: &PadmmState<T>,
) -> Result<DVector<T>> {
    state.check(problem)?;
    let shift = problem.b.apply_unchecked(&state.y) - &problem.c;
    solve_block(
        "x",
        &problem.x_solver,
        &problem.f,
        &problem.a,
        &problem.p,
        problem.rho,
        &state.lambda,
        &shift,
        &state.x,
    )
}

pub fn solve_y_subproblem<T: Scalar>(
    problem: &SeparableProblem<T>,
    state: &PadmmState<T>,
    x_new: &DVector<T>,
) -> Result<DVector<T>> {
    state.check(problem)?;
    check_dim("x_new", problem.x_dim(), x_new.len())?;
    let shift = problem.a.apply_unchecked(x_new) - &problem.c;
    solve_block(
        "y",
        &problem.y_solver,
        &problem.g,
        &problem.b,
        &problem.q,
        problem.rho,
        &state.lambda,
        &shift,
        &state.y,
    )
}

/// One proximal ADMM iteration.
pub fn step<T: Scalar>(
    problem: &SeparableProblem<T>,
    state: &PadmmState<T>,
) -> Result<PadmmState<T>> {
    let x = solve_x_subproblem(problem, state)?;
    let y = solve_y_subproblem(problem, state, &x)?;
    let dlambda = problem.constraint_residual(&x, &y)? * problem.rho;
    let lambda = &state.lambda + &dlambda;
    Ok(PadmmState {
        k: state.k + 1,
        dx: &x - &state.x,
        dy: &y - &state.y,
        x,
        y,
        lambda,
        dlambda,
    })
}

/// The canonical element `(ρA^T BΔy - PΔx, -QΔy, Ax+By-c)` of the KKT
/// multifunction at the current iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResidualCertificate<T: Scalar> {
    pub rx: DVector<T>,
    pub ry: DVector<T>,
    pub rfeas: DVector<T>,
    pub norm_sq: T,
}

pub fn kkt_certificate<T: Scalar>(
    problem: &SeparableProblem<T>,
    state: &PadmmState<T>,
) -> Result<KktResidualCertificate<T>> {
    if state.k == 0 {
        return Err(Error::NoStepHistory);
    }
    state.check(problem)?;
    let rho = problem.rho;
    let rx = problem
        .a
        .adjoint_apply_unchecked(&problem.b.apply_unchecked(&state.dy))
        * rho
        - problem.p.map().apply_unchecked(&state.dx);
    let ry = -problem.q.map().apply_unchecked(&state.dy);
    let rfeas = problem.constraint_residual(&state.x, &state.y)?;
    let norm_sq = rx.norm_squared() + ry.norm_squared() + rfeas.norm_squared();
    Ok(KktResidualCertificate {
        rx,
        ry,
        rfeas,
        norm_sq,
    })
}

/// `(H(x, y), ||A x + B y - c||)`; `H` is `+inf` outside the domain.
pub fn objective_and_feasibility<T: Scalar>(
    problem: &SeparableProblem<T>,
    x: &DVector<T>,
    y: &DVector<T>,
) -> Result<(T, T)> {
    let r = problem.constraint_residual(x, y)?;
    Ok((problem.f.value(x) + problem.g.value(y), r.norm()))
}

#[derive(Debug, Clone, Copy)]
pub struct StopRule<T: Scalar> {
    pub max_iter: usize,
    /// Stop once `||Δu^k||_G <= tol`.
    pub tol: T,
}

/// A KKT point used to evaluate distance-based diagnostics.
#[derive(Debug, Clone)]
pub struct Reference<T: Scalar> {
    pub point: Iterate<T>,
    pub h_star: T,
}

impl<T: Scalar> Reference<T> {
    pub fn new(problem: &SeparableProblem<T>, point: Iterate<T>) -> Result<Self> {
        let (h_star, _) = objective_and_feasibility(problem, &point.x, &point.y)?;
        Ok(Reference { point, h_star })
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions<T: Scalar> {
    pub store_iterates: bool,
    pub reference: Option<Reference<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T: Scalar> {
    pub k: usize,
    pub du_g2: T,
    pub objective: T,
    pub feasibility: T,
    /// `None` at `k = 0`, where step differences are undefined.
    pub kkt_norm2: Option<T>,
    pub dist_ref_g2: Option<T>,
    /// Euclidean `||u^k - u_ref||`.
    pub dist_ref: Option<T>,
    /// `H(x^k, y^k) - H_* + <λ_ref, A x^k + B y^k - c>`.
    pub lagrangian_gap: Option<T>,
    /// `σ_f ||x^k - x_ref||² + σ_g ||y^k - y_ref||²`.
    pub strong_term: Option<T>,
    pub dy_q2: T,
}

#[derive(Debug, Clone)]
pub struct IterationTrace<T: Scalar> {
    pub records: Vec<TraceRecord<T>>,
    pub iterates: Option<Vec<Iterate<T>>>,
    pub gamma: T,
    pub h_star: Option<T>,
    pub converged: bool,
    pub final_state: PadmmState<T>,
}

impl<T: Scalar> IterationTrace<T> {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn column(&self, pick: impl Fn(&TraceRecord<T>) -> Option<T>) -> Vec<Option<T>> {
        self.records.iter().map(pick).collect()
    }
}

fn make_record<T: Scalar>(
    problem: &SeparableProblem<T>,
    state: &PadmmState<T>,
    reference: Option<&Reference<T>>,
) -> Result<TraceRecord<T>> {
    let (objective, _) = objective_and_feasibility(problem, &state.x, &state.y)?;
    let resid = problem.constraint_residual(&state.x, &state.y)?;
    let du_g2 = problem.metric.seminorm_sq(&state.delta())?;
    let dy_q2 = problem.q.quad_form(&state.dy)?;
    let kkt_norm2 = if state.k == 0 {
        None
    } else {
        Some(kkt_certificate(problem, state)?.norm_sq)
    };
    let (dist_ref_g2, dist_ref, lagrangian_gap, strong_term) = match reference {
        Some(r) => {
            let diff = state.iterate().sub(&r.point);
            let g2 = problem.metric.seminorm_sq(&diff)?;
            let gap = objective - r.h_star + r.point.lambda.dot(&resid);
            let strong = problem.f.modulus() * diff.x.norm_squared()
                + problem.g.modulus() * diff.y.norm_squared();
            (Some(g2), Some(diff.norm()), Some(gap), Some(strong))
        }
        None => (None, None, None, None),
    };
    Ok(TraceRecord {
        k: state.k,
        du_g2,
        objective,
        feasibility: resid.norm(),
        kkt_norm2,
        dist_ref_g2,
        dist_ref,
        lagrangian_gap,
        strong_term,
        dy_q2,
    })
}

/// Iterates until `||Δu^k||_G <= tol` or `max_iter` steps.
pub fn run<T: Scalar>(
    problem: &SeparableProblem<T>,
    init: &PadmmState<T>,
    stop: StopRule<T>,
    options: &RunOptions<T>,
) -> Result<IterationTrace<T>> {
    if stop.max_iter == 0 {
        return Err(Error::InvalidParameter(
            "max_iter must be at least 1".into(),
        ));
    }
    init.check(problem)?;
    let reference = options.reference.as_ref();
    let mut state = init.clone();
    let mut records = vec![make_record(problem, &state, reference)?];
    let mut iterates = options.store_iterates.then(|| vec![state.iterate()]);
    let mut converged = false;
    for _ in 0..stop.max_iter {
        state = step(problem, &state)?;
        let rec = make_record(problem, &state, reference)?;
        let done = rec.du_g2.max(T::zero()).sqrt() <= stop.tol;
        records.push(rec);
        if let Some(its) = iterates.as_mut() {
            its.push(state.iterate());
        }
        if done {
            converged = true;
            break;
        }
    }
    Ok(IterationTrace {
        records,
        iterates,
        gamma: problem.gamma(),
        h_star: reference.map(|r| r.h_star),
        converged,
        final_state: state,
    })
}

/// Running averages `(1/k) Σ_{j=1..k} (x^j, y^j)`.
pub fn ergodic_iterate<T: Scalar>(
    trace: &IterationTrace<T>,
    k: usize,
) -> Result<(DVector<T>, DVector<T>)> {
    let its = trace.iterates.as_ref().ok_or(Error::IteratesNotStored)?;
    let len = its.len().saturating_sub(1);
    if k == 0 || k > len {
        return Err(Error::IndexOutOfRange { index: k, len });
    }
    let mut xs = DVector::zeros(its[0].x.len());
    let mut ys = DVector::zeros(its[0].y.len());
    for u in &its[1..=k] {
        xs += &u.x;
        ys += &u.y;
    }
    let kk = T::from_usize_lossy(k);
    Ok((xs / kk, ys / kk))
}
