//! One-dimensional gravity surveying: the first-kind integral equation
//! `∫₀¹ κ(s, t) x(t) dt = b(s)` with `κ(s, t) = d (d² + (s - t)²)^{-3/2}`,
//! discretized by the trapezoidal rule and solved by the reduced
//! regularizing scheme.
//!
//! Functions on the grid are measured in the trapezoid-weighted norm
//! `||v||² = Σ w_j v_j²`. With `D = diag(√w)` the map `v ↦ D v` is an
//! isometry onto plain Euclidean space, and the quadrature operator
//! `A = K W` becomes the symmetric matrix `D K D`. Everything the solver sees
//! ("plain coordinates") lives on that side, so Euclidean norms there equal
//! weighted norms of grid functions.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::illposed::{
    run_regularized, InverseProblemSpec, RegState, RegStop, RegTrace, Scheme, SourceCertificate,
    Truth,
};
use crate::operator::{LinearMap, PsdMap};
use crate::prox::ProxFunction;

pub const DEFAULT_N: usize = 600;
pub const DEFAULT_DEPTH: f64 = 0.1;
pub const DEFAULT_RHO1: f64 = 10.0;
pub const DEFAULT_RHO2: f64 = 1.0;
/// Noise levels of the standard study.
pub const STANDARD_LEVELS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
/// Extra levels run only on request; they need up to ~3·10⁵ iterations.
pub const DEEP_LEVELS: [f64; 3] = [1e-5, 1e-6, 1e-7];
/// A row is complete once the error at the cap exceeds the minimum by this
/// relative margin, i.e. the curve has turned upward.
pub const TURN_MARGIN: f64 = 1e-3;

/// `d (d² + (s - t)²)^{-3/2}`.
pub fn kernel(s: f64, t: f64, d: f64) -> f64 {
    d * (d * d + (s - t) * (s - t)).powf(-1.5)
}

/// Grid `(j - 1)/(N - 1)` and trapezoid weights `(h/2, h, …, h, h/2)`.
pub fn grid_and_weights(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid size must be at least 2, got {n}"
        )));
    }
    let h = 1.0 / (n - 1) as f64;
    let grid = (0..n).map(|j| j as f64 * h).collect();
    let weights = (0..n)
        .map(|j| if j == 0 || j == n - 1 { h / 2.0 } else { h })
        .collect();
    Ok((grid, weights))
}

/// `A_ij = w_j κ(t_i, s_j)`, the quadrature operator on grid values.
pub fn build_kernel_matrix(n: usize, d: f64) -> Result<DMatrix<f64>> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "depth d must be positive, got {d}"
        )));
    }
    let (grid, w) = grid_and_weights(n)?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        w[j] * kernel(grid[i], grid[j], d)
    }))
}

/// `D A D^{-1}` with `D = diag(√w)`, which is symmetric.
pub fn plain_operator(a: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| sw[i] * a[(i, j)] / sw[j])
}

/// `ω†(t) = t³ (0.9 - t)(t - 0.35)`.
pub fn omega_true(t: f64) -> f64 {
    t.powi(3) * (0.9 - t) * (t - 0.35)
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub x_true: DVector<f64>,
    pub b: DVector<f64>,
    pub certificate: SourceCertificate<f64>,
}

/// `x† = max(A^T ω, 0)`, `b = A x†` and the certificate `μ† = x†`,
/// `ν† = A^T ω - x†`, `λ† = -ω` (all in plain coordinates).
pub fn make_ground_truth(a: &DMatrix<f64>, omega: &DVector<f64>) -> Result<GroundTruth> {
    if omega.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "omega length",
            expected: a.nrows(),
            got: omega.len(),
        });
    }
    let atw = a.tr_mul(omega);
    let x_true = atw.map(|v| v.max(0.0));
    let b = a * &x_true;
    let certificate = SourceCertificate {
        nu: &atw - &x_true,
        mu: x_true.clone(),
        lambda: -omega,
        x_true: x_true.clone(),
    };
    Ok(GroundTruth {
        x_true,
        b,
        certificate,
    })
}

/// `b + δ ξ` with `ξ` standard normal, normalized to unit length.
pub fn add_noise(b: &DVector<f64>, delta: f64, rng: &mut ChaCha8Rng) -> Result<DVector<f64>> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise level must be nonnegative, got {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok(b.clone());
    }
    let xi: DVector<f64> = DVector::from_fn(b.len(), |_, _| StandardNormal.sample(rng));
    let norm = xi.norm();
    Ok(b + xi * (delta / norm))
}

/// The PRNG stream for the level at `index`, independent of scheduling.
pub fn level_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Default iteration cap for a noise level.
pub fn default_cap(delta: f64) -> usize {
    if delta >= 1e-2 * (1.0 - 1e-9) {
        1_000
    } else if delta >= 1e-4 * (1.0 - 1e-9) {
        10_000
    } else if delta >= 1e-5 * (1.0 - 1e-9) {
        100_000
    } else {
        1_000_000
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GravityConfig {
    pub n: usize,
    pub d: f64,
    pub rho1: f64,
    /// Splitting penalty of the reduced scheme.
    pub rho2: f64,
    /// `Q = q_scale · I`.
    pub q_scale: f64,
    pub seed: u64,
    pub levels: Vec<f64>,
    /// Per-level caps; empty means [`default_cap`].
    pub caps: Vec<usize>,
}

impl Default for GravityConfig {
    fn default() -> Self {
        GravityConfig {
            n: DEFAULT_N,
            d: DEFAULT_DEPTH,
            rho1: DEFAULT_RHO1,
            rho2: DEFAULT_RHO2,
            q_scale: 0.0,
            seed: 0,
            levels: STANDARD_LEVELS.to_vec(),
            caps: Vec::new(),
        }
    }
}

impl GravityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "n must be at least 2, got {}",
                self.n
            )));
        }
        for (name, v) in [("d", self.d), ("rho1", self.rho1), ("rho2", self.rho2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.q_scale >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "q_scale must be nonnegative, got {}",
                self.q_scale
            )));
        }
        if let Some(d) = self.levels.iter().find(|d| !(**d > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "noise levels must be positive, got {d}"
            )));
        }
        if self.levels.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter(
                "noise levels must be strictly descending".into(),
            ));
        }
        if !self.caps.is_empty() && self.caps.len() != self.levels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} caps given for {} levels",
                self.caps.len(),
                self.levels.len()
            )));
        }
        if self.caps.contains(&0) {
            return Err(Error::InvalidParameter(
                "iteration caps must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn cap(&self, index: usize) -> usize {
        self.caps
            .get(index)
            .copied()
            .unwrap_or_else(|| default_cap(self.levels[index]))
    }
}

/// The discretized problem in plain coordinates with its exact data.
#[derive(Debug, Clone)]
pub struct GravityProblem {
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    /// `D A D^{-1}`.
    pub operator: DMatrix<f64>,
    pub omega: DVector<f64>,
    pub truth: GroundTruth,
    /// Reduced-scheme spec carrying the exact data `b` and `δ = 0`.
    pub spec: InverseProblemSpec<f64>,
}

impl GravityProblem {
    pub fn build(config: &GravityConfig) -> Result<Self> {
        config.validate()?;
        let (grid, weights) = grid_and_weights(config.n)?;
        let operator = plain_operator(&build_kernel_matrix(config.n, config.d)?, &weights);
        let omega = DVector::from_fn(config.n, |j, _| weights[j].sqrt() * omega_true(grid[j]));
        let truth = make_ground_truth(&operator, &omega)?;
        let q = if config.q_scale > 0.0 {
            PsdMap::scaled_identity(config.n, config.q_scale)?
        } else {
            PsdMap::zero(config.n)
        };
        let spec = InverseProblemSpec::new(
            LinearMap::dense(operator.clone()),
            LinearMap::identity(config.n),
            ProxFunction::NonNegative,
            ProxFunction::half_norm_sq(config.n),
            (config.rho1, 1.0, config.rho2),
            q,
            truth.b.clone(),
            0.0,
        )?;
        Ok(GravityProblem {
            grid,
            weights,
            operator,
            omega,
            truth,
            spec,
        })
    }

    /// Grid values of a plain-coordinate vector.
    pub fn to_grid_values(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(v.len(), |j, _| v[j] / self.weights[j].sqrt())
    }

    /// Runs the reduced scheme on `b + δξ` from the zero start.
    pub fn run_level(&self, delta: f64, rng: &mut ChaCha8Rng, cap: usize) -> Result<LevelRun> {
        let b_delta = add_noise(&self.truth.b, delta, rng)?;
        let spec = self.spec.with_data(b_delta, delta)?;
        let trace = run_regularized(
            &spec,
            &RegState::zeros(&spec, Scheme::Reduced),
            RegStop::MaxIter(cap),
            Truth {
                x_true: Some(&self.truth.x_true),
                certificate: Some(&self.truth.certificate),
            },
        )?;
        let norm = self.truth.x_true.norm();
        let rel_errors = trace
            .records
            .iter()
            .map(|r| r.err_x.unwrap_or(f64::NAN) / norm)
            .collect();
        Ok(LevelRun {
            delta,
            rel_errors,
            trace,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LevelRun {
    pub delta: f64,
    /// `||x^k - x†|| / ||x†||` for `k = 0..=cap`.
    pub rel_errors: Vec<f64>,
    pub trace: RegTrace<f64>,
}

impl LevelRun {
    pub fn row(&self) -> Table1Row {
        let (iter_min, err_min) = self.rel_errors.iter().enumerate().skip(1).fold(
            (1, f64::INFINITY),
            |(bk, be), (k, e)| if *e < be { (k, *e) } else { (bk, be) },
        );
        let last = *self.rel_errors.last().unwrap_or(&f64::NAN);
        Table1Row {
            delta: self.delta,
            err_min,
            iter_min,
            ratio_half: err_min / self.delta.sqrt(),
            ratio_quarter: err_min / self.delta.powf(0.25),
            complete: last > err_min * (1.0 + TURN_MARGIN),
        }
    }

    /// Relative error after `k` iterations.
    pub fn error_at(&self, k: usize) -> Option<f64> {
        self.rel_errors.get(k).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub delta: f64,
    pub err_min: f64,
    pub iter_min: usize,
    pub ratio_half: f64,
    pub ratio_quarter: f64,
    /// `false` if the error was still at its minimum when the cap was hit.
    #[serde(skip)]
    pub complete: bool,
}

#[derive(Debug, Clone)]
pub struct Table1Study {
    pub problem: GravityProblem,
    pub runs: Vec<LevelRun>,
}

impl Table1Study {
    pub fn rows(&self) -> Vec<Table1Row> {
        self.runs.iter().map(LevelRun::row).collect()
    }

    pub fn complete(&self) -> bool {
        self.runs.iter().all(|r| r.row().complete)
    }
}

/// Builds the problem and runs every level in parallel.
pub fn run_table1(config: &GravityConfig) -> Result<Table1Study> {
    let problem = GravityProblem::build(config)?;
    let runs = config
        .levels
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| problem.run_level(delta, &mut level_rng(config.seed, i), config.cap(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Table1Study { problem, runs })
}

/// Centered moving average; the window shrinks at the ends.
pub fn smooth(series: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..series.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(series.len());
            series[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiConvergence {
    pub min_index: usize,
    pub min_value: f64,
    pub final_value: f64,
    /// `final / min - 1`.
    pub rise: f64,
    pub interior: bool,
}

/// Locates the minimum of the smoothed error curve and the rise after it.
pub fn semi_convergence(errors: &[f64], window: usize) -> Result<SemiConvergence> {
    if errors.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} error values",
            errors.len()
        )));
    }
    let s = smooth(errors, window);
    let (min_index, min_value) = s.iter().enumerate().fold(
        (0, f64::INFINITY),
        |(bi, bv), (i, v)| if *v < bv { (i, *v) } else { (bi, bv) },
    );
    let final_value = *s.last().unwrap();
    Ok(SemiConvergence {
        min_index,
        min_value,
        final_value,
        rise: final_value / min_value - 1.0,
        interior: min_index > 0 && min_index + 1 < s.len(),
    })
}

/// Slope of `log err` against `log δ` by least squares.
pub fn rate_slope(deltas: &[f64], errors: &[f64]) -> Result<f64> {
    if deltas.len() != errors.len() || deltas.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two (delta, error) pairs".into(),
        ));
    }
    if let Some(i) = deltas.iter().chain(errors).position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositive(i));
    }
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(crate::diagnostics::linear_regression(&xs, &ys).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        assert!((kernel(0.0, 0.0, 0.1) - 100.0).abs() < 1e-10);
        let k01 = kernel(0.0, 1.0, 0.1);
        assert!((k01 - 0.1 * 1.01f64.powf(-1.5)).abs() < 1e-15);
        assert!((k01 - 0.098518).abs() < 1e-6);
    }

    #[test]
    fn three_point_assembly() {
        let a = build_kernel_matrix(3, 0.1).unwrap();
        let t = [0.0f64, 0.5, 1.0];
        let w = [0.25, 0.5, 0.25];
        for i in 0..3 {
            for j in 0..3 {
                let k = 0.1 / (0.01 + (t[i] - t[j]) * (t[i] - t[j])).powf(1.5);
                assert!((a[(i, j)] - w[j] * k).abs() < 1e-12);
            }
        }
        // A_ij w_i = A_ji w_j for a symmetric kernel.
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[(i, j)] * w[i] - a[(j, i)] * w[j]).abs() < 1e-12);
            }
        }
        assert!(build_kernel_matrix(1, 0.1).is_err());
        assert!(build_kernel_matrix(3, 0.0).is_err());
    }

    #[test]
    fn plain_operator_is_symmetric_isometry() {
        let n = 7;
        let (_, w) = grid_and_weights(n).unwrap();
        let a = build_kernel_matrix(n, 0.1).unwrap();
        let p = plain_operator(&a, &w);
        assert!((&p - p.transpose()).amax() < 1e-12);
        // Weighted norm of A v equals plain norm of D A v.
        let v = DVector::from_fn(n, |i, _| (i as f64).sin());
        let av = &a * &v;
        let weighted: f64 = (0..n).map(|i| w[i] * av[i] * av[i]).sum::<f64>().sqrt();
        let dv = DVector::from_fn(n, |i, _| w[i].sqrt() * v[i]);
        assert!(((&p * dv).norm() - weighted).abs() < 1e-12);
    }

    #[test]
    fn ground_truth_certificate() {
        let cfg = GravityConfig {
            n: 60,
            ..Default::default()
        };
        let g = GravityProblem::build(&cfg).unwrap();
        let c = &g.truth.certificate;
        assert!(c.nu.iter().all(|v| *v <= 0.0));
        assert!(c
            .nu
            .iter()
            .zip(g.truth.x_true.iter())
            .all(|(n, x)| n * x == 0.0));
        let id = &c.mu + &c.nu + g.operator.tr_mul(&c.lambda);
        assert!(id.amax() <= 1e-10);
        c.validate(&g.spec).unwrap();
        let x = g.to_grid_values(&g.truth.x_true);
        assert!(x.iter().all(|v| *v >= 0.0) && x.amax() > 0.0);
        assert!(x.iter().any(|v| *v == 0.0));
        assert!((&g.truth.b - &g.operator * &g.truth.x_true).amax() == 0.0);
    }

    #[test]
    fn noise_has_exact_level_and_is_deterministic() {
        let b = DVector::from_fn(50, |i, _| i as f64);
        for seed in 0..5 {
            let n1 = add_noise(&b, 1e-3, &mut level_rng(seed, 2)).unwrap();
            let n2 = add_noise(&b, 1e-3, &mut level_rng(seed, 2)).unwrap();
            assert_eq!(n1, n2);
            assert!(((&n1 - &b).norm() / 1e-3 - 1.0).abs() < 1e-9);
        }
        assert_eq!(add_noise(&b, 0.0, &mut level_rng(0, 0)).unwrap(), b);
        let other = add_noise(&b, 1e-3, &mut level_rng(0, 3)).unwrap();
        assert_ne!(other, add_noise(&b, 1e-3, &mut level_rng(0, 2)).unwrap());
    }

    #[test]
    fn caps_and_config() {
        assert_eq!(default_cap(1e-1), 1_000);
        assert_eq!(default_cap(1e-2), 1_000);
        assert_eq!(default_cap(1e-3), 10_000);
        assert_eq!(default_cap(1e-4), 10_000);
        assert_eq!(default_cap(1e-5), 100_000);
        let mut cfg = GravityConfig::default();
        cfg.validate().unwrap();
        cfg.levels = vec![1e-3, 1e-2];
        assert!(cfg.validate().is_err());
        cfg.levels = vec![1e-2];
        cfg.rho1 = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn smoothing_and_semi_convergence() {
        assert_eq!(smooth(&[1.0, 2.0, 3.0], 3), vec![1.5, 2.0, 2.5]);
        let curve: Vec<f64> = (0..50)
            .map(|k| 1.0 / (k + 1) as f64 + 0.01 * k as f64)
            .collect();
        let sc = semi_convergence(&curve, 5).unwrap();
        assert!(sc.interior && sc.rise > 0.1);
        let mono: Vec<f64> = (0..50).map(|k| 1.0 / (k + 1) as f64).collect();
        assert!(!semi_convergence(&mono, 5).unwrap().interior);
    }

    #[test]
    fn slope_of_power_law() {
        let d = [1e-1, 1e-2, 1e-3];
        let e: Vec<f64> = d.iter().map(|x: &f64| 3.0 * x.powf(0.25)).collect();
        assert!((rate_slope(&d, &e).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn small_study_rows_are_consistent() {
        let cfg = GravityConfig {
            n: 80,
            levels: vec![1e-1, 1e-2],
            caps: vec![200, 200],
            seed: 3,
            ..Default::default()
        };
        let a = run_table1(&cfg).unwrap();
        let b = run_table1(&cfg).unwrap();
        for (ra, rb) in a.rows().iter().zip(b.rows()) {
            assert_eq!(*ra, rb);
            assert!(ra.err_min > 0.0 && ra.iter_min >= 1);
            assert!((ra.ratio_half - ra.err_min / ra.delta.sqrt()).abs() <= 1e-12 * ra.ratio_half);
            assert!(
                (ra.ratio_quarter - ra.err_min / ra.delta.powf(0.25)).abs()
                    <= 1e-12 * ra.ratio_quarter
            );
        }
    }
    #[test]
    fn general_scheme_with_difference_penalty_decreases_energy() {
        let n = 60;
        let g = GravityProblem::build(&GravityConfig {
            n,
            ..Default::default()
        })
        .unwrap();
        let diff = DMatrix::from_fn(n - 1, n, |i, j| {
            if j == i + 1 {
                1.0
            } else if j == i {
                -1.0
            } else {
                0.0
            }
        });
        let spec = InverseProblemSpec::new(
            LinearMap::dense(g.operator.clone()),
            LinearMap::dense(diff),
            ProxFunction::NonNegative,
            ProxFunction::half_norm_sq(n - 1),
            (10.0, 1.0, 1.0),
            PsdMap::zero(n),
            g.truth.b.clone(),
            0.0,
        )
        .unwrap();
        let spec = spec
            .with_data(
                add_noise(&g.truth.b, 1e-3, &mut level_rng(0, 0)).unwrap(),
                1e-3,
            )
            .unwrap();
        assert!(!spec.supports_reduced());
        let trace = run_regularized(
            &spec,
            &RegState::zeros(&spec, Scheme::General),
            RegStop::MaxIter(300),
            Truth {
                x_true: Some(&g.truth.x_true),
                certificate: None,
            },
        )
        .unwrap();
        let es: Vec<f64> = trace.records[1..]
            .iter()
            .map(|r| r.energy.unwrap())
            .collect();
        assert!(es.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-14));
        let (_, err) = trace.error_minimum().unwrap();
        assert!(err < g.truth.x_true.norm());
    }

    #[test]
    fn reduced_scheme_runs_in_single_precision() {
        let n = 40;
        let g = GravityProblem::build(&GravityConfig {
            n,
            ..Default::default()
        })
        .unwrap();
        let to32 = |v: &DVector<f64>| v.map(|x| x as f32);
        let spec = InverseProblemSpec::<f32>::new(
            LinearMap::dense(g.operator.map(|x| x as f32)),
            LinearMap::identity(n),
            ProxFunction::NonNegative,
            ProxFunction::half_norm_sq(n),
            (10.0, 1.0, 1.0),
            PsdMap::zero(n),
            to32(&g.truth.b),
            0.0,
        )
        .unwrap();
        let x_true = to32(&g.truth.x_true);
        let trace = run_regularized(
            &spec,
            &RegState::zeros(&spec, Scheme::Reduced),
            RegStop::MaxIter(200),
            Truth {
                x_true: Some(&x_true),
                certificate: None,
            },
        )
        .unwrap();
        let (_, err) = trace.error_minimum().unwrap();
        assert!(err.is_finite() && err < 0.5 * x_true.norm());
    }
}
