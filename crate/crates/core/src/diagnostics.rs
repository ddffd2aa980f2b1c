//! Rate fitting and pointwise verification of the convergence inequalities
//! on recorded traces.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::padmm::IterationTrace;
use crate::scalar::Scalar;

/// Minimum number of points accepted by [`fit_rate`].
pub const MIN_SERIES_LEN: usize = 20;
/// A geometric ratio must stay this far below one to count as linear decay.
pub const LINEAR_RATIO_MARGIN: f64 = 1e-3;
/// Goodness-of-fit needed to accept a geometric model.
pub const LINEAR_R2: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RateModel {
    /// `C k^(-β)`
    Power,
    /// `C q^k`
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub model: RateModel,
    /// `β` for the power model, `q` for the geometric one.
    pub param: f64,
    #[serde(rename = "r2")]
    pub r_squared: f64,
    /// Half-open index range `[start, end)` of the points used.
    pub window: (usize, usize),
    /// Set when the series is identically zero; nothing is fitted.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub exact_convergence: bool,
}

/// Least-squares fit in the log domain over the tail half of `series`.
///
/// Index `i` of the series is iteration `k = i + 1` for the power model.
pub fn fit_rate(series: &[f64], model: RateModel) -> Result<RateFit> {
    fit_rate_from(series, model, series.len() / 2)
}

/// As [`fit_rate`] with an explicit window start.
pub fn fit_rate_from(series: &[f64], model: RateModel, start: usize) -> Result<RateFit> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::InsufficientData(format!(
            "series has {n} points, need at least {MIN_SERIES_LEN}"
        )));
    }
    if series.iter().all(|v| *v == 0.0) {
        return Ok(RateFit {
            model,
            param: match model {
                RateModel::Power => f64::INFINITY,
                RateModel::Geometric => 0.0,
            },
            r_squared: 1.0,
            window: (0, n),
            exact_convergence: true,
        });
    }
    if let Some(i) = series.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositive(i));
    }
    if start + 2 > n {
        return Err(Error::InsufficientData(format!(
            "window start {start} leaves fewer than 2 points"
        )));
    }
    let xs: Vec<f64> = (start..n)
        .map(|i| match model {
            RateModel::Power => ((i + 1) as f64).ln(),
            RateModel::Geometric => i as f64,
        })
        .collect();
    let ys: Vec<f64> = series[start..].iter().map(|v| v.ln()).collect();
    let (slope, r2) = linear_regression(&xs, &ys);
    let param = match model {
        RateModel::Power => -slope,
        RateModel::Geometric => slope.exp(),
    };
    Ok(RateFit {
        model,
        param,
        r_squared: r2,
        window: (start, n),
        exact_convergence: false,
    })
}

/// Ordinary least squares `y ≈ a + b x`; returns `(b, r²)`.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, r2)
}

/// Result of one inequality checked at every applicable index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub pass: bool,
    /// Largest relative violation `(lhs - rhs) / max(1, |terms|)`, or 0.
    pub worst_violation: f64,
    /// Record index of the first violation.
    pub index: Option<usize>,
    #[serde(skip)]
    pub checked: usize,
    #[serde(skip)]
    pub failed: usize,
}

impl CheckReport {
    pub fn new(check: &str) -> Self {
        CheckReport {
            check: check.to_string(),
            pass: true,
            worst_violation: 0.0,
            index: None,
            checked: 0,
            failed: 0,
        }
    }

    /// Records `lhs <= rhs` at `index`, scaled by the magnitudes in `terms`.
    pub fn le(&mut self, index: usize, lhs: f64, rhs: f64, terms: &[f64], slack: f64) {
        self.checked += 1;
        if lhs.is_nan() || rhs.is_nan() {
            self.fail(index, f64::INFINITY);
            return;
        }
        if lhs <= rhs {
            return;
        }
        let scale = terms
            .iter()
            .chain([lhs, rhs].iter())
            .filter(|v| v.is_finite())
            .fold(1.0_f64, |m, v| m.max(v.abs()));
        let v = (lhs - rhs) / scale;
        self.worst_violation = self.worst_violation.max(v);
        if v > slack {
            self.fail(index, v);
        }
    }

    fn fail(&mut self, index: usize, v: f64) {
        self.worst_violation = self.worst_violation.max(v);
        self.failed += 1;
        self.pass = false;
        self.index.get_or_insert(index);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn worst_violation(&self) -> f64 {
        self.checks
            .iter()
            .fold(0.0, |m, c| m.max(c.worst_violation))
    }

    pub fn first_failure(&self) -> Option<&CheckReport> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.check == name)
    }
}

/// Scalar columns of a trace, as `f64`, with `NaN` for missing values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceColumns {
    pub k: Vec<usize>,
    pub du_g2: Vec<f64>,
    pub objective: Vec<f64>,
    pub feasibility: Vec<f64>,
    pub kkt_norm2: Vec<f64>,
    pub dy_q2: Vec<f64>,
    pub dist_ref_g2: Option<Vec<f64>>,
    pub dist_ref: Option<Vec<f64>>,
    pub lagrangian_gap: Option<Vec<f64>>,
    pub strong_term: Option<Vec<f64>>,
    pub gamma: f64,
    pub h_star: Option<f64>,
}

impl TraceColumns {
    pub fn from_trace<T: Scalar>(trace: &IterationTrace<T>) -> Self {
        let f = |v: T| v.to_f64_lossy();
        let opt = |v: Option<T>| v.map_or(f64::NAN, f);
        let col = |pick: &dyn Fn(&crate::padmm::TraceRecord<T>) -> Option<T>| -> Option<Vec<f64>> {
            if trace.records.iter().all(|r| pick(r).is_some()) {
                Some(trace.records.iter().map(|r| f(pick(r).unwrap())).collect())
            } else {
                None
            }
        };
        TraceColumns {
            k: trace.records.iter().map(|r| r.k).collect(),
            du_g2: trace.records.iter().map(|r| f(r.du_g2)).collect(),
            objective: trace.records.iter().map(|r| f(r.objective)).collect(),
            feasibility: trace.records.iter().map(|r| f(r.feasibility)).collect(),
            kkt_norm2: trace.records.iter().map(|r| opt(r.kkt_norm2)).collect(),
            dy_q2: trace.records.iter().map(|r| f(r.dy_q2)).collect(),
            dist_ref_g2: col(&|r| r.dist_ref_g2),
            dist_ref: col(&|r| r.dist_ref),
            lagrangian_gap: col(&|r| r.lagrangian_gap),
            strong_term: col(&|r| r.strong_term),
            gamma: f(trace.gamma),
            h_star: trace.h_star.map(f),
        }
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

/// Checks, at every applicable record:
///
/// * `step_monotone`: `||Δu^{k+1}||²_G <= ||Δu^k||²_G` for `k >= 1`;
/// * `kkt_bound`: `||R^k||² <= γ ||Δu^k||²_G` for `k >= 1`;
///
/// and, when the trace carries reference distances:
///
/// * `distance_monotone`: `||u^{k+1} - ū||²_G <= ||u^k - ū||²_G`;
/// * `telescoping`: `||Δu^{k+1}||²_G <= (||u^k - ū||²_G + ||Δy^k||²_Q)
///   - (||u^{k+1} - ū||²_G + ||Δy^{k+1}||²_Q)` for `k >= 1`;
/// * `lagrangian_lower_bound`: `H(x^k, y^k) - H_* + <λ̄, Ax^k + By^k - c> >= 0`;
/// * `descent`: `σ_f||x^{k+1} - x̄||² + σ_g||y^{k+1} - ȳ||² + gap_{k+1}
///   <= ½(||u^k - ū||²_G - ||u^{k+1} - ū||²_G)`.
///
/// `kkt_bound` needs a finite `γ`; the last two need the Lagrangian-gap and
/// strong-convexity columns. A violation counts only if it exceeds `slack`
/// relative to the magnitudes involved.
pub fn check_monotonicity_suite(cols: &TraceColumns, slack: f64) -> Result<SuiteReport> {
    let n = cols.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "trace has {n} records, need at least 2"
        )));
    }
    let du = &cols.du_g2;
    let mut step = CheckReport::new("step_monotone");
    let mut kkt = CheckReport::new("kkt_bound");
    for i in 1..n {
        if i + 1 < n {
            step.le(i + 1, du[i + 1], du[i], &[], slack);
        }
        if cols.gamma.is_finite() {
            kkt.le(i, cols.kkt_norm2[i], cols.gamma * du[i], &[], slack);
        }
    }
    // Without γ (e.g. a trace read back from CSV alone) the bound is skipped.
    let mut checks = vec![step];
    if cols.gamma.is_finite() {
        checks.push(kkt);
    }

    if let Some(dist) = &cols.dist_ref_g2 {
        let mut mono = CheckReport::new("distance_monotone");
        let mut tele = CheckReport::new("telescoping");
        for i in 0..n.saturating_sub(1) {
            mono.le(i + 1, dist[i + 1], dist[i], &[], slack);
            if i >= 1 {
                tele.le(
                    i + 1,
                    du[i + 1],
                    (dist[i] + cols.dy_q2[i]) - (dist[i + 1] + cols.dy_q2[i + 1]),
                    &[dist[i], cols.dy_q2[i]],
                    slack,
                );
            }
        }
        checks.extend([mono, tele]);
        if let (Some(gap), Some(strong)) = (&cols.lagrangian_gap, &cols.strong_term) {
            let mut lower = CheckReport::new("lagrangian_lower_bound");
            let mut descent = CheckReport::new("descent");
            let h_scale = cols.h_star.map_or(0.0, f64::abs);
            for i in 0..n {
                let obj = cols.objective[i];
                if obj.is_finite() {
                    lower.le(i, 0.0, gap[i], &[obj, h_scale], slack);
                }
                if i + 1 < n {
                    descent.le(
                        i + 1,
                        strong[i + 1] + gap[i + 1],
                        0.5 * (dist[i] - dist[i + 1]),
                        &[dist[i], cols.objective[i + 1], h_scale],
                        slack,
                    );
                }
            }
            checks.extend([lower, descent]);
        }
    }
    Ok(SuiteReport { checks })
}

/// `k ||Δu^k||²_G` is nonincreasing across the checkpoints `K/4, K/2, K`.
pub fn check_scaled_step_checkpoints(
    cols: &TraceColumns,
    big_k: usize,
    slack: f64,
) -> Result<CheckReport> {
    if big_k < 4 || big_k >= cols.len() {
        return Err(Error::InsufficientData(format!(
            "checkpoint K = {big_k} needs a trace with more than K records (have {})",
            cols.len()
        )));
    }
    let pts = [big_k / 4, big_k / 2, big_k];
    let vals: Vec<f64> = pts.iter().map(|&k| k as f64 * cols.du_g2[k]).collect();
    let mut rep = CheckReport::new("scaled_step_checkpoints");
    for w in 0..2 {
        rep.le(pts[w + 1], vals[w + 1], vals[w], &[], slack);
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `o(1/√k)` decay of objective error and feasibility.
    Sublinear,
    /// `(k+1)^(-1/(2(1-α)))` decay under a Hölder-type error bound with exponent `α`.
    Holder(f64),
    /// Geometric decay.
    Linear,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Sublinear => write!(f, "sublinear"),
            Regime::Holder(a) => write!(f, "holder({a})"),
            Regime::Linear => write!(f, "linear"),
        }
    }
}

impl Regime {
    /// Power exponent the regime guarantees, for the power-law regimes.
    pub fn required_exponent(self) -> Result<Option<f64>> {
        match self {
            Regime::Sublinear => Ok(Some(0.5)),
            Regime::Holder(a) if (0.0..1.0).contains(&a) => Ok(Some(1.0 / (2.0 * (1.0 - a)))),
            Regime::Holder(a) => Err(Error::InvalidParameter(format!(
                "Hölder exponent {a} outside [0, 1)"
            ))),
            Regime::Linear => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRate {
    pub series: String,
    pub fit: RateFit,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub regime: String,
    pub series: Vec<SeriesRate>,
    pub pass: bool,
}

/// Relative floor below which values are treated as converged to rounding
/// level and cut from the tail before fitting.
pub const RATE_FLOOR_REL: f64 = 1e-9;

/// Upper envelope `e_i = max_{j >= i} |s_j|`, cut where it falls below
/// `RATE_FLOOR_REL * max|s|`. The envelope removes oscillation (an
/// objective error crossing zero, for instance) without changing the decay
/// rate of a bound on the series.
pub fn decay_envelope(series: &[f64]) -> Vec<f64> {
    let mut env: Vec<f64> = series.iter().map(|v| v.abs()).collect();
    for i in (0..env.len().saturating_sub(1)).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    let peak = env.first().copied().unwrap_or(0.0);
    let floor = (peak * RATE_FLOOR_REL).max(f64::MIN_POSITIVE);
    let cut = env.iter().position(|v| *v < floor).unwrap_or(env.len());
    env.truncate(cut);
    env
}

/// Fits the regime's model to the decay envelope of one series and tests the
/// implied rate.
pub fn check_series_rate(name: &str, series: &[f64], regime: Regime) -> Result<SeriesRate> {
    let env = decay_envelope(series);
    if env.is_empty() {
        // Identically zero: converged exactly.
        let fit = fit_rate(
            &vec![0.0; MIN_SERIES_LEN.max(series.len())],
            RateModel::Geometric,
        )?;
        return Ok(SeriesRate {
            series: name.to_string(),
            fit,
            pass: true,
        });
    }
    let (fit, pass) = match regime.required_exponent()? {
        Some(beta) => {
            let fit = fit_rate(&env, RateModel::Power)?;
            let pass = fit.param >= beta;
            (fit, pass)
        }
        None => {
            let fit = fit_rate(&env, RateModel::Geometric)?;
            let pass = fit.r_squared >= LINEAR_R2 && fit.param < 1.0 - LINEAR_RATIO_MARGIN;
            (fit, pass)
        }
    };
    Ok(SeriesRate {
        series: name.to_string(),
        fit,
        pass,
    })
}

/// Tests that feasibility and, when `H_*` is known, `|H - H_*|` decay at
/// least at the regime's rate. Records from `k = 1` on are used.
pub fn check_rate_regime(cols: &TraceColumns, regime: Regime) -> Result<RateReport> {
    if cols.len() < MIN_SERIES_LEN + 1 {
        return Err(Error::InsufficientData(format!(
            "trace has {} records, need at least {}",
            cols.len(),
            MIN_SERIES_LEN + 1
        )));
    }
    let mut series = vec![check_series_rate(
        "feasibility",
        &cols.feasibility[1..],
        regime,
    )?];
    if let Some(h) = cols.h_star {
        let gap: Vec<f64> = cols.objective[1..].iter().map(|v| (v - h).abs()).collect();
        series.push(check_series_rate("objective_gap", &gap, regime)?);
    }
    let pass = series.iter().all(|s| s.pass);
    Ok(RateReport {
        regime: regime.to_string(),
        series,
        pass,
    })
}
