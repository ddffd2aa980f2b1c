//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use proxadmm::diagnostics::{
    check_monotonicity_suite, check_scaled_step_checkpoints, check_series_rate, Regime,
    TraceColumns,
};
use proxadmm::fixtures::{
    make_scenario_fixture, random_instance, random_inverse_instance, Family, Scenario,
};
use proxadmm::gravity::{rate_slope, run_table1, semi_convergence, GravityConfig, Table1Study};
use proxadmm::illposed::{check_ip_bounds, padmm26_step, padmm2_step, RegState, Scheme};
use proxadmm::padmm::{run, PadmmState, Reference, RunOptions, StopRule};
use proxadmm::reference::{quadratic_kkt_point, reference_point};

type Criterion = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut failures = Vec::new();
    for seed in 0..20 {
        let inst = random_instance(Family::Quadratic, 1000 + seed).expect("instance");
        let p = &inst.problem;
        let u_star = quadratic_kkt_point(p).expect("oracle");
        // Zero start keeps λ in the range of [A B], so the limit is the
        // least-norm multiplier the oracle returns.
        let trace = run(
            p,
            &PadmmState::zeros(p),
            StopRule {
                max_iter: 200_000,
                tol: 1e-10,
            },
            &RunOptions::default(),
        )
        .expect("run");
        let err = trace.final_state.iterate().sub(&u_star).norm();
        worst = worst.max(err);
        if !trace.converged || err > 1e-6 {
            failures.push(seed);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && elapsed < Duration::from_secs(5),
        format!("worst ||u^k - u*|| = {worst:.2e}, failing seeds {failures:?}, {elapsed:.2?}"),
    )
}

fn inequality_suite() -> Outcome {
    const K: usize = 400;
    let mut worst = 0.0_f64;
    let mut bad = Vec::new();
    let mut count = 0;
    for seed in 0..100u64 {
        let family = Family::ALL[(seed % 3) as usize];
        let inst = random_instance(family, 2000 + seed).expect("instance");
        let p = &inst.problem;
        let reference = reference_point(p, &inst.init).expect("reference");
        let trace = run(
            p,
            &inst.init,
            StopRule {
                max_iter: K,
                tol: 0.0,
            },
            &RunOptions {
                store_iterates: false,
                reference: Some(reference),
            },
        )
        .expect("run");
        let cols = TraceColumns::from_trace(&trace);
        let suite = check_monotonicity_suite(&cols, 1e-8).expect("suite");
        worst = worst.max(suite.worst_violation());
        if let Some(f) = suite.first_failure() {
            bad.push(format!("{family:?}#{seed}:{}@{:?}", f.check, f.index));
        }
        if cols.len() > K {
            let cp = check_scaled_step_checkpoints(&cols, K, 1e-8).expect("checkpoints");
            if !cp.pass {
                bad.push(format!("{family:?}#{seed}:checkpoints"));
            }
        }
        count += 1;
    }
    outcome(
        bad.is_empty() && worst <= 1e-8,
        format!("{count} instances, worst violation {worst:.2e}, failures {bad:?}"),
    )
}

fn rate_regimes() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    for s in Scenario::ALL {
        let fx = make_scenario_fixture(s, 8, 7).expect("fixture");
        let reference = Reference::new(&fx.problem, fx.limit.clone()).expect("reference");
        let trace = run(
            &fx.problem,
            &fx.init,
            StopRule {
                max_iter: 2000,
                tol: 0.0,
            },
            &RunOptions {
                store_iterates: false,
                reference: Some(reference),
            },
        )
        .expect("run");
        let cols = TraceColumns::from_trace(&trace);
        let dist = cols.dist_ref.as_ref().expect("distances");
        let r = check_series_rate("dist", dist, Regime::Linear).expect("fit");
        ok &= r.pass && r.fit.r_squared >= 0.9 && r.fit.param < 0.999;
        notes.push(format!(
            "({s}) q={:.4} r2={:.3}",
            r.fit.param, r.fit.r_squared
        ));
    }

    let poly = random_instance(Family::L1Box, 77).expect("instance");
    let reference = reference_point(&poly.problem, &poly.init).expect("reference");
    let trace = run(
        &poly.problem,
        &poly.init,
        StopRule {
            max_iter: 3000,
            tol: 0.0,
        },
        &RunOptions {
            store_iterates: false,
            reference: Some(reference),
        },
    )
    .expect("run");
    let cols = TraceColumns::from_trace(&trace);
    let h = cols.h_star.unwrap();
    let gap: Vec<f64> = cols.objective[1..].iter().map(|v| (v - h).abs()).collect();
    let r = check_series_rate("objective_gap", &gap, Regime::Linear).expect("fit");
    ok &= r.pass;
    notes.push(format!(
        "polyhedral |H-H*| q={:.4} r2={:.3}",
        r.fit.param, r.fit.r_squared
    ));

    let generic = random_instance(Family::NonnegMix, 5).expect("instance");
    let trace = run(
        &generic.problem,
        &generic.init,
        StopRule {
            max_iter: 2000,
            tol: 0.0,
        },
        &RunOptions::default(),
    )
    .expect("run");
    let cols = TraceColumns::from_trace(&trace);
    let r =
        check_series_rate("feasibility", &cols.feasibility[1..], Regime::Sublinear).expect("fit");
    ok &= r.pass;
    notes.push(format!("generic feasibility beta={:.3}", r.fit.param));

    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    outcome(ok, format!("{}, {elapsed:.2?}", notes.join("; ")))
}

/// The standard four-level study at N = 600 with seed 0, shared by the
/// gravity criteria, plus its wall time.
fn gravity_study() -> &'static (Table1Study, Duration) {
    static STUDY: OnceLock<(Table1Study, Duration)> = OnceLock::new();
    STUDY.get_or_init(|| {
        let start = Instant::now();
        let study = run_table1(&GravityConfig::default()).expect("gravity study");
        (study, start.elapsed())
    })
}

fn gravity_inequalities() -> Outcome {
    let (study, _) = gravity_study();
    let mut ok = true;
    let mut notes = Vec::new();
    for run in study.runs.iter().filter(|r| r.delta <= 1e-2) {
        let suite = check_ip_bounds(&run.trace, 1e-8).expect("bounds");
        ok &= suite.pass();
        let fail = suite
            .first_failure()
            .map(|f| format!(" first failure {}@{:?}", f.check, f.index));
        notes.push(format!(
            "delta={:.0e}: {} steps, worst {:.2e}{}",
            run.delta,
            run.rel_errors.len() - 1,
            suite.worst_violation(),
            fail.unwrap_or_default()
        ));
    }
    outcome(ok, notes.join("; "))
}

fn table_reproduction() -> Outcome {
    const PUBLISHED: [(f64, f64); 4] = [
        (1e-1, 4.93e-2),
        (1e-2, 1.33e-2),
        (1e-3, 5.30e-3),
        (1e-4, 2.12e-3),
    ];
    let (study, elapsed) = gravity_study();
    let rows = study.rows();
    let mut ok = *elapsed < Duration::from_secs(180);
    let mut notes = Vec::new();
    for (row, (delta, expected)) in rows.iter().zip(PUBLISHED) {
        assert_eq!(row.delta, delta);
        let factor = row.err_min / expected;
        ok &=
            (0.5..=2.0).contains(&factor) && (0.05..=0.5).contains(&row.ratio_half) && row.complete;
        notes.push(format!(
            "{:.0e}: err_min {:.3e} (x{factor:.2}) @{} half {:.3} quarter {:.4}{}",
            row.delta,
            row.err_min,
            row.iter_min,
            row.ratio_half,
            row.ratio_quarter,
            if row.complete { "" } else { " incomplete" }
        ));
    }
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].ratio_quarter < w[0].ratio_quarter);
    ok &= decreasing;
    outcome(
        ok,
        format!(
            "{}; quarter strictly decreasing: {decreasing}; {elapsed:.2?}",
            notes.join("; ")
        ),
    )
}

fn rate_law() -> Outcome {
    let (study, _) = gravity_study();
    let mut deltas = Vec::new();
    let mut errors = Vec::new();
    for run in &study.runs {
        let k = (1.0 / run.delta).ceil() as usize;
        deltas.push(run.delta);
        errors.push(run.error_at(k).expect("run reaches ceil(1/delta)"));
    }
    let slope = rate_slope(&deltas, &errors).expect("slope");
    let pairs: Vec<String> = deltas
        .iter()
        .zip(&errors)
        .map(|(d, e)| format!("{d:.0e}->{e:.3e}"))
        .collect();
    outcome(
        slope >= 0.20,
        format!("slope {slope:.3} from {}", pairs.join(", ")),
    )
}

fn semi_convergence_curves() -> Outcome {
    let (study, _) = gravity_study();
    let mut ok = true;
    let mut notes = Vec::new();
    for run in &study.runs {
        let sc = semi_convergence(&run.rel_errors, 5).expect("curve");
        ok &= sc.interior && sc.rise >= 0.10;
        notes.push(format!(
            "{:.0e}: min @{} rise {:.0}%",
            run.delta,
            sc.min_index,
            100.0 * sc.rise
        ));
    }
    outcome(ok, notes.join("; "))
}

fn specialization_equivalence() -> Outcome {
    let mut worst = 0.0_f64;
    for seed in 0..10 {
        let spec = random_inverse_instance(seed).expect("instance");
        let mut g = RegState::zeros(&spec, Scheme::General);
        let mut r = RegState::zeros(&spec, Scheme::Reduced);
        for _ in 0..50 {
            g = padmm2_step(&spec, &g).expect("general step");
            r = padmm26_step(&spec, &r).expect("reduced step");
            for (u, v) in [
                (&g.z, &r.z),
                (&g.x, &r.x),
                (&g.lambda, &r.lambda),
                (&g.nu, &r.nu),
            ] {
                worst = worst.max((u - v).amax());
            }
        }
    }
    outcome(
        worst <= 1e-10,
        format!("10 instances x 50 steps, worst difference {worst:.2e}"),
    )
}

fn main() {
    let criteria: Vec<(&str, Criterion)> = vec![
        ("1 oracle equivalence", oracle_equivalence),
        ("2 inequality suite (two-block)", inequality_suite),
        ("3 rate regimes", rate_regimes),
        ("4 inequality suite (regularization)", gravity_inequalities),
        ("5 table reproduction", table_reproduction),
        ("6 noise-level rate law", rate_law),
        ("7 semi-convergence", semi_convergence_curves),
        ("8 specialization equivalence", specialization_equivalence),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        println!(
            "criterion {name}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
