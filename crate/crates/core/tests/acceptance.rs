//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status on
//! any failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use wdopt::harness::rng::seeded_rng;
use wdopt::harness::{
    check_bound, run_experiment, scenario_counterexample, scenario_synthetic_comparison,
    BoundKind, CoordsSpec, ExperimentConfig, ObjectiveSpec, OptimizerSpec, RunSpec, ScheduleSpec, Trace, X0Spec,
    MARGIN_TOL,
};
use wdopt::objectives::{
    gradient_check, make_counterexample_objective, make_scaled_quadratic, make_smoothed_abs, Objective,
};
use wdopt::par::Execution;
use wdopt::trials;
use wdopt::{NormKind, ParamVector};

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

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn(&mut Shared) -> Outcome,
}

/// Traces reused between criteria.
#[derive(Default)]
struct Shared {
    kkt_run: Option<Trace>,
}

const SEED: u64 = 20_240_601;

fn counterexample() -> Outcome {
    let trace = match scenario_counterexample() {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    // x̃ recomputed here from its defining ratios
    let (b1, b2, lambda, eta) = (0.99f64, 0.9f64, 0.1f64, 0.01f64);
    let keep = 1.0 - lambda * eta;
    let x_tilde = -(1.0 / lambda) * ((1.0 - b1) / (keep - b1)) / ((1.0 - b2) / (keep * keep - b2)).sqrt();
    let x = trace.column("x_0").unwrap_or_default();
    let u = trace.column("update_0").unwrap_or_default();
    if x.len() != 10_000 || u.len() != 10_000 {
        return outcome(false, format!("expected 10000 rows, got {}", x.len()));
    }
    let x0 = x_tilde + 1.0;
    let mut worst_ratio = 0.0f64;
    let mut prev = x0 - x_tilde;
    for &xt in &x {
        let gap = xt - x_tilde;
        worst_ratio = worst_ratio.max((gap.abs() / prev.abs() - keep).abs());
        prev = gap;
    }
    let u_star = -lambda * x_tilde;
    let worst_u = u.iter().map(|v| (v - u_star).abs()).fold(0.0, f64::max);
    let spread = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - u.iter().cloned().fold(f64::INFINITY, f64::min);
    let last = *x.last().unwrap();
    let pass = (x_tilde.abs() - 10.9995).abs() <= 1e-3
        && (last - x_tilde).abs() <= 1e-4
        && last.abs() > 1.0 / lambda
        && worst_ratio <= 1e-9
        && worst_u <= 1e-9
        && spread <= 1e-9;
    outcome(
        pass,
        format!(
            "|x̃| = {:.6}, final |x − x̃| = {:.3e}, max ratio error {worst_ratio:.2e}, max |m/√v − (−λx̃)| {worst_u:.2e}",
            x_tilde.abs(),
            (last - x_tilde).abs()
        ),
    )
}

fn suite(o: trials::SuiteOutcome, tol: f64) -> Outcome {
    outcome(
        o.within(tol),
        format!(
            "{} trials, {} checks, worst excess {:.3e} (trial {})",
            o.trials, o.checks, o.max_excess, o.worst_trial
        ),
    )
}

fn equal_betas() -> Outcome {
    suite(trials::equal_betas_unit_cap(10_000, 1_000, SEED, Execution::Parallel), 1e-12)
}

fn amortized() -> Outcome {
    suite(trials::amortized_dominance(1_000, 1_000, SEED, Execution::Parallel), 1e-9)
}

fn shrinkage() -> Outcome {
    suite(trials::ball_shrinkage(1_000, 1_000, SEED, Execution::Parallel), 1e-9)
}

fn frank_wolfe() -> Outcome {
    suite(trials::frank_wolfe_equivalence(1_000, SEED, Execution::Parallel), 1e-12)
}

fn rate_config(norm: NormKind, lambda: f64) -> ExperimentConfig {
    let mut run = RunSpec::steps(10_000);
    run.record_every = Some(1);
    run.record_coords = Some(CoordsSpec::List(vec![0]));
    run.bounds = vec![BoundKind::FwRate];
    ExperimentConfig {
        objective: ObjectiveSpec::ScaledQuadratic {
            target: None,
            dim: Some(100),
            seed: Some(SEED),
            leading_ones: Some(10),
            tail_range: Some(1.0),
        },
        optimizer: OptimizerSpec::Nsd { norm, lambda },
        schedule: ScheduleSpec::FrankWolfe { lambda: None },
        x0: X0Spec::Uniform {
            low: -5.0,
            high: 5.0,
            seed: SEED,
        },
        run,
    }
}

fn rate() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (norm, lambda) in [(NormKind::LInf, 1.0), (NormKind::L2, 0.1)] {
        let cfg = rate_config(norm, lambda);
        let result = run_experiment(&cfg).and_then(|trace| {
            let obj = cfg.objective.build()?;
            check_bound(&trace, BoundKind::FwRate, Some(obj.as_ref()))
        });
        match result {
            Ok(report) => {
                pass &= report.rows.len() == 10_000 && report.holds();
                details.push(format!("{norm}: min margin {:.3e}", report.min_margin()));
            }
            Err(e) => {
                pass = false;
                details.push(format!("{norm}: {e}"));
            }
        }
    }
    outcome(pass, details.join(", "))
}

fn orderings() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..5u64 {
        let runs = match scenario_synthetic_comparison(seed) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        };
        let loss = |name: &str| -> f64 {
            runs.iter()
                .find(|r| r.name == name)
                .and_then(|r| r.trace.column("loss"))
                .and_then(|c| c.last().copied())
                .unwrap_or(f64::NAN)
        };
        for variant in ["nsd", "nsd-wd", "sd"] {
            let (linf, l2) = (loss(&format!("{variant}-linf")), loss(&format!("{variant}-l2")));
            if !(linf < l2) {
                failures.push(format!("seed {seed}: {variant} linf {linf:.4e} ≥ l2 {l2:.4e}"));
            }
        }
        for norm in ["l2", "linf"] {
            let (wd, plain) = (loss(&format!("nsd-wd-{norm}")), loss(&format!("nsd-{norm}")));
            if !(wd < plain) {
                failures.push(format!("seed {seed}: {norm} decay {wd:.4e} ≥ no decay {plain:.4e}"));
            }
        }
    }
    let detail = if failures.is_empty() {
        "5 seeds, 25 orderings hold".to_string()
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

/// `d = 10`, first coordinate 2, the rest uniform in `[−2, 2]`.
fn kkt_target() -> Vec<f64> {
    let mut rng = seeded_rng(SEED, 0);
    let mut t: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..=2.0)).collect();
    t[0] = 2.0;
    t
}

fn adamw_config(beta1: f64, beta2: f64) -> ExperimentConfig {
    let mut run = RunSpec::steps(100_000);
    run.record_every = Some(1);
    run.record_coords = Some(CoordsSpec::Named("all".into()));
    ExperimentConfig {
        objective: ObjectiveSpec::ScaledQuadratic {
            target: Some(kkt_target()),
            dim: None,
            seed: None,
            leading_ones: None,
            tail_range: None,
        },
        optimizer: OptimizerSpec::Adamw {
            beta1,
            beta2,
            lambda: 1.0,
            epsilon: 1e-16,
            m0: None,
            v0: None,
        },
        schedule: ScheduleSpec::Constant { eta: 1e-3 },
        x0: X0Spec::Zeros,
        run,
    }
}

fn kkt(shared: &mut Shared) -> Outcome {
    let cfg = adamw_config(0.99, 0.99);
    let trace = match run_experiment(&cfg) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let x_final = match trace.header_vector("x_final") {
        Ok(x) => x,
        Err(e) => return outcome(false, e.to_string()),
    };
    let target = kkt_target();
    let clamp: Vec<f64> = target.iter().map(|c| c.clamp(-1.0, 1.0)).collect();
    let obj = make_scaled_quadratic(ParamVector::new(target)).expect("valid target");
    let report = wdopt::analysis::kkt_residual(&obj, &x_final, 1.0, NormKind::LInf).expect("valid λ");
    let dist = x_final
        .iter()
        .zip(&clamp)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    shared.kkt_run = Some(trace);
    outcome(
        report.feasibility_gap <= 1e-2 && dist <= 5e-2,
        format!(
            "feasibility gap {:.3e}, ℓ∞ distance to clamp minimizer {dist:.3e}",
            report.feasibility_gap
        ),
    )
}

fn iterate_norm(shared: &mut Shared) -> Outcome {
    let first = match shared.kkt_run.take() {
        Some(t) => Ok(t),
        None => run_experiment(&adamw_config(0.99, 0.99)),
    };
    let second = run_experiment(&adamw_config(0.9, 0.999));
    let mut details = Vec::new();
    let mut pass = true;
    for (label, trace) in [("β1 = β2 = 0.99", first), ("β1 = 0.9, β2 = 0.999", second)] {
        match trace.and_then(|t| check_bound(&t, BoundKind::IterateNorm, None)) {
            Ok(report) => {
                let last = report.rows.last().map(|r| r.margin()).unwrap_or(f64::NAN);
                pass &= report.rows.len() == 100_000 && report.min_margin() >= -MARGIN_TOL;
                details.push(format!(
                    "{label}: margin at T {last:.3e}, min over t {:.3e}",
                    report.min_margin()
                ));
            }
            Err(e) => {
                pass = false;
                details.push(format!("{label}: {e}"));
            }
        }
    }
    outcome(pass, details.join(", "))
}

fn gradients() -> Outcome {
    let mut rng = seeded_rng(SEED, 7);
    let mut uniform = |dim: usize, scale: f64| -> Vec<ParamVector> {
        (0..100)
            .map(|_| (0..dim).map(|_| rng.random_range(-scale..=scale)).collect())
            .collect()
    };
    let quad = make_scaled_quadratic(ParamVector::new(vec![1.0, -0.5, 2.0, 0.25, -3.0])).unwrap();
    let counter = make_counterexample_objective(-10.999_494_937_900_055).unwrap();
    let smooth = make_smoothed_abs(
        ParamVector::new(vec![0.5, -1.0, 0.0, 2.0]),
        ParamVector::new(vec![1.0, 2.0, 0.5, 3.0]),
        0.1,
    )
    .unwrap();
    let cases: Vec<(&dyn Objective, Vec<ParamVector>)> = vec![
        (&quad, uniform(5, 5.0)),
        (&counter, uniform(1, 20.0)),
        (&smooth, uniform(4, 3.0)),
    ];
    let mut worst = 0.0f64;
    let mut names = Vec::new();
    for (obj, points) in &cases {
        let report = gradient_check(*obj, points, 1e-6);
        worst = worst.max(report.max_rel_error);
        names.push(format!("{} {:.2e}", obj.name(), report.max_rel_error));
    }
    outcome(worst <= 1e-5, names.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        Criterion { id: 1, name: "counterexample reproduction", limit: Duration::from_secs(1), run: |_| counterexample() },
        Criterion { id: 2, name: "equal-betas unit cap", limit: Duration::from_secs(10), run: |_| equal_betas() },
        Criterion { id: 3, name: "average-update dominance", limit: Duration::from_secs(30), run: |_| amortized() },
        Criterion { id: 4, name: "ball shrinkage", limit: Duration::from_secs(10), run: |_| shrinkage() },
        Criterion { id: 5, name: "Frank-Wolfe equivalence", limit: Duration::from_secs(1), run: |_| frank_wolfe() },
        Criterion { id: 6, name: "O(1/t) rate", limit: Duration::from_secs(5), run: |_| rate() },
        Criterion { id: 7, name: "synthetic orderings", limit: Duration::from_secs(5), run: |_| orderings() },
        Criterion { id: 8, name: "AdamW KKT surrogate", limit: Duration::from_secs(30), run: kkt },
        Criterion { id: 9, name: "iterate-norm bound", limit: Duration::from_secs(5), run: iterate_norm },
        Criterion { id: 10, name: "gradient correctness", limit: Duration::from_secs(1), run: |_| gradients() },
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let out = (c.run)(&mut shared);
        let elapsed = start.elapsed();
        let in_time = elapsed < c.limit;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {:<28} {:>8.3}s / {:>3}s  {}{}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.limit.as_secs(),
            out.detail,
            if in_time { "" } else { "  [over time limit]" }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
