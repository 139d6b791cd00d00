//! Canned experiments.

use crate::harness::config::{ExperimentConfig, ObjectiveSpec, OptimizerSpec, RunSpec, ScheduleSpec, X0Spec};
use crate::harness::run_experiment;
use crate::harness::trace::{fmt_f64, fmt_vector, Trace};
use crate::harness::checks::BoundKind;
use crate::objectives::counterexample_fixed_point;
use crate::optimizers::WideCounterexample;
use crate::vecmath::NormKind;
use crate::Result;

pub const SYNTHETIC_COMPARISON: &str = "synthetic-comparison";
pub const COUNTEREXAMPLE: &str = "counterexample";

pub fn scenario_names() -> [&'static str; 2] {
    [SYNTHETIC_COMPARISON, COUNTEREXAMPLE]
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTrace {
    pub name: String,
    pub config: ExperimentConfig,
    pub trace: Trace,
}

pub const SYNTHETIC_DIM: usize = 100;
pub const SYNTHETIC_STEPS: usize = 100;

/// Weight decay used for each geometry in the synthetic comparison.
pub fn synthetic_lambda(norm: NormKind) -> f64 {
    match norm {
        NormKind::LInf => 1.0,
        _ => 0.1,
    }
}

/// The six synthetic comparison runs for `seed`, named
/// `{nsd, nsd-wd, sd}-{l2, linf}`.
pub fn synthetic_comparison_configs(seed: u64) -> Result<Vec<(String, ExperimentConfig)>> {
    let objective = ObjectiveSpec::ScaledQuadratic {
        target: None,
        dim: Some(SYNTHETIC_DIM),
        seed: Some(seed),
        leading_ones: Some(10),
        tail_range: Some(1.0),
    };
    let x0 = X0Spec::Uniform {
        low: -5.0,
        high: 5.0,
        seed,
    };
    let obj = objective.build()?;
    let mut out = Vec::new();
    for norm in [NormKind::L2, NormKind::LInf] {
        let lambda = synthetic_lambda(norm);
        let h = obj.smoothness(norm).expect("scaled quadratic has every smoothness constant");
        let variants = [
            (
                "nsd",
                OptimizerSpec::Nsd { norm, lambda: 0.0 },
                ScheduleSpec::FrankWolfe { lambda: Some(lambda) },
                vec![],
            ),
            (
                "nsd-wd",
                OptimizerSpec::Nsd { norm, lambda },
                ScheduleSpec::FrankWolfe { lambda: None },
                vec![BoundKind::BallShrinkage, BoundKind::FwRate],
            ),
            (
                "sd",
                OptimizerSpec::Sd { norm, lambda: 0.0 },
                ScheduleSpec::Constant { eta: 1.0 / h },
                vec![],
            ),
        ];
        for (label, optimizer, schedule, bounds) in variants {
            let mut run = RunSpec::steps(SYNTHETIC_STEPS);
            run.record_every = Some(1);
            run.bounds = bounds;
            out.push((
                format!("{label}-{}", norm.as_str()),
                ExperimentConfig {
                    objective: objective.clone(),
                    optimizer,
                    schedule,
                    x0: x0.clone(),
                    run,
                },
            ));
        }
    }
    Ok(out)
}

pub fn scenario_synthetic_comparison(seed: u64) -> Result<Vec<NamedTrace>> {
    synthetic_comparison_configs(seed)?
        .into_iter()
        .map(|(name, config)| {
            let trace = run_experiment(&config)?;
            Ok(NamedTrace { name, config, trace })
        })
        .collect()
}

pub const COUNTEREXAMPLE_BETA1: f64 = 0.99;
pub const COUNTEREXAMPLE_BETA2: f64 = 0.9;
pub const COUNTEREXAMPLE_LAMBDA: f64 = 0.1;
pub const COUNTEREXAMPLE_ETA: f64 = 0.01;
pub const COUNTEREXAMPLE_STEPS: usize = 10_000;

/// One-dimensional AdamW run whose iterate converges outside the `1/λ` ball
/// when `β1 > β2`. With `special_init` the moments start on the fixed-point
/// trajectory; without it they start at zero. `ε` is always 0.
pub fn counterexample_config(special_init: bool) -> Result<ExperimentConfig> {
    let (b1, b2, lambda, eta) = (
        COUNTEREXAMPLE_BETA1,
        COUNTEREXAMPLE_BETA2,
        COUNTEREXAMPLE_LAMBDA,
        COUNTEREXAMPLE_ETA,
    );
    let x_tilde = counterexample_fixed_point(b1, b2, lambda, eta)?;
    let x0 = x_tilde + 1.0;
    let g1 = x0 - x_tilde;
    let keep = 1.0 - lambda * eta;
    let (m0, v0) = if special_init {
        (
            Some(vec![(1.0 - b1) / (keep - b1) * g1]),
            Some(vec![(1.0 - b2) / (keep * keep - b2) * g1 * g1]),
        )
    } else {
        (None, None)
    };
    let mut run = RunSpec::steps(COUNTEREXAMPLE_STEPS);
    run.record_every = Some(1);
    Ok(ExperimentConfig {
        objective: ObjectiveSpec::Counterexample { x_tilde },
        optimizer: OptimizerSpec::Adamw {
            beta1: b1,
            beta2: b2,
            lambda,
            epsilon: 0.0,
            m0,
            v0,
        },
        schedule: ScheduleSpec::Constant { eta },
        x0: X0Spec::Explicit { values: vec![x0] },
        run,
    })
}

/// The counterexample run in wide fixed-point arithmetic (see
/// [`WideCounterexample`]). Columns match an AdamW trace from
/// [`run_experiment`]; the header echoes [`counterexample_config`] and adds
/// `arithmetic` and `x_tilde`.
pub fn scenario_counterexample() -> Result<Trace> {
    let config = counterexample_config(true)?;
    let exp = config.build()?;
    let wide = WideCounterexample::new(
        COUNTEREXAMPLE_BETA1,
        COUNTEREXAMPLE_BETA2,
        COUNTEREXAMPLE_LAMBDA,
        COUNTEREXAMPLE_ETA,
        1.0,
    );
    let result = wide.run(COUNTEREXAMPLE_STEPS)?;
    let columns = [
        "t", "eta", "eta_sum", "loss", "x_l1", "x_l2", "x_linf", "grad_l1", "grad_l2", "grad_linf",
        "update_l1", "update_l2", "update_linf", "x_0", "update_0", "m_0", "v_0",
    ];
    let mut trace = Trace::new(columns.iter().map(|c| c.to_string()).collect());
    let eta = COUNTEREXAMPLE_ETA;
    for (i, s) in result.steps.iter().enumerate() {
        let t = i + 1;
        let (ax, ag, au) = (s.x.abs(), s.gap.abs(), s.update.abs());
        trace.push_row(vec![
            t as f64,
            eta,
            eta * t as f64,
            0.5 * s.gap * s.gap,
            ax,
            ax,
            ax,
            ag,
            ag,
            ag,
            au,
            au,
            au,
            s.x,
            s.update,
            s.m,
            s.v,
        ]);
    }
    let x_final = result.steps.last().map_or(result.x0, |s| s.x);
    let mut header = vec![
        ("library".to_string(), format!("wdopt {}", crate::VERSION)),
        (
            "arithmetic".to_string(),
            format!("fixed-point/{}", wide.precision_bits),
        ),
        ("x_tilde".to_string(), fmt_f64(result.x_tilde)),
    ];
    header.extend(config.flatten()?);
    trace.prepend_header(header);
    trace.set_header("algorithm", exp.optimizer.label());
    trace.set_header("norm", exp.optimizer.norm().as_str());
    trace.set_header("lambda", fmt_f64(COUNTEREXAMPLE_LAMBDA));
    trace.set_header("beta1", fmt_f64(COUNTEREXAMPLE_BETA1));
    trace.set_header("beta2", fmt_f64(COUNTEREXAMPLE_BETA2));
    trace.set_header("epsilon", fmt_f64(0.0));
    trace.set_header("moment_init", "custom");
    trace.set_header("schedule", exp.schedule.describe());
    trace.set_header("steps", COUNTEREXAMPLE_STEPS.to_string());
    trace.set_header("record_every", "1");
    trace.set_header("dim", "1");
    trace.set_header("x0", fmt_vector(&[result.x0]));
    trace.set_header("x_final", fmt_vector(&[x_final]));
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_lands_outside_the_ball() {
        let tr = scenario_counterexample().unwrap();
        let x_tilde = counterexample_fixed_point(0.99, 0.9, 0.1, 0.01).unwrap();
        assert_eq!(tr.len(), COUNTEREXAMPLE_STEPS);
        assert!((tr.header_f64("x_tilde").unwrap() - x_tilde).abs() <= 1e-14);
        let x = tr.column("x_0").unwrap();
        let last = *x.last().unwrap();
        assert!((last - x_tilde).abs() <= 1e-4);
        assert!(last.abs() > 10.0);
        let target = -0.1 * x_tilde;
        for u in tr.column("update_0").unwrap() {
            assert!((u - target).abs() <= 1e-9, "{u} vs {target}");
        }
    }

    #[test]
    fn binary64_run_loses_the_trajectory() {
        let tr = run_experiment(&counterexample_config(true).unwrap()).unwrap();
        let x_tilde = counterexample_fixed_point(0.99, 0.9, 0.1, 0.01).unwrap();
        let u = tr.column("update_0").unwrap();
        assert!((u[0] + 0.1 * x_tilde).abs() <= 1e-9);
        assert!(u.iter().any(|v| (v + 0.1 * x_tilde).abs() > 1e-3));
    }

    #[test]
    fn zero_init_leaves_the_fixed_point_trajectory() {
        let special = run_experiment(&counterexample_config(true).unwrap()).unwrap();
        let zero = run_experiment(&counterexample_config(false).unwrap()).unwrap();
        let a = special.column("x_0").unwrap()[0];
        let b = zero.column("x_0").unwrap()[0];
        assert_ne!(a, b);
    }

    #[test]
    fn synthetic_configs_are_six_named_runs() {
        let cfgs = synthetic_comparison_configs(0).unwrap();
        let names: Vec<&str> = cfgs.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["nsd-l2", "nsd-wd-l2", "sd-l2", "nsd-linf", "nsd-wd-linf", "sd-linf"]);
        for (_, c) in &cfgs {
            c.validate().unwrap();
        }
    }
}
