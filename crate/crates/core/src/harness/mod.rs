//! Experiment orchestration: configuration, seeded generators, trace
//! persistence, bound checks and the canned scenarios.

pub mod checks;
pub mod config;
pub mod minimizer;
pub mod rng;
pub mod scenarios;
pub mod sweep;
pub mod trace;

pub use checks::{check_bound, BoundKind, CheckReport, CheckRow, MARGIN_TOL};
pub use config::{CoordsSpec, Experiment, ExperimentConfig, ObjectiveSpec, OptimizerSpec, RunSpec, ScheduleSpec, X0Spec};
pub use minimizer::constrained_minimizer;
pub use scenarios::{scenario_counterexample, scenario_names, scenario_synthetic_comparison, NamedTrace};
pub use sweep::{sweep, SweepGrid, SweepPoint};
pub use trace::Trace;

use crate::optimizers::run;
use crate::{Error, Result};

/// Header sections that echo the configuration.
const SECTIONS: [&str; 5] = ["objective", "optimizer", "schedule", "x0", "run"];

/// Validates `cfg`, runs it, attaches the requested bound columns and, when
/// `run.output` is set, writes the trace there.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Trace> {
    let exp = cfg.build()?;
    let mut trace = run(
        &exp.optimizer,
        exp.objective.as_ref(),
        &exp.x0,
        &exp.schedule,
        exp.steps,
        &exp.options,
    )?;
    for &kind in &cfg.run.bounds {
        let report = check_bound(&trace, kind, Some(exp.objective.as_ref()))?;
        let (bound_col, measured_col) = kind.column_names();
        trace.push_column(bound_col, report.rows.iter().map(|r| r.bound).collect())?;
        trace.push_column(measured_col, report.rows.iter().map(|r| r.measured).collect())?;
    }
    let mut header = vec![
        ("library".to_string(), format!("wdopt {}", crate::VERSION)),
        ("rng".to_string(), rng::RNG_NAME.to_string()),
    ];
    for (what, seed) in cfg.seeds() {
        header.push((format!("seed.{what}"), seed.to_string()));
    }
    header.extend(cfg.flatten()?);
    trace.prepend_header(header);
    if let Some(path) = &cfg.run.output {
        trace.save(path)?;
    }
    Ok(trace)
}

fn section_doc(trace: &Trace, sections: &[&str]) -> String {
    let mut doc = String::new();
    for section in sections {
        doc.push_str(&format!("[{section}]\n"));
        let prefix = format!("{section}.");
        for (k, v) in trace.header() {
            if let Some(key) = k.strip_prefix(&prefix) {
                doc.push_str(&format!("{key} = {v}\n"));
            }
        }
    }
    doc
}

/// Rebuilds the configuration echoed in a trace header.
pub fn config_from_header(trace: &Trace) -> Result<ExperimentConfig> {
    if trace.header_value("objective.kind").is_none() {
        return Err(Error::Trace("header carries no configuration echo".into()));
    }
    ExperimentConfig::from_toml(&section_doc(trace, &SECTIONS))
}

/// Parses the objective echoed in a trace header.
pub fn objective_spec_from_header(trace: &Trace) -> Result<ObjectiveSpec> {
    if trace.header_value("objective.kind").is_none() {
        return Err(Error::Trace("header carries no objective".into()));
    }
    parse_objective_spec(&section_doc(trace, &["objective"]))
}

/// Parses an objective given either as a `[objective]` document or as an
/// inline table such as `{ kind = "scaled-quadratic", target = [2.0, 2.0] }`.
pub fn parse_objective_spec(text: &str) -> Result<ObjectiveSpec> {
    #[derive(serde::Deserialize)]
    struct Wrapper {
        objective: ObjectiveSpec,
    }
    let trimmed = text.trim();
    let doc = if trimmed.starts_with('{') {
        format!("objective = {trimmed}")
    } else {
        trimmed.to_string()
    };
    toml::from_str::<Wrapper>(&doc)
        .map(|w| w.objective)
        .map_err(|e| Error::config("objective", e.message().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
            [objective]
            kind = "scaled-quadratic"
            target = [2.0, -1.5, 0.25]
            [optimizer]
            kind = "nsd"
            norm = "linf"
            lambda = 1.0
            [schedule]
            kind = "frank-wolfe"
            [x0]
            kind = "explicit"
            values = [3.0, 3.0, -3.0]
            [run]
            steps = 10
            record_every = 2
            bounds = ["ball-shrinkage", "fw-rate", "unit-update"]
            "#,
        )
        .unwrap()
    }

    #[test]
    fn ten_steps_every_two_gives_five_rows() {
        let tr = run_experiment(&small()).unwrap();
        assert_eq!(tr.len(), 5);
        assert_eq!(tr.steps(), vec![2, 4, 6, 8, 10]);
        for k in [BoundKind::BallShrinkage, BoundKind::FwRate, BoundKind::UnitUpdate] {
            let (b, m) = k.column_names();
            assert!(tr.column(&b).unwrap().iter().all(|v| v.is_finite()));
            assert!(tr.has_column(&m));
        }
    }

    #[test]
    fn header_echo_rebuilds_config() {
        let cfg = small();
        let tr = run_experiment(&cfg).unwrap();
        assert_eq!(config_from_header(&tr).unwrap(), cfg);
        let again = Trace::parse_csv(&tr.to_csv_string()).unwrap();
        assert_eq!(config_from_header(&again).unwrap(), cfg);
        assert!(tr.header_value("library").unwrap().contains(crate::VERSION));
        assert_eq!(tr.header_value("rng"), Some(rng::RNG_NAME));
    }

    #[test]
    fn identical_configs_write_identical_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.objective = ObjectiveSpec::ScaledQuadratic {
            target: None,
            dim: Some(30),
            seed: Some(9),
            leading_ones: Some(5),
            tail_range: None,
        };
        cfg.x0 = X0Spec::Uniform {
            low: -5.0,
            high: 5.0,
            seed: 9,
        };
        let mut paths = Vec::new();
        for name in ["a.csv", "b.csv"] {
            let mut c = cfg.clone();
            c.run.output = Some(dir.path().join(name));
            run_experiment(&c).unwrap();
            paths.push(dir.path().join(name));
        }
        assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
        assert_eq!(tr_seed(&paths[0]), "9");
    }

    fn tr_seed(path: &std::path::Path) -> String {
        Trace::load(path).unwrap().header_value("seed.x0").unwrap().to_string()
    }

    #[test]
    fn invalid_config_fails_before_stepping() {
        let mut cfg = small();
        cfg.optimizer = OptimizerSpec::Adamw {
            beta1: 0.9,
            beta2: 1.0,
            lambda: 1.0,
            epsilon: 0.0,
            m0: None,
            v0: None,
        };
        cfg.run.bounds.clear();
        let dir = tempfile::tempdir().unwrap();
        cfg.run.output = Some(dir.path().join("never.csv"));
        assert!(matches!(run_experiment(&cfg), Err(Error::Config { .. })));
        assert!(!dir.path().join("never.csv").exists());
    }

    #[test]
    fn objective_spec_parsing() {
        let inline = parse_objective_spec(r#"{ kind = "scaled-quadratic", target = [2.0, 2.0] }"#).unwrap();
        let doc = parse_objective_spec("[objective]\nkind = \"scaled-quadratic\"\ntarget = [2.0, 2.0]\n").unwrap();
        assert_eq!(inline, doc);
        assert!(parse_objective_spec("{ kind = \"nope\" }").is_err());
        let tr = run_experiment(&small()).unwrap();
        assert_eq!(objective_spec_from_header(&tr).unwrap(), small().objective);
    }
}
