//! Cartesian parameter sweeps over a base configuration.

use std::path::{Path, PathBuf};

use crate::harness::config::ExperimentConfig;
use crate::harness::run_experiment;
use crate::harness::trace::Trace;
use crate::par;
use crate::{Error, Result};

/// Axes of the form `section.key=v1,v2,...`, separated by `;`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axes: Vec<(String, Vec<toml::Value>)>,
}

fn parse_literal(raw: &str) -> toml::Value {
    let raw = raw.trim();
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn literal_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl SweepGrid {
    pub fn parse(spec: &str) -> Result<Self> {
        let mut axes = Vec::new();
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (path, values) = part
                .split_once('=')
                .ok_or_else(|| Error::config("grid", format!("`{part}` is not `section.key=v1,v2`")))?;
            let path = path.trim();
            if path.split('.').count() != 2 {
                return Err(Error::config("grid", format!("`{path}` is not `section.key`")));
            }
            let values: Vec<toml::Value> = values.split(',').filter(|v| !v.trim().is_empty()).map(parse_literal).collect();
            if values.is_empty() {
                return Err(Error::config("grid", format!("`{path}` has no values")));
            }
            axes.push((path.to_string(), values));
        }
        if axes.is_empty() {
            return Err(Error::config("grid", "no axes given"));
        }
        Ok(SweepGrid { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in row-major order, the last axis varying fastest.
    pub fn points(&self) -> Vec<Vec<(String, toml::Value)>> {
        let mut out: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
        for (path, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push((path.clone(), v.clone()));
                        p
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub config: ExperimentConfig,
    pub trace: Trace,
}

fn apply(base: &ExperimentConfig, point: &[(String, toml::Value)]) -> Result<ExperimentConfig> {
    let mut doc = toml::Value::try_from(base).map_err(|e| Error::config("config", e.to_string()))?;
    for (path, value) in point {
        let (section, key) = path.split_once('.').expect("validated path");
        let table = doc
            .get_mut(section)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| Error::config("grid", format!("unknown section `{section}`")))?;
        table.insert(key.to_string(), value.clone());
    }
    doc.try_into::<ExperimentConfig>()
        .map_err(|e| Error::config("grid", e.message().to_string()))
}

fn point_output(base: Option<&Path>, index: usize) -> Option<PathBuf> {
    let base = base?;
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    Some(base.with_file_name(format!("{stem}-{index:03}.{ext}")))
}

/// Runs every grid point on at most `workers` threads. Every configuration
/// is validated before any run starts. Results come back in grid order, and
/// point `i` is written next to `run.output` with a `-{i:03}` suffix.
pub fn sweep(base: &ExperimentConfig, grid: &SweepGrid, workers: usize) -> Result<Vec<SweepPoint>> {
    if workers == 0 {
        return Err(Error::config("parallel", "worker count must be at least 1"));
    }
    let mut planned = Vec::new();
    for (i, point) in grid.points().into_iter().enumerate() {
        let mut cfg = apply(base, &point)?;
        cfg.run.output = point_output(base.run.output.as_deref(), i);
        cfg.validate()?;
        let label = point
            .iter()
            .map(|(p, v)| format!("{p}={}", literal_text(v)))
            .collect::<Vec<_>>()
            .join(",");
        planned.push((label, cfg));
    }
    let results = par::with_workers(workers, || {
        par::map_indices(planned.len(), par::Execution::Parallel, |i| {
            let (label, cfg) = &planned[i];
            let mut cfg = cfg.clone();
            let output = cfg.run.output.take();
            let mut trace = run_experiment(&cfg)?;
            trace.set_header("sweep.point", label.clone());
            if let Some(path) = &output {
                trace.save(path)?;
            }
            cfg.run.output = output;
            Ok(SweepPoint {
                label: label.clone(),
                config: cfg,
                trace,
            })
        })
    })?;
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [objective]
        kind = "scaled-quadratic"
        target = [2.0, -1.0]
        [optimizer]
        kind = "adamw"
        beta1 = 0.9
        beta2 = 0.99
        lambda = 1.0
        [schedule]
        kind = "constant"
        eta = 0.01
        [x0]
        kind = "zeros"
        [run]
        steps = 20
    "#;

    #[test]
    fn grid_parsing_and_order() {
        let g = SweepGrid::parse("optimizer.lambda=0.1,1; schedule.eta=0.01,0.02,0.03").unwrap();
        assert_eq!(g.len(), 6);
        let pts = g.points();
        assert_eq!(pts[1][1].1, toml::Value::Float(0.02));
        assert_eq!(pts[3][0].1, toml::Value::Integer(1));
        assert!(SweepGrid::parse("lambda=1").is_err());
        assert!(SweepGrid::parse("").is_err());
        assert!(SweepGrid::parse("optimizer.lambda=").is_err());
    }

    #[test]
    fn integer_literals_coerce_to_floats() {
        let base = ExperimentConfig::from_toml(BASE).unwrap();
        let g = SweepGrid::parse("optimizer.lambda=2").unwrap();
        let pts = sweep(&base, &g, 1).unwrap();
        assert_eq!(pts[0].trace.header_value("lambda").unwrap().parse::<f64>().unwrap(), 2.0);
    }

    #[test]
    fn sweep_results_do_not_depend_on_worker_count() {
        let dir = tempfile::tempdir().unwrap();
        let mut base = ExperimentConfig::from_toml(BASE).unwrap();
        base.run.output = Some(dir.path().join("one").join("s.csv"));
        let g = SweepGrid::parse("optimizer.beta2=0.9,0.99,0.999;optimizer.lambda=0.5,1.0").unwrap();
        let serial = sweep(&base, &g, 1).unwrap();
        base.run.output = Some(dir.path().join("four").join("s.csv"));
        let parallel = sweep(&base, &g, 4).unwrap();
        assert_eq!(serial.len(), 6);
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.trace, b.trace);
        }
        for i in 0..6 {
            let a = std::fs::read(dir.path().join("one").join(format!("s-{i:03}.csv"))).unwrap();
            let b = std::fs::read(dir.path().join("four").join(format!("s-{i:03}.csv"))).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn invalid_point_rejected_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let mut base = ExperimentConfig::from_toml(BASE).unwrap();
        base.run.output = Some(dir.path().join("s.csv"));
        let g = SweepGrid::parse("optimizer.beta2=0.99,1.5").unwrap();
        assert!(matches!(sweep(&base, &g, 2), Err(Error::Config { .. })));
        assert!(!dir.path().join("s-000.csv").exists());
    }
}
