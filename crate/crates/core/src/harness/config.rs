//! TOML experiment configuration.
//!
//! ```toml
//! [objective]
//! kind = "scaled-quadratic"
//! dim = 100
//! seed = 0
//! leading_ones = 10
//!
//! [optimizer]
//! kind = "nsd"
//! norm = "linf"
//! lambda = 1.0
//!
//! [schedule]
//! kind = "frank-wolfe"
//!
//! [x0]
//! kind = "uniform"
//! low = -5.0
//! high = 5.0
//! seed = 0
//!
//! [run]
//! steps = 100
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::harness::checks::BoundKind;
use crate::harness::rng::{synthetic_target, uniform_vector};
use crate::objectives::{make_counterexample_objective, make_scaled_quadratic, make_smoothed_abs, Objective};
use crate::optimizers::{
    AdamConfig, ConvergenceCriterion, CoordSelection, LrSchedule, NsdConfig, Optimizer, RunOptions, DEFAULT_EPSILON,
};
use crate::vecmath::{NormKind, ParamVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objective: ObjectiveSpec,
    pub optimizer: OptimizerSpec,
    pub schedule: ScheduleSpec,
    pub x0: X0Spec,
    pub run: RunSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `Σ (x_i − c_i)² / i²`. Give either `target`, or `dim` and `seed` for a
    /// target whose first `leading_ones` entries are 1 and whose remaining
    /// entries are uniform in `[−tail_range, tail_range]`.
    ScaledQuadratic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        leading_ones: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_range: Option<f64>,
    },
    /// `½(x − x̃)²` in one dimension.
    Counterexample { x_tilde: f64 },
    /// `Σ w_i (√((x_i − c_i)² + μ²) − μ)`.
    SmoothedAbs {
        center: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        mu: f64,
    },
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OptimizerSpec {
    Adamw {
        beta1: f64,
        beta2: f64,
        lambda: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m0: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v0: Option<Vec<f64>>,
    },
    AdamL2 {
        beta1: f64,
        beta2: f64,
        lambda: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m0: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v0: Option<Vec<f64>>,
    },
    /// Normalized steepest descent with decoupled weight decay.
    Nsd { norm: NormKind, lambda: f64 },
    /// Unnormalized steepest descent: the step is scaled by the dual gradient norm.
    Sd {
        norm: NormKind,
        #[serde(default)]
        lambda: f64,
    },
    FrankWolfe { norm: NormKind, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant { eta: f64 },
    /// `η_t = 2/(λ(t+1))`; `lambda` defaults to the optimizer's.
    FrankWolfe {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
    InverseSqrt { scale: f64 },
    Table { etas: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum X0Spec {
    Explicit { values: Vec<f64> },
    Uniform { low: f64, high: f64, seed: u64 },
    Zeros,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoordsSpec {
    /// `"auto"` or `"all"`.
    Named(String),
    List(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_coords: Option<CoordsSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<BoundKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunSpec {
    pub fn steps(steps: usize) -> Self {
        RunSpec {
            steps,
            record_every: None,
            record_coords: None,
            bounds: Vec::new(),
            convergence_window: None,
            convergence_tol: None,
            output: None,
        }
    }
}

/// A validated configuration turned into runnable parts.
pub struct Experiment {
    pub objective: Box<dyn Objective>,
    pub optimizer: Optimizer,
    pub schedule: LrSchedule,
    pub x0: ParamVector,
    pub steps: usize,
    pub options: RunOptions,
}

/// Re-labels errors raised while building `section` with a dotted field path.
fn in_section(section: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config { field, message } => Error::config(format!("{section}.{field}"), message),
        Error::Precondition(message) => Error::config(section, message),
        Error::DimensionMismatch { expected, found } => {
            Error::config(section, format!("dimension {found} does not match the objective's {expected}"))
        }
        other => other,
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} must be positive and finite")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "config".to_string());
            Error::config(field, e.to_string().trim().to_string())
        })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }

    /// Checks every field and builds the objective, optimizer, schedule and
    /// start point. Nothing is iterated.
    pub fn build(&self) -> Result<Experiment> {
        let objective = self.objective.build().map_err(in_section("objective"))?;
        let dim = objective.dim();
        let optimizer = self.optimizer.build(dim).map_err(in_section("optimizer"))?;
        let steps = self.run.steps;
        if steps == 0 {
            return Err(Error::config("run.steps", "must be at least 1"));
        }
        let schedule = self.schedule.build(&optimizer).map_err(in_section("schedule"))?;
        schedule.validate(steps).map_err(in_section("schedule"))?;
        check_step_sizes(&optimizer, &schedule, steps)?;
        let x0 = self.x0.build(dim).map_err(in_section("x0"))?;
        let options = self.run.build(dim, &optimizer, &schedule)?;
        Ok(Experiment {
            objective,
            optimizer,
            schedule,
            x0,
            steps,
            options,
        })
    }

    /// Seeds consumed by the run, keyed by what they generate.
    pub fn seeds(&self) -> Vec<(&'static str, u64)> {
        let mut out = Vec::new();
        if let ObjectiveSpec::ScaledQuadratic { seed: Some(s), .. } = self.objective {
            out.push(("objective", s));
        }
        if let X0Spec::Uniform { seed, .. } = self.x0 {
            out.push(("x0", seed));
        }
        out
    }

    /// `section.key = value` pairs with TOML-literal values. The output path
    /// is left out so that a trace does not depend on where it is written.
    pub fn flatten(&self) -> Result<Vec<(String, String)>> {
        let value = toml::Value::try_from(self).map_err(|e| Error::config("config", e.to_string()))?;
        let mut out = Vec::new();
        if let toml::Value::Table(sections) = value {
            for section in ["objective", "optimizer", "schedule", "x0", "run"] {
                if let Some(toml::Value::Table(fields)) = sections.get(section) {
                    for (k, v) in fields {
                        if section == "run" && k == "output" {
                            continue;
                        }
                        out.push((format!("{section}.{k}"), v.to_string()));
                    }
                }
            }
        }
        Ok(out)
    }
}

fn check_step_sizes(optimizer: &Optimizer, schedule: &LrSchedule, steps: usize) -> Result<()> {
    let limit = match optimizer {
        Optimizer::Nsd(cfg) if cfg.lambda > 0.0 => cfg.lambda,
        Optimizer::FrankWolfe { .. } => 1.0,
        _ => return Ok(()),
    };
    for t in 1..=steps {
        let eta = schedule.eta(t).map_err(in_section("schedule"))?;
        if limit * eta > 1.0 {
            let what = if matches!(optimizer, Optimizer::FrankWolfe { .. }) {
                format!("step {t}: γ = {eta} exceeds 1")
            } else {
                format!("step {t}: λη = {} exceeds 1", limit * eta)
            };
            return Err(Error::config("schedule", what));
        }
    }
    Ok(())
}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<Box<dyn Objective>> {
        match self {
            ObjectiveSpec::ScaledQuadratic {
                target,
                dim,
                seed,
                leading_ones,
                tail_range,
            } => {
                let target = match (target, dim) {
                    (Some(t), None) => {
                        if seed.is_some() || leading_ones.is_some() || tail_range.is_some() {
                            return Err(Error::config("target", "an explicit target takes no seed, leading_ones or tail_range"));
                        }
                        ParamVector::from(t.clone())
                    }
                    (None, Some(d)) => {
                        let seed = seed.ok_or_else(|| Error::config("seed", "required with `dim`"))?;
                        let ones = leading_ones.unwrap_or(0);
                        if ones > *d {
                            return Err(Error::config("leading_ones", format!("{ones} exceeds dim {d}")));
                        }
                        let range = tail_range.unwrap_or(1.0);
                        if !(range >= 0.0 && range.is_finite()) {
                            return Err(Error::config("tail_range", format!("{range} must be ≥ 0")));
                        }
                        synthetic_target(*d, ones, range, seed)
                    }
                    _ => return Err(Error::config("target", "give exactly one of `target` or `dim`")),
                };
                Ok(Box::new(make_scaled_quadratic(target)?))
            }
            ObjectiveSpec::Counterexample { x_tilde } => Ok(Box::new(make_counterexample_objective(*x_tilde)?)),
            ObjectiveSpec::SmoothedAbs { center, weights, mu } => {
                let weights = weights.clone().unwrap_or_else(|| vec![1.0; center.len()]);
                Ok(Box::new(make_smoothed_abs(center.clone().into(), weights.into(), *mu)?))
            }
        }
    }
}

impl OptimizerSpec {
    pub fn build(&self, dim: usize) -> Result<Optimizer> {
        let opt = match self {
            OptimizerSpec::Adamw {
                beta1,
                beta2,
                lambda,
                epsilon,
                m0,
                v0,
            }
            | OptimizerSpec::AdamL2 {
                beta1,
                beta2,
                lambda,
                epsilon,
                m0,
                v0,
            } => {
                let base = if matches!(self, OptimizerSpec::Adamw { .. }) {
                    AdamConfig::adamw(*beta1, *beta2, *lambda)
                } else {
                    AdamConfig::adam_l2(*beta1, *beta2, *lambda)
                };
                let config = base.with_epsilon(*epsilon);
                let init = match (m0, v0) {
                    (None, None) => None,
                    (Some(m), Some(v)) => {
                        for (field, vec) in [("m0", m), ("v0", v)] {
                            if vec.len() != dim {
                                return Err(Error::config(field, format!("has {} entries, objective has dimension {dim}", vec.len())));
                            }
                        }
                        if v.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                            return Err(Error::config("v0", "entries must be finite and ≥ 0"));
                        }
                        if m.iter().any(|x| !x.is_finite()) {
                            return Err(Error::config("m0", "entries must be finite"));
                        }
                        Some((ParamVector::from(m.clone()), ParamVector::from(v.clone())))
                    }
                    _ => return Err(Error::config("m0", "m0 and v0 must be given together")),
                };
                Optimizer::Adam { config, init }
            }
            OptimizerSpec::Nsd { norm, lambda } => Optimizer::Nsd(NsdConfig::normalized(*norm, *lambda)),
            OptimizerSpec::Sd { norm, lambda } => Optimizer::Nsd(NsdConfig::unnormalized(*norm, *lambda)),
            OptimizerSpec::FrankWolfe { norm, radius } => Optimizer::FrankWolfe {
                norm: *norm,
                radius: *radius,
            },
        };
        opt.validate()?;
        Ok(opt)
    }
}

impl ScheduleSpec {
    pub fn build(&self, optimizer: &Optimizer) -> Result<LrSchedule> {
        match self {
            ScheduleSpec::Constant { eta } => {
                positive("eta", *eta)?;
                Ok(LrSchedule::Constant(*eta))
            }
            ScheduleSpec::FrankWolfe { lambda } => {
                let lambda = match lambda {
                    Some(l) => *l,
                    None => {
                        let l = optimizer.lambda();
                        if l <= 0.0 {
                            return Err(Error::config("lambda", "required when the optimizer has no weight decay"));
                        }
                        l
                    }
                };
                positive("lambda", lambda)?;
                Ok(LrSchedule::FrankWolfeRate { lambda })
            }
            ScheduleSpec::InverseSqrt { scale } => {
                positive("scale", *scale)?;
                Ok(LrSchedule::InverseSqrt { scale: *scale })
            }
            ScheduleSpec::Table { etas } => {
                if let Some((i, bad)) = etas.iter().enumerate().find(|(_, e)| !(**e > 0.0 && e.is_finite())) {
                    return Err(Error::config("etas", format!("entry {i} = {bad} must be positive")));
                }
                Ok(LrSchedule::Table(etas.clone()))
            }
        }
    }
}

impl X0Spec {
    pub fn build(&self, dim: usize) -> Result<ParamVector> {
        match self {
            X0Spec::Explicit { values } => {
                if values.len() != dim {
                    return Err(Error::config("values", format!("has {} entries, objective has dimension {dim}", values.len())));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("values", "entries must be finite"));
                }
                Ok(ParamVector::from(values.clone()))
            }
            X0Spec::Uniform { low, high, seed } => {
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return Err(Error::config("low", format!("need finite low ≤ high, got [{low}, {high}]")));
                }
                Ok(uniform_vector(dim, *low, *high, *seed))
            }
            X0Spec::Zeros => Ok(ParamVector::zeros(dim)),
        }
    }
}

impl RunSpec {
    fn build(&self, dim: usize, optimizer: &Optimizer, schedule: &LrSchedule) -> Result<RunOptions> {
        if self.record_every == Some(0) {
            return Err(Error::config("run.record_every", "must be at least 1"));
        }
        let coords = match &self.record_coords {
            None => CoordSelection::Auto,
            Some(CoordsSpec::Named(n)) if n == "auto" => CoordSelection::Auto,
            Some(CoordsSpec::Named(n)) if n == "all" => CoordSelection::All,
            Some(CoordsSpec::Named(n)) => {
                return Err(Error::config("run.record_coords", format!("`{n}` is not \"auto\", \"all\" or a list")))
            }
            Some(CoordsSpec::List(list)) => CoordSelection::List(list.clone()),
        };
        coords.resolve(dim).map_err(in_section("run"))?;
        let convergence = match (self.convergence_window, self.convergence_tol) {
            (None, None) => None,
            (w, tol) => {
                let d = ConvergenceCriterion::default();
                let c = ConvergenceCriterion {
                    window: w.unwrap_or(d.window),
                    tol: tol.unwrap_or(d.tol),
                };
                if c.window == 0 {
                    return Err(Error::config("run.convergence_window", "must be at least 1"));
                }
                positive("run.convergence_tol", c.tol)?;
                Some(c)
            }
        };
        let options = RunOptions {
            record_every: self.record_every,
            coords,
            convergence,
        };
        let every = options.effective_record_every(self.steps);
        let is_adam = matches!(optimizer, Optimizer::Adam { .. });
        for &b in &self.bounds {
            let reject = |msg: String| Err(Error::config("run.bounds", format!("{b}: {msg}")));
            if b.needs_every_step() && every != 1 {
                return reject(format!("needs record_every = 1, effective value is {every}"));
            }
            match b {
                BoundKind::Amortized | BoundKind::IterateNorm if !is_adam => {
                    return reject("applies to Adam runs only".into())
                }
                BoundKind::Amortized | BoundKind::IterateNorm => {
                    if let Optimizer::Adam { config, init } = optimizer {
                        if init.is_some() {
                            return reject("assumes m0 = v0 = 0".into());
                        }
                        if !config.betas_ordered() {
                            return reject("needs β1 ≤ β2".into());
                        }
                        if b == BoundKind::Amortized && !schedule.is_non_increasing(self.steps) {
                            return reject("needs a non-increasing schedule".into());
                        }
                        if b == BoundKind::IterateNorm {
                            if optimizer.label() != "adamw" {
                                return reject("applies to AdamW".into());
                            }
                            if !matches!(schedule, LrSchedule::Constant(_)) {
                                return reject("needs a constant schedule".into());
                            }
                        }
                    }
                }
                BoundKind::BallShrinkage if optimizer.lambda() <= 0.0 => {
                    return reject("needs positive weight decay".into())
                }
                BoundKind::FwRate => {
                    let ok = matches!(optimizer, Optimizer::Nsd(cfg) if cfg.normalized && cfg.lambda > 0.0)
                        && matches!(schedule, LrSchedule::FrankWolfeRate { lambda } if *lambda == optimizer.lambda());
                    if !ok {
                        return reject("needs normalized steepest descent with λ > 0 and η_t = 2/(λ(t+1))".into());
                    }
                }
                _ => {}
            }
        }
        Ok(options)
    }
}
