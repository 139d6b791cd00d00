//! Full-batch driver shared by every step rule.

use std::collections::VecDeque;

use crate::harness::trace::{fmt_f64, fmt_vector, Trace};
use crate::objectives::Objective;
use crate::optimizers::adam::{adam_step, AdamConfig, AdamState, DecayMode};
use crate::optimizers::schedule::LrSchedule;
use crate::optimizers::steepest::{decayed_step, frank_wolfe_step, NsdConfig};
use crate::vecmath::{norm, steepest_direction, NormKind, ParamVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Adam {
        config: AdamConfig,
        /// Initial `(m0, v0)`; zero when absent.
        init: Option<(ParamVector, ParamVector)>,
    },
    Nsd(NsdConfig),
    /// Frank–Wolfe over the ball of `radius`; the schedule supplies `γ_t`.
    FrankWolfe { norm: NormKind, radius: f64 },
}

impl Optimizer {
    pub fn adam(config: AdamConfig) -> Self {
        Optimizer::Adam { config, init: None }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Optimizer::Adam { config, .. } => match config.decay_mode {
                DecayMode::Decoupled => "adamw",
                DecayMode::L2Regularized => "adam-l2",
            },
            Optimizer::Nsd(cfg) if cfg.normalized => "nsd",
            Optimizer::Nsd(_) => "sd",
            Optimizer::FrankWolfe { .. } => "frank-wolfe",
        }
    }

    /// Weight decay; for Frank–Wolfe the inverse radius.
    pub fn lambda(&self) -> f64 {
        match self {
            Optimizer::Adam { config, .. } => config.lambda,
            Optimizer::Nsd(cfg) => cfg.lambda,
            Optimizer::FrankWolfe { radius, .. } => 1.0 / radius,
        }
    }

    /// The geometry whose unit ball bounds the update (ℓ∞ for Adam).
    pub fn norm(&self) -> NormKind {
        match self {
            Optimizer::Adam { .. } => NormKind::LInf,
            Optimizer::Nsd(cfg) => cfg.norm,
            Optimizer::FrankWolfe { norm, .. } => *norm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Optimizer::Adam { config, .. } => config.validate(),
            Optimizer::Nsd(cfg) => cfg.validate(),
            Optimizer::FrankWolfe { radius, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::config("radius", format!("{radius} must be positive")));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum CoordSelection {
    /// All coordinates up to dimension 16, otherwise the first 16.
    #[default]
    Auto,
    All,
    First(usize),
    List(Vec<usize>),
}

impl CoordSelection {
    pub fn resolve(&self, dim: usize) -> Result<Vec<usize>> {
        let coords: Vec<usize> = match self {
            CoordSelection::Auto => (0..dim.min(16)).collect(),
            CoordSelection::All => (0..dim).collect(),
            CoordSelection::First(n) => (0..(*n).min(dim)).collect(),
            CoordSelection::List(list) => list.clone(),
        };
        if let Some(&bad) = coords.iter().find(|&&j| j >= dim) {
            return Err(Error::config(
                "record_coords",
                format!("coordinate {bad} out of range for dimension {dim}"),
            ));
        }
        Ok(coords)
    }
}

/// `‖x_t − x_{t−window}‖∞ ≤ tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCriterion {
    pub window: usize,
    pub tol: f64,
}

impl Default for ConvergenceCriterion {
    fn default() -> Self {
        ConvergenceCriterion {
            window: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    /// Defaults to 1 for runs of at most 10⁴ steps, 10 otherwise.
    pub record_every: Option<usize>,
    pub coords: CoordSelection,
    pub convergence: Option<ConvergenceCriterion>,
}

impl RunOptions {
    pub fn every_step() -> Self {
        RunOptions {
            record_every: Some(1),
            ..Default::default()
        }
    }

    pub fn with_coords(mut self, coords: CoordSelection) -> Self {
        self.coords = coords;
        self
    }

    pub fn with_convergence(mut self, c: ConvergenceCriterion) -> Self {
        self.convergence = Some(c);
        self
    }

    pub fn effective_record_every(&self, steps: usize) -> usize {
        self.record_every
            .unwrap_or(if steps <= 10_000 { 1 } else { 10 })
    }
}

/// Iterates `optimizer` for `steps` full-batch steps from `x0`.
///
/// Row `t` holds the learning rate and update of step `t` together with
/// the loss, iterate norms and gradient norms at `x_t`. Rows are written for
/// every multiple of `record_every` and for the final step.
pub fn run(
    optimizer: &Optimizer,
    objective: &dyn Objective,
    x0: &ParamVector,
    schedule: &LrSchedule,
    steps: usize,
    options: &RunOptions,
) -> Result<Trace> {
    if steps == 0 {
        return Err(Error::precondition("at least one step is required"));
    }
    if x0.dim() != objective.dim() {
        return Err(Error::DimensionMismatch {
            expected: objective.dim(),
            found: x0.dim(),
        });
    }
    if !x0.is_finite() {
        return Err(Error::precondition("x0 must be finite"));
    }
    optimizer.validate()?;
    schedule.validate(steps)?;
    let record_every = options.effective_record_every(steps);
    if record_every == 0 {
        return Err(Error::config("record_every", "must be positive"));
    }
    let coords = options.coords.resolve(x0.dim())?;
    let is_adam = matches!(optimizer, Optimizer::Adam { .. });

    let mut columns: Vec<String> = [
        "t", "eta", "eta_sum", "loss", "x_l1", "x_l2", "x_linf", "grad_l1", "grad_l2", "grad_linf",
        "update_l1", "update_l2", "update_linf",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for &j in &coords {
        columns.push(format!("x_{j}"));
        columns.push(format!("update_{j}"));
        if is_adam {
            columns.push(format!("m_{j}"));
            columns.push(format!("v_{j}"));
        }
    }
    let mut trace = Trace::new(columns);

    let mut adam = match optimizer {
        Optimizer::Adam { init: Some((m0, v0)), .. } => {
            Some(AdamState::with_moments(x0.clone(), m0.clone(), v0.clone())?)
        }
        Optimizer::Adam { init: None, .. } => Some(AdamState::new(x0.clone())),
        _ => None,
    };
    let mut x = x0.clone();
    let mut g = objective.grad(&x);
    let mut eta_sum = 0.0;
    let mut history: VecDeque<ParamVector> = VecDeque::new();
    let mut last_unconverged = 0usize;

    for t in 1..=steps {
        let fail = |e: Error| Error::StepFailed {
            step: t,
            source: Box::new(e),
        };
        let eta = schedule.eta(t).map_err(fail)?;
        let update = match optimizer {
            Optimizer::Adam { config, .. } => {
                let state = adam.as_ref().expect("adam state");
                let next = adam_step(config, state, |_| g.clone(), eta).map_err(fail)?;
                let u = config.update(&next);
                x = next.x.clone();
                adam = Some(next);
                u
            }
            Optimizer::Nsd(cfg) => {
                if cfg.lambda * eta > 1.0 {
                    return Err(fail(Error::precondition(format!(
                        "λη = {} exceeds 1",
                        cfg.lambda * eta
                    ))));
                }
                let u = cfg.update(&g);
                x = decayed_step(&x, &u, cfg.lambda, eta);
                u
            }
            Optimizer::FrankWolfe { norm, radius } => {
                let u = steepest_direction(&g, *norm);
                x = frank_wolfe_step(&x, &g, *norm, *radius, eta).map_err(fail)?;
                u
            }
        };
        if !x.is_finite() {
            return Err(fail(Error::precondition("iterate became non-finite")));
        }
        eta_sum += eta;
        g = objective.grad(&x);

        if let Some(c) = options.convergence {
            history.push_back(x.clone());
            if history.len() > c.window + 1 {
                history.pop_front();
            }
            let settled = history.len() == c.window + 1 && {
                let old = &history[0];
                norm(&(&x - old), NormKind::LInf) <= c.tol
            };
            if !settled {
                last_unconverged = t;
            }
        }

        if t % record_every == 0 || t == steps {
            let mut row = vec![
                t as f64,
                eta,
                eta_sum,
                objective.eval(&x),
                norm(&x, NormKind::L1),
                norm(&x, NormKind::L2),
                norm(&x, NormKind::LInf),
                norm(&g, NormKind::L1),
                norm(&g, NormKind::L2),
                norm(&g, NormKind::LInf),
                norm(&update, NormKind::L1),
                norm(&update, NormKind::L2),
                norm(&update, NormKind::LInf),
            ];
            for &j in &coords {
                row.push(x[j]);
                row.push(update[j]);
                if let Some(s) = &adam {
                    row.push(s.m[j]);
                    row.push(s.v[j]);
                }
            }
            trace.push_row(row);
        }
    }

    trace.set_header("algorithm", optimizer.label());
    trace.set_header("norm", optimizer.norm().as_str());
    trace.set_header("lambda", fmt_f64(optimizer.lambda()));
    match optimizer {
        Optimizer::Adam { config, init } => {
            trace.set_header("beta1", fmt_f64(config.beta1));
            trace.set_header("beta2", fmt_f64(config.beta2));
            trace.set_header("epsilon", fmt_f64(config.epsilon));
            trace.set_header("moment_init", if init.is_some() { "custom" } else { "zero" });
        }
        Optimizer::Nsd(cfg) => {
            trace.set_header("normalized", cfg.normalized.to_string());
        }
        Optimizer::FrankWolfe { radius, .. } => {
            trace.set_header("radius", fmt_f64(*radius));
        }
    }
    trace.set_header("schedule", schedule.describe());
    trace.set_header("steps", steps.to_string());
    trace.set_header("record_every", record_every.to_string());
    trace.set_header("dim", x0.dim().to_string());
    trace.set_header("x0", fmt_vector(x0));
    trace.set_header("x_final", fmt_vector(&x));
    if options.convergence.is_some() {
        let converged = last_unconverged < steps;
        trace.set_header(
            "converged_at",
            if converged {
                (last_unconverged + 1).to_string()
            } else {
                "none".to_string()
            },
        );
    }
    Ok(trace)
}
