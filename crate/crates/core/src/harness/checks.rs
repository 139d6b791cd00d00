//! Bound evaluation against recorded traces.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::bounds::{ball_envelope, fw_rate_bound, iterate_norm_excess_bound, AmortizedBound};
use crate::harness::minimizer::constrained_minimizer;
use crate::harness::trace::Trace;
use crate::objectives::Objective;
use crate::vecmath::{norm, NormKind};
use crate::{Error, Result};

/// Margins below `−MARGIN_TOL` count as violations.
pub const MARGIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `‖Δ_t‖ ≤ 1` in the run's geometry.
    UnitUpdate,
    /// `‖x_t‖ ≤ 1/λ + max(exp(−λΣη)(‖x_0‖ − 1/λ), 0)`.
    BallShrinkage,
    /// Weighted-average Adam update against its amortized bound, per coordinate.
    Amortized,
    /// `λ|x_{t,j}| − 1` for AdamW with constant `η`, per coordinate.
    IterateNorm,
    /// Suboptimality under `η_t = 2/(λ(t+1))`.
    FwRate,
}

impl BoundKind {
    pub const ALL: [BoundKind; 5] = [
        BoundKind::UnitUpdate,
        BoundKind::BallShrinkage,
        BoundKind::Amortized,
        BoundKind::IterateNorm,
        BoundKind::FwRate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::UnitUpdate => "unit-update",
            BoundKind::BallShrinkage => "ball-shrinkage",
            BoundKind::Amortized => "amortized",
            BoundKind::IterateNorm => "iterate-norm",
            BoundKind::FwRate => "fw-rate",
        }
    }

    /// Whether the bound needs every step from `t = 1` recorded.
    pub fn needs_every_step(self) -> bool {
        matches!(self, BoundKind::Amortized | BoundKind::IterateNorm)
    }

    /// Trace column names used when the bound is attached to a run.
    pub fn column_names(self) -> (String, String) {
        let stem = self.as_str().replace('-', "_");
        (format!("bound_{stem}"), format!("measured_{stem}"))
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = BoundKind::ALL.iter().map(|k| k.as_str()).collect();
                Error::precondition(format!("unknown bound `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckRow {
    pub t: usize,
    pub bound: f64,
    pub measured: f64,
    /// Coordinate that attains the smallest margin, for per-coordinate bounds.
    pub coord: Option<usize>,
}

impl CheckRow {
    pub fn margin(&self) -> f64 {
        self.bound - self.measured
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub kind: BoundKind,
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn first_violation(&self) -> Option<&CheckRow> {
        self.rows.iter().find(|r| !(r.margin() >= -MARGIN_TOL))
    }

    pub fn holds(&self) -> bool {
        self.first_violation().is_none()
    }

    pub fn min_margin(&self) -> f64 {
        self.rows.iter().map(CheckRow::margin).fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates `kind` on every recorded row of `trace`.
///
/// `objective` is only consulted by [`BoundKind::FwRate`], which needs the
/// smoothness constant and the constrained minimum.
pub fn check_bound(trace: &Trace, kind: BoundKind, objective: Option<&dyn Objective>) -> Result<CheckReport> {
    if trace.is_empty() {
        return Err(Error::Trace("trace has no rows".into()));
    }
    let rows = match kind {
        BoundKind::UnitUpdate => unit_update(trace)?,
        BoundKind::BallShrinkage => ball_shrinkage(trace)?,
        BoundKind::Amortized => amortized(trace)?,
        BoundKind::IterateNorm => iterate_norm(trace)?,
        BoundKind::FwRate => {
            let obj = objective.ok_or_else(|| {
                Error::precondition("fw-rate needs the objective (smoothness constant and constrained minimum)")
            })?;
            fw_rate(trace, obj)?
        }
    };
    Ok(CheckReport { kind, rows })
}

fn header_norm(trace: &Trace) -> Result<NormKind> {
    trace
        .header_value("norm")
        .ok_or_else(|| Error::Trace("header has no `norm` entry".into()))?
        .trim()
        .parse()
        .map_err(Error::Trace)
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn steps_of(trace: &Trace) -> Result<Vec<usize>> {
    trace.require_columns(&names(&["t"]))?;
    Ok(trace.steps())
}

fn require_contiguous(trace: &Trace, kind: BoundKind) -> Result<()> {
    if !trace.is_contiguous() {
        return Err(Error::Trace(format!(
            "{kind} needs every step recorded from t = 1 (record_every = 1)"
        )));
    }
    Ok(())
}

fn require_zero_init(trace: &Trace, kind: BoundKind) -> Result<()> {
    match trace.header_value("moment_init").map(str::trim) {
        Some("zero") => Ok(()),
        Some(other) => Err(Error::precondition(format!(
            "{kind} assumes m0 = v0 = 0, trace has moment_init = {other}"
        ))),
        None => Err(Error::Trace("header has no `moment_init` entry".into())),
    }
}

fn unit_update(trace: &Trace) -> Result<Vec<CheckRow>> {
    let k = header_norm(trace)?;
    let col = format!("update_{}", k.as_str());
    let idx = trace.require_columns(&[col])?[0];
    let steps = steps_of(trace)?;
    Ok(trace
        .rows()
        .iter()
        .zip(steps)
        .map(|(r, t)| CheckRow {
            t,
            bound: 1.0,
            measured: r[idx],
            coord: None,
        })
        .collect())
}

fn ball_shrinkage(trace: &Trace) -> Result<Vec<CheckRow>> {
    let k = header_norm(trace)?;
    let idx = trace.require_columns(&["eta".to_string(), "eta_sum".to_string(), format!("x_{}", k.as_str())])?;
    let lambda = trace.header_f64("lambda")?;
    if !(lambda > 0.0) {
        return Err(Error::precondition(format!("ball-shrinkage needs λ > 0, trace has λ = {lambda}")));
    }
    let norm_x0 = norm(&trace.header_vector("x0")?, k);
    let steps = steps_of(trace)?;
    trace
        .rows()
        .iter()
        .zip(steps)
        .map(|(r, t)| {
            if lambda * r[idx[0]] > 1.0 {
                return Err(Error::precondition(format!("step {t}: λη = {} exceeds 1", lambda * r[idx[0]])));
            }
            Ok(CheckRow {
                t,
                bound: ball_envelope(norm_x0, lambda, r[idx[1]]),
                measured: r[idx[2]],
                coord: None,
            })
        })
        .collect()
}

/// Per-coordinate column indices `(update_j | x_j, v_j)`; all `v_j` must exist.
fn adam_coords(trace: &Trace, lead: &str) -> Result<Vec<(usize, usize, usize)>> {
    let coords = trace.coords_with_prefix(lead);
    if coords.is_empty() {
        return Err(Error::MissingColumns(vec![format!("{lead}_<j>"), "v_<j>".to_string()]));
    }
    let mut wanted = Vec::new();
    for &j in &coords {
        wanted.push(format!("{lead}_{j}"));
        wanted.push(format!("v_{j}"));
    }
    let idx = trace.require_columns(&wanted)?;
    Ok(coords
        .iter()
        .enumerate()
        .map(|(k, &j)| (j, idx[2 * k], idx[2 * k + 1]))
        .collect())
}

fn effective_v(v: f64, epsilon: f64) -> f64 {
    let s = v.sqrt() + epsilon;
    s * s
}

fn amortized(trace: &Trace) -> Result<Vec<CheckRow>> {
    let kind = BoundKind::Amortized;
    let eta_idx = trace.require_columns(&names(&["t", "eta"]))?[1];
    let coords = adam_coords(trace, "update")?;
    require_contiguous(trace, kind)?;
    require_zero_init(trace, kind)?;
    let beta1 = trace.header_f64("beta1")?;
    let beta2 = trace.header_f64("beta2")?;
    let epsilon = trace.header_f64("epsilon").unwrap_or(0.0);
    let mut accs = coords
        .iter()
        .map(|_| AmortizedBound::new(beta1, beta2))
        .collect::<Result<Vec<_>>>()?;
    let mut sums = vec![0.0; coords.len()];
    let mut eta_sum = 0.0;
    let mut prev_eta = f64::INFINITY;
    let mut out = Vec::with_capacity(trace.len());
    for (i, r) in trace.rows().iter().enumerate() {
        let t = i + 1;
        let eta = r[eta_idx];
        if eta > prev_eta {
            return Err(Error::precondition(format!("amortized bound needs non-increasing η; step {t} increases it")));
        }
        prev_eta = eta;
        eta_sum += eta;
        let mut worst: Option<CheckRow> = None;
        for (k, &(j, u_idx, v_idx)) in coords.iter().enumerate() {
            accs[k].push(eta, effective_v(r[v_idx], epsilon))?;
            sums[k] += eta * r[u_idx];
            let row = CheckRow {
                t,
                bound: accs[k].rhs()?,
                measured: sums[k].abs() / eta_sum,
                coord: Some(j),
            };
            if worst.is_none_or(|w| row.margin() < w.margin()) {
                worst = Some(row);
            }
        }
        out.extend(worst);
    }
    Ok(out)
}

fn iterate_norm(trace: &Trace) -> Result<Vec<CheckRow>> {
    let kind = BoundKind::IterateNorm;
    let eta_idx = trace.require_columns(&names(&["t", "eta"]))?[1];
    let coords = adam_coords(trace, "x")?;
    require_contiguous(trace, kind)?;
    require_zero_init(trace, kind)?;
    if trace.header_value("algorithm").map(str::trim) != Some("adamw") {
        return Err(Error::precondition("iterate-norm applies to AdamW traces"));
    }
    let beta1 = trace.header_f64("beta1")?;
    let beta2 = trace.header_f64("beta2")?;
    let lambda = trace.header_f64("lambda")?;
    let epsilon = trace.header_f64("epsilon").unwrap_or(0.0);
    let x0 = trace.header_vector("x0")?;
    let eta = trace.rows()[0][eta_idx];
    if trace.rows().iter().any(|r| r[eta_idx] != eta) {
        return Err(Error::precondition("iterate-norm needs a constant learning rate"));
    }
    let mut v1 = vec![0.0; coords.len()];
    let mut c = vec![0.0f64; coords.len()];
    let mut out = Vec::with_capacity(trace.len());
    for (i, r) in trace.rows().iter().enumerate() {
        let t = i + 1;
        let mut worst: Option<CheckRow> = None;
        for (k, &(j, x_idx, v_idx)) in coords.iter().enumerate() {
            let v = effective_v(r[v_idx], epsilon);
            if i == 0 {
                v1[k] = v;
            }
            c[k] = c[k].max((v / v1[k]).ln().abs());
            let x0_j = *x0
                .get(j)
                .ok_or_else(|| Error::Trace(format!("header x0 has no coordinate {j}")))?;
            let row = CheckRow {
                t,
                bound: iterate_norm_excess_bound(beta1, beta2, lambda, eta, t, x0_j, c[k])?,
                measured: lambda * r[x_idx].abs() - 1.0,
                coord: Some(j),
            };
            if worst.is_none_or(|w| row.margin() < w.margin()) {
                worst = Some(row);
            }
        }
        out.extend(worst);
    }
    Ok(out)
}

fn fw_rate(trace: &Trace, obj: &dyn Objective) -> Result<Vec<CheckRow>> {
    let idx = trace.require_columns(&names(&["eta", "loss"]))?;
    let k = header_norm(trace)?;
    let lambda = trace.header_f64("lambda")?;
    if !(lambda > 0.0) {
        return Err(Error::precondition(format!("fw-rate needs λ > 0, trace has λ = {lambda}")));
    }
    let steps = steps_of(trace)?;
    for (r, &t) in trace.rows().iter().zip(&steps) {
        let expected = 2.0 / (lambda * (t as f64 + 1.0));
        if (r[idx[0]] - expected).abs() > 1e-12 * expected {
            return Err(Error::precondition(format!(
                "fw-rate needs η_t = 2/(λ(t+1)); step {t} has η = {}",
                r[idx[0]]
            )));
        }
    }
    let h = obj
        .smoothness(k)
        .ok_or_else(|| Error::precondition(format!("objective has no {k} smoothness constant")))?;
    let (_, f_star) = constrained_minimizer(obj, lambda, k)?;
    let b = norm(&trace.header_vector("x0")?, k).max(1.0 / lambda);
    trace
        .rows()
        .iter()
        .zip(steps)
        .map(|(r, t)| {
            Ok(CheckRow {
                t,
                bound: fw_rate_bound(h, lambda, b, t)?,
                measured: r[idx[1]] - f_star,
                coord: None,
            })
        })
        .collect()
}
