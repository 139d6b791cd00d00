//! Analytic test objectives with exact gradients and smoothness constants.

use crate::vecmath::{dual_norm, norm, NormKind, ParamVector};
use crate::{Error, Result};

/// A differentiable loss with known geometry.
///
/// `smoothness(k)` is the Lipschitz constant of the gradient measured as
/// `‖∇L(x) − ∇L(y)‖_* ≤ H ‖x − y‖` in norm `k`, when it is known in closed form.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> ParamVector;
    fn smoothness(&self, norm: NormKind) -> Option<f64>;

    /// Minimizer and minimum over `{x : ‖x‖ ≤ 1/λ}` when available in closed form.
    fn constrained_min(&self, _lambda: f64, _norm: NormKind) -> Option<(ParamVector, f64)> {
        None
    }
}

/// `g(x) = Σ_i (x_i − x*_i)² / i²` with 1-based `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledQuadratic {
    target: ParamVector,
}

impl ScaledQuadratic {
    pub fn target(&self) -> &ParamVector {
        &self.target
    }

    fn weight(i: usize) -> f64 {
        let k = (i + 1) as f64;
        1.0 / (k * k)
    }
}

pub fn make_scaled_quadratic(target: ParamVector) -> Result<ScaledQuadratic> {
    if target.dim() == 0 {
        return Err(Error::precondition("scaled quadratic needs dimension ≥ 1"));
    }
    if !target.is_finite() {
        return Err(Error::precondition("scaled quadratic target must be finite"));
    }
    Ok(ScaledQuadratic { target })
}

impl Objective for ScaledQuadratic {
    fn name(&self) -> &str {
        "scaled-quadratic"
    }

    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        check_dim(self.dim(), x);
        x.iter()
            .zip(self.target.iter())
            .enumerate()
            .map(|(i, (&xi, &ti))| (xi - ti) * (xi - ti) * Self::weight(i))
            .sum()
    }

    fn grad(&self, x: &[f64]) -> ParamVector {
        check_dim(self.dim(), x);
        x.iter()
            .zip(self.target.iter())
            .enumerate()
            .map(|(i, (&xi, &ti))| 2.0 * (xi - ti) * Self::weight(i))
            .collect()
    }

    fn smoothness(&self, norm: NormKind) -> Option<f64> {
        // Hessian is diag(2/i²)
        Some(match norm {
            NormKind::L1 | NormKind::L2 => 2.0,
            NormKind::LInf => (0..self.dim()).map(|i| 2.0 * Self::weight(i)).sum(),
        })
    }

    fn constrained_min(&self, lambda: f64, norm: NormKind) -> Option<(ParamVector, f64)> {
        if norm != NormKind::LInf || lambda <= 0.0 {
            return None;
        }
        let x = clamp_to_box(&self.target, 1.0 / lambda);
        let f = self.eval(&x);
        Some((x, f))
    }
}

/// `L(x) = ½ (x − x̃)²` on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleQuadratic {
    x_tilde: f64,
}

impl CounterexampleQuadratic {
    pub fn x_tilde(&self) -> f64 {
        self.x_tilde
    }
}

pub fn make_counterexample_objective(x_tilde: f64) -> Result<CounterexampleQuadratic> {
    if !x_tilde.is_finite() {
        return Err(Error::precondition("x_tilde must be finite"));
    }
    Ok(CounterexampleQuadratic { x_tilde })
}

impl Objective for CounterexampleQuadratic {
    fn name(&self) -> &str {
        "counterexample"
    }

    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> f64 {
        check_dim(1, x);
        0.5 * (x[0] - self.x_tilde).powi(2)
    }

    fn grad(&self, x: &[f64]) -> ParamVector {
        check_dim(1, x);
        ParamVector::new(vec![x[0] - self.x_tilde])
    }

    fn smoothness(&self, _norm: NormKind) -> Option<f64> {
        Some(1.0)
    }

    fn constrained_min(&self, lambda: f64, norm: NormKind) -> Option<(ParamVector, f64)> {
        if norm != NormKind::LInf || lambda <= 0.0 {
            return None;
        }
        let x = clamp_to_box(&ParamVector::new(vec![self.x_tilde]), 1.0 / lambda);
        let f = self.eval(&x);
        Some((x, f))
    }
}

/// The point `x̃` at which AdamW with `β1 > β2` and a matched moment
/// initialization sits on an exact geometric trajectory.
///
/// Requires `0 < β2 < β1 < 1 − λη`, `λη ∈ (0, 1)` and `(1 − λη)² > β2`.
pub fn counterexample_fixed_point(beta1: f64, beta2: f64, lambda: f64, eta: f64) -> Result<f64> {
    if !(lambda > 0.0 && eta > 0.0) {
        return Err(Error::precondition("λ and η must be positive"));
    }
    let le = lambda * eta;
    if !(le > 0.0 && le < 1.0) {
        return Err(Error::precondition(format!("λη = {le} must lie in (0, 1)")));
    }
    if !(beta2 > 0.0 && beta2 < beta1) {
        return Err(Error::precondition(format!(
            "need 0 < β2 < β1, got β1 = {beta1}, β2 = {beta2}"
        )));
    }
    let shrink = 1.0 - le;
    if !(beta1 < shrink) {
        return Err(Error::precondition(format!(
            "need β1 < 1 − λη = {shrink}, got β1 = {beta1}"
        )));
    }
    if !(shrink * shrink > beta2) {
        return Err(Error::precondition("need (1 − λη)² > β2"));
    }
    let m_ratio = (1.0 - beta1) / (shrink - beta1);
    let v_ratio = (1.0 - beta2) / (shrink * shrink - beta2);
    Ok(-(1.0 / lambda) * m_ratio / v_ratio.sqrt())
}

/// `Σ_i w_i (√((x_i − c_i)² + μ²) − μ)`, a smooth surrogate of a weighted ℓ1 distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedAbs {
    center: ParamVector,
    weights: ParamVector,
    mu: f64,
}

pub fn make_smoothed_abs(center: ParamVector, weights: ParamVector, mu: f64) -> Result<SmoothedAbs> {
    if center.dim() == 0 || center.dim() != weights.dim() {
        return Err(Error::precondition(
            "smoothed-abs needs matching nonempty center and weights",
        ));
    }
    if !(mu > 0.0) || weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::precondition("smoothed-abs needs μ > 0 and positive weights"));
    }
    if !center.is_finite() || !weights.is_finite() {
        return Err(Error::precondition("smoothed-abs parameters must be finite"));
    }
    Ok(SmoothedAbs {
        center,
        weights,
        mu,
    })
}

impl Objective for SmoothedAbs {
    fn name(&self) -> &str {
        "smoothed-abs"
    }

    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        check_dim(self.dim(), x);
        let mu = self.mu;
        x.iter()
            .zip(self.center.iter().zip(self.weights.iter()))
            .map(|(&xi, (&ci, &wi))| wi * ((xi - ci).hypot(mu) - mu))
            .sum()
    }

    fn grad(&self, x: &[f64]) -> ParamVector {
        check_dim(self.dim(), x);
        let mu = self.mu;
        x.iter()
            .zip(self.center.iter().zip(self.weights.iter()))
            .map(|(&xi, (&ci, &wi))| wi * (xi - ci) / (xi - ci).hypot(mu))
            .collect()
    }

    fn smoothness(&self, norm: NormKind) -> Option<f64> {
        // Hessian is diagonal with entries bounded by w_i / μ
        let (max_w, sum_w) = self
            .weights
            .iter()
            .fold((0.0f64, 0.0), |(m, s), &w| (m.max(w), s + w));
        Some(match norm {
            NormKind::L1 | NormKind::L2 => max_w / self.mu,
            NormKind::LInf => sum_w / self.mu,
        })
    }

    fn constrained_min(&self, lambda: f64, norm: NormKind) -> Option<(ParamVector, f64)> {
        if norm != NormKind::LInf || lambda <= 0.0 {
            return None;
        }
        let x = clamp_to_box(&self.center, 1.0 / lambda);
        let f = self.eval(&x);
        Some((x, f))
    }
}

pub(crate) fn clamp_to_box(v: &ParamVector, radius: f64) -> ParamVector {
    v.map(|x| x.clamp(-radius, radius))
}

fn check_dim(expected: usize, x: &[f64]) {
    assert_eq!(
        x.len(),
        expected,
        "objective evaluated at a point of the wrong dimension"
    );
}

/// Result of comparing an analytic gradient with central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub points: usize,
    pub max_rel_error: f64,
}

/// Central-difference check of `obj.grad` at each of `points`.
///
/// The per-coordinate error is `|fd − g| / max(1, |g|, |fd|)`.
pub fn gradient_check(obj: &dyn Objective, points: &[ParamVector], step: f64) -> GradCheckReport {
    let mut worst = 0.0f64;
    for x in points {
        let g = obj.grad(x);
        let mut probe = x.clone();
        for i in 0..x.dim() {
            let xi = x[i];
            probe[i] = xi + step;
            let fp = obj.eval(&probe);
            probe[i] = xi - step;
            let fm = obj.eval(&probe);
            probe[i] = xi;
            let fd = (fp - fm) / (2.0 * step);
            let scale = 1.0f64.max(g[i].abs()).max(fd.abs());
            worst = worst.max((fd - g[i]).abs() / scale);
        }
    }
    GradCheckReport {
        points: points.len(),
        max_rel_error: worst,
    }
}

/// Largest observed ratio `‖∇L(x) − ∇L(y)‖_* / ‖x − y‖` over the given pairs.
pub fn empirical_smoothness(obj: &dyn Objective, pairs: &[(ParamVector, ParamVector)], k: NormKind) -> f64 {
    pairs
        .iter()
        .filter_map(|(x, y)| {
            let dx = norm(&(x - y), k);
            (dx > 0.0).then(|| dual_norm(&(&obj.grad(x) - &obj.grad(y)), k) / dx)
        })
        .fold(0.0, f64::max)
}
