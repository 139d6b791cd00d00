//! Closed-form bounds for weight-decayed steepest descent and Adam.

use crate::{Error, Result};

/// Envelope on `‖x_t‖` for `x_t = (1 − λη_t) x_{t−1} − η_t Δ_t` with
/// `‖Δ_t‖ ≤ 1`: `1/λ + max(exp(−λ Σ η_i)(‖x_0‖ − 1/λ), 0)`.
///
/// Step sizes may reach `1/λ` (a full Frank–Wolfe step); the envelope still
/// holds there since the iterate then lands inside the ball.
pub fn ball_shrinkage_bound(norm_x0: f64, lambda: f64, etas: &[f64]) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::precondition(format!("λ = {lambda} must be positive")));
    }
    if !(norm_x0 >= 0.0) {
        return Err(Error::precondition("‖x0‖ must be ≥ 0"));
    }
    if let Some(bad) = etas.iter().find(|&&e| !(e > 0.0 && lambda * e <= 1.0)) {
        return Err(Error::precondition(format!("η = {bad} is not in (0, 1/λ]")));
    }
    Ok(ball_envelope(norm_x0, lambda, etas.iter().sum()))
}

/// The same envelope from a precomputed `Σ η_i`.
pub fn ball_envelope(norm_x0: f64, lambda: f64, eta_sum: f64) -> f64 {
    let r = 1.0 / lambda;
    r + ((-lambda * eta_sum).exp() * (norm_x0 - r)).max(0.0)
}

/// `2H(1 + λB)² / ((t + 2) λ²)`: suboptimality of weight-decayed normalized
/// steepest descent under `η_t = 2/(λ(t+1))`, with `B = max(‖x_0‖, 1/λ)`.
pub fn fw_rate_bound(h: f64, lambda: f64, b: f64, t: usize) -> Result<f64> {
    if !(h > 0.0 && lambda > 0.0 && b > 0.0) {
        return Err(Error::precondition("H, λ and B must be positive"));
    }
    if t == 0 {
        return Err(Error::precondition("the rate bound starts at t = 1"));
    }
    let s = 1.0 + lambda * b;
    Ok(2.0 * h * s * s / ((t as f64 + 2.0) * lambda * lambda))
}

/// Prefix-by-prefix evaluator of the average-update-size bound
///
/// ```text
/// |Σ η_t Δ_t| / Σ η_t ≤ ( 1 + (β2−β1)/(1−β2) · Σ η_t β1^{t−1} / Σ η_t
///     + (β2−β1)(1−β1) / ((1−β2) Σ η_t)
///       · Σ_{t=2}^{T} (η_t (1−β1^{t−1})/(1−β1) − Σ_{i=1}^{T−t} η_{t+i} β1^{i−1}) ln(v_t/v_1) )^{1/2}
/// ```
///
/// for `Δ_t = m_t / √v_t`. Each [`push`](Self::push) appends `(η_T, v_T)` and
/// the right side for the current `T` is available in O(1); the inner tail
/// sum is carried as `R_s = β1 R_{s−1} + ln(v_{s−1}/v_1)`.
#[derive(Debug, Clone)]
pub struct AmortizedBound {
    beta1: f64,
    beta2: f64,
    v1: Option<f64>,
    sum_eta: f64,
    sum_eta_pow: f64,
    pow: f64,
    head: f64,
    tail: f64,
    carry: f64,
    last_log: f64,
}

impl AmortizedBound {
    pub fn new(beta1: f64, beta2: f64) -> Result<Self> {
        if !(beta1 >= 0.0 && beta1 <= beta2 && beta2 < 1.0) {
            return Err(Error::precondition(format!(
                "need 0 ≤ β1 ≤ β2 < 1, got β1 = {beta1}, β2 = {beta2}"
            )));
        }
        Ok(AmortizedBound {
            beta1,
            beta2,
            v1: None,
            sum_eta: 0.0,
            sum_eta_pow: 0.0,
            pow: 1.0,
            head: 0.0,
            tail: 0.0,
            carry: 0.0,
            last_log: 0.0,
        })
    }

    pub fn push(&mut self, eta: f64, v: f64) -> Result<()> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::precondition(format!("η = {eta} must be positive")));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::precondition(format!("v = {v} must be positive")));
        }
        let b1 = self.beta1;
        let v1 = *self.v1.get_or_insert(v);
        let log_ratio = (v / v1).ln();
        // self.pow is β1^{t−1} for the step being pushed
        self.sum_eta += eta;
        self.sum_eta_pow += eta * self.pow;
        self.head += eta * (1.0 - self.pow) / (1.0 - b1) * log_ratio;
        self.carry = b1 * self.carry + self.last_log;
        self.tail += eta * self.carry;
        self.last_log = log_ratio;
        self.pow *= b1;
        Ok(())
    }

    pub fn rhs(&self) -> Result<f64> {
        if self.v1.is_none() {
            return Err(Error::precondition("the bound needs at least one step"));
        }
        let (b1, b2) = (self.beta1, self.beta2);
        let gap = (b2 - b1) / (1.0 - b2);
        let inner = 1.0
            + gap * self.sum_eta_pow / self.sum_eta
            + gap * (1.0 - b1) / self.sum_eta * (self.head - self.tail);
        Ok(inner.max(0.0).sqrt())
    }
}

/// Right side of the average-update-size bound for `v_1..v_T` and `η_1..η_T`.
pub fn amortized_bound_rhs(beta1: f64, beta2: f64, etas: &[f64], vs: &[f64]) -> Result<f64> {
    if etas.len() != vs.len() {
        return Err(Error::precondition(format!(
            "{} learning rates for {} second moments",
            etas.len(),
            vs.len()
        )));
    }
    let mut acc = AmortizedBound::new(beta1, beta2)?;
    for (&eta, &v) in etas.iter().zip(vs) {
        acc.push(eta, v)?;
    }
    acc.rhs()
}

/// Upper bound on `λ|x_{T,j}| − 1` for AdamW with constant `η`:
/// `(1−λη)^T λ|x_{0,j}| + λη(β2−β1)[2C + β1^T + (1−λη)^T] / (2(1−β2)|1−λη−β1|)`,
/// where `C = max_{t ≤ T} |ln(v_{t,j}/v_{1,j})|`.
pub fn iterate_norm_excess_bound(
    beta1: f64,
    beta2: f64,
    lambda: f64,
    eta: f64,
    steps: usize,
    x0_coord: f64,
    c: f64,
) -> Result<f64> {
    let le = lambda * eta;
    if !(lambda > 0.0 && eta > 0.0 && le < 1.0) {
        return Err(Error::precondition(format!("λη = {le} must lie in (0, 1)")));
    }
    if !(beta1 >= 0.0 && beta1 <= beta2 && beta2 < 1.0) {
        return Err(Error::precondition(format!(
            "need 0 ≤ β1 ≤ β2 < 1, got β1 = {beta1}, β2 = {beta2}"
        )));
    }
    if !(c >= 0.0) {
        return Err(Error::precondition(format!("C = {c} must be ≥ 0")));
    }
    if steps == 0 {
        return Err(Error::precondition("T must be ≥ 1"));
    }
    let keep = 1.0 - le;
    let singular = keep - beta1;
    if singular == 0.0 {
        return Err(Error::precondition("λη = 1 − β1 makes the bound undefined"));
    }
    let t = i32::try_from(steps).map_err(|_| Error::precondition("T too large"))?;
    let decay_t = keep.powi(t);
    let correction = le * (beta2 - beta1) * (2.0 * c + beta1.powi(t) + decay_t)
        / (2.0 * (1.0 - beta2) * singular.abs());
    Ok(decay_t * lambda * x0_coord.abs() + correction)
}

/// The implied bound on `|x_{T,j}|`.
pub fn iterate_norm_bound(
    beta1: f64,
    beta2: f64,
    lambda: f64,
    eta: f64,
    steps: usize,
    x0_coord: f64,
    c: f64,
) -> Result<f64> {
    let excess = iterate_norm_excess_bound(beta1, beta2, lambda, eta, steps, x0_coord, c)?;
    Ok((1.0 + excess) / lambda)
}

/// Worst case `a_t = (1 − η_t) a_{t−1} + C η_t²` of the recursion inequality,
/// returned for `t = 1..=T`.
pub fn lr_sequence_limit_check(etas: &[f64], c: f64, a0: f64) -> Vec<f64> {
    etas.iter()
        .scan(a0, |a, &eta| {
            *a = (1.0 - eta) * *a + c * eta * eta;
            Some(*a)
        })
        .collect()
}
