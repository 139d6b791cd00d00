//! Adam with decoupled weight decay (AdamW) and Adam with ℓ2 regularization.
//!
//! One step, entrywise, starting from `x_{t−1}`:
//!
//! ```text
//! g_t = ∇L(x_{t−1})            (+ λ x_{t−1} in L2Regularized mode)
//! m_t = β1 m_{t−1} + (1 − β1) g_t
//! v_t = β2 v_{t−1} + (1 − β2) g_t²
//! x_t = x_{t−1} − η_t m_t / (√v_t + ε)   (− λ η_t x_{t−1} in Decoupled mode)
//! ```
//!
//! There is no bias correction.

use serde::{Deserialize, Serialize};

use crate::vecmath::ParamVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayMode {
    Decoupled,
    L2Regularized,
}

pub const DEFAULT_EPSILON: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub decay_mode: DecayMode,
}

impl AdamConfig {
    pub fn adamw(beta1: f64, beta2: f64, lambda: f64) -> Self {
        AdamConfig {
            beta1,
            beta2,
            lambda,
            epsilon: DEFAULT_EPSILON,
            decay_mode: DecayMode::Decoupled,
        }
    }

    pub fn adam_l2(beta1: f64, beta2: f64, lambda: f64) -> Self {
        AdamConfig {
            decay_mode: DecayMode::L2Regularized,
            ..Self::adamw(beta1, beta2, lambda)
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// `β1 ≤ β2`, the regime in which converged AdamW iterates are KKT points
    /// of the ℓ∞-ball problem.
    pub fn betas_ordered(&self) -> bool {
        self.beta1 <= self.beta2
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(Error::config("beta1", format!("{} is not in [0, 1)", self.beta1)));
        }
        if !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::config("beta2", format!("{} is not in (0, 1)", self.beta2)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", format!("{} must be ≥ 0", self.lambda)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("epsilon", format!("{} must be ≥ 0", self.epsilon)));
        }
        Ok(())
    }

    /// The normalized update `m / (√v + ε)` of a state.
    pub fn update(&self, state: &AdamState) -> ParamVector {
        state.m.zip_map(&state.v, |m, v| m / (v.sqrt() + self.epsilon))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub x: ParamVector,
    pub m: ParamVector,
    pub v: ParamVector,
    pub t: usize,
}

impl AdamState {
    /// Zero-initialized moments at `x0`.
    pub fn new(x0: ParamVector) -> Self {
        let d = x0.dim();
        AdamState {
            x: x0,
            m: ParamVector::zeros(d),
            v: ParamVector::zeros(d),
            t: 0,
        }
    }

    /// Explicit initial moments, used to place AdamW on a prescribed trajectory.
    pub fn with_moments(x0: ParamVector, m0: ParamVector, v0: ParamVector) -> Result<Self> {
        let d = x0.dim();
        for found in [m0.dim(), v0.dim()] {
            if found != d {
                return Err(Error::DimensionMismatch { expected: d, found });
            }
        }
        if v0.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::precondition("initial second moment must be entrywise ≥ 0"));
        }
        Ok(AdamState {
            x: x0,
            m: m0,
            v: v0,
            t: 0,
        })
    }
}

pub fn adam_step(
    cfg: &AdamConfig,
    state: &AdamState,
    grad_at: impl FnOnce(&ParamVector) -> ParamVector,
    eta: f64,
) -> Result<AdamState> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::precondition(format!("η = {eta} must be positive")));
    }
    let raw = grad_at(&state.x);
    let d = state.x.dim();
    if raw.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: raw.dim(),
        });
    }
    let AdamConfig {
        beta1,
        beta2,
        lambda,
        epsilon,
        decay_mode,
    } = *cfg;

    let mut x = ParamVector::zeros(d);
    let mut m = ParamVector::zeros(d);
    let mut v = ParamVector::zeros(d);
    for i in 0..d {
        let xi = state.x[i];
        let g = match decay_mode {
            DecayMode::Decoupled => raw[i],
            DecayMode::L2Regularized => raw[i] + lambda * xi,
        };
        m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let denom = v[i].sqrt() + epsilon;
        if denom == 0.0 {
            return Err(Error::DivisionByZero { coord: i });
        }
        x[i] = match decay_mode {
            DecayMode::Decoupled => xi - eta * m[i] / denom - lambda * eta * xi,
            DecayMode::L2Regularized => xi - eta * m[i] / denom,
        };
    }
    Ok(AdamState {
        x,
        m,
        v,
        t: state.t + 1,
    })
}
