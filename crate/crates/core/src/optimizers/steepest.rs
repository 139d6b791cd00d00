//! Steepest descent with decoupled weight decay, and Frank–Wolfe over a norm ball.

use crate::vecmath::{dual_norm, norm, steepest_direction, NormKind, ParamVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsdConfig {
    pub norm: NormKind,
    pub lambda: f64,
    /// `true`: unit-norm steepest direction. `false`: the direction scaled by
    /// the dual norm of the gradient (plain steepest descent).
    pub normalized: bool,
}

impl NsdConfig {
    pub fn normalized(norm: NormKind, lambda: f64) -> Self {
        NsdConfig {
            norm,
            lambda,
            normalized: true,
        }
    }

    pub fn unnormalized(norm: NormKind, lambda: f64) -> Self {
        NsdConfig {
            norm,
            lambda,
            normalized: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", format!("{} must be ≥ 0", self.lambda)));
        }
        Ok(())
    }

    /// The update `Δ` subtracted (times `η`) from the decayed iterate.
    pub fn update(&self, g: &[f64]) -> ParamVector {
        let dir = steepest_direction(g, self.norm);
        if self.normalized {
            dir
        } else {
            let scale = dual_norm(g, self.norm);
            &dir * scale
        }
    }
}

/// `x' = (1 − λη) x − η Δ` with `Δ` from [`NsdConfig::update`].
///
/// `λη = 1` is accepted: it is the first step of the `2/(λ(t+1))` schedule
/// and coincides with a full Frank–Wolfe step.
pub fn nsd_step(cfg: &NsdConfig, x: &ParamVector, g: &ParamVector, eta: f64) -> Result<ParamVector> {
    if x.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: g.dim(),
        });
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::precondition(format!("η = {eta} must be positive")));
    }
    let decay = cfg.lambda * eta;
    if decay > 1.0 {
        return Err(Error::precondition(format!("λη = {decay} exceeds 1")));
    }
    let delta = cfg.update(g);
    Ok(decayed_step(x, &delta, cfg.lambda, eta))
}

pub(crate) fn decayed_step(x: &ParamVector, delta: &ParamVector, lambda: f64, eta: f64) -> ParamVector {
    let keep = 1.0 - lambda * eta;
    x.zip_map(delta, |xi, di| keep * xi - eta * di)
}

/// Frank–Wolfe step over `{y : ‖y‖ ≤ radius}`: `(1 − γ) x + γ y` where `y`
/// minimizes `⟨g, y⟩` over the ball.
pub fn frank_wolfe_step(
    x: &ParamVector,
    g: &ParamVector,
    norm_kind: NormKind,
    radius: f64,
    gamma: f64,
) -> Result<ParamVector> {
    if x.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: g.dim(),
        });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::precondition(format!("radius {radius} must be positive")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::precondition(format!("γ = {gamma} is not in (0, 1]")));
    }
    let xn = norm(x, norm_kind);
    // rounding in earlier Frank–Wolfe steps can overshoot the radius by an ulp
    if xn > radius * (1.0 + 1e-12) {
        return Err(Error::precondition(format!(
            "iterate is infeasible: ‖x‖ = {xn} > {radius}"
        )));
    }
    let vertex = linear_minimizer(g, norm_kind, radius);
    Ok(x.lin_comb(1.0 - gamma, &vertex, gamma))
}

/// `argmin_{‖y‖ ≤ radius} ⟨g, y⟩`.
pub fn linear_minimizer(g: &[f64], norm_kind: NormKind, radius: f64) -> ParamVector {
    &steepest_direction(g, norm_kind) * (-radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_descent_without_decay() {
        let cfg = NsdConfig::normalized(NormKind::LInf, 0.0);
        let x = ParamVector::from([1.0, 2.0, 3.0]);
        let g = ParamVector::from([0.5, -7.0, 0.0]);
        let next = nsd_step(&cfg, &x, &g, 0.1).unwrap();
        assert_eq!(next.as_slice(), &[0.9, 2.1, 3.0]);
    }

    #[test]
    fn unnormalized_l2_is_gradient_descent() {
        let cfg = NsdConfig::unnormalized(NormKind::L2, 0.0);
        let x = ParamVector::from([1.0, -2.0]);
        let g = ParamVector::from([3.0, 4.0]);
        let next = nsd_step(&cfg, &x, &g, 0.1).unwrap();
        assert!((next[0] - 0.7).abs() < 1e-15);
        assert!((next[1] + 2.4).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_hand_arithmetic() {
        let cfg = NsdConfig::normalized(NormKind::LInf, 1.0);
        let next = nsd_step(
            &cfg,
            &ParamVector::from([0.5, 0.0]),
            &ParamVector::from([1.0, -1.0]),
            0.1,
        )
        .unwrap();
        assert!((next[0] - 0.35).abs() < 1e-15);
        assert!((next[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_excess_decay() {
        let cfg = NsdConfig::normalized(NormKind::L2, 2.0);
        let x = ParamVector::from([1.0]);
        assert!(nsd_step(&cfg, &x, &x, 0.6).is_err());
        assert!(nsd_step(&cfg, &x, &x, 0.5).is_ok());
    }

    #[test]
    fn full_frank_wolfe_step_lands_on_vertex() {
        let x = ParamVector::from([0.2, -0.1]);
        let g = ParamVector::from([1.0, -3.0]);
        let y = frank_wolfe_step(&x, &g, NormKind::LInf, 2.0, 1.0).unwrap();
        assert_eq!(y.as_slice(), &[-2.0, 2.0]);
        let y = frank_wolfe_step(&x, &g, NormKind::L1, 2.0, 1.0).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn half_step_from_origin() {
        let g = ParamVector::from([3.0, 4.0]);
        let next = frank_wolfe_step(&ParamVector::zeros(2), &g, NormKind::L2, 1.0, 0.5).unwrap();
        let d = steepest_direction(&g, NormKind::L2);
        assert_eq!(next, &d * -0.5);
    }

    #[test]
    fn frank_wolfe_preconditions() {
        let g = ParamVector::from([1.0]);
        assert!(frank_wolfe_step(&ParamVector::from([2.0]), &g, NormKind::LInf, 1.0, 0.5).is_err());
        assert!(frank_wolfe_step(&ParamVector::from([0.5]), &g, NormKind::LInf, 1.0, 0.0).is_err());
        assert!(frank_wolfe_step(&ParamVector::from([0.5]), &g, NormKind::LInf, 1.0, 1.5).is_err());
        assert!(frank_wolfe_step(&ParamVector::from([0.5]), &g, NormKind::LInf, 0.0, 0.5).is_err());
    }
}
