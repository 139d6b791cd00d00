use crate::objectives::Objective;
use crate::vecmath::{dot, dual_norm, norm, NormKind};
use crate::{Error, Result};

/// Residuals of the KKT characterization for `min L(x)` over `‖x‖ ≤ 1/λ`:
/// `x` is a KKT point iff `‖x‖ ≤ 1/λ` and `⟨−λx, ∇L(x)⟩ = ‖∇L(x)‖_*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// `max(‖x‖ − 1/λ, 0)`.
    pub feasibility_gap: f64,
    /// `|⟨−λx, ∇L(x)⟩ − ‖∇L(x)‖_*|`.
    pub alignment_residual: f64,
    pub norm: NormKind,
    pub lambda: f64,
}

impl KktReport {
    pub fn is_kkt(&self, tol: f64) -> bool {
        self.feasibility_gap <= tol && self.alignment_residual <= tol
    }
}

pub fn kkt_residual(objective: &dyn Objective, x: &[f64], lambda: f64, norm_kind: NormKind) -> Result<KktReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::precondition(format!("λ = {lambda} must be positive")));
    }
    if x.len() != objective.dim() {
        return Err(Error::DimensionMismatch {
            expected: objective.dim(),
            found: x.len(),
        });
    }
    let g = objective.grad(x);
    let alignment = -lambda * dot(x, &g);
    Ok(KktReport {
        feasibility_gap: (norm(x, norm_kind) - 1.0 / lambda).max(0.0),
        alignment_residual: (alignment - dual_norm(&g, norm_kind)).abs(),
        norm: norm_kind,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_counterexample_objective, make_scaled_quadratic};
    use crate::vecmath::ParamVector;

    #[test]
    fn interior_minimizer_is_kkt() {
        let target = ParamVector::from([0.5, -0.9, 1.0]);
        let q = make_scaled_quadratic(target.clone()).unwrap();
        let r = kkt_residual(&q, &target, 1.0, NormKind::LInf).unwrap();
        assert_eq!(r.feasibility_gap, 0.0);
        assert_eq!(r.alignment_residual, 0.0);
    }

    #[test]
    fn one_dimensional_boundary_point() {
        // ½(x − 2)² on [−1, 1]: the clamp minimizer is 1, with g = −1
        let o = make_counterexample_objective(2.0).unwrap();
        let grid_best = (0..=2000)
            .map(|k| -1.0 + k as f64 * 1e-3)
            .min_by(|a, b| o.eval(&[*a]).total_cmp(&o.eval(&[*b])))
            .unwrap();
        assert!((grid_best - 1.0).abs() < 1e-9);
        let r = kkt_residual(&o, &[1.0], 1.0, NormKind::LInf).unwrap();
        assert_eq!(r.feasibility_gap, 0.0);
        assert_eq!(r.alignment_residual, 0.0);
        assert!(r.is_kkt(0.0));

        let r = kkt_residual(&o, &[0.5], 1.0, NormKind::LInf).unwrap();
        assert!((r.alignment_residual - 0.75).abs() < 1e-15);
        assert!(!r.is_kkt(1e-6));
    }

    #[test]
    fn infeasible_point_reports_gap() {
        let o = make_counterexample_objective(3.0).unwrap();
        let r = kkt_residual(&o, &[3.0], 0.5, NormKind::L2).unwrap();
        assert!((r.feasibility_gap - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let o = make_counterexample_objective(3.0).unwrap();
        assert!(kkt_residual(&o, &[0.0], 0.0, NormKind::L2).is_err());
    }
}
