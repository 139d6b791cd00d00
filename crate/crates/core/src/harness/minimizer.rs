//! Norm-ball constrained minimizers for convex objectives.

use crate::objectives::Objective;
use crate::vecmath::{norm, NormKind, ParamVector};
use crate::{Error, Result};

pub const PROJECTED_GRADIENT_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 10_000_000;

/// Minimizer and minimum of `obj` over `{x : ‖x‖ ≤ 1/λ}`.
///
/// Uses the objective's closed form when it has one, and projected gradient
/// descent with step `1/H₂` otherwise, stopping once a step moves the iterate
/// by at most `1e−10` in ℓ∞.
pub fn constrained_minimizer(obj: &dyn Objective, lambda: f64, norm_kind: NormKind) -> Result<(ParamVector, f64)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::precondition(format!("λ = {lambda} must be positive")));
    }
    if let Some(found) = obj.constrained_min(lambda, norm_kind) {
        return Ok(found);
    }
    let h = obj
        .smoothness(NormKind::L2)
        .ok_or_else(|| Error::precondition("projected gradient needs the ℓ2 smoothness constant"))?;
    let radius = 1.0 / lambda;
    let step = 1.0 / h;
    let mut x = project(&ParamVector::zeros(obj.dim()), norm_kind, radius);
    for _ in 0..MAX_ITERS {
        let g = obj.grad(&x);
        let next = project(&x.lin_comb(1.0, &g, -step), norm_kind, radius);
        let moved = norm(&(&next - &x), NormKind::LInf);
        x = next;
        if moved <= PROJECTED_GRADIENT_TOL {
            let f = obj.eval(&x);
            return Ok((x, f));
        }
    }
    Err(Error::precondition(format!(
        "projected gradient did not reach tolerance {PROJECTED_GRADIENT_TOL} in {MAX_ITERS} iterations"
    )))
}

/// Euclidean projection onto `{x : ‖x‖ ≤ radius}`.
pub fn project(x: &ParamVector, norm_kind: NormKind, radius: f64) -> ParamVector {
    match norm_kind {
        NormKind::LInf => x.map(|v| v.clamp(-radius, radius)),
        NormKind::L2 => {
            let n = norm(x, NormKind::L2);
            if n <= radius {
                x.clone()
            } else {
                x * (radius / n)
            }
        }
        NormKind::L1 => project_l1(x, radius),
    }
}

/// Sort-based projection onto the ℓ1 ball: soft-threshold at the level that
/// puts the result on the boundary.
fn project_l1(x: &ParamVector, radius: f64) -> ParamVector {
    if norm(x, NormKind::L1) <= radius {
        return x.clone();
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (k as f64 + 1.0);
        if m > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    x.map(|v| v.signum() * (v.abs() - theta).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::make_scaled_quadratic;

    #[test]
    fn closed_form_is_used_for_linf() {
        let q = make_scaled_quadratic(ParamVector::from([2.0, 2.0])).unwrap();
        let (x, f) = constrained_minimizer(&q, 1.0, NormKind::LInf).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0]);
        assert_eq!(f, 1.25);
    }

    #[test]
    fn interior_target_is_its_own_l2_minimizer() {
        let target = ParamVector::from([0.3, -0.4, 0.2]);
        let q = make_scaled_quadratic(target.clone()).unwrap();
        let (x, f) = constrained_minimizer(&q, 1.0, NormKind::L2).unwrap();
        assert!(norm(&(&x - &target), NormKind::LInf) < 1e-9);
        assert!(f < 1e-18);
    }

    #[test]
    fn l2_boundary_minimizer_satisfies_stationarity() {
        // minimizer of Σ w_i (x_i − c_i)² on the ℓ2 ball has x_i = w_i c_i / (w_i + μ)
        let q = make_scaled_quadratic(ParamVector::from([3.0, 3.0])).unwrap();
        let (x, _) = constrained_minimizer(&q, 1.0, NormKind::L2).unwrap();
        assert!((norm(&x, NormKind::L2) - 1.0).abs() < 1e-9);
        let mu0 = 1.0 * 3.0 / x[0] - 1.0;
        let mu1 = 0.25 * 3.0 / x[1] - 0.25;
        assert!((mu0 - mu1).abs() < 1e-6, "{mu0} {mu1}");
        // brute force over the boundary circle
        let best = (0..200_000)
            .map(|k| {
                let a = k as f64 / 200_000.0 * std::f64::consts::TAU;
                q.eval(&[a.cos(), a.sin()])
            })
            .fold(f64::INFINITY, f64::min);
        assert!(q.eval(&x) <= best + 1e-9);
    }

    #[test]
    fn l1_projection_lands_on_boundary() {
        let p = project(&ParamVector::from([3.0, -1.0, 0.5]), NormKind::L1, 2.0);
        assert!((norm(&p, NormKind::L1) - 2.0).abs() < 1e-12);
        assert_eq!(p.as_slice(), &[2.0, 0.0, 0.0]);
        let p = project(&ParamVector::from([1.0, 1.0]), NormKind::L1, 1.0);
        assert_eq!(p.as_slice(), &[0.5, 0.5]);
        let inside = ParamVector::from([0.1, 0.2]);
        assert_eq!(project(&inside, NormKind::L1, 1.0), inside);
    }
}
