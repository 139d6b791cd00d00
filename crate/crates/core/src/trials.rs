//! Randomized trial suites for the closed-form bounds.
//!
//! Each suite draws `trials` independent instances. Instance `i` uses its own
//! `ChaCha8Rng` stream derived from `(seed, i)`, so the outcome is identical
//! under sequential and parallel execution.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal, StudentT};

use crate::analysis::bounds::{ball_envelope, AmortizedBound};
use crate::harness::rng::seeded_rng;
use crate::optimizers::adam::{adam_step, AdamConfig, AdamState};
use crate::optimizers::steepest::{decayed_step, frank_wolfe_step, nsd_step, NsdConfig};
use crate::par::{map_indices, Execution};
use crate::vecmath::{norm, NormKind, ParamVector};

/// Worst case over a suite: the largest `measured − bound` seen in any check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOutcome {
    pub trials: usize,
    /// Number of individual inequality checks evaluated.
    pub checks: usize,
    pub max_excess: f64,
    pub worst_trial: usize,
}

impl SuiteOutcome {
    pub fn within(&self, tol: f64) -> bool {
        self.max_excess <= tol
    }
}

fn merge(per_trial: Vec<(usize, f64)>) -> SuiteOutcome {
    let mut out = SuiteOutcome {
        trials: per_trial.len(),
        checks: 0,
        max_excess: f64::NEG_INFINITY,
        worst_trial: 0,
    };
    for (i, (checks, excess)) in per_trial.into_iter().enumerate() {
        out.checks += checks;
        // NaN counts as a failure and is never displaced
        if out.max_excess.is_nan() {
            continue;
        }
        if excess.is_nan() || excess > out.max_excess {
            out.max_excess = excess;
            out.worst_trial = i;
        }
    }
    out
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    seeded_rng(seed, 1_000 + trial as u64)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Gradient stream families used by the Adam suites.
#[derive(Debug, Clone, Copy)]
enum GradientFamily {
    Cauchy(f64),
    StudentT(f64),
    /// `(−1)^t · exp(σ z)`.
    SignFlip(f64),
    /// Mostly tiny values with rare large spikes.
    Bursty,
    /// `|g|` growing or shrinking geometrically, random signs.
    Drift(f64),
}

impl GradientFamily {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        match rng.random_range(0..5) {
            0 => GradientFamily::Cauchy(log_uniform(rng, 1e-3, 1e3)),
            1 => GradientFamily::StudentT(rng.random_range(1.1..4.0)),
            2 => GradientFamily::SignFlip(rng.random_range(0.1..4.0)),
            3 => GradientFamily::Bursty,
            _ => GradientFamily::Drift(rng.random_range(0.98..1.02)),
        }
    }

    fn sample(self, rng: &mut ChaCha8Rng, t: usize) -> f64 {
        let g = match self {
            GradientFamily::Cauchy(scale) => Cauchy::new(0.0, scale).expect("positive scale").sample(rng),
            GradientFamily::StudentT(nu) => StudentT::new(nu).expect("positive dof").sample(rng),
            GradientFamily::SignFlip(sigma) => {
                let z: f64 = Normal::new(0.0, sigma).expect("positive sigma").sample(rng);
                if t.is_multiple_of(2) {
                    z.exp()
                } else {
                    -z.exp()
                }
            }
            GradientFamily::Bursty => {
                let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
                if rng.random_bool(0.02) {
                    1e4 * z
                } else {
                    1e-6 * z
                }
            }
            GradientFamily::Drift(rate) => {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                sign * rate.powi(t as i32) * rng.random_range(0.5..1.5)
            }
        };
        // keep v strictly positive and finite
        if g == 0.0 || !g.is_finite() {
            1e-100
        } else {
            g.clamp(-1e150, 1e150)
        }
    }
}

fn gradient_stream(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> Vec<ParamVector> {
    let families: Vec<GradientFamily> = (0..dim).map(|_| GradientFamily::draw(rng)).collect();
    (1..=len)
        .map(|t| families.iter().map(|f| f.sample(rng, t)).collect())
        .collect()
}

pub const EQUAL_BETAS: [f64; 4] = [0.5, 0.9, 0.99, 0.999];

/// Adam with `β1 = β2` and `ε = 0`: every `|m_t/√v_t|` against 1.
///
/// Trial `i` uses `β = EQUAL_BETAS[i % 4]` and a gradient sequence of random
/// length in `1..=max_len` from a heavy-tailed or sign-flipping family.
pub fn equal_betas_unit_cap(trials: usize, max_len: usize, seed: u64, exec: Execution) -> SuiteOutcome {
    merge(map_indices(trials, exec, |i| {
        let mut rng = trial_rng(seed, i);
        let beta = EQUAL_BETAS[i % EQUAL_BETAS.len()];
        let len = rng.random_range(1..=max_len.max(1));
        let grads = gradient_stream(&mut rng, len, 1);
        let cfg = AdamConfig::adamw(beta, beta, 0.0).with_epsilon(0.0);
        let mut state = AdamState::new(ParamVector::zeros(1));
        let mut worst = f64::NEG_INFINITY;
        for g in grads {
            state = match adam_step(&cfg, &state, |_| g, 1e-3) {
                Ok(s) => s,
                Err(_) => return (0, f64::NAN),
            };
            let excess = cfg.update(&state)[0].abs() - 1.0;
            worst = if excess > worst || excess.is_nan() { excess } else { worst };
        }
        (len, worst)
    }))
}

/// Non-increasing learning-rate tables.
fn draw_schedule(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let scale = log_uniform(rng, 1e-4, 1.0);
    match rng.random_range(0..5) {
        0 => vec![scale; len],
        1 => (1..=len).map(|t| scale / (t as f64).sqrt()).collect(),
        2 => (1..=len).map(|t| scale / t as f64).collect(),
        3 => {
            let drop = rng.random_range(1..=len.max(1));
            (1..=len).map(|t| if t < drop { scale } else { scale * 0.1 }).collect()
        }
        _ => {
            let mut etas: Vec<f64> = (0..len).map(|_| scale * rng.random_range(0.01..1.0)).collect();
            etas.sort_by(|a, b| b.total_cmp(a));
            etas
        }
    }
}

/// Adam with `β1 < β2` under a non-increasing schedule: at every prefix `T`
/// and coordinate, `|Σ η_t Δ_t| / Σ η_t` against the amortized bound. A
/// quarter of the trials use `ε > 0` with the effective second moment
/// `(√v + ε)²`.
pub fn amortized_dominance(trials: usize, max_len: usize, seed: u64, exec: Execution) -> SuiteOutcome {
    merge(map_indices(trials, exec, |i| {
        let mut rng = trial_rng(seed, i);
        let beta2 = [0.9, 0.95, 0.99, 0.999][rng.random_range(0..4)];
        let beta1 = beta2 * rng.random_range(0.0..0.999_999);
        let epsilon = if i % 4 == 3 { log_uniform(&mut rng, 1e-8, 1e-1) } else { 0.0 };
        let len = rng.random_range(1..=max_len.max(1));
        let dim = 3;
        let grads = gradient_stream(&mut rng, len, dim);
        let etas = draw_schedule(&mut rng, len);
        let cfg = AdamConfig::adamw(beta1, beta2, 0.0).with_epsilon(epsilon);
        let mut state = AdamState::new(ParamVector::zeros(dim));
        let mut accs: Vec<AmortizedBound> = (0..dim)
            .map(|_| AmortizedBound::new(beta1, beta2).expect("ordered betas"))
            .collect();
        let mut sums = vec![0.0; dim];
        let mut eta_sum = 0.0;
        let mut worst = f64::NEG_INFINITY;
        let mut checks = 0;
        for (g, &eta) in grads.into_iter().zip(&etas) {
            state = match adam_step(&cfg, &state, |_| g, eta) {
                Ok(s) => s,
                Err(_) => return (checks, f64::NAN),
            };
            let delta = cfg.update(&state);
            eta_sum += eta;
            for j in 0..dim {
                let s = state.v[j].sqrt() + epsilon;
                if accs[j].push(eta, s * s).is_err() {
                    return (checks, f64::NAN);
                }
                sums[j] += eta * delta[j];
                let rhs = accs[j].rhs().unwrap_or(f64::NAN);
                let excess = sums[j].abs() / eta_sum - rhs;
                if excess > worst || excess.is_nan() {
                    worst = excess;
                }
                checks += 1;
            }
        }
        (checks, worst)
    }))
}

fn random_unit_in(rng: &mut ChaCha8Rng, dim: usize, k: NormKind) -> ParamVector {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    loop {
        let r: ParamVector = (0..dim).map(|_| normal.sample(rng)).collect();
        let n = norm(&r, k);
        if n > 0.0 {
            return &r * (1.0 / n);
        }
    }
}

/// `x_t = (1 − λη_t) x_{t−1} − η_t Δ_t` with arbitrary `‖Δ_t‖ ≤ 1`: every
/// `‖x_t‖` against the exponential envelope. Norms cycle through ℓ1, ℓ2, ℓ∞.
pub fn ball_shrinkage(trials: usize, max_len: usize, seed: u64, exec: Execution) -> SuiteOutcome {
    merge(map_indices(trials, exec, |i| {
        let mut rng = trial_rng(seed, i);
        let k = NormKind::ALL[i % 3];
        let dim = rng.random_range(1..=20);
        let lambda = log_uniform(&mut rng, 1e-2, 10.0);
        let r = 1.0 / lambda;
        let x0 = &random_unit_in(&mut rng, dim, k) * (r * log_uniform(&mut rng, 1e-2, 1e2));
        let norm_x0 = norm(&x0, k);
        let len = rng.random_range(1..=max_len.max(1));
        let eta_kind = rng.random_range(0..3);
        let c = rng.random_range(0.01..=1.0);
        let update_kind = rng.random_range(0..3);
        let mut x = x0;
        let mut eta_sum = 0.0;
        let mut worst = f64::NEG_INFINITY;
        for t in 1..=len {
            let eta = match eta_kind {
                0 => c * r,
                1 => 2.0 / (lambda * (t as f64 + 1.0)),
                _ => rng.random_range(0.0..=1.0f64).max(1e-12) * r,
            };
            let delta = match update_kind {
                // radial: pushes the norm outward as fast as allowed
                0 => {
                    let n = norm(&x, k);
                    if n > 0.0 {
                        &x * (-1.0 / n)
                    } else {
                        random_unit_in(&mut rng, dim, k)
                    }
                }
                1 => random_unit_in(&mut rng, dim, k),
                _ => &random_unit_in(&mut rng, dim, k) * rng.random_range(0.0..=1.0),
            };
            x = decayed_step(&x, &delta, lambda, eta);
            eta_sum += eta;
            let excess = norm(&x, k) - ball_envelope(norm_x0, lambda, eta_sum);
            if excess > worst || excess.is_nan() {
                worst = excess;
            }
        }
        (len, worst)
    }))
}

/// Weight-decayed normalized steepest descent against Frank–Wolfe with
/// `γ = λη` over the `1/λ` ball, from feasible points: the largest
/// per-coordinate difference of the two next iterates.
pub fn frank_wolfe_equivalence(trials: usize, seed: u64, exec: Execution) -> SuiteOutcome {
    merge(map_indices(trials, exec, |i| {
        let mut rng = trial_rng(seed, i);
        let k = NormKind::ALL[i % 3];
        let dim = rng.random_range(1..=30);
        let lambda = log_uniform(&mut rng, 1e-2, 1e2);
        let r = 1.0 / lambda;
        let eta = if rng.random_bool(0.1) {
            r
        } else {
            rng.random_range(1e-6..1.0) * r
        };
        let shrink = if rng.random_bool(0.2) { 1.0 } else { rng.random_range(0.0..1.0) };
        let x = &random_unit_in(&mut rng, dim, k) * (r * shrink);
        let g: ParamVector = if rng.random_bool(0.2) {
            // ties and zeros exercise the selection rules
            (0..dim).map(|_| [-1.0, 0.0, 1.0][rng.random_range(0..3)]).collect()
        } else {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            (0..dim).map(|_| normal.sample(&mut rng) * 10f64.powf(rng.random_range(-3.0..3.0))).collect()
        };
        let cfg = NsdConfig::normalized(k, lambda);
        let a = nsd_step(&cfg, &x, &g, eta);
        let b = frank_wolfe_step(&x, &g, k, r, lambda * eta);
        let diff = match (a, b) {
            (Ok(a), Ok(b)) => a.iter().zip(b.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max),
            _ => f64::NAN,
        };
        (dim, diff)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_agree_across_execution_modes() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let a = equal_betas_unit_cap(40, 100, 1, exec);
            assert!(a.within(1e-12), "{a:?}");
        }
        assert_eq!(
            amortized_dominance(30, 200, 2, Execution::Sequential),
            amortized_dominance(30, 200, 2, Execution::Parallel)
        );
        assert_eq!(
            ball_shrinkage(30, 100, 3, Execution::Sequential),
            ball_shrinkage(30, 100, 3, Execution::Parallel)
        );
    }

    #[test]
    fn small_suites_hold() {
        assert!(amortized_dominance(50, 300, 7, Execution::Parallel).within(1e-9));
        assert!(ball_shrinkage(60, 200, 7, Execution::Parallel).within(1e-9));
        assert!(frank_wolfe_equivalence(200, 7, Execution::Parallel).within(1e-12));
    }

    #[test]
    fn nan_is_reported_as_worst() {
        let o = merge(vec![(1, 0.5), (1, f64::NAN), (1, 0.1)]);
        assert!(o.max_excess.is_nan());
        assert_eq!(o.worst_trial, 1);
        assert!(!o.within(1.0));
    }
}
