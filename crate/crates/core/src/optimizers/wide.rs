//! Scalar AdamW with `ε = 0` on `½(x − x̃)²`, evaluated in wide fixed-point
//! arithmetic.
//!
//! The moment-matched trajectory of this problem is unstable: a perturbation
//! of relative size δ at step s grows roughly like δ·Π η·u*/|x_t − x̃| over
//! the remaining steps. In binary64 the trajectory is lost after a few
//! thousand steps. Here every quantity is an integer scaled by `2^bits`, and
//! the hyperparameters enter as the exact dyadic values of their `f64`
//! representations, so the only error source is truncation at `bits`.
//!
//! The state is carried as `u = m/√v` and `y = 1/√v` instead of `(m, v)`.
//! With `a = g·y_{t−1}` and `κ = (β2 + (1−β2)a²)^{−1/2}`:
//!
//! ```text
//! y_t = κ·y_{t−1}
//! u_t = κ·(β1·u_{t−1} + (1−β1)·a)
//! x_t = (1 − λη)·x_{t−1} − η·u_t
//! ```
//!
//! `κ` is written as `(1 + ζ)/q` with `q = 1 − λη`, so on the matched
//! trajectory `ζ` is pure rounding noise and the square root costs only
//! products of short numbers.

use rug::ops::NegAssign;
use rug::{Assign, Integer};

use crate::objectives::counterexample_fixed_point;
use crate::{Error, Result};

/// Enough for 10⁴ steps of the β1 = 0.99, β2 = 0.9, λη = 10⁻³ trajectory to
/// keep `m/√v` within 10⁻⁹ of its fixed value.
pub const DEFAULT_PRECISION_BITS: u32 = 12_288;

/// Iterations allowed for the inverse square root before giving up.
const MAX_NEWTON: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WideCounterexample {
    pub beta1: f64,
    pub beta2: f64,
    pub lambda: f64,
    pub eta: f64,
    /// `x0 − x̃`.
    pub offset: f64,
    pub precision_bits: u32,
}

/// State after one step, rounded to `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WideStep {
    pub x: f64,
    /// `x_t − x̃`, rounded from the wide difference.
    pub gap: f64,
    pub update: f64,
    pub m: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WideRun {
    pub x_tilde: f64,
    pub x0: f64,
    pub m0: f64,
    pub v0: f64,
    /// `m0/√v0`; equal to `−λx̃` for a positive offset.
    pub fixed_update: f64,
    pub steps: Vec<WideStep>,
}

/// `mant · 2^exp`, the exact value of a finite `f64` or a short product of them.
#[derive(Debug, Clone)]
struct Dyadic {
    mant: Integer,
    exp: i32,
}

impl Dyadic {
    fn from_f64(v: f64) -> Dyadic {
        let bits = v.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, exp) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1 << 52), raw_exp - 1075)
        };
        let mut mant = Integer::from(m);
        if bits >> 63 == 1 {
            mant.neg_assign();
        }
        Dyadic { mant, exp }
    }

    fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic {
            mant: Integer::from(&self.mant * &other.mant),
            exp: self.exp + other.exp,
        }
    }

    /// `1 − self`; requires a negative exponent.
    fn one_minus(&self) -> Dyadic {
        let scale = (-self.exp) as u32;
        Dyadic {
            mant: (Integer::from(1) << scale) - &self.mant,
            exp: self.exp,
        }
    }
}

struct Fixed {
    bits: u32,
}

impl Fixed {
    fn one(&self) -> Integer {
        Integer::from(1) << self.bits
    }

    fn of_dyadic(&self, d: &Dyadic) -> Integer {
        shift(Integer::from(&d.mant), self.bits as i64 + d.exp as i64)
    }

    fn mul(&self, a: &Integer, b: &Integer) -> Integer {
        Integer::from(a * b) >> self.bits
    }

    fn div(&self, a: &Integer, b: &Integer) -> Integer {
        Integer::from(a << self.bits) / b
    }

    fn sqrt(&self, a: &Integer) -> Integer {
        Integer::from(a << self.bits).sqrt()
    }

    fn to_f64(&self, a: &Integer) -> f64 {
        let (m, e) = a.to_f64_exp();
        m * 2f64.powi(e as i32 - self.bits as i32)
    }
}

fn shift(a: Integer, by: i64) -> Integer {
    if by >= 0 {
        a << by as u32
    } else {
        a >> (-by) as u32
    }
}

fn scale_by(a: &Integer, d: &Dyadic) -> Integer {
    shift(Integer::from(a * &d.mant), d.exp as i64)
}

fn divide_by(a: &mut Integer, d: &Dyadic) {
    debug_assert!(d.exp <= 0);
    *a <<= (-d.exp) as u32;
    *a /= &d.mant;
}

impl WideCounterexample {
    pub fn new(beta1: f64, beta2: f64, lambda: f64, eta: f64, offset: f64) -> Self {
        WideCounterexample {
            beta1,
            beta2,
            lambda,
            eta,
            offset,
            precision_bits: DEFAULT_PRECISION_BITS,
        }
    }

    pub fn with_precision(mut self, bits: u32) -> Self {
        self.precision_bits = bits;
        self
    }

    /// Runs `steps` steps from `x0 = x̃ + offset` with `m0, v0` chosen so that
    /// `m_t/√v_t` stays at `−λx̃`.
    pub fn run(&self, steps: usize) -> Result<WideRun> {
        counterexample_fixed_point(self.beta1, self.beta2, self.lambda, self.eta)?;
        if !(self.offset.is_finite() && self.offset != 0.0) {
            return Err(Error::precondition("offset must be finite and nonzero"));
        }
        if self.precision_bits < 64 {
            return Err(Error::precondition("precision must be at least 64 bits"));
        }
        let fx = Fixed {
            bits: self.precision_bits,
        };
        let one = fx.one();
        let b1 = Dyadic::from_f64(self.beta1);
        let b2 = Dyadic::from_f64(self.beta2);
        let eta = Dyadic::from_f64(self.eta);
        let lam = Dyadic::from_f64(self.lambda);
        let c1 = b1.one_minus();
        let c2 = b2.one_minus();
        let decay = lam.mul(&eta);
        let q = decay.one_minus();
        let q2 = q.mul(&q);
        let q2_fixed = fx.of_dyadic(&q2);

        let m_ratio = fx.div(&fx.of_dyadic(&c1), &(fx.of_dyadic(&q) - fx.of_dyadic(&b1)));
        let v_ratio = fx.div(&fx.of_dyadic(&c2), &(&q2_fixed - fx.of_dyadic(&b2)));
        let mut x_tilde = fx.div(&fx.div(&m_ratio, &fx.sqrt(&v_ratio)), &fx.of_dyadic(&lam));
        x_tilde.neg_assign();
        let g0 = fx.of_dyadic(&Dyadic::from_f64(self.offset));
        let mut x = Integer::from(&x_tilde + &g0);
        let m0 = fx.mul(&m_ratio, &g0);
        let v0 = fx.mul(&fx.mul(&v_ratio, &g0), &g0);
        let mut y = fx.div(&one, &fx.sqrt(&v0));
        let mut u = fx.mul(&m0, &y);
        let fixed_update = fx.to_f64(&u);

        let mut g = g0.clone();
        let mut a = Integer::new();
        let mut a2 = Integer::new();
        let mut out = Vec::with_capacity(steps);
        for t in 1..=steps {
            a.assign(&g * &y);
            a >>= fx.bits;
            a2.assign(&a * &a);
            a2 >>= fx.bits;
            // σ/q² − 1 with σ = β2 + (1−β2)a²
            let mut delta = scale_by(&a2, &c2) + fx.of_dyadic(&b2) - &q2_fixed;
            divide_by(&mut delta, &q2);
            let zeta = inverse_sqrt_offset(&fx, &delta).ok_or_else(|| Error::StepFailed {
                step: t,
                source: Box::new(Error::precondition("inverse square root did not settle")),
            })?;

            let yz = fx.mul(&y, &zeta);
            y += yz;
            divide_by(&mut y, &q);
            let mut w = scale_by(&u, &b1) + scale_by(&a, &c1);
            let wz = fx.mul(&w, &zeta);
            w += wz;
            divide_by(&mut w, &q);
            u = w;
            x = (&x - scale_by(&x, &decay)) - scale_by(&u, &eta);
            g.assign(&x - &x_tilde);

            let update = fx.to_f64(&u);
            let y_f = fx.to_f64(&y);
            out.push(WideStep {
                x: fx.to_f64(&x),
                gap: fx.to_f64(&g),
                update,
                m: update / y_f,
                v: 1.0 / (y_f * y_f),
            });
        }
        Ok(WideRun {
            x_tilde: fx.to_f64(&x_tilde),
            x0: fx.to_f64(&(Integer::from(&x_tilde + &g0))),
            m0: fx.to_f64(&m0),
            v0: fx.to_f64(&v0),
            fixed_update,
            steps: out,
        })
    }
}

/// `ζ` with `(1 + ζ) = (1 + δ)^{−1/2}`, by Newton steps on the offsets so that
/// small `δ` only involves short products.
fn inverse_sqrt_offset(fx: &Fixed, delta: &Integer) -> Option<Integer> {
    let d = fx.to_f64(delta);
    let mut z = if d.abs() < 1e-4 {
        -Integer::from(delta >> 1u32)
    } else {
        let seed = (1.0 + d).powf(-0.5) - 1.0;
        if !seed.is_finite() {
            return None;
        }
        fx.of_dyadic(&Dyadic::from_f64(seed))
    };
    let mut last_bits = u32::MAX;
    for _ in 0..MAX_NEWTON {
        // f = (1+δ)(1+ζ)² − 1 = δ + s + δ·s with s = 2ζ + ζ²
        let s = Integer::from(&z << 1u32) + fx.mul(&z, &z);
        let f = Integer::from(delta + &s) + fx.mul(delta, &s);
        let bits = f.significant_bits();
        if bits < 4 || bits >= last_bits && bits < fx.bits / 2 {
            return Some(z);
        }
        last_bits = bits;
        let corr = (&f + fx.mul(&z, &f)) >> 1u32;
        z -= corr;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadics_are_exact() {
        let d = Dyadic::from_f64(0.1);
        let fx = Fixed { bits: 80 };
        let back = fx.to_f64(&fx.of_dyadic(&d));
        assert_eq!(back, 0.1);
        let c = Dyadic::from_f64(0.75).one_minus();
        assert_eq!(fx.to_f64(&fx.of_dyadic(&c)), 0.25);
        assert_eq!(fx.to_f64(&fx.of_dyadic(&Dyadic::from_f64(-3.5))), -3.5);
    }

    #[test]
    fn inverse_sqrt_matches_f64() {
        let fx = Fixed { bits: 256 };
        for d in [0.0, 1e-30, -0.2, 0.5, 3.0] {
            let delta = fx.of_dyadic(&Dyadic::from_f64(d));
            let z = inverse_sqrt_offset(&fx, &delta).unwrap();
            let want = (1.0 + d).powf(-0.5) - 1.0;
            assert!((fx.to_f64(&z) - want).abs() <= 1e-15 * (1.0 + want.abs()), "{d}");
        }
    }

    #[test]
    fn short_run_matches_the_closed_form() {
        let run = WideCounterexample::new(0.99, 0.9, 0.1, 0.01, 1.0)
            .with_precision(512)
            .run(200)
            .unwrap();
        let x_tilde = counterexample_fixed_point(0.99, 0.9, 0.1, 0.01).unwrap();
        assert!((run.x_tilde - x_tilde).abs() <= 1e-14);
        assert!((run.fixed_update + 0.1 * x_tilde).abs() <= 1e-14);
        let mut gap = 1.0f64;
        for s in &run.steps {
            gap *= 0.999;
            assert!((s.gap - gap).abs() <= 1e-13 * gap);
            assert!((s.update - run.fixed_update).abs() <= 1e-13);
            assert!((s.m / s.v.sqrt() - s.update).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(WideCounterexample::new(0.9, 0.9, 0.1, 0.01, 1.0).run(5).is_err());
        assert!(WideCounterexample::new(0.99, 0.9, 0.1, 0.01, 0.0).run(5).is_err());
        assert!(WideCounterexample::new(0.99, 0.9, 0.1, 0.01, 1.0)
            .with_precision(8)
            .run(5)
            .is_err());
    }
}
