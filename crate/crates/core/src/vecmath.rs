//! Dense vectors, ℓ1/ℓ2/ℓ∞ norms and steepest-descent directions.

use std::fmt;
use std::ops::{Add, Deref, DerefMut, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Dense real vector holding iterates, gradients, moments and updates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        ParamVector(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        ParamVector(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &ParamVector) -> f64 {
        dot(self, other)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        norm(self, kind)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ParamVector {
        self.0.iter().map(|&x| f(x)).collect()
    }

    /// Elementwise combination of two vectors of equal dimension.
    pub fn zip_map(&self, other: &ParamVector, f: impl Fn(f64, f64) -> f64) -> ParamVector {
        assert_same_dim(self, other);
        self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect()
    }

    /// `a * self + b * other`, evaluated per coordinate in that order.
    pub fn lin_comb(&self, a: f64, other: &ParamVector, b: f64) -> ParamVector {
        self.zip_map(other, |x, y| a * x + b * y)
    }
}

fn assert_same_dim(a: &ParamVector, b: &ParamVector) {
    assert_eq!(a.dim(), b.dim(), "ParamVector dimension mismatch");
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

impl From<&[f64]> for ParamVector {
    fn from(v: &[f64]) -> Self {
        ParamVector(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for ParamVector {
    fn from(v: [f64; N]) -> Self {
        ParamVector(v.to_vec())
    }
}

impl FromIterator<f64> for ParamVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        ParamVector(iter.into_iter().collect())
    }
}

impl Add for &ParamVector {
    type Output = ParamVector;
    fn add(self, rhs: &ParamVector) -> ParamVector {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ParamVector {
    type Output = ParamVector;
    fn sub(self, rhs: &ParamVector) -> ParamVector {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &ParamVector {
    type Output = ParamVector;
    fn mul(self, rhs: f64) -> ParamVector {
        self.map(|a| a * rhs)
    }
}

impl Neg for &ParamVector {
    type Output = ParamVector;
    fn neg(self) -> ParamVector {
        self.map(|a| -a)
    }
}

/// The three supported norm geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "l2")]
    L2,
    #[serde(rename = "linf")]
    LInf,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::L1, NormKind::L2, NormKind::LInf];

    pub fn dual(self) -> NormKind {
        match self {
            NormKind::L1 => NormKind::LInf,
            NormKind::L2 => NormKind::L2,
            NormKind::LInf => NormKind::L1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
            NormKind::LInf => "linf",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormKind::L1),
            "l2" => Ok(NormKind::L2),
            "linf" | "l-inf" | "inf" => Ok(NormKind::LInf),
            other => Err(format!("unknown norm `{other}` (expected l1, l2 or linf)")),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot: dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64], kind: NormKind) -> f64 {
    match kind {
        NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
        NormKind::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormKind::LInf => v.iter().fold(0.0, |acc, x| acc.max(x.abs())),
    }
}

pub fn dual_norm(v: &[f64], kind: NormKind) -> f64 {
    norm(v, kind.dual())
}

/// A maximizer of `⟨Δ, g⟩` over the unit ball of `kind`.
///
/// The selection is deterministic: `sign(0) = 0` for ℓ∞, the zero vector at
/// `g = 0` for ℓ2, and for ℓ1 all mass on the lowest-index coordinate of
/// maximal magnitude.
pub fn steepest_direction(g: &[f64], kind: NormKind) -> ParamVector {
    match kind {
        NormKind::LInf => g.iter().map(|&x| sign(x)).collect(),
        NormKind::L2 => {
            let n = norm(g, NormKind::L2);
            if n == 0.0 {
                ParamVector::zeros(g.len())
            } else {
                g.iter().map(|&x| x / n).collect()
            }
        }
        NormKind::L1 => {
            let mut out = ParamVector::zeros(g.len());
            let mut best: Option<(usize, f64)> = None;
            for (i, &x) in g.iter().enumerate() {
                if best.is_none_or(|(_, b)| x.abs() > b) {
                    best = Some((i, x.abs()));
                }
            }
            if let Some((i, _)) = best {
                out[i] = sign(g[i]);
            }
            out
        }
    }
}

pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
