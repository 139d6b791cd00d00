use crate::{Error, Result};

/// Learning-rate rule producing `η_t` for steps `t = 1, 2, …`.
#[derive(Debug, Clone, PartialEq)]
pub enum LrSchedule {
    Constant(f64),
    /// `η_t = 2 / (λ (t + 1))`.
    FrankWolfeRate { lambda: f64 },
    /// `η_t = scale / √t`.
    InverseSqrt { scale: f64 },
    /// Explicit table; entry `i` is `η_{i+1}`.
    Table(Vec<f64>),
}

impl LrSchedule {
    pub fn eta(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(Error::precondition("learning-rate steps are 1-based"));
        }
        let eta = match self {
            LrSchedule::Constant(eta) => *eta,
            LrSchedule::FrankWolfeRate { lambda } => 2.0 / (lambda * (t as f64 + 1.0)),
            LrSchedule::InverseSqrt { scale } => scale / (t as f64).sqrt(),
            LrSchedule::Table(table) => *table.get(t - 1).ok_or_else(|| {
                Error::precondition(format!(
                    "learning-rate table has {} entries, step {t} requested",
                    table.len()
                ))
            })?,
        };
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::precondition(format!("η_{t} = {eta} is not positive")));
        }
        Ok(eta)
    }

    /// Checks that `η_1, …, η_steps` are all defined and positive.
    pub fn validate(&self, steps: usize) -> Result<()> {
        match self {
            LrSchedule::Constant(_) | LrSchedule::InverseSqrt { .. } => self.eta(1).map(|_| ()),
            LrSchedule::FrankWolfeRate { lambda } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::precondition("Frank–Wolfe rate needs λ > 0"));
                }
                Ok(())
            }
            LrSchedule::Table(table) => {
                if table.len() < steps {
                    return Err(Error::precondition(format!(
                        "learning-rate table has {} entries but {steps} steps were requested",
                        table.len()
                    )));
                }
                (1..=steps).try_for_each(|t| self.eta(t).map(|_| ()))
            }
        }
    }

    pub fn etas(&self, steps: usize) -> Result<Vec<f64>> {
        (1..=steps).map(|t| self.eta(t)).collect()
    }

    pub fn is_non_increasing(&self, steps: usize) -> bool {
        match self {
            LrSchedule::Constant(_) | LrSchedule::FrankWolfeRate { .. } | LrSchedule::InverseSqrt { .. } => true,
            LrSchedule::Table(t) => t.iter().take(steps).zip(t.iter().skip(1).take(steps.saturating_sub(1))).all(|(a, b)| b <= a),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            LrSchedule::Constant(eta) => format!("constant(eta={eta})"),
            LrSchedule::FrankWolfeRate { lambda } => format!("frank-wolfe(lambda={lambda})"),
            LrSchedule::InverseSqrt { scale } => format!("inverse-sqrt(scale={scale})"),
            LrSchedule::Table(t) => format!("table(len={})", t.len()),
        }
    }
}
