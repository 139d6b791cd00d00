use crate::harness::trace::Trace;
use crate::vecmath::ParamVector;
use crate::{Error, Result};

/// `Σ η_t Δ_t / Σ η_t` over the steps `start..=end` of a trace, for the
/// coordinates whose updates the trace recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageUpdateEstimate {
    pub weighted_avg: ParamVector,
    pub coords: Vec<usize>,
    pub window: (usize, usize),
}

pub fn avg_update(trace: &Trace, window: (usize, usize)) -> Result<AverageUpdateEstimate> {
    let (start, end) = window;
    let invalid = |reason: &str| Error::InvalidWindow {
        start,
        end,
        reason: reason.to_string(),
    };
    if end < start {
        return Err(invalid("end precedes start"));
    }
    if start == 0 {
        return Err(invalid("steps are 1-based"));
    }
    let coords = trace.coords_with_prefix("update");
    let mut needed = vec!["t".to_string(), "eta".to_string()];
    needed.extend(coords.iter().map(|j| format!("update_{j}")));
    let idx = trace.require_columns(&needed)?;

    let rows: Vec<&Vec<f64>> = trace
        .rows()
        .iter()
        .filter(|r| (start as f64..=end as f64).contains(&r[idx[0]]))
        .collect();
    if rows.is_empty() {
        return Err(invalid("no recorded steps in window"));
    }
    if rows.len() != end - start + 1 {
        return Err(invalid("window is not fully recorded (trace is subsampled or too short)"));
    }
    let mut sums = vec![0.0; coords.len()];
    let mut eta_sum = 0.0;
    for r in rows {
        let eta = r[idx[1]];
        eta_sum += eta;
        for (k, s) in sums.iter_mut().enumerate() {
            *s += eta * r[idx[2 + k]];
        }
    }
    Ok(AverageUpdateEstimate {
        weighted_avg: sums.into_iter().map(|s| s / eta_sum).collect(),
        coords,
        window,
    })
}

/// The last 20% of a run's steps, at least one step.
pub fn default_window(steps: usize) -> (usize, usize) {
    let len = (steps / 5).max(1);
    (steps + 1 - len.min(steps), steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_trace(n: usize, c: f64) -> Trace {
        let mut tr = Trace::new(vec!["t".into(), "eta".into(), "update_0".into(), "update_2".into()]);
        for t in 1..=n {
            tr.push_row(vec![t as f64, 1.0 / t as f64, c, -c]);
        }
        tr
    }

    #[test]
    fn constant_updates_average_to_constant() {
        let est = avg_update(&const_trace(10, 0.25), (3, 9)).unwrap();
        assert_eq!(est.coords, vec![0, 2]);
        assert!((est.weighted_avg[0] - 0.25).abs() < 1e-15);
        assert!((est.weighted_avg[1] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn window_errors() {
        let tr = const_trace(10, 1.0);
        assert!(matches!(avg_update(&tr, (5, 4)), Err(Error::InvalidWindow { .. })));
        assert!(avg_update(&tr, (11, 12)).is_err());
        assert!(avg_update(&tr, (8, 12)).is_err());
        assert!(avg_update(&tr, (0, 2)).is_err());
        let bare = Trace::new(vec!["t".into()]);
        assert!(matches!(avg_update(&bare, (1, 1)), Err(Error::MissingColumns(_))));
    }

    #[test]
    fn default_window_is_last_fifth() {
        assert_eq!(default_window(100), (81, 100));
        assert_eq!(default_window(3), (3, 3));
        assert_eq!(default_window(1), (1, 1));
    }
}
