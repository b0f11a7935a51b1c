use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const DEFAULT_WINDOW: usize = 100;

fn window(series: &[f64], start: usize, len: usize) -> Result<&[f64], HarnessError> {
    match start.checked_add(len) {
        Some(end) if len > 0 && end <= series.len() => Ok(&series[start..end]),
        _ => Err(HarnessError::Window {
            start,
            len,
            total: series.len(),
        }),
    }
}

/// Maximum of `series[start .. start + len]`.
pub fn best_acc(series: &[f64], start: usize, len: usize) -> Result<f64, HarnessError> {
    Ok(window(series, start, len)?
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Mean of `series[start .. start + len]`.
pub fn ave_acc(series: &[f64], start: usize, len: usize) -> Result<f64, HarnessError> {
    let w = window(series, start, len)?;
    Ok(w.iter().sum::<f64>() / w.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStat {
    pub start: usize,
    pub len: usize,
    pub best_acc: f64,
    pub ave_acc: f64,
    /// Best and mean over every step up to the end of this window.
    pub cumulative_best_acc: f64,
    pub cumulative_ave_acc: f64,
}

/// Consecutive windows of `len` steps; the last one may be shorter.
pub fn summarize_windows(series: &[f64], len: usize) -> Result<Vec<WindowStat>, HarnessError> {
    if len == 0 {
        return Err(HarnessError::Window {
            start: 0,
            len,
            total: series.len(),
        });
    }
    (0..series.len())
        .step_by(len)
        .map(|start| {
            let l = len.min(series.len() - start);
            Ok(WindowStat {
                start,
                len: l,
                best_acc: best_acc(series, start, l)?,
                ave_acc: ave_acc(series, start, l)?,
                cumulative_best_acc: best_acc(series, 0, start + l)?,
                cumulative_ave_acc: ave_acc(series, 0, start + l)?,
            })
        })
        .collect()
}
