//! Shared reward base `acc - beta * R` and its per-agent distribution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::Dataset;
use crate::mlkit::{pearson, CorrelationMatrix, MlError};

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("feature correlation needs a nonempty selection")]
    EmptySelection,
    #[error("importance {value} given for unselected feature {feature}")]
    UnselectedImportance { feature: usize, value: f64 },
    #[error("expected {expected} entries, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Ml(#[from] MlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardScheme {
    /// Equal share among selecting agents.
    #[default]
    Equal,
    /// Weighted by tree importance.
    Prs1,
    /// Weighted by historical selection frequency.
    Prs2,
}

impl FromStr for RewardScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "equal" => Ok(RewardScheme::Equal),
            "prs1" => Ok(RewardScheme::Prs1),
            "prs2" => Ok(RewardScheme::Prs2),
            other => Err(format!("unknown reward scheme {other:?}")),
        }
    }
}

impl fmt::Display for RewardScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardScheme::Equal => "equal",
            RewardScheme::Prs1 => "prs1",
            RewardScheme::Prs2 => "prs2",
        })
    }
}

/// How the equal scheme hands out the base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EqualShare {
    /// `base / |F_s|` per selecting agent.
    #[default]
    Divided,
    /// The full base to every selecting agent.
    Identical,
}

/// Mean Pearson correlation over all ordered pairs of selected features,
/// self-pairs included.
pub fn feature_correlation(dataset: &Dataset, selected: &[usize]) -> Result<f64, RewardError> {
    if selected.is_empty() {
        return Err(RewardError::EmptySelection);
    }
    let train = dataset.train().map_err(MlError::from)?;
    let mut total = 0.0;
    for &u in selected {
        for &v in selected {
            total += if u == v {
                1.0
            } else {
                pearson(train.column(u), train.column(v))?
            };
        }
    }
    Ok(total / (selected.len() * selected.len()) as f64)
}

/// [`feature_correlation`] over a precomputed correlation matrix.
pub fn feature_correlation_cached(corr: &CorrelationMatrix, selected: &[usize]) -> Result<f64, RewardError> {
    if selected.is_empty() {
        return Err(RewardError::EmptySelection);
    }
    let mut total = 0.0;
    for &u in selected {
        for &v in selected {
            total += corr.get(u, v);
        }
    }
    Ok(total / (selected.len() * selected.len()) as f64)
}

fn check_len(actions: &[bool], other: usize) -> Result<(), RewardError> {
    if actions.len() != other {
        return Err(RewardError::LengthMismatch {
            expected: actions.len(),
            found: other,
        });
    }
    Ok(())
}

/// Tree-importance share. `importances` is indexed by feature and must be zero
/// for every unselected feature.
pub fn reward_prs1(acc: f64, corr: f64, importances: &[f64], actions: &[bool], beta: f64) -> Result<Vec<f64>, RewardError> {
    check_len(actions, importances.len())?;
    let base = acc - beta * corr;
    importances
        .iter()
        .zip(actions)
        .enumerate()
        .map(|(i, (&imp, &a))| {
            if a {
                Ok(imp * base)
            } else if imp != 0.0 {
                Err(RewardError::UnselectedImportance { feature: i, value: imp })
            } else {
                Ok(0.0)
            }
        })
        .collect()
}

/// Per-agent selection counts accumulated over the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardLedger {
    pub cumulative_selections: Vec<u64>,
    pub beta: f64,
    pub last_acc: f64,
    pub last_corr: f64,
    steps: u64,
}

impl RewardLedger {
    pub fn new(n_agents: usize, beta: f64) -> Self {
        RewardLedger {
            cumulative_selections: vec![0; n_agents],
            beta,
            last_acc: 0.0,
            last_corr: 0.0,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn record(&mut self, actions: &[bool]) -> Result<(), RewardError> {
        check_len(actions, self.cumulative_selections.len())?;
        for (c, &a) in self.cumulative_selections.iter_mut().zip(actions) {
            *c += a as u64;
        }
        self.steps += 1;
        Ok(())
    }

    /// Selection-frequency ratios; uniform when nothing has been selected yet.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.cumulative_selections.len();
        let total: u64 = self.cumulative_selections.iter().sum();
        if total == 0 {
            return vec![1.0 / n as f64; n];
        }
        self.cumulative_selections
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }
}

/// Selection-frequency share. The ledger must already include `actions`.
pub fn reward_prs2(acc: f64, corr: f64, ledger: &RewardLedger, actions: &[bool], beta: f64) -> Result<Vec<f64>, RewardError> {
    check_len(actions, ledger.cumulative_selections.len())?;
    let base = acc - beta * corr;
    Ok(ledger
        .weights()
        .into_iter()
        .zip(actions)
        .map(|(w, &a)| if a { w * base } else { 0.0 })
        .collect())
}

/// Equal share among selecting agents.
pub fn reward_equal(acc: f64, corr: f64, actions: &[bool], beta: f64, share: EqualShare) -> Vec<f64> {
    let selected = actions.iter().filter(|&&a| a).count();
    if selected == 0 {
        return vec![0.0; actions.len()];
    }
    let base = acc - beta * corr;
    let each = match share {
        EqualShare::Divided => base / selected as f64,
        EqualShare::Identical => base,
    };
    actions.iter().map(|&a| if a { each } else { 0.0 }).collect()
}
