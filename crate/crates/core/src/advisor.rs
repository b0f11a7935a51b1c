//! Trainer advice for hesitant agents.
//!
//! Participated features are those selected at the previous step. Among them,
//! assertive features are re-selected by their agent's initial action and
//! hesitant features are deselected. A trainer may only flip hesitant
//! deselections into selections.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::Dataset;
use crate::mlkit::{fit_tree, select_kbest, MlError, TreeParams};
use crate::ActionVector;

#[derive(Debug, Error)]
pub enum AdviceError {
    #[error("action vectors differ in length: {prev} vs {initial}")]
    LengthMismatch { prev: usize, initial: usize },
    #[error("advised index {0} is out of range")]
    OutOfRange(usize),
    #[error("advised agent {0} already selects its feature")]
    NotHesitant(usize),
    #[error(transparent)]
    Ml(#[from] MlError),
}

/// Grouping of agents at one step.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AdviceContext {
    pub n_features: usize,
    /// Selected at the previous step.
    pub participated: Vec<usize>,
    /// Participated and initially re-selected.
    pub assertive: Vec<usize>,
    /// Participated and initially deselected.
    pub hesitant: Vec<usize>,
}

impl AdviceContext {
    pub fn m(&self) -> usize {
        self.assertive.len()
    }

    pub fn n(&self) -> usize {
        self.hesitant.len()
    }

    /// `ceil(m / 2 + n)`.
    pub fn k(&self) -> usize {
        self.m().div_ceil(2) + self.n()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrainerAdvice {
    /// Hesitant agents told to select their feature, ascending.
    pub flip_indices: Vec<usize>,
}

impl TrainerAdvice {
    pub fn none() -> Self {
        TrainerAdvice::default()
    }

    pub fn len(&self) -> usize {
        self.flip_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flip_indices.is_empty()
    }
}

pub fn identify_groups(prev_actions: &[bool], initial_actions: &[bool]) -> Result<AdviceContext, AdviceError> {
    if prev_actions.len() != initial_actions.len() {
        return Err(AdviceError::LengthMismatch {
            prev: prev_actions.len(),
            initial: initial_actions.len(),
        });
    }
    let mut ctx = AdviceContext {
        n_features: prev_actions.len(),
        ..Default::default()
    };
    for (i, (&prev, &init)) in prev_actions.iter().zip(initial_actions).enumerate() {
        if !prev {
            continue;
        }
        ctx.participated.push(i);
        if init {
            ctx.assertive.push(i);
        } else {
            ctx.hesitant.push(i);
        }
    }
    Ok(ctx)
}

/// KBest trainer over precomputed relevance scores (indexed by feature).
pub fn kbest_advise_scored(ctx: &AdviceContext, scores: &[f64]) -> TrainerAdvice {
    if ctx.participated.is_empty() || ctx.hesitant.is_empty() {
        return TrainerAdvice::none();
    }
    let k = ctx.k().min(ctx.participated.len());
    let best = crate::mlkit::top_k(&ctx.participated, scores, k);
    let flip_indices = ctx
        .hesitant
        .iter()
        .copied()
        .filter(|h| best.binary_search(h).is_ok())
        .collect();
    TrainerAdvice { flip_indices }
}

/// KBest trainer scoring participated features by mutual information with the
/// label on the training split.
pub fn kbest_advise(ctx: &AdviceContext, dataset: &Dataset) -> Result<TrainerAdvice, AdviceError> {
    if ctx.participated.is_empty() || ctx.hesitant.is_empty() {
        return Ok(TrainerAdvice::none());
    }
    let k = ctx.k().min(ctx.participated.len());
    let best = select_kbest(dataset, &ctx.participated, k)?;
    Ok(TrainerAdvice {
        flip_indices: ctx
            .hesitant
            .iter()
            .copied()
            .filter(|h| best.binary_search(h).is_ok())
            .collect(),
    })
}

/// Median; the mean of the two middle values for an even count.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 0 {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

/// Decision-tree trainer over importances of a tree fitted on the participated
/// features (indexed by feature). A hesitant feature is flipped when its
/// importance is strictly above the median assertive importance.
pub fn dtree_advise_with_importances(ctx: &AdviceContext, importances: &[f64]) -> TrainerAdvice {
    if ctx.participated.is_empty() || ctx.hesitant.is_empty() {
        return TrainerAdvice::none();
    }
    let assertive: Vec<f64> = ctx.assertive.iter().map(|&a| importances[a]).collect();
    let Some(g) = median(&assertive) else {
        return TrainerAdvice::none();
    };
    TrainerAdvice {
        flip_indices: ctx.hesitant.iter().copied().filter(|&h| importances[h] > g).collect(),
    }
}

/// Decision-tree trainer fitting its own tree on the participated features.
pub fn dtree_advise(ctx: &AdviceContext, dataset: &Dataset) -> Result<TrainerAdvice, AdviceError> {
    if ctx.participated.is_empty() || ctx.assertive.is_empty() || ctx.hesitant.is_empty() {
        return Ok(TrainerAdvice::none());
    }
    let train = dataset.train().map_err(MlError::from)?;
    let model = fit_tree(&train.select(&ctx.participated), train.labels(), TreeParams::default())?;
    let mut importances = vec![0.0; dataset.n_features()];
    for (&f, &imp) in ctx.participated.iter().zip(&model.feature_importances) {
        importances[f] = imp;
    }
    Ok(dtree_advise_with_importances(ctx, &importances))
}

/// Flips advised deselections to selections.
pub fn apply_advice(initial_actions: &[bool], advice: &TrainerAdvice) -> Result<ActionVector, AdviceError> {
    let mut out = initial_actions.to_vec();
    for &i in &advice.flip_indices {
        match out.get_mut(i) {
            None => return Err(AdviceError::OutOfRange(i)),
            Some(a) if *a => return Err(AdviceError::NotHesitant(i)),
            Some(a) => *a = true,
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trainer {
    KBest,
    DTree,
}

impl fmt::Display for Trainer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trainer::KBest => "kbest",
            Trainer::DTree => "dtree",
        })
    }
}

/// Phase of the hybrid schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybridPhase {
    Trainer1,
    Trainer2,
    None,
}

/// `[0, T)` first trainer, `[T, 2T)` second trainer, afterwards self-exploration.
pub fn hybrid_schedule(t: usize, transfer_point: usize) -> HybridPhase {
    if t < transfer_point {
        HybridPhase::Trainer1
    } else if t < transfer_point.saturating_mul(2) {
        HybridPhase::Trainer2
    } else {
        HybridPhase::None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainerMode {
    #[default]
    None,
    KBest,
    DTree,
    Hybrid,
}

impl TrainerMode {
    /// Trainer active at step `t`. In hybrid mode `order` gives the first and
    /// second trainer.
    pub fn trainer_at(self, t: usize, transfer_point: usize, order: [Trainer; 2]) -> Option<Trainer> {
        match self {
            TrainerMode::None => None,
            TrainerMode::KBest => Some(Trainer::KBest),
            TrainerMode::DTree => Some(Trainer::DTree),
            TrainerMode::Hybrid => match hybrid_schedule(t, transfer_point) {
                HybridPhase::Trainer1 => Some(order[0]),
                HybridPhase::Trainer2 => Some(order[1]),
                HybridPhase::None => None,
            },
        }
    }
}

impl FromStr for TrainerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "off" => Ok(TrainerMode::None),
            "kbest" | "kbt" => Ok(TrainerMode::KBest),
            "dtree" | "dtt" => Ok(TrainerMode::DTree),
            "hybrid" | "ht" => Ok(TrainerMode::Hybrid),
            other => Err(format!("unknown trainer {other:?}")),
        }
    }
}

impl fmt::Display for TrainerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainerMode::None => "none",
            TrainerMode::KBest => "kbest",
            TrainerMode::DTree => "dtree",
            TrainerMode::Hybrid => "hybrid",
        })
    }
}
