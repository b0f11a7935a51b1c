use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::dataio::Dataset;
use crate::mlkit::{
    accuracy, fit_tree, mi_scores, mutual_information_between, select_kbest, TreeParams,
    DEFAULT_MI_BINS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMethod {
    KBest,
    DtRfe,
    Mrmr,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 3] = [BaselineMethod::KBest, BaselineMethod::DtRfe, BaselineMethod::Mrmr];
}

impl FromStr for BaselineMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kbest" => Ok(BaselineMethod::KBest),
            "dtrfe" | "dt-rfe" | "rfe" => Ok(BaselineMethod::DtRfe),
            "mrmr" => Ok(BaselineMethod::Mrmr),
            other => Err(format!("unknown baseline {other:?}")),
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineMethod::KBest => "kbest",
            BaselineMethod::DtRfe => "dtrfe",
            BaselineMethod::Mrmr => "mrmr",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub method: BaselineMethod,
    pub k: usize,
    /// Selected features in ascending order.
    pub selected: Vec<usize>,
    /// Features in the order the method picked (mRMR) or dropped (DT-RFE) them.
    pub order: Vec<usize>,
    pub acc: f64,
}

/// Half the features, rounded down, but at least one.
pub fn default_k(n_features: usize) -> usize {
    (n_features / 2).max(1)
}

fn check_k(dataset: &Dataset, k: usize) -> Result<(), HarnessError> {
    let n = dataset.n_features();
    if k == 0 || k > n {
        return Err(HarnessError::BadK { k, n });
    }
    Ok(())
}

/// Test accuracy of a tree trained on `selected`; 0 for an empty subset.
pub fn subset_accuracy(dataset: &Dataset, selected: &[usize]) -> Result<f64, HarnessError> {
    if selected.is_empty() {
        return Ok(0.0);
    }
    let train = dataset.train()?;
    let test = dataset.test()?;
    let model = fit_tree(&train.select(selected), train.labels(), TreeParams::default())?;
    Ok(accuracy(&model, &test.select(selected), test.labels())?)
}

fn finish(dataset: &Dataset, method: BaselineMethod, k: usize, mut selected: Vec<usize>, order: Vec<usize>) -> Result<BaselineResult, HarnessError> {
    selected.sort_unstable();
    let acc = subset_accuracy(dataset, &selected)?;
    Ok(BaselineResult {
        method,
        k,
        selected,
        order,
        acc,
    })
}

/// Positive `k`, clamped to the feature count.
fn clamp_k(dataset: &Dataset, k: usize) -> Result<usize, HarnessError> {
    if k == 0 {
        return Err(HarnessError::BadK { k, n: dataset.n_features() });
    }
    Ok(k.min(dataset.n_features()))
}

pub fn baseline_kbest(dataset: &Dataset, k: usize) -> Result<BaselineResult, HarnessError> {
    let k = clamp_k(dataset, k)?;
    let all: Vec<usize> = (0..dataset.n_features()).collect();
    let selected = select_kbest(dataset, &all, k)?;
    let order = selected.clone();
    finish(dataset, BaselineMethod::KBest, k, selected, order)
}

/// Recursive elimination: refit a tree on the survivors and drop the least
/// important feature until `k` remain. Ties drop the higher index.
pub fn baseline_dt_rfe(dataset: &Dataset, k: usize) -> Result<BaselineResult, HarnessError> {
    check_k(dataset, k)?;
    let train = dataset.train()?;
    let mut remaining: Vec<usize> = (0..dataset.n_features()).collect();
    let mut dropped = Vec::new();
    while remaining.len() > k {
        let model = fit_tree(&train.select(&remaining), train.labels(), TreeParams::default())?;
        let imp = &model.feature_importances;
        let mut worst = 0;
        for pos in 1..remaining.len() {
            if imp[pos] <= imp[worst] {
                worst = pos;
            }
        }
        dropped.push(remaining.remove(worst));
    }
    finish(dataset, BaselineMethod::DtRfe, k, remaining, dropped)
}

/// Greedy max-relevance min-redundancy: maximize `MI(f; y)` minus the mean
/// `MI(f; s)` over already picked `s`. Ties go to the lower index.
pub fn baseline_mrmr(dataset: &Dataset, k: usize) -> Result<BaselineResult, HarnessError> {
    let k = clamp_k(dataset, k)?;
    let n = dataset.n_features();
    let train = dataset.train()?;
    let relevance = mi_scores(dataset, DEFAULT_MI_BINS)?;
    let mut redundancy = vec![0.0; n];
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    let mut available = vec![true; n];
    while picked.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for f in (0..n).filter(|&f| available[f]) {
            let score = if picked.is_empty() {
                relevance[f]
            } else {
                relevance[f] - redundancy[f] / picked.len() as f64
            };
            if best.map_or(true, |(_, b)| score > b) {
                best = Some((f, score));
            }
        }
        let (f, _) = best.expect("k <= n leaves a candidate");
        available[f] = false;
        picked.push(f);
        for g in (0..n).filter(|&g| available[g]) {
            redundancy[g] += mutual_information_between(train.column(g), train.column(f), DEFAULT_MI_BINS)?;
        }
    }
    let order = picked.clone();
    finish(dataset, BaselineMethod::Mrmr, k, picked, order)
}

pub fn run_baselines(dataset: &Dataset, methods: &[BaselineMethod], k: usize) -> Result<Vec<BaselineResult>, HarnessError> {
    methods
        .iter()
        .map(|m| match m {
            BaselineMethod::KBest => baseline_kbest(dataset, k),
            BaselineMethod::DtRfe => baseline_dt_rfe(dataset, k),
            BaselineMethod::Mrmr => baseline_mrmr(dataset, k),
        })
        .collect()
}
