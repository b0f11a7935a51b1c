//! Multi-agent reinforced feature selection with trainer advice.
//!
//! One DQN agent per feature decides whether its feature is selected. External
//! trainers (a mutual-information KBest scorer and a decision-tree importance
//! scorer) flip the deselections of hesitant agents, the selected subset is
//! encoded through a Pearson feature graph blended with decision-tree edges, and
//! the shared reward is split across agents by tree importance, by selection
//! frequency or equally.
//!
//! Modules, bottom-up:
//!
//! * [`dataio`]: CSV ingestion, min-max normalization and the train/test split.
//! * [`mlkit`]: Pearson correlation, binned mutual information, KBest ranking,
//!   a CART classifier with Gini importances and accuracy.
//! * [`agents`]: per-feature Q-networks, replay memory and Adam training.
//! * [`staterep`]: the tree-augmented graph convolution used as state.
//! * [`advisor`]: participated/assertive/hesitant grouping and trainer advice.
//! * [`reward`]: the shared reward base and its per-agent distribution.
//! * [`harness`]: the exploration loop, metrics, baselines and reports.

pub mod advisor;
pub mod agents;
pub mod dataio;
pub mod harness;
pub mod mlkit;
pub mod reward;
pub mod staterep;

pub use dataio::{Dataset, DataError};

/// Selection decision of every agent at one step; `true` means selected.
pub type ActionVector = Vec<bool>;

/// Indices of selected entries in an action vector.
pub fn selected_indices(actions: &[bool]) -> Vec<usize> {
    actions
        .iter()
        .enumerate()
        .filter_map(|(i, &a)| a.then_some(i))
        .collect()
}
