//! State encoding of a selected feature subset.
//!
//! The subset becomes a complete graph weighted by Pearson correlation. Directed
//! parent -> child edges taken from a decision tree fitted on the subset are laid
//! over it, one graph convolution mixes the two edge sets with weight `lambda`,
//! and the updated node vectors are pooled either by tree importance or by
//! plain averaging.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::StateVector;
use crate::dataio::Dataset;
use crate::mlkit::{pearson, CorrelationMatrix, DecisionTreeModel, MlError};

/// Length of a per-feature descriptor, and therefore of the state.
pub const DESCRIPTOR_DIM: usize = 8;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("cannot describe an empty column")]
    EmptyColumn,
    #[error("feature graph needs at least one selected feature")]
    EmptySelection,
    #[error("lambda {0} outside [0, 1]")]
    BadLambda(f64),
    #[error("expected {expected} node vectors, got {found}")]
    NodeMismatch { expected: usize, found: usize },
    #[error("node vectors have inconsistent dimensions")]
    RaggedDescriptors,
    #[error("tree was fitted on {tree} columns but the graph has {graph} nodes")]
    TreeMismatch { tree: usize, graph: usize },
    #[error(transparent)]
    Ml(#[from] MlError),
}

/// Pooling used to turn updated node vectors into the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum StateMethod {
    /// Importance-weighted sum.
    ImportanceWeighted,
    /// Mean over nodes.
    Mean,
}

impl TryFrom<u8> for StateMethod {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(StateMethod::ImportanceWeighted),
            2 => Ok(StateMethod::Mean),
            other => Err(format!("state method must be 1 or 2, got {other}")),
        }
    }
}

impl From<StateMethod> for u8 {
    fn from(m: StateMethod) -> u8 {
        match m {
            StateMethod::ImportanceWeighted => 1,
            StateMethod::Mean => 2,
        }
    }
}

/// `[mean, std, min, q25, median, q75, max, skewness]` with population moments
/// and linearly interpolated quantiles. Skewness is 0 for a constant column.
pub fn feature_descriptor(column: &[f64]) -> Result<Vec<f64>, StateError> {
    if column.is_empty() {
        return Err(StateError::EmptyColumn);
    }
    let n = column.len() as f64;
    let mean = column.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &v in column {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    let std = m2.sqrt();
    let skew = if std > 0.0 { m3 / (m2 * std) } else { 0.0 };

    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantile = |q: f64| {
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    Ok(vec![
        mean,
        std,
        sorted[0],
        quantile(0.25),
        quantile(0.5),
        quantile(0.75),
        sorted[sorted.len() - 1],
        skew,
    ])
}

/// Pearson-weighted complete graph over the selected features, plus directed
/// tree edges.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGraph {
    /// Selected feature indices, in column order.
    pub nodes: Vec<usize>,
    weights: Vec<f64>,
    /// Directed `(parent, child)` pairs of feature indices.
    pub tree_edges: BTreeSet<(usize, usize)>,
}

impl FeatureGraph {
    fn with_weights(nodes: Vec<usize>, weight: impl Fn(usize, usize) -> Result<f64, MlError>) -> Result<Self, StateError> {
        if nodes.is_empty() {
            return Err(StateError::EmptySelection);
        }
        let k = nodes.len();
        let mut weights = vec![0.0; k * k];
        for a in 0..k {
            weights[a * k + a] = 1.0;
            for b in a + 1..k {
                let w = weight(nodes[a], nodes[b])?;
                weights[a * k + b] = w;
                weights[b * k + a] = w;
            }
        }
        Ok(FeatureGraph {
            nodes,
            weights,
            tree_edges: BTreeSet::new(),
        })
    }

    /// Graph over `selected` with weights looked up in a precomputed matrix.
    pub fn from_correlations(corr: &CorrelationMatrix, selected: &[usize]) -> Result<Self, StateError> {
        Self::with_weights(selected.to_vec(), |u, v| Ok(corr.get(u, v)))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weight between node positions `a` and `b`.
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.weights[a * self.nodes.len() + b]
    }

    /// Adds the parent -> child feature edges of a tree fitted on `self.nodes`
    /// (same columns, same order).
    pub fn add_tree_edges(&mut self, model: &DecisionTreeModel) -> Result<(), StateError> {
        if model.n_features != self.nodes.len() {
            return Err(StateError::TreeMismatch {
                tree: model.n_features,
                graph: self.nodes.len(),
            });
        }
        for (p, c) in extract_tree_edges(model) {
            self.tree_edges.insert((self.nodes[p], self.nodes[c]));
        }
        Ok(())
    }

    fn position(&self, feature: usize) -> usize {
        self.nodes
            .iter()
            .position(|&f| f == feature)
            .expect("tree edge endpoint outside the graph")
    }
}

/// Graph over `selected` with Pearson weights computed on the training split.
pub fn build_graph(dataset: &Dataset, selected: &[usize]) -> Result<FeatureGraph, StateError> {
    let train = dataset.train().map_err(MlError::from)?;
    for &f in selected {
        dataset.check_feature(f).map_err(MlError::from)?;
    }
    FeatureGraph::with_weights(selected.to_vec(), |u, v| pearson(train.column(u), train.column(v)))
}

/// Parent -> child split-feature pairs between adjacent internal nodes, in the
/// tree's column positions. Self-pairs are dropped and duplicates collapsed.
pub fn extract_tree_edges(model: &DecisionTreeModel) -> BTreeSet<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for node in &model.nodes {
        let Some(split) = &node.split else { continue };
        for child in [split.left, split.right] {
            if let Some(cs) = &model.nodes[child].split {
                if cs.feature != split.feature {
                    edges.insert((split.feature, cs.feature));
                }
            }
        }
    }
    edges
}

/// One tree-augmented convolution:
/// `h'_v = lambda * sum_{u -> v} W[u][v] h_u + (1 - lambda) * sum_{w in V} W[w][v] h_w`.
///
/// `descriptors[i]` belongs to `graph.nodes[i]`.
pub fn gcn_update(graph: &FeatureGraph, descriptors: &[Vec<f64>], lambda: f64) -> Result<Vec<Vec<f64>>, StateError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(StateError::BadLambda(lambda));
    }
    let k = graph.len();
    if descriptors.len() != k {
        return Err(StateError::NodeMismatch {
            expected: k,
            found: descriptors.len(),
        });
    }
    let dim = descriptors.first().map_or(0, Vec::len);
    if descriptors.iter().any(|h| h.len() != dim) {
        return Err(StateError::RaggedDescriptors);
    }
    let mut in_neighbors: Vec<Vec<usize>> = vec![Vec::new(); k];
    for &(u, v) in &graph.tree_edges {
        in_neighbors[graph.position(v)].push(graph.position(u));
    }
    let mut out = vec![vec![0.0; dim]; k];
    for (v, h_out) in out.iter_mut().enumerate() {
        for &u in &in_neighbors[v] {
            let w = lambda * graph.weight(u, v);
            for (o, x) in h_out.iter_mut().zip(&descriptors[u]) {
                *o += w * x;
            }
        }
        for (w_node, h) in descriptors.iter().enumerate() {
            let w = (1.0 - lambda) * graph.weight(w_node, v);
            for (o, x) in h_out.iter_mut().zip(h) {
                *o += w * x;
            }
        }
    }
    Ok(out)
}

/// Importance-weighted sum of node vectors; falls back to the mean when every
/// importance is zero.
pub fn state_method1(updated: &[Vec<f64>], importances: &[f64]) -> Result<StateVector, StateError> {
    if updated.len() != importances.len() {
        return Err(StateError::NodeMismatch {
            expected: updated.len(),
            found: importances.len(),
        });
    }
    if importances.iter().all(|&w| w == 0.0) {
        return state_method2(updated);
    }
    let dim = updated.first().map_or(0, Vec::len);
    let mut s = vec![0.0; dim];
    for (h, &w) in updated.iter().zip(importances) {
        for (o, x) in s.iter_mut().zip(h) {
            *o += w * x;
        }
    }
    Ok(StateVector(s))
}

/// Mean of node vectors.
pub fn state_method2(updated: &[Vec<f64>]) -> Result<StateVector, StateError> {
    if updated.is_empty() {
        return Err(StateError::EmptySelection);
    }
    let dim = updated[0].len();
    let scale = 1.0 / updated.len() as f64;
    let mut s = vec![0.0; dim];
    for h in updated {
        for (o, x) in s.iter_mut().zip(h) {
            *o += scale * x;
        }
    }
    Ok(StateVector(s))
}

/// Encodes subsets of one dataset. Descriptors are computed once per feature on
/// the training split.
#[derive(Debug, Clone)]
pub struct StateEncoder {
    pub lambda: f64,
    pub method: StateMethod,
    descriptors: Vec<Vec<f64>>,
}

impl StateEncoder {
    pub fn new(dataset: &Dataset, lambda: f64, method: StateMethod) -> Result<Self, StateError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(StateError::BadLambda(lambda));
        }
        let train = dataset.train().map_err(MlError::from)?;
        let descriptors = (0..dataset.n_features())
            .map(|j| feature_descriptor(train.column(j)))
            .collect::<Result<_, _>>()?;
        Ok(StateEncoder {
            lambda,
            method,
            descriptors,
        })
    }

    pub fn dim(&self) -> usize {
        DESCRIPTOR_DIM
    }

    pub fn descriptor(&self, feature: usize) -> &[f64] {
        &self.descriptors[feature]
    }

    /// State of `selected`, given a tree fitted on exactly those columns.
    /// An empty selection encodes to the zero vector.
    pub fn encode(
        &self,
        corr: &CorrelationMatrix,
        selected: &[usize],
        model: Option<&DecisionTreeModel>,
    ) -> Result<StateVector, StateError> {
        if selected.is_empty() {
            return Ok(StateVector::zeros(self.dim()));
        }
        let mut graph = FeatureGraph::from_correlations(corr, selected)?;
        if let Some(m) = model {
            graph.add_tree_edges(m)?;
        }
        let h: Vec<Vec<f64>> = selected.iter().map(|&f| self.descriptors[f].clone()).collect();
        let updated = gcn_update(&graph, &h, self.lambda)?;
        match (self.method, model) {
            (StateMethod::ImportanceWeighted, Some(m)) => state_method1(&updated, &m.feature_importances),
            _ => state_method2(&updated),
        }
    }
}
