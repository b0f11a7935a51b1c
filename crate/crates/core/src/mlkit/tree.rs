//! CART classifier with the Gini criterion.
//!
//! Columns are presorted once; every node owns the same contiguous range in each
//! feature's sorted order, and a split stably partitions those ranges. Split
//! quality is compared in exact integer arithmetic, which makes the tie-breaking
//! (lowest feature, then lowest threshold) independent of rounding.

use super::MlError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TreeParams {
    /// `None` grows until every leaf is pure or unsplittable.
    pub max_depth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRule {
    /// Column position within the fitted subset.
    pub feature: usize,
    /// Rows with `value <= threshold` go left.
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub split: Option<SplitRule>,
    pub gini: f64,
    pub n_node_samples: usize,
    pub class_counts: Vec<usize>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    /// Majority class; ties go to the lower class id.
    pub fn majority_class(&self) -> usize {
        let mut best = 0;
        for (c, &n) in self.class_counts.iter().enumerate() {
            if n > self.class_counts[best] {
                best = c;
            }
        }
        best
    }
}

/// Fitted tree. Nodes are stored in depth-first preorder (root 0, left subtree
/// before right subtree).
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTreeModel {
    pub nodes: Vec<TreeNode>,
    pub feature_importances: Vec<f64>,
    pub n_features: usize,
    pub n_classes: usize,
}

impl DecisionTreeModel {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], id: usize) -> usize {
            match &nodes[id].split {
                None => 0,
                Some(s) => 1 + walk(nodes, s.left).max(walk(nodes, s.right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict_row(&self, columns: &[&[f64]], row: usize) -> usize {
        let mut id = 0;
        while let Some(s) = &self.nodes[id].split {
            id = if columns[s.feature][row] <= s.threshold {
                s.left
            } else {
                s.right
            };
        }
        self.nodes[id].majority_class()
    }
}

/// Row order of `column` by value, ties by row index.
pub fn presort(column: &[f64]) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..column.len() as u32).collect();
    idx.sort_by(|&a, &b| column[a as usize].total_cmp(&column[b as usize]).then(a.cmp(&b)));
    idx
}

fn check_shape(columns: &[&[f64]], n: usize) -> Result<(), MlError> {
    if columns.is_empty() {
        return Err(MlError::NoFeatures);
    }
    for c in columns {
        if c.len() != n {
            return Err(MlError::LengthMismatch {
                left: c.len(),
                right: n,
            });
        }
    }
    if n < 2 {
        return Err(MlError::TooFewSamples(n));
    }
    Ok(())
}

/// Fits a Gini CART tree on column-major `columns`.
pub fn fit_tree(columns: &[&[f64]], labels: &[usize], params: TreeParams) -> Result<DecisionTreeModel, MlError> {
    check_shape(columns, labels.len())?;
    let sorted = columns.iter().map(|c| presort(c)).collect();
    fit_tree_presorted(columns, labels, sorted, params)
}

/// [`fit_tree`] with each column's [`presort`] order supplied by the caller.
pub fn fit_tree_presorted(
    columns: &[&[f64]],
    labels: &[usize],
    sorted: Vec<Vec<u32>>,
    params: TreeParams,
) -> Result<DecisionTreeModel, MlError> {
    let n = labels.len();
    check_shape(columns, n)?;
    if sorted.len() != columns.len() {
        return Err(MlError::ColumnMismatch {
            expected: columns.len(),
            found: sorted.len(),
        });
    }
    if let Some(bad) = sorted.iter().find(|s| s.len() != n) {
        return Err(MlError::LengthMismatch {
            left: bad.len(),
            right: n,
        });
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut b = Builder {
        n_classes,
        max_depth: params.max_depth,
        sorted: sorted
            .iter()
            .zip(columns)
            .map(|(order, col)| {
                order
                    .iter()
                    .map(|&row| Entry {
                        value: col[row as usize],
                        row,
                        label: labels[row as usize] as u32,
                    })
                    .collect()
            })
            .collect(),
        scratch: vec![Entry::default(); n],
        goes_left: vec![false; n],
        nodes: Vec::new(),
        importance: vec![0.0; columns.len()],
    };
    b.build(0, n, 0);

    let mut importances = b.importance;
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        for v in importances.iter_mut() {
            *v /= total;
        }
    } else {
        importances.iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(DecisionTreeModel {
        nodes: b.nodes,
        feature_importances: importances,
        n_features: columns.len(),
        n_classes,
    })
}

/// Fraction of rows whose predicted class equals the label.
pub fn accuracy(model: &DecisionTreeModel, columns: &[&[f64]], labels: &[usize]) -> Result<f64, MlError> {
    if columns.len() != model.n_features {
        return Err(MlError::ColumnMismatch {
            expected: model.n_features,
            found: columns.len(),
        });
    }
    for c in columns {
        if c.len() != labels.len() {
            return Err(MlError::LengthMismatch {
                left: c.len(),
                right: labels.len(),
            });
        }
    }
    if labels.is_empty() {
        return Ok(0.0);
    }
    let correct = (0..labels.len())
        .filter(|&r| model.predict_row(columns, r) == labels[r])
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Node size above which split scores are compared in 128-bit arithmetic.
const WIDE_ROWS: usize = 8192;

struct Candidate {
    feature: usize,
    threshold: f64,
    n_left: usize,
    // score = num / den = S_l / n_l + S_r / n_r, with S = sum of squared class counts
    num: u64,
    den: u64,
}

/// One row in a feature's sorted order, carried along so split scans read
/// memory sequentially.
#[derive(Debug, Clone, Copy, Default)]
struct Entry {
    value: f64,
    row: u32,
    label: u32,
}

struct Builder {
    n_classes: usize,
    max_depth: Option<usize>,
    sorted: Vec<Vec<Entry>>,
    scratch: Vec<Entry>,
    goes_left: Vec<bool>,
    nodes: Vec<TreeNode>,
    importance: Vec<f64>,
}

impl Builder {
    fn build(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let n = end - start;
        let mut counts = vec![0usize; self.n_classes];
        for e in &self.sorted[0][start..end] {
            counts[e.label as usize] += 1;
        }
        let sq: u64 = counts.iter().map(|&c| (c * c) as u64).sum();
        let nn = (n * n) as u64;
        let gini = 1.0 - sq as f64 / nn as f64;
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            split: None,
            gini: if sq == nn { 0.0 } else { gini },
            n_node_samples: n,
            class_counts: counts.clone(),
        });

        let depth_ok = self.max_depth.map_or(true, |d| depth < d);
        if n < 2 || sq == nn || !depth_ok {
            return id;
        }
        let Some(best) = self.best_split(start, end, &counts, sq) else {
            return id;
        };
        // not an improvement unless S_l/n_l + S_r/n_r > S/n
        if best.num as u128 * n as u128 <= sq as u128 * best.den as u128 {
            return id;
        }

        let mid = start + best.n_left;
        for pos in start..end {
            let row = self.sorted[best.feature][pos].row as usize;
            self.goes_left[row] = pos < mid;
        }
        for f in 0..self.sorted.len() {
            stable_partition(&mut self.sorted[f][start..end], &mut self.scratch, &self.goes_left);
        }
        let left = self.build(start, mid, depth + 1);
        let right = self.build(mid, end, depth + 1);
        let weighted_decrease = n as f64 * self.nodes[id].gini
            - best.n_left as f64 * self.nodes[left].gini
            - (n - best.n_left) as f64 * self.nodes[right].gini;
        self.importance[best.feature] += weighted_decrease;
        self.nodes[id].split = Some(SplitRule {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        });
        id
    }

    fn best_split(&self, start: usize, end: usize, counts: &[usize], sq: u64) -> Option<Candidate> {
        let n = end - start;
        let wide = n > WIDE_ROWS;
        let mut best: Option<Candidate> = None;
        let mut left = vec![0u64; self.n_classes];
        let mut right = vec![0u64; self.n_classes];
        for (f, order) in self.sorted.iter().enumerate() {
            let range = &order[start..end];
            if range[0].value == range[n - 1].value {
                continue;
            }
            left.iter_mut().for_each(|c| *c = 0);
            for (r, &c) in right.iter_mut().zip(counts) {
                *r = c as u64;
            }
            let (mut s_left, mut s_right) = (0u64, sq);
            for i in 0..n - 1 {
                let c = range[i].label as usize;
                s_left += 2 * left[c] + 1;
                left[c] += 1;
                s_right -= 2 * right[c] - 1;
                right[c] -= 1;
                let v = range[i].value;
                let next = range[i + 1].value;
                if v >= next {
                    continue;
                }
                let n_left = (i + 1) as u64;
                let n_right = (n - i - 1) as u64;
                let num = s_left * n_right + s_right * n_left;
                let den = n_left * n_right;
                let better = match &best {
                    None => true,
                    // num * den <= n^5 / 16, which overflows u64 only past ~12k rows
                    Some(b) if wide => num as u128 * b.den as u128 > b.num as u128 * den as u128,
                    Some(b) => num * b.den > b.num * den,
                };
                if better {
                    best = Some(Candidate {
                        feature: f,
                        threshold: midpoint(v, next),
                        n_left: i + 1,
                        num,
                        den,
                    });
                }
            }
        }
        best
    }
}

/// Split point between two consecutive distinct values; falls back to the lower
/// value when the midpoint rounds up onto the upper one.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = (lo + hi) / 2.0;
    if mid >= hi || !mid.is_finite() {
        lo
    } else {
        mid
    }
}

fn stable_partition(range: &mut [Entry], scratch: &mut [Entry], goes_left: &[bool]) {
    let mut l = 0;
    let mut r = 0;
    for i in 0..range.len() {
        let s = range[i];
        if goes_left[s.row as usize] {
            range[l] = s;
            l += 1;
        } else {
            scratch[r] = s;
            r += 1;
        }
    }
    range[l..].copy_from_slice(&scratch[..r]);
}
