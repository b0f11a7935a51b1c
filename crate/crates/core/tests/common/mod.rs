//! Independent reference implementations used by the integration and
//! acceptance tests. Each one follows the textbook definition directly and
//! shares no code with the library beyond plain data types.

#![allow(dead_code)]

use std::collections::BTreeSet;

/// Literal trainer-1 rule: rank the previously selected features by score
/// (ties to the lower index), keep the top `ceil(m / 2 + n)` of them, and flip
/// every hesitant feature among those.
pub fn kbest_oracle(prev: &[bool], initial: &[bool], scores: &[f64]) -> Vec<usize> {
    let participated: Vec<usize> = (0..prev.len()).filter(|&i| prev[i]).collect();
    let assertive: Vec<usize> = participated.iter().copied().filter(|&i| initial[i]).collect();
    let hesitant: Vec<usize> = participated.iter().copied().filter(|&i| !initial[i]).collect();
    if participated.is_empty() || hesitant.is_empty() {
        return Vec::new();
    }
    let m = assertive.len() as f64;
    let n = hesitant.len() as f64;
    let k = ((m / 2.0 + n).ceil() as usize).min(participated.len());
    let mut pool = participated.clone();
    let mut top = BTreeSet::new();
    for _ in 0..k {
        let mut best = 0;
        for j in 1..pool.len() {
            if scores[pool[j]] > scores[pool[best]] {
                best = j;
            }
        }
        top.insert(pool.remove(best));
    }
    hesitant.into_iter().filter(|i| top.contains(i)).collect()
}

/// Literal trainer-2 rule: flip hesitant features whose importance is strictly
/// above the median assertive importance.
pub fn dtree_oracle(prev: &[bool], initial: &[bool], importances: &[f64]) -> Vec<usize> {
    let participated: Vec<usize> = (0..prev.len()).filter(|&i| prev[i]).collect();
    let mut imp_a: Vec<f64> = participated
        .iter()
        .filter(|&&i| initial[i])
        .map(|&i| importances[i])
        .collect();
    let hesitant: Vec<usize> = participated.iter().copied().filter(|&i| !initial[i]).collect();
    if imp_a.is_empty() || hesitant.is_empty() {
        return Vec::new();
    }
    imp_a.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let len = imp_a.len();
    let g = if len % 2 == 1 {
        imp_a[len / 2]
    } else {
        (imp_a[len / 2 - 1] + imp_a[len / 2]) / 2.0
    };
    hesitant.into_iter().filter(|&i| importances[i] > g).collect()
}

/// Exact non-negative rational with `i128` parts.
#[derive(Debug, Clone, Copy)]
pub struct Ratio {
    pub num: i128,
    pub den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Ratio {
    pub fn new(num: i128, den: i128) -> Self {
        let g = gcd(num, den).max(1);
        Ratio { num: num / g, den: den / g }
    }

    pub fn add(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }

    pub fn mul(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.num, self.den * o.den)
    }

    pub fn sub(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }

    pub fn lt(self, o: Ratio) -> bool {
        self.num * o.den < o.num * self.den
    }
}

/// Exact Gini impurity `1 - sum p_k^2` of a set of labels.
pub fn gini_exact(labels: &[usize], n_classes: usize) -> Ratio {
    let n = labels.len() as i128;
    let mut counts = vec![0i128; n_classes];
    for &y in labels {
        counts[y] += 1;
    }
    let sq: i128 = counts.iter().map(|c| c * c).sum();
    Ratio::new(n * n - sq, n * n)
}

/// One node of the oracle tree, stored in preorder.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleNode {
    pub split: Option<(usize, f64, usize, usize)>,
    pub n_samples: usize,
    pub class_counts: Vec<usize>,
    pub gini: f64,
}

pub struct OracleTree {
    pub nodes: Vec<OracleNode>,
    pub importances: Vec<f64>,
}

/// Brute-force CART: at every node try every feature and every midpoint between
/// consecutive distinct values, keep the split with the smallest weighted child
/// impurity (exact arithmetic, first found wins), and split only if that is
/// strictly below the node impurity.
pub fn tree_oracle(columns: &[Vec<f64>], labels: &[usize]) -> OracleTree {
    let n_classes = labels.iter().max().unwrap() + 1;
    let rows: Vec<usize> = (0..labels.len()).collect();
    let mut nodes = Vec::new();
    let mut raw = vec![0.0; columns.len()];
    grow(columns, labels, n_classes, rows, &mut nodes, &mut raw);
    let total: f64 = raw.iter().sum();
    let importances = raw.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect();
    OracleTree { nodes, importances }
}

fn grow(
    columns: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    rows: Vec<usize>,
    nodes: &mut Vec<OracleNode>,
    raw: &mut [f64],
) -> usize {
    let ys: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
    let mut class_counts = vec![0; n_classes];
    for &y in &ys {
        class_counts[y] += 1;
    }
    let g = gini_exact(&ys, n_classes);
    let id = nodes.len();
    nodes.push(OracleNode {
        split: None,
        n_samples: rows.len(),
        class_counts,
        gini: g.num as f64 / g.den as f64,
    });
    if rows.len() < 2 || g.num == 0 {
        return id;
    }
    let n = rows.len() as i128;
    let mut best: Option<(Ratio, usize, f64)> = None;
    for (f, col) in columns.iter().enumerate() {
        let mut values: Vec<f64> = rows.iter().map(|&r| col[r]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for pair in values.windows(2) {
            let mut thr = (pair[0] + pair[1]) / 2.0;
            if thr >= pair[1] {
                thr = pair[0];
            }
            let left: Vec<usize> = rows.iter().filter(|&&r| col[r] <= thr).map(|&r| labels[r]).collect();
            let right: Vec<usize> = rows.iter().filter(|&&r| col[r] > thr).map(|&r| labels[r]).collect();
            let weighted = Ratio::new(left.len() as i128, n)
                .mul(gini_exact(&left, n_classes))
                .add(Ratio::new(right.len() as i128, n).mul(gini_exact(&right, n_classes)));
            if best.as_ref().map_or(true, |b| weighted.lt(b.0)) {
                best = Some((weighted, f, thr));
            }
        }
    }
    let Some((weighted, f, thr)) = best else { return id };
    if !weighted.lt(g) {
        return id;
    }
    let decrease = g.sub(weighted);
    raw[f] += rows.len() as f64 * decrease.num as f64 / decrease.den as f64;
    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| columns[f][r] <= thr);
    let left = grow(columns, labels, n_classes, l, nodes, raw);
    let right = grow(columns, labels, n_classes, r, nodes, raw);
    nodes[id].split = Some((f, thr, left, right));
    id
}

/// Textbook single-pass Pearson formula.
pub fn pearson_closed_form(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Dense form of the tree-augmented convolution:
/// `H' = lambda * A_tree^T H + (1 - lambda) * W^T H`, where `A_tree[u][v]`
/// is `W[u][v]` on tree edges and 0 elsewhere.
pub fn gcn_dense_oracle(w: &[Vec<f64>], tree: &[(usize, usize)], h: &[Vec<f64>], lambda: f64) -> Vec<Vec<f64>> {
    let k = w.len();
    let mut a = vec![vec![0.0; k]; k];
    for &(u, v) in tree {
        a[u][v] = w[u][v];
    }
    let mut m = vec![vec![0.0; k]; k];
    for u in 0..k {
        for v in 0..k {
            m[v][u] = lambda * a[u][v] + (1.0 - lambda) * w[u][v];
        }
    }
    let d = h[0].len();
    (0..k)
        .map(|v| (0..d).map(|j| (0..k).map(|u| m[v][u] * h[u][j]).sum()).collect())
        .collect()
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference(x: &mut [f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + step;
            let up = f(x);
            x[i] = orig - step;
            let down = f(x);
            x[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Greedy max-relevance min-redundancy recomputed from scratch at each step:
/// every remaining candidate is scored against the full picked set.
pub fn mrmr_oracle(relevance: &[f64], pair_mi: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = relevance.len();
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < k.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for f in 0..n {
            if picked.contains(&f) {
                continue;
            }
            let score = if picked.is_empty() {
                relevance[f]
            } else {
                let mut red = 0.0;
                for &s in &picked {
                    red += pair_mi[f][s];
                }
                relevance[f] - red / picked.len() as f64
            };
            if best.map_or(true, |(_, b)| score > b) {
                best = Some((f, score));
            }
        }
        picked.push(best.unwrap().0);
    }
    picked
}

/// All `2^n` action vectors over `n` features.
pub fn all_action_vectors(n: usize) -> Vec<Vec<bool>> {
    (0..1u32 << n)
        .map(|bits| (0..n).map(|i| bits >> i & 1 == 1).collect())
        .collect()
}
