use super::MlError;
use crate::dataio::Dataset;

pub const DEFAULT_MI_BINS: usize = 10;

/// Equal-width bin codes over the range of `x`. A constant input maps to bin 0.
pub fn bin_equal_width(x: &[f64], bins: usize) -> Vec<usize> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let width = hi - lo;
    x.iter()
        .map(|&v| {
            if width > 0.0 {
                (((v - lo) / width * bins as f64) as usize).min(bins - 1)
            } else {
                0
            }
        })
        .collect()
}

/// Plug-in mutual information (nats) between two discrete codings.
pub fn discrete_mutual_information(a: &[usize], b: &[usize]) -> Result<f64, MlError> {
    if a.len() != b.len() {
        return Err(MlError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n == 0 {
        return Ok(0.0);
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0usize; ka * kb];
    let mut ca = vec![0usize; ka];
    let mut cb = vec![0usize; kb];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * kb + j] += 1;
        ca[i] += 1;
        cb[j] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let c = joint[i * kb + j];
            if c > 0 {
                let c = c as f64;
                mi += c / nf * (c * nf / (ca[i] as f64 * cb[j] as f64)).ln();
            }
        }
    }
    // rounding can leave a tiny negative on independent inputs
    Ok(mi.max(0.0))
}

/// Mutual information between a real feature, binned into `bins` equal-width
/// bins, and integer labels.
pub fn mutual_information(x: &[f64], y: &[usize], bins: usize) -> Result<f64, MlError> {
    if x.len() != y.len() {
        return Err(MlError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if bins < 2 {
        return Err(MlError::TooFewBins(bins));
    }
    discrete_mutual_information(&bin_equal_width(x, bins), y)
}

/// Mutual information between two real features, both binned.
pub fn mutual_information_between(x: &[f64], y: &[f64], bins: usize) -> Result<f64, MlError> {
    if x.len() != y.len() {
        return Err(MlError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if bins < 2 {
        return Err(MlError::TooFewBins(bins));
    }
    discrete_mutual_information(&bin_equal_width(x, bins), &bin_equal_width(y, bins))
}

/// Label relevance of every feature on the training split.
pub fn mi_scores(dataset: &Dataset, bins: usize) -> Result<Vec<f64>, MlError> {
    let train = dataset.train()?;
    (0..dataset.n_features())
        .map(|j| mutual_information(train.column(j), train.labels(), bins))
        .collect()
}

/// Top `k` candidates by score, ties broken toward the lower feature index.
/// The result is sorted by feature index.
pub fn top_k(candidates: &[usize], scores: &[f64], k: usize) -> Vec<usize> {
    let mut ranked: Vec<usize> = candidates.to_vec();
    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    ranked.truncate(k);
    ranked.sort_unstable();
    ranked
}

/// KBest selection among `candidates` scored by binned mutual information with
/// the label on the training split.
pub fn select_kbest(dataset: &Dataset, candidates: &[usize], k: usize) -> Result<Vec<usize>, MlError> {
    let train = dataset.train()?;
    let mut scores = vec![0.0; dataset.n_features()];
    for &c in candidates {
        dataset.check_feature(c)?;
        scores[c] = mutual_information(train.column(c), train.labels(), DEFAULT_MI_BINS)?;
    }
    Ok(top_k(candidates, &scores, k))
}
