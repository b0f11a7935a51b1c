//! From-scratch learning kernels shared by the trainers, the reward and the
//! state encoder.

mod info;
mod tree;

pub use info::{
    bin_equal_width, discrete_mutual_information, mi_scores, mutual_information,
    mutual_information_between, select_kbest, top_k, DEFAULT_MI_BINS,
};
pub use tree::{accuracy, fit_tree, fit_tree_presorted, presort, DecisionTreeModel, SplitRule, TreeNode, TreeParams};

use thiserror::Error;

use crate::dataio::{DataError, Dataset};

#[derive(Debug, Error)]
pub enum MlError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {min} values, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("at least 2 bins required, got {0}")]
    TooFewBins(usize),
    #[error("tree needs at least one feature column")]
    NoFeatures,
    #[error("tree needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("model expects {expected} feature columns, got {found}")]
    ColumnMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Pearson correlation with population moments. Returns 0 when either input is
/// constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MlError> {
    if x.len() != y.len() {
        return Err(MlError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(MlError::TooShort { min: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pairwise Pearson correlations of every feature over the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn from_dataset(dataset: &Dataset) -> Result<Self, MlError> {
        let train = dataset.train()?;
        let columns: Vec<&[f64]> = (0..dataset.n_features()).map(|j| train.column(j)).collect();
        Self::from_columns(&columns)
    }

    /// Correlations between the given columns; the diagonal is fixed at 1.
    pub fn from_columns(columns: &[&[f64]]) -> Result<Self, MlError> {
        let n = columns.len();
        let mut values = vec![0.0; n * n];
        for u in 0..n {
            values[u * n + u] = 1.0;
            for v in u + 1..n {
                let r = pearson(columns[u], columns[v])?;
                values[u * n + v] = r;
                values[v * n + u] = r;
            }
        }
        Ok(CorrelationMatrix { n, values })
    }

    pub fn n_features(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[u * self.n + v]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        assert_abs_diff_eq!(pearson(&[1., 2., 3.], &[1., 2., 3.]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(&[1., 2., 3.], &[3., 2., 1.]).unwrap(), -1.0, epsilon = 1e-15);
        // cov = 1, sigma_x * sigma_y = 1.25
        assert_abs_diff_eq!(
            pearson(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap(),
            0.8,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pearson_degenerate_and_errors() {
        assert_eq!(pearson(&[1., 1., 1.], &[1., 2., 3.]).unwrap(), 0.0);
        assert!(matches!(pearson(&[1., 2.], &[1.]), Err(MlError::LengthMismatch { .. })));
        assert!(matches!(pearson(&[1.], &[1.]), Err(MlError::TooShort { .. })));
    }

    proptest! {
        #[test]
        fn pearson_properties(
            pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..40),
            scale in 0.01f64..50.0,
            shift in -20.0f64..20.0,
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let r = pearson(&x, &y).unwrap();
            prop_assert!(r.abs() <= 1.0 + 1e-12);
            prop_assert!((r - pearson(&y, &x).unwrap()).abs() < 1e-12);
            let xs: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            prop_assert!((r - pearson(&xs, &y).unwrap()).abs() < 1e-9);
        }
    }
}
