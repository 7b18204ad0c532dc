//! Preprocessing, classification and two-sample statistics.

mod kmeans;
mod mmd;
mod svm;

pub use kmeans::{kmeans2, KMeans2};
pub use mmd::{mmd2_statistic, mmd2_test, rbf_kernel_matrix, MmdResult};
pub use svm::{svm_predict, svm_train, SvmModel, SvmParams};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, RealMatrix, Result};

/// Class labels, each `-1` or `+1`.
pub type Labels = Vec<i8>;

/// Centers every column and scales it to unit sample standard deviation.
/// Constant columns become zero.
pub fn zscore(x: &RealMatrix) -> RealMatrix {
    let n = x.nrows();
    let mut out = x.clone();
    if n < 2 {
        out.fill(0.0);
        return out;
    }
    for mut col in out.column_iter_mut() {
        let mean = col.mean();
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if sd <= 1e-12 * mean.abs().max(1.0) {
            col.fill(0.0);
        } else {
            col.apply(|v| *v = (*v - mean) / sd);
        }
    }
    out
}

/// Fraction of positions where `pred` equals `truth`.
pub fn accuracy(pred: &[i8], truth: &[i8]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Stratified `k`-fold accuracy of the default SVM; returns mean and
/// sample standard deviation over folds.
pub fn kfold_accuracy(x: &RealMatrix, y: &[i8], k: usize, seed: u64) -> Result<(f64, f64)> {
    if y.len() != x.nrows() {
        return Err(Error::Dimension("labels do not match rows".into()));
    }
    if k < 2 {
        return Err(Error::Invalid("k must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0usize; y.len()];
    for class in [1i8, -1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if idx.len() < k {
            return Err(Error::Invalid(format!(
                "class {class} has {} members, fewer than {k} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    let mut accs = Vec::with_capacity(k);
    for f in 0..k {
        let train: Vec<usize> = (0..y.len()).filter(|&i| fold[i] != f).collect();
        let test: Vec<usize> = (0..y.len()).filter(|&i| fold[i] == f).collect();
        let ytr: Labels = train.iter().map(|&i| y[i]).collect();
        let yte: Labels = test.iter().map(|&i| y[i]).collect();
        let model = svm_train(&x.select_rows(&train), &ytr, &SvmParams::default())?;
        let pred = svm_predict(&model, &x.select_rows(&test))?;
        accs.push(accuracy(&pred, &yte)?);
    }
    Ok(mean_std(&accs))
}
