use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::svm::cross_kernel;
use crate::{Error, RealMatrix, Result};

/// Outcome of a permutation two-sample test.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdResult {
    /// Unbiased MMD² estimate.
    pub statistic: f64,
    /// `(1 - alpha)` quantile of the permutation distribution.
    pub threshold: f64,
    pub p_value: f64,
    /// True when the null of equal distributions is not rejected.
    pub same_distribution: bool,
}

/// RBF kernel matrix of the rows of `x`.
pub fn rbf_kernel_matrix(x: &RealMatrix, gamma: f64) -> RealMatrix {
    cross_kernel(x, x, gamma)
}

/// Unbiased MMD² between `x` and `y` with an RBF kernel.
pub fn mmd2_statistic(x: &RealMatrix, y: &RealMatrix, gamma: f64) -> Result<f64> {
    check(x, y)?;
    let pooled = stack(x, y);
    let k = rbf_kernel_matrix(&pooled, gamma);
    let member: Vec<bool> = (0..pooled.nrows()).map(|i| i < x.nrows()).collect();
    Ok(statistic(&k, &member, x.nrows()))
}

/// Permutation test of `x` and `y` coming from one distribution.
///
/// The two samples are put in a canonical order before pooling, so the
/// verdict does not depend on argument order.
pub fn mmd2_test(
    x: &RealMatrix,
    y: &RealMatrix,
    gamma: f64,
    permutations: usize,
    alpha: f64,
    seed: u64,
) -> Result<MmdResult> {
    check(x, y)?;
    let (x, y) = if canonical_cmp(x, y) == Ordering::Greater {
        (y, x)
    } else {
        (x, y)
    };
    let pooled = stack(x, y);
    let k = rbf_kernel_matrix(&pooled, gamma);
    let total = pooled.nrows();
    let m = x.nrows();
    let mut member: Vec<bool> = (0..total).map(|i| i < m).collect();
    let observed = statistic(&k, &member, m);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut null = Vec::with_capacity(permutations);
    for _ in 0..permutations {
        member.shuffle(&mut rng);
        null.push(statistic(&k, &member, m));
    }
    null.sort_by(f64::total_cmp);
    let exceed = null.iter().filter(|&&v| v >= observed).count();
    let p_value = (1 + exceed) as f64 / (1 + permutations) as f64;
    let threshold = if null.is_empty() {
        f64::INFINITY
    } else {
        let pos = ((1.0 - alpha) * null.len() as f64).ceil() as usize;
        null[pos.clamp(1, null.len()) - 1]
    };
    Ok(MmdResult {
        statistic: observed,
        threshold,
        p_value,
        same_distribution: p_value > alpha,
    })
}

fn statistic(k: &RealMatrix, member: &[bool], m: usize) -> f64 {
    let n = member.len() - m;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for i in 0..member.len() {
        for j in 0..member.len() {
            let v = k[(i, j)];
            match (member[i], member[j]) {
                (true, true) if i != j => sxx += v,
                (false, false) if i != j => syy += v,
                (true, false) => sxy += v,
                _ => {}
            }
        }
    }
    let (m, n) = (m as f64, n as f64);
    sxx / (m * (m - 1.0)) + syy / (n * (n - 1.0)) - 2.0 * sxy / (m * n)
}

fn check(x: &RealMatrix, y: &RealMatrix) -> Result<()> {
    if x.nrows() < 2 || y.nrows() < 2 {
        return Err(Error::Dimension("each sample needs at least two rows".into()));
    }
    if x.ncols() != y.ncols() {
        return Err(Error::Dimension(format!(
            "samples have {} and {} columns",
            x.ncols(),
            y.ncols()
        )));
    }
    Ok(())
}

fn stack(x: &RealMatrix, y: &RealMatrix) -> RealMatrix {
    let mut out = RealMatrix::zeros(x.nrows() + y.nrows(), x.ncols());
    out.rows_mut(0, x.nrows()).copy_from(x);
    out.rows_mut(x.nrows(), y.nrows()).copy_from(y);
    out
}

fn canonical_cmp(x: &RealMatrix, y: &RealMatrix) -> Ordering {
    x.nrows().cmp(&y.nrows()).then_with(|| {
        for (a, b) in x.transpose().iter().zip(y.transpose().iter()) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    })
}
