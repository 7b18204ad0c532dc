//! Binary C-SVM with an RBF kernel, solved by SMO with second-order
//! working-set selection. The full kernel matrix is cached.

use nalgebra::DVector;

use super::Labels;
use crate::{Error, RealMatrix, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    /// `None` selects `1 / cols`.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    support: RealMatrix,
    coef: Vec<f64>,
    rho: f64,
    gamma: f64,
    c: f64,
    alpha: Vec<f64>,
    objective: f64,
    iterations: usize,
}

impl SvmModel {
    /// Dual variables for every training row.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `½ αᵀQα - Σα` at the solution.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cost(&self) -> f64 {
        self.c
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn n_support(&self) -> usize {
        self.coef.len()
    }

    /// `Σ α_i y_i K(x_i, x) - ρ` for every row of `x`.
    pub fn decision_values(&self, x: &RealMatrix) -> Result<Vec<f64>> {
        if x.ncols() != self.support.ncols() {
            return Err(Error::Dimension(format!(
                "model expects {} columns, got {}",
                self.support.ncols(),
                x.ncols()
            )));
        }
        let k = cross_kernel(x, &self.support, self.gamma);
        let coef = DVector::from_column_slice(&self.coef);
        Ok((k * coef).iter().map(|v| v - self.rho).collect())
    }
}

/// Trains on rows of `x` with labels in `{-1, +1}`.
pub fn svm_train(x: &RealMatrix, y: &[i8], params: &SvmParams) -> Result<SvmModel> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::Dimension(format!("{} labels for {n} rows", y.len())));
    }
    if y.iter().any(|&v| v != 1 && v != -1) {
        return Err(Error::Invalid("labels must be -1 or +1".into()));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(Error::Invalid("training data has a single class".into()));
    }
    let gamma = params.gamma.unwrap_or(1.0 / x.ncols() as f64);
    let c = params.c;
    let k = cross_kernel(x, x, gamma);
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let q = |i: usize, j: usize| yf[i] * yf[j] * k[(i, j)];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iter = 0;
    while iter < params.max_iter {
        // second-order working-set selection
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(alpha[t], yf[t]) && -yf[t] * grad[t] >= gmax {
                gmax = -yf[t] * grad[t];
                i = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            if !low(alpha[t], yf[t]) {
                continue;
            }
            gmax2 = gmax2.max(yf[t] * grad[t]);
            if i == usize::MAX {
                continue;
            }
            let b = gmax + yf[t] * grad[t];
            if b > 0.0 {
                let a = k[(i, i)] + k[(t, t)] - 2.0 * k[(i, t)];
                let a = if a > 0.0 { a } else { TAU };
                let v = -(b * b) / a;
                if v <= obj_min {
                    obj_min = v;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < params.tol || i == usize::MAX || j == usize::MAX {
            break;
        }
        iter += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        if yf[i] != yf[j] {
            let quad = (k[(i, i)] + k[(j, j)] + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            let (mut ni, mut nj) = (ai + delta, aj + delta);
            if diff > 0.0 {
                if nj < 0.0 {
                    nj = 0.0;
                    ni = diff;
                }
            } else if ni < 0.0 {
                ni = 0.0;
                nj = -diff;
            }
            if diff > 0.0 {
                if ni > c {
                    ni = c;
                    nj = c - diff;
                }
            } else if nj > c {
                nj = c;
                ni = c + diff;
            }
            alpha[i] = ni;
            alpha[j] = nj;
        } else {
            let quad = (k[(i, i)] + k[(j, j)] - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            let (mut ni, mut nj) = (ai - delta, aj + delta);
            if sum > c {
                if ni > c {
                    ni = c;
                    nj = sum - c;
                }
            } else if nj < 0.0 {
                nj = 0.0;
                ni = sum;
            }
            if sum > c {
                if nj > c {
                    nj = c;
                    ni = sum - c;
                }
            } else if ni < 0.0 {
                ni = 0.0;
                nj = sum;
            }
            alpha[i] = ni;
            alpha[j] = nj;
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    let rho = {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sum, mut free) = (0.0, 0usize);
        for t in 0..n {
            let yg = yf[t] * grad[t];
            if alpha[t] >= c {
                if yf[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if alpha[t] <= 0.0 {
                if yf[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum += yg;
            }
        }
        if free > 0 {
            sum / free as f64
        } else {
            (ub + lb) / 2.0
        }
    };
    let objective = alpha
        .iter()
        .zip(&grad)
        .map(|(a, g)| a * (g - 1.0))
        .sum::<f64>()
        / 2.0;

    let sv: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(SvmModel {
        support: x.select_rows(&sv),
        coef: sv.iter().map(|&t| alpha[t] * yf[t]).collect(),
        rho,
        gamma,
        c,
        alpha,
        objective,
        iterations: iter,
    })
}

/// Sign of the decision values; zero maps to `+1`.
pub fn svm_predict(model: &SvmModel, x: &RealMatrix) -> Result<Labels> {
    Ok(model
        .decision_values(x)?
        .into_iter()
        .map(|v| if v >= 0.0 { 1 } else { -1 })
        .collect())
}

/// `exp(-γ |a_i - b_j|²)` for all row pairs.
pub(crate) fn cross_kernel(a: &RealMatrix, b: &RealMatrix, gamma: f64) -> RealMatrix {
    let na: Vec<f64> = a.row_iter().map(|r| r.norm_squared()).collect();
    let nb: Vec<f64> = b.row_iter().map(|r| r.norm_squared()).collect();
    let mut k = a * b.transpose();
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            let d = (na[i] + nb[j] - 2.0 * k[(i, j)]).max(0.0);
            k[(i, j)] = (-gamma * d).exp();
        }
    }
    k
}
