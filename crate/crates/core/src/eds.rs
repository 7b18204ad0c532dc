//! First-order derivatives of the eigenpairs of `X Xᵀ`.
//!
//! For a simple eigenpair `(λ_i, y_i)` and a single entry `X_ab`:
//!
//! ```text
//! ∂λ_i/∂X_ab = y_iᵀ K y_i
//! ∂y_i/∂X_ab = -(X Xᵀ - λ_i I)⁺ K y_i,     K = J_ab Xᵀ + X J_abᵀ
//! ```

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::subspace::{eigen_xxt, normalize_signs};
use crate::{Error, RealMatrix, Result};

/// Smallest eigenvalue gap accepted before derivatives are refused.
pub const MIN_GAP: f64 = 1e-8;

/// Derivatives of one eigenpair with respect to one entry of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigDerivative {
    pub d_eigvec: DVector<f64>,
    pub d_eigval: f64,
}

/// `J_ab Xᵀ + X J_abᵀ`, the derivative of `X Xᵀ` with respect to `X_ab`.
pub fn dxxt_dx(x: &RealMatrix, a: usize, b: usize) -> Result<RealMatrix> {
    check_index(x, a, b)?;
    let n = x.nrows();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        k[(a, j)] += x[(j, b)];
        k[(j, a)] += x[(j, b)];
    }
    Ok(k)
}

/// Derivatives of the `i`-th eigenpair (descending order) of `X Xᵀ`.
pub fn eig_derivative(x: &RealMatrix, i: usize, a: usize, b: usize) -> Result<EigDerivative> {
    check_index(x, a, b)?;
    let full = FullEigen::new(x);
    if i >= full.values.len() {
        return Err(Error::Index(format!("eigenpair {i} of {}", full.values.len())));
    }
    full.check_gap(i)?;
    Ok(full.derivative(x, i, a, b))
}

/// Largest relative error between [`eig_derivative`] and central
/// differences with the given step, over all entries of `X`.
///
/// Errors are measured per entry `(a, b)` as `|an - fd| / max(|an|, |fd|, floor)`
/// for the eigenvalue and with the max-norm for the eigenvector, where
/// `floor` is `1e-3` times the largest analytic derivative magnitude.
pub fn fd_check_eig(x: &RealMatrix, i: usize, step: f64) -> Result<f64> {
    let (n, c) = x.shape();
    let full = FullEigen::new(x);
    if i >= full.values.len() {
        return Err(Error::Index(format!("eigenpair {i} of {}", full.values.len())));
    }
    full.check_gap(i)?;
    let yi = full.vectors.column(i).clone_owned();
    let anchor = yi.iamax();

    let mut pairs = Vec::with_capacity(n * c);
    for a in 0..n {
        for b in 0..c {
            let an = full.derivative(x, i, a, b);
            let eig_at = |h: f64| {
                let mut xp = x.clone();
                xp[(a, b)] += h;
                let e = FullEigen::new(&xp);
                let mut v = e.vectors.column(i).clone_owned();
                if v[anchor].signum() != yi[anchor].signum() {
                    v.neg_mut();
                }
                (e.values[i], v)
            };
            let (lp, vp) = eig_at(step);
            let (lm, vm) = eig_at(-step);
            let fd = EigDerivative {
                d_eigval: (lp - lm) / (2.0 * step),
                d_eigvec: (vp - vm) / (2.0 * step),
            };
            pairs.push((an, fd));
        }
    }
    let val_scale = pairs.iter().map(|(a, _)| a.d_eigval.abs()).fold(0.0, f64::max);
    let vec_scale = pairs.iter().map(|(a, _)| a.d_eigvec.amax()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for (an, fd) in &pairs {
        let den = an.d_eigval.abs().max(fd.d_eigval.abs()).max(1e-3 * val_scale);
        if den > 0.0 {
            worst = worst.max((an.d_eigval - fd.d_eigval).abs() / den);
        }
        let den = an.d_eigvec.amax().max(fd.d_eigvec.amax()).max(1e-3 * vec_scale);
        if den > 0.0 {
            worst = worst.max((&an.d_eigvec - &fd.d_eigvec).amax() / den);
        }
    }
    Ok(worst)
}

/// Thin eigensystem of `F Fᵀ` for an `N × r` matrix `F`.
///
/// Holds the `r` leading eigenpairs and applies `(F Fᵀ - λ_l I)⁺` without
/// forming `N × N` matrices: on the complement of the stored eigenvectors
/// `F Fᵀ` vanishes, so the pseudoinverse acts there as `-1/λ_l`.
#[derive(Debug, Clone)]
pub struct SpectralSystem {
    vectors: RealMatrix,
    values: Vec<f64>,
}

impl SpectralSystem {
    pub fn new(f: &RealMatrix) -> Self {
        let (mut vectors, values) = eigen_xxt(f);
        let r = f.ncols().min(f.nrows());
        vectors = vectors.columns(0, r).clone_owned();
        normalize_signs(&mut vectors);
        Self {
            vectors,
            values: values[..r].to_vec(),
        }
    }

    /// Builds the system from already computed eigenpairs.
    pub fn from_parts(vectors: RealMatrix, values: Vec<f64>) -> Self {
        Self { vectors, values }
    }

    pub fn vectors(&self) -> &RealMatrix {
        &self.vectors
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fails when eigenvalue `l` is within [`MIN_GAP`] of another stored
    /// eigenvalue or of the zero eigenvalue of the complement.
    pub fn check_gap(&self, l: usize) -> Result<()> {
        let lam = self.values[l];
        let mut gap = if self.vectors.nrows() > self.values.len() {
            lam.abs()
        } else {
            f64::INFINITY
        };
        for (j, &v) in self.values.iter().enumerate() {
            if j != l {
                gap = gap.min((v - lam).abs());
            }
        }
        if gap <= MIN_GAP {
            return Err(Error::Degenerate { index: l, gap });
        }
        Ok(())
    }

    /// `(F Fᵀ - λ_l I)⁺ G` applied column by column to the `l`-th column of
    /// `g`, for every `l`. Returns an `N × r` matrix.
    pub fn pinv_columns(&self, g: &RealMatrix) -> RealMatrix {
        let y = &self.vectors;
        let r = self.values.len();
        let yg = y.transpose() * g;
        let resid = g - y * &yg;
        let mut out = DMatrix::zeros(g.nrows(), r);
        for l in 0..r {
            let lam = self.values[l];
            let mut coef = DVector::zeros(r);
            for j in 0..r {
                if j != l {
                    coef[j] = yg[(j, l)] / (self.values[j] - lam);
                }
            }
            let mut col = y * coef;
            if lam != 0.0 {
                col.axpy(-1.0 / lam, &resid.column(l), 1.0);
            }
            out.set_column(l, &col);
        }
        out
    }
}

/// Full `N × N` eigendecomposition, descending, sign-normalised.
struct FullEigen {
    vectors: RealMatrix,
    values: Vec<f64>,
}

impl FullEigen {
    fn new(x: &RealMatrix) -> Self {
        let n = x.nrows();
        let eig = SymmetricEigen::new(x * x.transpose());
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let mut vectors = DMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, idx[k])]);
        normalize_signs(&mut vectors);
        let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        Self { vectors, values }
    }

    fn check_gap(&self, i: usize) -> Result<()> {
        let lam = self.values[i];
        let gap = self
            .values
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| (v - lam).abs())
            .fold(f64::INFINITY, f64::min);
        if gap <= MIN_GAP {
            return Err(Error::Degenerate { index: i, gap });
        }
        Ok(())
    }

    /// Pseudoinverse of `X Xᵀ - λ_i I` with cutoff `1e-10 λ_max`.
    fn pinv(&self, i: usize) -> RealMatrix {
        let n = self.values.len();
        let lmax = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cut = 1e-10 * lmax;
        let mut p = DMatrix::zeros(n, n);
        for j in 0..n {
            let d = self.values[j] - self.values[i];
            if d.abs() > cut {
                let v = self.vectors.column(j);
                p += (v * v.transpose()) / d;
            }
        }
        p
    }

    fn derivative(&self, x: &RealMatrix, i: usize, a: usize, b: usize) -> EigDerivative {
        let k = dxxt_dx(x, a, b).expect("index checked");
        let y = self.vectors.column(i);
        let ky = &k * y;
        EigDerivative {
            d_eigval: y.dot(&ky),
            d_eigvec: -(self.pinv(i) * ky),
        }
    }
}

fn check_index(x: &RealMatrix, a: usize, b: usize) -> Result<()> {
    if a >= x.nrows() || b >= x.ncols() {
        return Err(Error::Index(format!(
            "entry ({a}, {b}) of a {}x{} matrix",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(())
}
