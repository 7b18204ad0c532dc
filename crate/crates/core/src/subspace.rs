//! Spanned subspaces, principal cosines and the pair metric.
//!
//! A subspace of `R^N` is stored as an `N × k` matrix with orthonormal
//! columns: the top `k` eigenvectors of `X Xᵀ`. The cosines of the principal
//! angles between two such subspaces are the singular values of `Aᵀ B`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, RealMatrix, Result};

/// Orthonormal basis of a subspace of `R^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    basis: RealMatrix,
    eigenvalues: Vec<f64>,
    rank_deficient: bool,
}

impl SubspaceBasis {
    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal(basis: RealMatrix) -> Result<Self> {
        let k = basis.ncols();
        if k == 0 || k > basis.nrows() {
            return Err(Error::Dimension(format!(
                "a basis needs 1 <= k <= N columns, got {}x{}",
                basis.nrows(),
                k
            )));
        }
        let gram = basis.transpose() * &basis;
        let err = (gram - DMatrix::identity(k, k)).amax();
        if err > 1e-8 {
            return Err(Error::Invalid(format!(
                "columns are not orthonormal (max |BᵀB - I| = {err:.3e})"
            )));
        }
        Ok(Self {
            basis,
            eigenvalues: vec![1.0; k],
            rank_deficient: false,
        })
    }

    pub fn basis(&self) -> &RealMatrix {
        &self.basis
    }

    pub fn into_matrix(self) -> RealMatrix {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Eigenvalues of `X Xᵀ` paired with the basis columns, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// True when `X` had numerical rank below the requested dimension and
    /// the basis was completed from the zero eigenspace.
    pub fn rank_deficient(&self) -> bool {
        self.rank_deficient
    }
}

/// Cosines of principal angles, in `[0, 1]` and non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceVector(Vec<f64>);

impl DistanceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Invalid(format!("cosine {v} outside [0, 1]")));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Invalid("cosines must be non-increasing".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Top `dim` eigenvectors of `X Xᵀ`, sign-normalised.
///
/// When `N` exceeds the column count the eigenpairs are read off a thin QR
/// of `X` followed by an SVD of the triangular factor, which yields the same
/// eigenpairs without forming the `N × N` product.
pub fn span_basis(x: &RealMatrix, dim: usize) -> Result<SubspaceBasis> {
    let n = x.nrows();
    if dim == 0 || dim > n {
        return Err(Error::Dimension(format!(
            "cannot span {dim} dimensions in R^{n}"
        )));
    }
    check_finite(x, "span_basis input")?;
    let (vecs, vals) = eigen_xxt(x);
    let lmax = vals.first().copied().unwrap_or(0.0);
    let tol = rank_tol(n, x.ncols(), lmax);
    let rank = vals.iter().take(dim).filter(|&&l| l > tol).count();

    let mut basis = DMatrix::zeros(n, dim);
    for j in 0..rank {
        basis.set_column(j, &vecs.column(j));
    }
    let mut eigenvalues: Vec<f64> = vals.iter().take(rank).copied().collect();
    let rank_deficient = rank < dim;
    if rank_deficient {
        complete_basis(&mut basis, rank);
        eigenvalues.resize(dim, 0.0);
    }
    normalize_signs(&mut basis);
    Ok(SubspaceBasis {
        basis,
        eigenvalues,
        rank_deficient,
    })
}

/// Singular values of `Aᵀ B`, descending, clamped into `[0, 1]`.
pub fn principal_cosines(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<DistanceVector> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::Dimension(format!(
            "subspaces live in R^{} and R^{}",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    let m = a.basis.transpose() * &b.basis;
    Ok(DistanceVector(cosines_of(&m)))
}

/// Principal cosines between `span(Xs)` and `span(Xt)`.
pub fn domain_distance(xs: &RealMatrix, xt: &RealMatrix) -> Result<DistanceVector> {
    if xs.nrows() != xt.nrows() {
        return Err(Error::Dimension(format!(
            "domains have {} and {} rows",
            xs.nrows(),
            xt.nrows()
        )));
    }
    let a = span_basis(xs, xs.ncols().min(xs.nrows()))?;
    let b = span_basis(xt, xt.ncols().min(xt.nrows()))?;
    principal_cosines(&a, &b)
}

/// ℓ1 distance between two cosine vectors.
pub fn pair_metric(d1: &DistanceVector, d2: &DistanceVector) -> Result<f64> {
    if d1.len() != d2.len() {
        return Err(Error::Dimension(format!(
            "distance vectors have lengths {} and {}",
            d1.len(),
            d2.len()
        )));
    }
    Ok(d1.0.iter().zip(&d2.0).map(|(a, b)| (a - b).abs()).sum())
}

/// Sorted, clamped singular values of a small matrix.
pub(crate) fn cosines_of(m: &RealMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m
        .clone()
        .singular_values()
        .iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Eigenvalues of a Gram matrix at or below this are treated as zero.
pub(crate) fn rank_tol(rows: usize, cols: usize, lmax: f64) -> f64 {
    lmax.max(0.0) * rows.max(cols) as f64 * f64::EPSILON
}

/// Eigenpairs of `X Xᵀ` with nonnegative eigenvalues, descending.
/// Returns at most `min(N, cols)` pairs.
pub(crate) fn eigen_xxt(x: &RealMatrix) -> (RealMatrix, Vec<f64>) {
    let (n, c) = x.shape();
    if n <= c {
        let eig = SymmetricEigen::new(x * x.transpose());
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let vecs = DMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, idx[k])]);
        let vals = idx.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        return (vecs, vals);
    }
    let qr = x.clone().qr();
    let q = qr.q();
    let (u, s, _) = sorted_svd(&qr.r());
    (q * u, s.iter().map(|v| v * v).collect())
}

/// Thin SVD with singular values sorted in descending order.
pub(crate) fn sorted_svd(m: &RealMatrix) -> (RealMatrix, Vec<f64>, RealMatrix) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    let k = svd.singular_values.len();
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let us = DMatrix::from_fn(u.nrows(), k, |r, c| u[(r, idx[c])]);
    let vs = DMatrix::from_fn(vt.ncols(), k, |r, c| vt[(idx[c], r)]);
    (us, s, vs)
}

/// Makes the first entry of largest magnitude in every column positive.
pub(crate) fn normalize_signs(m: &mut RealMatrix) {
    for mut col in m.column_iter_mut() {
        let mut best = 0usize;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Fills columns `from..` with an orthonormal completion built by
/// Gram-Schmidt over the standard basis.
fn complete_basis(basis: &mut RealMatrix, from: usize) {
    let (n, k) = basis.shape();
    let mut filled = from;
    let mut e = 0;
    while filled < k && e < n {
        let mut v = DVector::zeros(n);
        v[e] = 1.0;
        for _ in 0..2 {
            for j in 0..filled {
                let c = basis.column(j);
                let p = c.dot(&v);
                v.axpy(-p, &c, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.set_column(filled, &(v / norm));
            filled += 1;
        }
        e += 1;
    }
}

pub(crate) fn check_finite(x: &RealMatrix, what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
