//! Geodesic flow kernel between two domains of equal dimension `r`.
//!
//! Each domain contributes a `d`-dimensional principal subspace. The kernel
//! `G = ∫₀¹ Φ(t) Φ(t)ᵀ dt` integrates projections onto the subspaces along
//! the geodesic joining them on the Grassmannian; it has a closed form in
//! the principal angles `θ_i` between the two subspaces.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::subspace::{normalize_signs, sorted_svd};
use crate::{Error, RealMatrix, Result};

/// Below this angle the closed-form weights switch to their series.
const SMALL_ANGLE: f64 = 1e-4;

/// Symmetric positive semidefinite `r × r` kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct GfkKernel {
    g: RealMatrix,
    subspace_dim: usize,
}

impl GfkKernel {
    pub fn matrix(&self) -> &RealMatrix {
        &self.g
    }

    pub fn subspace_dim(&self) -> usize {
        self.subspace_dim
    }

    /// `xᵀ G y`.
    pub fn value(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.g * y))
    }
}

/// Default subspace dimension `max(1, ⌊r/2⌋)`.
pub fn default_dim(r: usize) -> usize {
    (r / 2).max(1)
}

/// Principal directions of the rows of `x`, as an orthonormal `r × r`
/// matrix with columns sorted by decreasing variance.
pub fn principal_components(x: &RealMatrix) -> Result<RealMatrix> {
    let (n, r) = x.shape();
    if n < 2 {
        return Err(Error::Dimension("principal components need two rows".into()));
    }
    let mean = x.row_mean();
    let mut c = x.clone();
    for mut row in c.row_iter_mut() {
        row -= &mean;
    }
    let cov = c.transpose() * &c / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut idx: Vec<usize> = (0..r).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut p = DMatrix::from_fn(r, r, |row, k| eig.eigenvectors[(row, idx[k])]);
    normalize_signs(&mut p);
    Ok(p)
}

/// The `(Λ1, Λ2, Λ3)` weights for principal angle `θ`.
pub fn angle_weights(theta: f64) -> (f64, f64, f64) {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        (
            1.0 - t2 / 3.0 + t2 * t2 / 15.0,
            -theta / 2.0 + theta * t2 / 6.0,
            t2 / 3.0 - t2 * t2 / 15.0,
        )
    } else {
        let s = (2.0 * theta).sin() / (2.0 * theta);
        (
            0.5 * (1.0 + s),
            0.5 * ((2.0 * theta).cos() - 1.0) / (2.0 * theta),
            0.5 * (1.0 - s),
        )
    }
}

/// Closed-form geodesic flow kernel between the `d`-dimensional principal
/// subspaces of two zscored domains.
pub fn gfk_kernel(xs: &RealMatrix, xt: &RealMatrix, d: usize) -> Result<GfkKernel> {
    let r = xs.ncols();
    if xt.ncols() != r {
        return Err(Error::Dimension(format!(
            "domains have {} and {} columns",
            r,
            xt.ncols()
        )));
    }
    if d == 0 || 2 * d > r {
        return Err(Error::Invalid(format!(
            "subspace dimension {d} must lie in 1..={}",
            r / 2
        )));
    }
    let qs = principal_components(xs)?;
    let qt = principal_components(xt)?;
    let ps = qs.columns(0, d);
    let rs = qs.columns(d, r - d);
    let pt = qt.columns(0, d);

    let (u1, gamma, v) = sorted_svd(&(ps.transpose() * pt));
    let b = rs.transpose() * pt * &v;
    let mut u2 = DMatrix::zeros(r - d, d);
    let mut w = [DMatrix::zeros(d, d), DMatrix::zeros(d, d), DMatrix::zeros(d, d)];
    for i in 0..d {
        let theta = gamma[i].clamp(-1.0, 1.0).acos();
        let sin = theta.sin();
        if sin > 1e-12 {
            u2.set_column(i, &(-b.column(i) / sin));
        }
        let (l1, l2, l3) = angle_weights(theta);
        w[0][(i, i)] = l1;
        w[1][(i, i)] = l2;
        w[2][(i, i)] = l3;
    }
    let a = ps * u1;
    let c = rs * u2;
    let g = &a * &w[0] * a.transpose()
        + &a * &w[1] * c.transpose()
        + &c * &w[1] * a.transpose()
        + &c * &w[2] * c.transpose();
    let g = (&g + g.transpose()) * 0.5;
    Ok(GfkKernel { g, subspace_dim: d })
}

/// `X L` with `L` the symmetric square root of `G`, so that embedded rows
/// have inner products `xᵀ G y`.
pub fn gfk_embed(x: &RealMatrix, kern: &GfkKernel) -> Result<RealMatrix> {
    let r = kern.g.nrows();
    if x.ncols() != r {
        return Err(Error::Dimension(format!(
            "matrix has {} columns, kernel is {r}x{r}",
            x.ncols()
        )));
    }
    let eig = SymmetricEigen::new(kern.g.clone());
    let min = eig.eigenvalues.min();
    if min < -1e-8 {
        return Err(Error::Invalid(format!(
            "kernel is not positive semidefinite (eigenvalue {min:.3e})"
        )));
    }
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let l = &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose();
    Ok(x * l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_are_continuous_at_the_switch() {
        let below = angle_weights(SMALL_ANGLE * (1.0 - 1e-9));
        let above = angle_weights(SMALL_ANGLE * (1.0 + 1e-9));
        assert!((below.0 - above.0).abs() < 1e-12);
        assert!((below.1 - above.1).abs() < 1e-12);
        assert!((below.2 - above.2).abs() < 1e-12);
        assert_eq!(angle_weights(0.0), (1.0, 0.0, 0.0));
    }

    #[test]
    fn identity_kernel_embeds_unchanged() {
        let k = GfkKernel {
            g: DMatrix::identity(3, 3),
            subspace_dim: 1,
        };
        let x = DMatrix::from_fn(4, 3, |r, c| (r as f64) - 2.0 * c as f64);
        assert!((gfk_embed(&x, &k).unwrap() - &x).amax() < 1e-12);
    }

    #[test]
    fn dimension_guards() {
        let x = DMatrix::from_fn(6, 3, |r, c| ((r * 7 + c * 3) % 5) as f64);
        assert!(gfk_kernel(&x, &x, 2).is_err());
        assert!(gfk_kernel(&x, &x, 0).is_err());
        assert!(gfk_kernel(&x, &DMatrix::zeros(6, 4), 1).is_err());
    }
}
