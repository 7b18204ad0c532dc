//! Linear monotonic maps `x ↦ x Uᵀ` with strictly positive `U`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, RealMatrix, Result};

/// Floor applied to every map entry.
pub const EPS_POS: f64 = 1e-6;

/// The source and target maps, `Us` (`r × m`) and `Ut` (`r × n`).
#[derive(Debug, Clone, PartialEq)]
pub struct LmmPair {
    us: RealMatrix,
    ut: RealMatrix,
}

impl LmmPair {
    /// Checks shapes and the positivity floor.
    pub fn new(us: RealMatrix, ut: RealMatrix) -> Result<Self> {
        let (m, n) = (us.ncols(), ut.ncols());
        let r = m.min(n);
        if us.nrows() != r || ut.nrows() != r || r == 0 {
            return Err(Error::Dimension(format!(
                "maps must be r x m and r x n with r = min(m, n); got {}x{} and {}x{}",
                us.nrows(),
                m,
                ut.nrows(),
                n
            )));
        }
        if let Some(v) = us.iter().chain(ut.iter()).find(|&&v| !(v >= EPS_POS)) {
            return Err(Error::Invalid(format!("map entry {v} below {EPS_POS}")));
        }
        Ok(Self { us, ut })
    }

    /// Identity maps, only meaningful when `m = n`.
    ///
    /// The identity has zero off-diagonal entries, so this pair sits on the
    /// boundary of the positive cone and skips the floor check.
    pub fn identity(m: usize) -> Self {
        Self {
            us: DMatrix::identity(m, m),
            ut: DMatrix::identity(m, m),
        }
    }

    /// Draws both maps with [`random_lmm`].
    pub fn random(m: usize, n: usize, seed: u64) -> Self {
        let r = m.min(n);
        Self {
            us: random_lmm(r, m, seed),
            ut: random_lmm(r, n, seed.wrapping_add(0x9e37_79b9_7f4a_7c15)),
        }
    }

    pub fn us(&self) -> &RealMatrix {
        &self.us
    }

    pub fn ut(&self) -> &RealMatrix {
        &self.ut
    }

    pub fn r(&self) -> usize {
        self.us.nrows()
    }

    pub fn into_parts(self) -> (RealMatrix, RealMatrix) {
        (self.us, self.ut)
    }

    pub(crate) fn from_parts_unchecked(us: RealMatrix, ut: RealMatrix) -> Self {
        Self { us, ut }
    }
}

/// `X Uᵀ`.
pub fn apply_lmm(x: &RealMatrix, u: &RealMatrix) -> Result<RealMatrix> {
    if x.ncols() != u.ncols() {
        return Err(Error::Dimension(format!(
            "X has {} columns but U has {}",
            x.ncols(),
            u.ncols()
        )));
    }
    Ok(x * u.transpose())
}

/// `r × m` matrix with entries uniform on `(EPS_POS, 1]`.
pub fn random_lmm(r: usize, m: usize, seed: u64) -> RealMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(r, m, |_, _| 1.0 - rng.random::<f64>() * (1.0 - EPS_POS))
}

/// Entrywise `max(U_ij, floor)`.
pub fn project_positive(u: &RealMatrix, floor: f64) -> RealMatrix {
    u.map(|v| v.max(floor))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_map() {
        let x = DMatrix::from_fn(4, 3, |r, c| (r * 3 + c) as f64);
        assert_eq!(apply_lmm(&x, &DMatrix::identity(3, 3)).unwrap(), x);
    }

    #[test]
    fn two_point_monotonicity() {
        let u = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let f = apply_lmm(&x, &u).unwrap();
        assert_eq!(f[(0, 0)], 0.0);
        assert_eq!(f[(1, 0)], 2.0);
    }

    #[test]
    fn shape_mismatch() {
        let x = DMatrix::zeros(2, 3);
        assert!(apply_lmm(&x, &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn random_bounds_and_determinism() {
        let u = random_lmm(3, 5, 11);
        assert!(u.iter().all(|&v| v > 0.0 && v <= 1.0 && v >= EPS_POS));
        assert_eq!(u, random_lmm(3, 5, 11));
        assert_ne!(u, random_lmm(3, 5, 12));
    }

    #[test]
    fn projection() {
        let u = DMatrix::from_row_slice(1, 3, &[0.5, -0.5, 2.0]);
        let p = project_positive(&u, EPS_POS);
        assert_eq!(p.as_slice(), &[0.5, EPS_POS, 2.0]);
        assert_eq!(project_positive(&p, EPS_POS), p);
        let q = DMatrix::from_element(2, 2, 0.3);
        assert_eq!(project_positive(&q, EPS_POS), q);
    }

    #[test]
    fn pair_validation() {
        assert!(LmmPair::new(random_lmm(2, 3, 1), random_lmm(2, 2, 2)).is_ok());
        assert!(LmmPair::new(random_lmm(3, 3, 1), random_lmm(3, 2, 2)).is_err());
        let mut bad = random_lmm(2, 3, 1);
        bad[(0, 0)] = 0.0;
        assert!(LmmPair::new(bad, random_lmm(2, 2, 2)).is_err());
    }
}
