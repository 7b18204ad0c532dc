#![allow(dead_code)]

use glg::RealMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> RealMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        // Box-Muller keeps the oracle side free of the library's samplers.
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let v: f64 = rng.random();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    })
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> RealMatrix {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Cyclic Jacobi eigensolver for symmetric matrices, descending order.
pub fn jacobi_eigen(a: &RealMatrix) -> (Vec<f64>, RealMatrix) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 * a.norm_squared().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let vals = idx.iter().map(|&i| a[(i, i)]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| v[(r, idx[c])]);
    (vals, vecs)
}

/// Orthonormal basis of the column space by modified Gram-Schmidt.
pub fn gram_schmidt(x: &RealMatrix) -> RealMatrix {
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for j in 0..x.ncols() {
        let mut v = x.column(j).clone_owned();
        for _ in 0..2 {
            for q in &cols {
                let d = q.dot(&v);
                v -= q * d;
            }
        }
        let n = v.norm();
        if n > 1e-10 {
            cols.push(v / n);
        }
    }
    DMatrix::from_columns(&cols)
}

/// Singular values of `m`, descending, from the Jacobi solver on the
/// smaller Gram matrix.
pub fn singular_values(m: &RealMatrix) -> Vec<f64> {
    let gram = if m.nrows() < m.ncols() { m * m.transpose() } else { m.transpose() * m };
    let (vals, _) = jacobi_eigen(&gram);
    vals.into_iter().map(|v| v.max(0.0).sqrt()).collect()
}

pub fn trapezoid<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, points: usize) -> f64 {
    let h = (hi - lo) / (points - 1) as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for i in 1..points - 1 {
        acc += f(lo + i as f64 * h);
    }
    acc * h
}

pub fn data_dir() -> std::path::PathBuf {
    std::env::var_os("GLG_DATA_DIR")
        .map(Into::into)
        .unwrap_or_else(|| std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}
