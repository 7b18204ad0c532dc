use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Labels;
use crate::RealMatrix;

const MAX_ITER: usize = 300;

/// Two-cluster Lloyd result with a random cluster-to-label assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans2 {
    pub assignment: Vec<usize>,
    pub labels: Labels,
    /// Within-cluster sum of squares after each assignment step.
    pub objective: Vec<f64>,
}

/// k-means with `k = 2`, seeded from two distinct random rows.
pub fn kmeans2(x: &RealMatrix, seed: u64) -> KMeans2 {
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flip = rng.random::<bool>();
    let first = rng.random_range(0..n.max(1));
    let distinct: Vec<usize> = (0..n).filter(|&i| x.row(i) != x.row(first)).collect();
    if distinct.is_empty() {
        let label = if flip { -1 } else { 1 };
        return KMeans2 {
            assignment: vec![0; n],
            labels: vec![label; n],
            objective: vec![0.0],
        };
    }
    let second = distinct[rng.random_range(0..distinct.len())];
    let mut centers = [x.row(first).clone_owned(), x.row(second).clone_owned()];
    let mut assignment = vec![usize::MAX; n];
    let mut objective = Vec::new();

    for _ in 0..MAX_ITER {
        let mut changed = false;
        let mut wss = 0.0;
        for i in 0..n {
            let d0 = (x.row(i) - &centers[0]).norm_squared();
            let d1 = (x.row(i) - &centers[1]).norm_squared();
            let c = usize::from(d1 < d0);
            wss += d0.min(d1);
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
        }
        objective.push(wss);
        if !changed {
            break;
        }
        for c in 0..2 {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            if members.is_empty() {
                // restart the empty cluster at the point farthest from the other
                let other = &centers[1 - c];
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = (x.row(a) - other).norm_squared();
                        let db = (x.row(b) - other).norm_squared();
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("non-empty input");
                centers[c] = x.row(far).clone_owned();
            } else {
                centers[c] = x.select_rows(&members).row_mean();
            }
        }
    }
    let map = if flip { [-1, 1] } else { [1, -1] };
    KMeans2 {
        labels: assignment.iter().map(|&c| map[c]).collect(),
        assignment,
        objective,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn blobs() -> RealMatrix {
        DMatrix::from_fn(20, 2, |r, c| {
            let base = if r < 10 { 0.0 } else { 50.0 };
            base + ((r * 7 + c * 3) % 5) as f64 * 0.1
        })
    }

    #[test]
    fn separates_blobs() {
        let k = kmeans2(&blobs(), 4);
        let a = k.assignment[0];
        assert!(k.assignment[..10].iter().all(|&c| c == a));
        assert!(k.assignment[10..].iter().all(|&c| c != a));
    }

    #[test]
    fn deterministic_and_monotone() {
        let x = DMatrix::from_fn(30, 3, |r, c| ((r * 17 + c * 5) % 13) as f64);
        let a = kmeans2(&x, 9);
        assert_eq!(a, kmeans2(&x, 9));
        assert!(a.objective.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn both_label_maps_occur() {
        let x = blobs();
        let first: Vec<i8> = (0..40).map(|s| kmeans2(&x, s).labels[0]).collect();
        assert!(first.contains(&1) && first.contains(&-1));
    }
}
