mod common;

use common::*;
use glg::mlkit::{
    accuracy, kfold_accuracy, kmeans2, mean_std, mmd2_statistic, mmd2_test, svm_predict, svm_train, zscore, SvmParams,
};
use glg::RealMatrix;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn rbf(x: &RealMatrix, gamma: f64) -> RealMatrix {
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| (-gamma * (x.row(i) - x.row(j)).norm_squared()).exp())
}

fn q_matrix(x: &RealMatrix, y: &[i8], gamma: f64) -> RealMatrix {
    let k = rbf(x, gamma);
    DMatrix::from_fn(y.len(), y.len(), |i, j| y[i] as f64 * y[j] as f64 * k[(i, j)])
}

fn dual(q: &RealMatrix, a: &DVector<f64>) -> f64 {
    0.5 * a.dot(&(q * a)) - a.sum()
}

/// Exhaustive active-set search: every coordinate at 0, at C or free.
fn brute_force_dual(q: &RealMatrix, y: &[i8], c: f64) -> (f64, DVector<f64>) {
    let n = y.len();
    let mut best = (f64::INFINITY, DVector::zeros(n));
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut a = DVector::from_fn(n, |i, _| if state[i] == 1 { c } else { 0.0 });
        if !free.is_empty() {
            let f = free.len();
            let mut sys = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    sys[(r, s)] = q[(i, j)];
                }
                sys[(r, f)] = y[i] as f64;
                sys[(f, r)] = y[i] as f64;
                rhs[r] = 1.0 - (0..n).filter(|&j| state[j] != 2).map(|j| q[(i, j)] * a[j]).sum::<f64>();
            }
            rhs[f] = -(0..n).filter(|&j| state[j] != 2).map(|j| y[j] as f64 * a[j]).sum::<f64>();
            let Some(sol) = sys.lu().solve(&rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r];
            }
        }
        let eq: f64 = (0..n).map(|i| y[i] as f64 * a[i]).sum();
        if eq.abs() > 1e-9 || a.iter().any(|&v| v < -1e-12 || v > c + 1e-12) {
            continue;
        }
        let obj = dual(q, &a);
        if obj < best.0 {
            best = (obj, a);
        }
    }
    best
}

/// Projection onto `{0 ≤ α ≤ C, yᵀα = 0}` by bisection on the multiplier.
fn project(z: &DVector<f64>, y: &[i8], c: f64) -> DVector<f64> {
    let at = |mu: f64| DVector::from_fn(z.len(), |i, _| (z[i] - mu * y[i] as f64).clamp(0.0, c));
    let residual = |a: &DVector<f64>| (0..z.len()).map(|i| y[i] as f64 * a[i]).sum::<f64>();
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient on the dual.
fn projected_gradient_dual(q: &RealMatrix, y: &[i8], c: f64) -> (f64, DVector<f64>) {
    let n = y.len();
    let (vals, _) = jacobi_eigen(q);
    let step = 1.0 / vals[0];
    let mut a = DVector::zeros(n);
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let grad = q * &z - DVector::from_element(n, 1.0);
        let next = project(&(&z - grad * step), y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &next + (&next - &a) * ((t - 1.0) / t_next);
        if dual(q, &next) > dual(q, &a) {
            z = next.clone();
            t = 1.0;
        } else {
            t = t_next;
        }
        a = next;
    }
    (dual(q, &a), a)
}

#[test]
fn xor_matches_exhaustive_dual() {
    let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
    let y = [-1, -1, 1, 1];
    let model = svm_train(&x, &y, &SvmParams::default()).unwrap();
    assert_eq!(svm_predict(&model, &x).unwrap(), y.to_vec());
    let (obj, alpha) = brute_force_dual(&q_matrix(&x, &y, 0.5), &y, 1.0);
    assert!((model.objective() - obj).abs() < 1e-6);
    for (a, b) in model.alpha().iter().zip(alpha.iter()) {
        assert!((a - b).abs() < 1e-3);
    }
}

fn random_problem(g: &mut rand_chacha::ChaCha8Rng, n: usize) -> (RealMatrix, Vec<i8>) {
    let x = gaussian(g, n, 3);
    let y: Vec<i8> = (0..n)
        .map(|i| {
            let s = x[(i, 0)] + 0.5 * x[(i, 1)] * x[(i, 2)] + 0.4 * g.random_range(-1.0..1.0);
            if s > 0.0 { 1 } else { -1 }
        })
        .collect();
    (x, y)
}

#[test]
fn objective_matches_projected_gradient_oracle() {
    let mut g = rng(51);
    let mut done = 0;
    while done < 20 {
        let (x, y) = random_problem(&mut g, 30);
        if !(y.contains(&1) && y.contains(&-1)) {
            continue;
        }
        done += 1;
        let model = svm_train(&x, &y, &SvmParams::default()).unwrap();
        let gamma = 1.0 / 3.0;
        assert_eq!(model.gamma(), gamma);
        let q = q_matrix(&x, &y, gamma);
        let (obj, alpha) = projected_gradient_dual(&q, &y, 1.0);
        assert!((model.objective() - obj).abs() <= 1e-4, "{} vs {obj}", model.objective());

        // predictions of the oracle solution away from the boundary
        let k = rbf(&x, gamma);
        let f: Vec<f64> = (0..30).map(|i| (0..30).map(|j| alpha[j] * y[j] as f64 * k[(i, j)]).sum()).collect();
        let free: Vec<usize> = (0..30).filter(|&i| alpha[i] > 1e-6 && alpha[i] < 1.0 - 1e-6).collect();
        if free.is_empty() {
            continue;
        }
        let rho = free.iter().map(|&i| f[i] - y[i] as f64).sum::<f64>() / free.len() as f64;
        let test = gaussian(&mut g, 50, 3);
        let ours = model.decision_values(&test).unwrap();
        for (i, row) in test.row_iter().enumerate() {
            let val: f64 = (0..30)
                .map(|j| alpha[j] * y[j] as f64 * (-gamma * (x.row(j) - row).norm_squared()).exp())
                .sum::<f64>()
                - rho;
            if val.abs() > 0.05 {
                assert_eq!(val > 0.0, ours[i] > 0.0);
            }
        }
    }
}

#[test]
fn dual_feasibility_at_convergence() {
    let mut g = rng(52);
    for _ in 0..10 {
        let (x, y) = random_problem(&mut g, 60);
        if !(y.contains(&1) && y.contains(&-1)) {
            continue;
        }
        let model = svm_train(&x, &y, &SvmParams::default()).unwrap();
        let eq: f64 = model.alpha().iter().zip(&y).map(|(a, &l)| a * l as f64).sum();
        assert!(eq.abs() <= 1e-6);
        assert!(model.alpha().iter().all(|&a| (-1e-12..=1.0 + 1e-12).contains(&a)));
    }
}

#[test]
fn separable_pair() {
    let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 10.0, 0.0]);
    let model = svm_train(&x, &[-1, 1], &SvmParams::default()).unwrap();
    assert_eq!(svm_predict(&model, &x).unwrap(), vec![-1, 1]);
}

#[test]
fn kmeans_separates_blobs_deterministically() {
    let mut g = rng(53);
    let mut x = gaussian(&mut g, 40, 2) * 0.3;
    for i in 20..40 {
        x[(i, 0)] += 8.0;
    }
    let a = kmeans2(&x, 5);
    assert!(a.assignment[..20].iter().all(|&c| c == a.assignment[0]));
    assert!(a.assignment[20..].iter().all(|&c| c == a.assignment[20]));
    assert_ne!(a.assignment[0], a.assignment[20]);
    assert_eq!(a, kmeans2(&x, 5));
    assert!(a.objective.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let flips: std::collections::BTreeSet<i8> = (0..32).map(|s| kmeans2(&x, s).labels[0]).collect();
    assert_eq!(flips.len(), 2);
}

#[test]
fn kfold_on_separable_data() {
    let mut g = rng(54);
    let mut x = gaussian(&mut g, 50, 2) * 0.2;
    let y: Vec<i8> = (0..50).map(|i| if i < 25 { -1 } else { 1 }).collect();
    for i in 25..50 {
        x[(i, 1)] += 5.0;
    }
    let (avg, std) = kfold_accuracy(&x, &y, 5, 1).unwrap();
    assert_eq!((avg, std), (1.0, 0.0));
    assert_eq!(kfold_accuracy(&x, &y, 5, 1).unwrap(), kfold_accuracy(&x, &y, 5, 1).unwrap());
}

#[test]
fn mmd_verdicts() {
    let mut g = rng(55);
    let x = gaussian(&mut g, 200, 2);
    let same = mmd2_test(&x, &x, 0.5, 1000, 0.05, 1).unwrap();
    assert!(same.statistic <= 1e-12);
    assert!(same.same_distribution);

    let y = gaussian(&mut g, 200, 2).add_scalar(10.0);
    let far = mmd2_test(&x, &y, 0.5, 1000, 0.05, 1).unwrap();
    assert!(!far.same_distribution);

    let small_x = gaussian(&mut g, 40, 2);
    let small_y = gaussian(&mut g, 50, 2).add_scalar(0.3);
    let ab = mmd2_test(&small_x, &small_y, 0.5, 300, 0.05, 2).unwrap();
    let ba = mmd2_test(&small_y, &small_x, 0.5, 300, 0.05, 2).unwrap();
    assert_eq!(ab.same_distribution, ba.same_distribution);
    assert!((ab.statistic - ba.statistic).abs() < 1e-12);

    let mut shuffled = small_x.clone();
    shuffled.swap_rows(0, 17);
    shuffled.swap_rows(3, 39);
    let s1 = mmd2_statistic(&small_x, &small_y, 0.5).unwrap();
    let s2 = mmd2_statistic(&shuffled, &small_y, 0.5).unwrap();
    assert!((s1 - s2).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn accuracy_of_complement_sums_to_one(labels in prop::collection::vec(prop::bool::ANY, 1..50), truth_bits in prop::collection::vec(prop::bool::ANY, 50)) {
        let pred: Vec<i8> = labels.iter().map(|&b| if b { 1 } else { -1 }).collect();
        let truth: Vec<i8> = truth_bits[..pred.len()].iter().map(|&b| if b { 1 } else { -1 }).collect();
        let neg: Vec<i8> = pred.iter().map(|v| -v).collect();
        let s = accuracy(&pred, &truth).unwrap() + accuracy(&neg, &truth).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zscore_standardizes(seed in any::<u64>(), rows in 2usize..30, cols in 1usize..6) {
        let x = uniform(&mut rng(seed), rows, cols, -5.0, 20.0);
        let z = zscore(&x);
        for c in z.column_iter() {
            let vals: Vec<f64> = c.iter().copied().collect();
            let (m, s) = mean_std(&vals);
            prop_assert!(m.abs() <= 1e-10);
            prop_assert!((s - 1.0).abs() <= 1e-10);
        }
    }
}
