mod common;

use common::*;
use glg::datasets::{
    dataset_registry, find_task, load_csv, load_dataset, permute, sample_unbiased, svd_reduce, svd_reduce_text,
    task_registry, verify_datasets, ColumnRef, CsvOptions, FileState, LabeledDomain, SpectrumRule,
};
use glg::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn reduction_discards_exactly_the_tail_energy() {
    let mut g = rng(61);
    for (rows, cols) in [(12, 7), (6, 10), (9, 9)] {
        let x = gaussian(&mut g, rows, cols);
        let sv = singular_values(&x);
        let rank = sv.iter().filter(|&&s| s > 1e-9 * sv[0]).count();
        for fraction in [0.2, 0.5, 0.8] {
            let red = svd_reduce_text(&x, fraction).unwrap();
            let k = (fraction * rank as f64).ceil() as usize;
            assert_eq!(red.ncols(), k, "{rows}x{cols} at {fraction}, rank {rank}");
            let tail: f64 = sv[k..].iter().map(|s| s * s).sum();
            let lost = x.norm_squared() - red.norm_squared();
            assert!((lost - tail).abs() <= 1e-8 * x.norm_squared(), "{lost} vs {tail}");
        }
    }
}

#[test]
fn full_fraction_preserves_inner_products() {
    let x = gaussian(&mut rng(62), 8, 5);
    let red = svd_reduce_text(&x, 1.0).unwrap();
    assert!((&x * x.transpose() - &red * red.transpose()).amax() < 1e-8);
}

#[test]
fn energy_rule_keeps_requested_share() {
    let x = gaussian(&mut rng(63), 15, 6);
    let red = svd_reduce(&x, 0.9, SpectrumRule::Energy).unwrap();
    let sv = singular_values(&x);
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let kept: f64 = sv[..red.ncols()].iter().map(|s| s * s).sum();
    let short: f64 = sv[..red.ncols() - 1].iter().map(|s| s * s).sum();
    assert!(kept >= 0.9 * total * (1.0 - 1e-9) && short < 0.9 * total);
}

#[test]
fn csv_errors_name_the_cell() {
    let dir = std::env::temp_dir().join(format!("glg-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.csv");
    std::fs::write(&path, "a,b,label\n1,2,yes\n3,x,no\n").unwrap();
    let opts = CsvOptions {
        header: true,
        label: Some(ColumnRef::Name("label".into())),
        label_map: vec![("yes".into(), 1), ("no".into(), -1)],
        ..CsvOptions::default()
    };
    match load_csv(&path, &opts) {
        Err(Error::Parse { row, column, .. }) => {
            assert_eq!(row, 3);
            assert_eq!(column, "b");
        }
        other => panic!("unexpected {other:?}"),
    }
    std::fs::write(&path, "a,b,label\n1,2,yes\n3,?,no\n5,6,maybe\n").unwrap();
    assert!(matches!(load_csv(&path, &opts), Err(Error::Label { .. })));
    std::fs::write(&path, "a,b,label\n1,2,yes\n3,?,no\n5,6,no\n").unwrap();
    let loaded = load_csv(&path, &opts).unwrap();
    assert_eq!(loaded.dropped, 1);
    assert_eq!(loaded.domain.x.shape(), (2, 2));
    assert_eq!(loaded.domain.labels().unwrap(), &vec![1, -1]);
}

#[test]
fn registry_follows_the_task_table() {
    let codes: Vec<&str> = task_registry().iter().map(|t| t.code).collect();
    assert_eq!(
        codes,
        ["G2A", "A2G", "Ope2Opl", "Opl2Ope", "Opl2Ppl", "Ppl2Opl", "Ppl2Ope", "Ope2Ppl", "CO2CD", "CD2CO"]
    );
    assert_eq!(find_task("cd2co").unwrap().source, "Breast Cancer Wisconsin (Diagnostic)");
    assert_eq!(find_task("G2A").unwrap().labels, "1: Good");
    assert!(find_task("X2Y").is_err());
}

#[test]
fn missing_data_points_to_prepare() {
    let dir = std::env::temp_dir().join("glg-no-data-here");
    let err = load_dataset(&dir, "german").unwrap_err();
    assert!(err.to_string().contains("glg prepare"));
}

#[test]
fn shipped_datasets_match_the_dataset_table() {
    let dir = data_dir();
    let status = verify_datasets(&dir).unwrap();
    if status.iter().any(|s| s.state == FileState::Missing) {
        eprintln!("dataset files not present under {}; shape check skipped", dir.display());
        return;
    }
    for spec in dataset_registry() {
        if spec.text {
            continue;
        }
        let d = load_dataset(&dir, spec.key).unwrap();
        assert_eq!(d.x.shape(), spec.shape, "{}", spec.key);
    }
    let german = load_dataset(&dir, "german").unwrap();
    let s = sample_unbiased(&german, 600, 1).unwrap();
    assert_eq!((s.count(1), s.count(-1)), (300, 300));
}

fn domain(seed: u64, rows: usize, cols: usize, positives: usize) -> LabeledDomain {
    let x = uniform(&mut rng(seed), rows, cols, -3.0, 3.0);
    let y = (0..rows).map(|i| if i < positives { 1 } else { -1 }).collect();
    LabeledDomain::new("p", x, Some(y)).unwrap()
}

fn row_pairs(d: &LabeledDomain) -> Vec<(Vec<u64>, i8)> {
    let y = d.labels().unwrap();
    let mut v: Vec<(Vec<u64>, i8)> = d
        .x
        .row_iter()
        .zip(y)
        .map(|(r, &l)| {
            let mut bits: Vec<u64> = r.iter().map(|v| v.to_bits()).collect();
            bits.sort();
            (bits, l)
        })
        .collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn balanced_samples(seed in any::<u64>(), pos in 3usize..20, neg in 3usize..20, half in 1usize..4) {
        let d = domain(seed, pos + neg, 3, pos);
        let s = sample_unbiased(&d, 2 * half, seed).unwrap();
        prop_assert_eq!(s.labels().unwrap().iter().map(|&v| v as i32).sum::<i32>(), 0);
        prop_assert_eq!(s.x.nrows(), 2 * half);
        prop_assert_eq!(&s, &sample_unbiased(&d, 2 * half, seed).unwrap());
    }

    #[test]
    fn permutation_preserves_rows_and_entries(seed in any::<u64>(), rows in 2usize..15, cols in 1usize..6) {
        let d = domain(seed, rows, cols, rows / 2);
        let p = permute(&d, seed ^ 1);
        let mut a: Vec<u64> = d.x.iter().map(|v| v.to_bits()).collect();
        let mut b: Vec<u64> = p.x.iter().map(|v| v.to_bits()).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
        prop_assert_eq!(row_pairs(&d), row_pairs(&p));
        prop_assert_eq!(&p, &permute(&d, seed ^ 1));
    }
}

#[test]
fn permutation_unsorts_sorted_columns() {
    let x = DMatrix::from_fn(10, 6, |r, c| (r * 6 + c) as f64);
    let d = LabeledDomain::new("s", x, None).unwrap();
    let moved = (0..20u64)
        .filter(|&s| {
            let p = permute(&d, s);
            (0..6).any(|c| p.x[(0, c)] != c as f64)
        })
        .count();
    assert!(moved >= 19);
}
