//! Dataset ingestion, sampling, permutation and the task registry.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::mlkit::Labels;
use crate::subspace::rank_tol;
use crate::{derive_seed, Error, RealMatrix, Result};

/// A feature matrix with optional `±1` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDomain {
    pub name: String,
    pub x: RealMatrix,
    pub y: Option<Labels>,
}

impl LabeledDomain {
    pub fn new(name: impl Into<String>, x: RealMatrix, y: Option<Labels>) -> Result<Self> {
        if let Some(y) = &y {
            if y.len() != x.nrows() {
                return Err(Error::Dimension(format!(
                    "{} labels for {} rows",
                    y.len(),
                    x.nrows()
                )));
            }
            if y.iter().any(|&v| v != 1 && v != -1) {
                return Err(Error::Invalid("labels must be -1 or +1".into()));
            }
        }
        Ok(Self {
            name: name.into(),
            x,
            y,
        })
    }

    pub fn labels(&self) -> Result<&Labels> {
        self.y
            .as_ref()
            .ok_or_else(|| Error::Invalid(format!("domain {} has no labels", self.name)))
    }

    pub fn count(&self, label: i8) -> usize {
        self.y
            .as_ref()
            .map_or(0, |y| y.iter().filter(|&&v| v == label).count())
    }

    /// Fraction of `+1` labels.
    pub fn positive_fraction(&self) -> Result<f64> {
        let y = self.labels()?;
        Ok(self.count(1) as f64 / y.len() as f64)
    }
}

/// Column selector by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// How to read a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvOptions {
    pub header: bool,
    pub label: Option<ColumnRef>,
    /// Raw label cell to `±1`.
    pub label_map: Vec<(String, i8)>,
    /// Columns ignored entirely, such as identifiers.
    pub skip: Vec<ColumnRef>,
    /// Cell values that mark a missing entry; rows containing one are dropped.
    pub missing: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            header: true,
            label: None,
            label_map: Vec::new(),
            skip: Vec::new(),
            missing: vec!["?".into(), "NA".into(), String::new()],
        }
    }
}

/// A loaded file together with the number of dropped rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub domain: LabeledDomain,
    pub dropped: usize,
}

/// Reads a numeric CSV file.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Loaded> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.header)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = if opts.header {
        reader.headers()?.iter().map(str::to_string).collect()
    } else {
        Vec::new()
    };
    let resolve = |c: &ColumnRef| -> Result<usize> {
        match c {
            ColumnRef::Index(i) => Ok(*i),
            ColumnRef::Name(n) => headers.iter().position(|h| h == n).ok_or_else(|| {
                Error::Invalid(format!("{}: no column named {n:?}", path.display()))
            }),
        }
    };
    let label = opts.label.as_ref().map(&resolve).transpose()?;
    let skip = opts.skip.iter().map(&resolve).collect::<Result<Vec<_>>>()?;

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    let mut dropped = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        // 1-based line in the file, header included
        let row = rec.position().map_or(i + 1, |p| p.line() as usize);
        let cols = rec.len();
        if let Some(l) = label {
            if l >= cols {
                return Err(Error::Invalid(format!(
                    "{}: label column {l} missing on row {row}",
                    path.display()
                )));
            }
        }
        if rec.iter().any(|c| opts.missing.iter().any(|m| m == c)) {
            dropped += 1;
            continue;
        }
        let mut values = Vec::with_capacity(cols);
        for (j, cell) in rec.iter().enumerate() {
            if Some(j) == label || skip.contains(&j) {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row,
                column: headers.get(j).cloned().unwrap_or_else(|| j.to_string()),
                message: format!("non-numeric cell {cell:?}"),
            })?;
            values.push(v);
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: String::from("*"),
                    message: format!("expected {w} feature cells, found {}", values.len()),
                })
            }
            _ => {}
        }
        if let Some(l) = label {
            let raw = &rec[l];
            let mapped = if opts.label_map.is_empty() {
                raw.parse::<i8>().ok().filter(|v| *v == 1 || *v == -1)
            } else {
                opts.label_map.iter().find(|(k, _)| k == raw).map(|(_, v)| *v)
            };
            labels.push(mapped.ok_or_else(|| Error::Label {
                path: path.to_path_buf(),
                row,
                value: raw.to_string(),
            })?);
        }
        data.extend(values);
    }
    let cols = width.unwrap_or(0);
    let rows = if cols == 0 { 0 } else { data.len() / cols };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let x = DMatrix::from_row_slice(rows, cols, &data);
    let domain = LabeledDomain::new(name, x, label.map(|_| labels))?;
    Ok(Loaded { domain, dropped })
}

/// How many singular directions [`svd_reduce_text`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumRule {
    /// `⌈fraction · rank⌉` directions.
    #[default]
    Count,
    /// The fewest directions holding `fraction` of the squared spectrum.
    Energy,
}

/// Projects rows onto the top right singular directions, keeping half of
/// the nonzero spectrum by count.
pub fn svd_reduce_text(x: &RealMatrix, fraction: f64) -> Result<RealMatrix> {
    svd_reduce(x, fraction, SpectrumRule::Count)
}

/// Projects rows onto the leading right singular directions of `x`.
/// Returns `X V_k = U_k Σ_k`, computed from the smaller Gram matrix.
pub fn svd_reduce(x: &RealMatrix, fraction: f64, rule: SpectrumRule) -> Result<RealMatrix> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Invalid(format!("fraction {fraction} outside (0, 1]")));
    }
    let (n, d) = x.shape();
    let wide = n <= d;
    let gram = if wide { x * x.transpose() } else { x.transpose() * x };
    let eig = SymmetricEigen::new(gram);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let tol = rank_tol(n, d, vals.first().copied().unwrap_or(0.0));
    let rank = vals.iter().filter(|&&v| v > tol).count().max(1);
    let k = match rule {
        SpectrumRule::Count => ((fraction * rank as f64).ceil() as usize).clamp(1, rank),
        SpectrumRule::Energy => {
            let total: f64 = vals[..rank].iter().sum();
            let mut acc = 0.0;
            let mut k = rank;
            for (i, v) in vals[..rank].iter().enumerate() {
                acc += v;
                if acc >= fraction * total * (1.0 - 1e-12) {
                    k = i + 1;
                    break;
                }
            }
            k
        }
    };
    let mut out = DMatrix::zeros(n, k);
    for c in 0..k {
        let v = eig.eigenvectors.column(idx[c]);
        if wide {
            // left singular vector u scaled by σ
            out.set_column(c, &(v * vals[c].sqrt()));
        } else {
            out.set_column(c, &(x * v));
        }
    }
    Ok(out)
}

/// Draws `n/2` instances of each class without replacement.
pub fn sample_unbiased(d: &LabeledDomain, n: usize, seed: u64) -> Result<LabeledDomain> {
    let y = d.labels()?;
    if n == 0 || n % 2 != 0 {
        return Err(Error::Invalid(format!("balanced sample size {n} must be even and positive")));
    }
    let half = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(n);
    for class in [1i8, -1] {
        let members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if members.len() < half {
            return Err(Error::Invalid(format!(
                "{}: class {class} has {} members, {half} requested",
                d.name,
                members.len()
            )));
        }
        let pick = rand::seq::index::sample(&mut rng, members.len(), half);
        chosen.extend(pick.into_iter().map(|i| members[i]));
    }
    chosen.shuffle(&mut rng);
    LabeledDomain::new(
        d.name.clone(),
        d.x.select_rows(&chosen),
        Some(chosen.iter().map(|&i| y[i]).collect()),
    )
}

/// Independently shuffles rows (with their labels) and columns.
pub fn permute(d: &LabeledDomain, seed: u64) -> LabeledDomain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = (0..d.x.nrows()).collect();
    let mut cols: Vec<usize> = (0..d.x.ncols()).collect();
    rows.shuffle(&mut rng);
    cols.shuffle(&mut rng);
    LabeledDomain {
        name: d.name.clone(),
        x: d.x.select_rows(&rows).select_columns(&cols),
        y: d.y.as_ref().map(|y| rows.iter().map(|&i| y[i]).collect()),
    }
}

/// Application area of a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Credit,
    Text,
    Cancer,
}

/// One transfer task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskSpec {
    pub code: &'static str,
    pub field: Field,
    pub source: &'static str,
    pub target: &'static str,
    /// Meaning of the labels, `"-"` when not stated.
    pub labels: &'static str,
    pub source_key: &'static str,
    pub target_key: &'static str,
}

const GERMAN: &str = "German Credit Data";
const AUSTRALIAN: &str = "Australian Credit Approval";
const ORGS_PEOPLE: &str = "OrgsPeople";
const ORGS_PLACES: &str = "OrgsPlaces";
const PEOPLE_PLACES: &str = "PeoplePlaces";
const CO: &str = "Breast Cancer Wisconsin (Original)";
const CD: &str = "Breast Cancer Wisconsin (Diagnostic)";

/// The ten transfer tasks in their canonical order.
pub fn task_registry() -> Vec<TaskSpec> {
    let t = |code, field, source, target, labels, source_key, target_key| TaskSpec {
        code,
        field,
        source,
        target,
        labels,
        source_key,
        target_key,
    };
    use Field::*;
    vec![
        t("G2A", Credit, GERMAN, AUSTRALIAN, "1: Good", "german", "australian"),
        t("A2G", Credit, AUSTRALIAN, GERMAN, "1: Good", "australian", "german"),
        t("Ope2Opl", Text, ORGS_PEOPLE, ORGS_PLACES, "1: Orgs", "orgs_people", "orgs_places"),
        t("Opl2Ope", Text, ORGS_PLACES, ORGS_PEOPLE, "1: Orgs", "orgs_places", "orgs_people"),
        t("Opl2Ppl", Text, ORGS_PLACES, PEOPLE_PLACES, "-1: Places", "orgs_places", "people_places"),
        t("Ppl2Opl", Text, PEOPLE_PLACES, ORGS_PLACES, "-1: Places", "people_places", "orgs_places"),
        t("Ppl2Ope", Text, PEOPLE_PLACES, ORGS_PEOPLE, "-", "people_places", "orgs_people"),
        t("Ope2Ppl", Text, ORGS_PEOPLE, PEOPLE_PLACES, "-", "orgs_people", "people_places"),
        t("CO2CD", Cancer, CO, CD, "1: Malignant", "co", "cd"),
        t("CD2CO", Cancer, CD, CO, "1: Malignant", "cd", "co"),
    ]
}

/// Looks a task up by code, case-insensitively.
pub fn find_task(code: &str) -> Result<TaskSpec> {
    task_registry()
        .into_iter()
        .find(|t| t.code.eq_ignore_ascii_case(code))
        .ok_or_else(|| Error::Invalid(format!("unknown task {code:?}")))
}

/// One file of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DataFile {
    pub file: &'static str,
    /// Pinned SHA-256; `None` when no canonical copy is known.
    pub sha256: Option<&'static str>,
}

/// A dataset: its files (merged in order), layout and expected shape.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSpec {
    pub key: &'static str,
    pub name: &'static str,
    pub files: Vec<DataFile>,
    pub label: &'static str,
    pub label_map: Vec<(&'static str, i8)>,
    pub skip: Vec<&'static str>,
    /// Rows and features after missing-value removal.
    pub shape: (usize, usize),
    /// Text matrices are reduced with [`svd_reduce_text`] after loading.
    pub text: bool,
}

impl DatasetSpec {
    fn options(&self) -> CsvOptions {
        CsvOptions {
            label: Some(ColumnRef::Name(self.label.into())),
            label_map: self
                .label_map
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            skip: self.skip.iter().map(|s| ColumnRef::Name(s.to_string())).collect(),
            ..CsvOptions::default()
        }
    }
}

/// Datasets referenced by the task registry.
///
/// The cancer datasets encode benign as `+1`, which makes the all-ones
/// baseline score the benign fraction of the target (65.01% on CO, 62.74%
/// on CD) as in the published baseline table.
pub fn dataset_registry() -> Vec<DatasetSpec> {
    let file = |file, sha256| DataFile { file, sha256 };
    let text = |key, name, halves: [&'static str; 2], rows, cols| DatasetSpec {
        key,
        name,
        files: halves.iter().map(|&f| file(f, None)).collect(),
        label: "label",
        label_map: vec![("1", 1), ("-1", -1)],
        skip: vec![],
        shape: (rows, cols),
        text: true,
    };
    vec![
        DatasetSpec {
            key: "german",
            name: GERMAN,
            files: vec![file(
                "german.csv",
                Some("198d26bf98cfd65b262ed997bcde8c7e905a3f43f7f6791907dc42c8e66d6289"),
            )],
            label: "label",
            label_map: vec![("1", 1), ("2", -1)],
            skip: vec![],
            shape: (1000, 24),
            text: false,
        },
        DatasetSpec {
            key: "australian",
            name: AUSTRALIAN,
            files: vec![file(
                "australian.csv",
                Some("e22f94e383572053f848d3b39cff18d4e7d26c7613386383965ef8942b31de36"),
            )],
            label: "label",
            label_map: vec![("1", 1), ("0", -1)],
            skip: vec![],
            shape: (690, 14),
            text: false,
        },
        text(
            "orgs_people",
            ORGS_PEOPLE,
            ["orgs_people_src.csv", "orgs_people_tar.csv"],
            1237 + 1208,
            4771,
        ),
        text(
            "orgs_places",
            ORGS_PLACES,
            ["orgs_places_src.csv", "orgs_places_tar.csv"],
            1016 + 1043,
            4415,
        ),
        text(
            "people_places",
            PEOPLE_PLACES,
            ["people_places_src.csv", "people_places_tar.csv"],
            1077 + 1077,
            4562,
        ),
        DatasetSpec {
            key: "co",
            name: CO,
            files: vec![file(
                "breast_cancer_original.csv",
                Some("028af8cfcd063ef1bc2ea80728935a8d7b66f8947a8623e99e22019617eb7aa9"),
            )],
            label: "class",
            label_map: vec![("2", 1), ("4", -1)],
            skip: vec!["id"],
            shape: (683, 9),
            text: false,
        },
        DatasetSpec {
            key: "cd",
            name: CD,
            files: vec![file(
                "breast_cancer_diagnostic.csv",
                Some("85ccf4c1e5ec3108e00295ade644cdfb50406597893197f21cdd15a34af23470"),
            )],
            label: "diagnosis",
            label_map: vec![("B", 1), ("M", -1)],
            skip: vec![],
            shape: (569, 30),
            text: false,
        },
    ]
}

pub fn find_dataset(key: &str) -> Result<DatasetSpec> {
    dataset_registry()
        .into_iter()
        .find(|d| d.key == key)
        .ok_or_else(|| Error::Invalid(format!("unknown dataset {key:?}")))
}

/// Hex SHA-256 of a file.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Verification outcome for one dataset file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileStatus {
    pub dataset: &'static str,
    pub path: PathBuf,
    pub state: FileState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum FileState {
    Missing,
    Ok { sha256: String },
    Unpinned { sha256: String },
    Mismatch { expected: String, found: String },
}

/// Checks every registered file under `dir`.
pub fn verify_datasets(dir: impl AsRef<Path>) -> Result<Vec<FileStatus>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for spec in dataset_registry() {
        for f in &spec.files {
            let path = dir.join(f.file);
            let state = if !path.exists() {
                FileState::Missing
            } else {
                let found = sha256_file(&path)?;
                match f.sha256 {
                    Some(e) if e == found => FileState::Ok { sha256: found },
                    Some(e) => FileState::Mismatch {
                        expected: e.to_string(),
                        found,
                    },
                    None => FileState::Unpinned { sha256: found },
                }
            };
            out.push(FileStatus {
                dataset: spec.key,
                path,
                state,
            });
        }
    }
    Ok(out)
}

/// Loads, checksum-verifies and shape-checks a registered dataset. Text
/// datasets merge their halves and are reduced by [`svd_reduce_text`].
pub fn load_dataset(dir: impl AsRef<Path>, key: &str) -> Result<LabeledDomain> {
    let spec = find_dataset(key)?;
    let dir = dir.as_ref();
    let mut parts = Vec::new();
    for f in &spec.files {
        let path = dir.join(f.file);
        if !path.exists() {
            return Err(Error::MissingData(format!(
                "{} not found in {}",
                f.file,
                dir.display()
            )));
        }
        if let Some(expected) = f.sha256 {
            let found = sha256_file(&path)?;
            if found != expected {
                return Err(Error::Checksum {
                    path,
                    expected: expected.to_string(),
                    found,
                });
            }
        }
        parts.push(load_csv(&path, &spec.options())?.domain);
    }
    let cols = parts[0].x.ncols();
    if parts.iter().any(|p| p.x.ncols() != cols) {
        return Err(Error::Dimension(format!("{}: parts differ in width", spec.key)));
    }
    let rows: usize = parts.iter().map(|p| p.x.nrows()).sum();
    let mut x = DMatrix::zeros(rows, cols);
    let mut y = Vec::with_capacity(rows);
    let mut at = 0;
    for p in &parts {
        x.rows_mut(at, p.x.nrows()).copy_from(&p.x);
        at += p.x.nrows();
        y.extend(p.labels()?.iter().copied());
    }
    if (rows, cols) != spec.shape {
        return Err(Error::Dimension(format!(
            "{}: expected {:?}, loaded {:?}",
            spec.key,
            spec.shape,
            (rows, cols)
        )));
    }
    if spec.text {
        x = svd_reduce_text(&x, 0.5)?;
    }
    LabeledDomain::new(spec.name, x, Some(y))
}

/// Per-run sampling used by the benchmark: credit domains are reduced to
/// 600 balanced instances, text domains to `min(1500, 2 · smallest class)`
/// balanced instances, cancer domains are kept whole.
pub fn benchmark_sample(d: &LabeledDomain, field: Field, seed: u64) -> Result<LabeledDomain> {
    let seed = derive_seed(seed, 0x5a);
    match field {
        Field::Credit => sample_unbiased(d, 600, seed),
        Field::Text => {
            let n = 1500.min(2 * d.count(1).min(d.count(-1)));
            sample_unbiased(d, n - n % 2, seed)
        }
        Field::Cancer => Ok(d.clone()),
    }
}
