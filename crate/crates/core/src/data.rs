//! Multi-view datasets: validation, on-disk format and synthetic generators.
//!
//! Every view is a `d_v × n` matrix whose columns are samples. A dataset
//! directory holds a `manifest.json` plus one headerless CSV per view and
//! optional single-column ground-truth CSVs:
//!
//! ```text
//! dataset/
//!   manifest.json   {"n": 4, "views": [{"file": "view_0.csv", "dim": 3, "name": "color"}],
//!                    "ground_truths": ["truth_0.csv"]}
//!   view_0.csv      3 rows x 4 columns
//!   truth_0.csv     4 rows, one integer label each
//! ```

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{MvmcError, Result};
use crate::linalg::Mat;

pub const MANIFEST_FILE: &str = "manifest.json";

/// `m` feature views of the same `n` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<Mat>,
    names: Vec<String>,
    ground_truths: Vec<Vec<usize>>,
}

impl MultiViewDataset {
    pub fn new(views: Vec<Mat>, ground_truths: Vec<Vec<usize>>) -> Result<Self> {
        let names = (0..views.len()).map(|v| format!("view{v}")).collect();
        Self::with_names(views, names, ground_truths)
    }

    pub fn with_names(
        views: Vec<Mat>,
        names: Vec<String>,
        ground_truths: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(MvmcError::param("a dataset needs at least one view"));
        }
        if names.len() != views.len() {
            return Err(MvmcError::shape(format!(
                "{} names supplied for {} views",
                names.len(),
                views.len()
            )));
        }
        let n = views[0].ncols();
        if n < 2 {
            return Err(MvmcError::shape(format!("need at least 2 samples, got {n}")));
        }
        for (v, x) in views.iter().enumerate() {
            if x.nrows() == 0 {
                return Err(MvmcError::shape(format!("view {v} has no features")));
            }
            if x.ncols() != n {
                return Err(MvmcError::shape(format!(
                    "view {v} ({}) has {} samples, expected {n}",
                    names[v],
                    x.ncols()
                )));
            }
            for j in 0..x.ncols() {
                for i in 0..x.nrows() {
                    if !x[(i, j)].is_finite() {
                        return Err(MvmcError::NonFinite { view: v, row: i, col: j });
                    }
                }
            }
        }
        for (t, truth) in ground_truths.iter().enumerate() {
            validate_labels(truth, n).map_err(|e| {
                MvmcError::shape(format!("ground truth {t}: {e}"))
            })?;
        }
        Ok(MultiViewDataset {
            views,
            names,
            ground_truths,
        })
    }

    pub fn views(&self) -> &[Mat] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &Mat {
        &self.views[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ground_truths(&self) -> &[Vec<usize>] {
        &self.ground_truths
    }

    pub fn n(&self) -> usize {
        self.views[0].ncols()
    }

    pub fn m(&self) -> usize {
        self.views.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(|x| x.nrows()).collect()
    }

    /// `Σ_v (X^v)ᵀ X^v`, the `n × n` sample Gram matrix summed over views.
    pub fn gram_sum(&self) -> Mat {
        let n = self.n();
        self.views
            .iter()
            .fold(Mat::zeros(n, n), |acc, x| acc + x.tr_mul(x))
    }
}

/// Labels must cover a contiguous range starting at 0.
fn validate_labels(labels: &[usize], n: usize) -> std::result::Result<(), String> {
    if labels.len() != n {
        return Err(format!("has {} labels, expected {n}", labels.len()));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(format!("labels are not contiguous, {missing} is unused"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// on-disk format

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewEntry {
    pub file: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub n: usize,
    pub views: Vec<ViewEntry>,
    #[serde(default)]
    pub ground_truths: Vec<String>,
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| MvmcError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| MvmcError::Json {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable value");
    fs::write(path, text + "\n").map_err(|e| MvmcError::io(path, e))
}

fn read_matrix_csv(path: &Path, view_label: &str) -> Result<Mat> {
    let ingest = |message: String| MvmcError::Ingestion {
        view: view_label.to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ingest(format!("cannot open {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ingest(format!("row {r}: {e}")))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field
                    .parse::<f64>()
                    .map_err(|_| ingest(format!("row {r}, column {c}: cannot parse {field:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(ingest(format!(
                    "ragged rows: row {r} has {} fields, row 0 has {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ingest(format!("{} is empty", path.display())));
    }
    let ncols = rows[0].len();
    Ok(Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn write_matrix_csv(path: &Path, x: &Mat) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| MvmcError::io(path, e.into()))?;
    for row in x.row_iter() {
        // `{}` on f64 prints the shortest representation that round-trips
        w.write_record(row.iter().map(|v| format!("{v}")))
            .map_err(|e| MvmcError::io(path, e.into()))?;
    }
    w.flush().map_err(|e| MvmcError::io(path, e))
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| MvmcError::io(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.parse::<usize>().map_err(|_| MvmcError::Ingestion {
                view: path.display().to_string(),
                message: format!("line {i}: {l:?} is not a nonnegative integer label"),
            })
        })
        .collect()
}

pub fn write_labels_csv(path: &Path, labels: &[usize]) -> Result<()> {
    let mut text = String::with_capacity(labels.len() * 3);
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| MvmcError::io(path, e))
}

pub fn write_dense_csv(path: &Path, x: &Mat) -> Result<()> {
    write_matrix_csv(path, x)
}

/// Reads and validates a dataset directory.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<MultiViewDataset> {
    let root = root.as_ref();
    let manifest: DatasetManifest = read_json(&root.join(MANIFEST_FILE))?;
    let mut views = Vec::with_capacity(manifest.views.len());
    let mut names = Vec::with_capacity(manifest.views.len());
    for (v, entry) in manifest.views.iter().enumerate() {
        let name = entry.name.clone().unwrap_or_else(|| format!("view{v}"));
        let label = format!("{v} ({name})");
        let x = read_matrix_csv(&root.join(&entry.file), &label)?;
        if x.nrows() != entry.dim {
            return Err(MvmcError::shape(format!(
                "view {label} has {} rows, manifest says {}",
                x.nrows(),
                entry.dim
            )));
        }
        if x.ncols() != manifest.n {
            return Err(MvmcError::shape(format!(
                "view {label} has {} columns, manifest says n = {}",
                x.ncols(),
                manifest.n
            )));
        }
        views.push(x);
        names.push(name);
    }
    let truths = manifest
        .ground_truths
        .iter()
        .map(|f| read_labels_csv(&root.join(f)))
        .collect::<Result<Vec<_>>>()?;
    MultiViewDataset::with_names(views, names, truths)
}

/// Writes a dataset directory readable by [`load_dataset`].
pub fn save_dataset(ds: &MultiViewDataset, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    fs::create_dir_all(root).map_err(|e| MvmcError::io(root, e))?;
    let mut manifest = DatasetManifest {
        n: ds.n(),
        views: Vec::new(),
        ground_truths: Vec::new(),
    };
    for (v, x) in ds.views().iter().enumerate() {
        let file = format!("view_{v}.csv");
        write_matrix_csv(&root.join(&file), x)?;
        manifest.views.push(ViewEntry {
            file,
            dim: x.nrows(),
            name: Some(ds.names()[v].clone()),
        });
    }
    for (t, truth) in ds.ground_truths().iter().enumerate() {
        let file = format!("truth_{t}.csv");
        write_labels_csv(&root.join(&file), truth)?;
        manifest.ground_truths.push(file);
    }
    write_json(&root.join(MANIFEST_FILE), &manifest)
}

// ---------------------------------------------------------------------------
// synthetic data

/// Parameters of the planted multi-labeling generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub view_dims: Vec<usize>,
    pub num_labelings: usize,
    pub clusters_per_labeling: Vec<usize>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.view_dims.len() != self.m {
            return Err(MvmcError::param(format!(
                "view_dims has {} entries for m = {}",
                self.view_dims.len(),
                self.m
            )));
        }
        if self.view_dims.contains(&0) {
            return Err(MvmcError::param("every view needs at least one feature"));
        }
        if self.num_labelings == 0 || self.num_labelings > self.m {
            return Err(MvmcError::param(format!(
                "num_labelings must lie in 1..={}, got {}",
                self.m, self.num_labelings
            )));
        }
        if self.clusters_per_labeling.len() != self.num_labelings {
            return Err(MvmcError::param(format!(
                "clusters_per_labeling has {} entries for {} labelings",
                self.clusters_per_labeling.len(),
                self.num_labelings
            )));
        }
        if let Some(&k) = self.clusters_per_labeling.iter().find(|&&k| k < 2 || k > self.n) {
            return Err(MvmcError::param(format!(
                "cluster count {k} outside 2..={}",
                self.n
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(MvmcError::param("noise_sigma must be a finite nonnegative number"));
        }
        if self.n < 2 {
            return Err(MvmcError::param("n must be at least 2"));
        }
        Ok(())
    }
}

/// A balanced labeling `i mod k`, shuffled.
fn balanced_labels(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(rng);
    labels
}

/// Views are assigned to labelings round-robin; view `v` carries cluster
/// means of labeling `v mod num_labelings` plus isotropic Gaussian noise.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truths: Vec<Vec<usize>> = spec
        .clusters_per_labeling
        .iter()
        .map(|&k| balanced_labels(spec.n, k, &mut rng))
        .collect();
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut views = Vec::with_capacity(spec.m);
    for (v, &d) in spec.view_dims.iter().enumerate() {
        let j = v % spec.num_labelings;
        let k = spec.clusters_per_labeling[j];
        let means = Mat::from_fn(d, k, |_, _| unit.sample(&mut rng));
        let labels = &truths[j];
        let x = Mat::from_fn(d, spec.n, |i, s| {
            means[(i, labels[s])] + spec.noise_sigma * unit.sample(&mut rng)
        });
        views.push(x);
    }
    MultiViewDataset::new(views, truths)
}

/// Parameters of the planted co-clustering (checkerboard) generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckerboardSpec {
    pub n: usize,
    pub view_dims: Vec<usize>,
    /// Feature (row) block count per view.
    pub row_clusters: Vec<usize>,
    pub num_labelings: usize,
    /// Sample (column) block count per labeling.
    pub clusters_per_labeling: Vec<usize>,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Checkerboard data plus the planted row partition of each view.
#[derive(Debug, Clone)]
pub struct Checkerboard {
    pub dataset: MultiViewDataset,
    pub row_truths: Vec<Vec<usize>>,
}

/// Each view is a block-constant matrix (feature blocks × sample blocks of
/// its labeling) plus noise; block means are standard normal draws.
pub fn generate_checkerboard(spec: &CheckerboardSpec) -> Result<Checkerboard> {
    let m = spec.view_dims.len();
    SyntheticSpec {
        n: spec.n,
        m,
        view_dims: spec.view_dims.clone(),
        num_labelings: spec.num_labelings,
        clusters_per_labeling: spec.clusters_per_labeling.clone(),
        noise_sigma: spec.noise_sigma,
        seed: spec.seed,
    }
    .validate()?;
    if spec.row_clusters.len() != m {
        return Err(MvmcError::param("row_clusters needs one entry per view"));
    }
    for (v, (&c, &d)) in spec.row_clusters.iter().zip(&spec.view_dims).enumerate() {
        if c < 1 || c > d {
            return Err(MvmcError::param(format!(
                "view {v}: row cluster count {c} outside 1..={d}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truths: Vec<Vec<usize>> = spec
        .clusters_per_labeling
        .iter()
        .map(|&k| balanced_labels(spec.n, k, &mut rng))
        .collect();
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut views = Vec::with_capacity(m);
    let mut row_truths = Vec::with_capacity(m);
    for v in 0..m {
        let d = spec.view_dims[v];
        let j = v % spec.num_labelings;
        let rows = balanced_labels(d, spec.row_clusters[v], &mut rng);
        let blocks = Mat::from_fn(spec.row_clusters[v], spec.clusters_per_labeling[j], |_, _| {
            unit.sample(&mut rng)
        });
        let cols = &truths[j];
        views.push(Mat::from_fn(d, spec.n, |i, s| {
            blocks[(rows[i], cols[s])] + spec.noise_sigma * unit.sample(&mut rng)
        }));
        row_truths.push(rows);
    }
    Ok(Checkerboard {
        dataset: MultiViewDataset::new(views, truths)?,
        row_truths,
    })
}

// ---------------------------------------------------------------------------
// preprocessing

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    #[default]
    None,
    UnitColumns,
    ZscoreRows,
}

#[derive(Debug, Clone)]
pub struct Normalized {
    pub dataset: MultiViewDataset,
    /// `(view, column)` pairs that were all-zero under `UnitColumns`.
    pub zero_columns: Vec<(usize, usize)>,
}

pub fn normalize_views(ds: &MultiViewDataset, mode: NormalizeMode) -> Normalized {
    let mut zero_columns = Vec::new();
    let views = ds
        .views()
        .iter()
        .enumerate()
        .map(|(v, x)| match mode {
            NormalizeMode::None => x.clone(),
            NormalizeMode::UnitColumns => {
                let mut y = x.clone();
                for (j, mut col) in y.column_iter_mut().enumerate() {
                    let norm = col.norm();
                    if norm > 0.0 {
                        col /= norm;
                    } else {
                        zero_columns.push((v, j));
                    }
                }
                y
            }
            NormalizeMode::ZscoreRows => zscore_rows(x),
        })
        .collect();
    Normalized {
        dataset: MultiViewDataset {
            views,
            names: ds.names.clone(),
            ground_truths: ds.ground_truths.clone(),
        },
        zero_columns,
    }
}

/// Standardizes each feature row; zero-variance rows are left untouched.
pub fn zscore_rows(x: &Mat) -> Mat {
    let mut y = x.clone();
    let n = x.ncols() as f64;
    for mut row in y.row_iter_mut() {
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if var > 0.0 {
            let sd = var.sqrt();
            row.apply(|v| *v = (*v - mean) / sd);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn small() -> MultiViewDataset {
        let a = Mat::from_row_slice(3, 4, &[1., 2., 3., 4., 5., 6., 7., 8., 9., 10., 11., 12.]);
        let b = Mat::from_row_slice(2, 4, &[0.5, -1.0, 2.25, 0.0, 1e-3, 3.0, -7.5, 1.0]);
        MultiViewDataset::new(vec![a, b], vec![vec![0, 1, 0, 1]]).unwrap()
    }

    #[test]
    fn two_view_directory_round_trips() {
        let dir = tempdir().unwrap();
        let ds = small();
        save_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.m(), 2);
        assert_eq!(back.n(), 4);
        assert_eq!(back.dims(), vec![3, 2]);
        assert_eq!(back, ds);
    }

    #[test]
    fn column_mismatch_names_the_view() {
        let dir = tempdir().unwrap();
        save_dataset(&small(), dir.path()).unwrap();
        fs::write(dir.path().join("view_1.csv"), "1,2,3,4,5\n6,7,8,9,10\n").unwrap();
        match load_dataset(dir.path()) {
            Err(MvmcError::Shape(msg)) => assert!(msg.contains("view 1"), "{msg}"),
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn nan_entry_reports_coordinates() {
        let dir = tempdir().unwrap();
        save_dataset(&small(), dir.path()).unwrap();
        fs::write(dir.path().join("view_1.csv"), "1,2,NaN,4\n6,7,8,9\n").unwrap();
        match load_dataset(dir.path()) {
            Err(MvmcError::NonFinite { view, row, col }) => assert_eq!((view, row, col), (1, 0, 2)),
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_and_missing_files_are_ingestion_errors() {
        let dir = tempdir().unwrap();
        save_dataset(&small(), dir.path()).unwrap();
        fs::write(dir.path().join("view_0.csv"), "1,2,3,4\n5,6,7\n8,9,10,11\n").unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(MvmcError::Ingestion { .. })));
        fs::remove_file(dir.path().join("view_0.csv")).unwrap();
        match load_dataset(dir.path()) {
            Err(MvmcError::Ingestion { view, .. }) => assert!(view.starts_with('0')),
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }

    #[test]
    fn non_contiguous_truth_rejected() {
        let x = Mat::zeros(1, 3);
        assert!(MultiViewDataset::new(vec![x], vec![vec![0, 2, 2]]).is_err());
    }

    fn spec() -> SyntheticSpec {
        SyntheticSpec {
            n: 60,
            m: 2,
            view_dims: vec![4, 4],
            num_labelings: 2,
            clusters_per_labeling: vec![3, 2],
            noise_sigma: 0.1,
            seed: 7,
        }
    }

    #[test]
    fn generator_is_deterministic_and_seed_sensitive() {
        let a = generate_synthetic(&spec()).unwrap();
        let b = generate_synthetic(&spec()).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&SyntheticSpec { seed: 8, ..spec() }).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.ground_truths().len(), 2);
    }

    #[test]
    fn zero_noise_columns_identical_within_clusters() {
        let ds = generate_synthetic(&SyntheticSpec { noise_sigma: 0.0, ..spec() }).unwrap();
        for v in 0..ds.m() {
            let truth = &ds.ground_truths()[v % 2];
            for i in 0..ds.n() {
                for j in 0..ds.n() {
                    if truth[i] == truth[j] {
                        assert_eq!(ds.view(v).column(i), ds.view(v).column(j));
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = spec();
        s.num_labelings = 3;
        s.clusters_per_labeling = vec![2, 2, 2];
        assert!(matches!(generate_synthetic(&s), Err(MvmcError::Parameter(_))));
        let s = SyntheticSpec { noise_sigma: -1.0, ..spec() };
        assert!(generate_synthetic(&s).is_err());
        let s = SyntheticSpec { clusters_per_labeling: vec![1, 2], ..spec() };
        assert!(generate_synthetic(&s).is_err());
    }

    #[test]
    fn unit_columns_example() {
        let x = Mat::from_row_slice(2, 2, &[3.0, 0.0, 4.0, 0.0]);
        let ds = MultiViewDataset::new(vec![x.clone()], vec![]).unwrap();
        let out = normalize_views(&ds, NormalizeMode::UnitColumns);
        let y = out.dataset.view(0);
        assert!((y[(0, 0)] - 0.6).abs() < 1e-15 && (y[(1, 0)] - 0.8).abs() < 1e-15);
        assert_eq!(y.column(1).norm(), 0.0);
        assert_eq!(out.zero_columns, vec![(0, 1)]);
        let same = normalize_views(&ds, NormalizeMode::None);
        assert_eq!(same.dataset, ds);
        assert!(same.zero_columns.is_empty());
    }

    #[test]
    fn zscore_leaves_constant_rows() {
        let x = Mat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 5.0, 5.0, 5.0]);
        let y = zscore_rows(&x);
        assert!(y.row(0).sum().abs() < 1e-12);
        assert_eq!(y.row(1), x.row(1));
    }

    #[test]
    fn checkerboard_shapes() {
        let cb = generate_checkerboard(&CheckerboardSpec {
            n: 30,
            view_dims: vec![8, 6],
            row_clusters: vec![4, 3],
            num_labelings: 2,
            clusters_per_labeling: vec![3, 2],
            noise_sigma: 0.0,
            seed: 1,
        })
        .unwrap();
        assert_eq!(cb.dataset.dims(), vec![8, 6]);
        assert_eq!(cb.row_truths[0].len(), 8);
        let x = cb.dataset.view(0);
        let (rows, cols) = (&cb.row_truths[0], &cb.dataset.ground_truths()[0]);
        for i in 0..8 {
            for j in 0..30 {
                for a in 0..8 {
                    for b in 0..30 {
                        if rows[i] == rows[a] && cols[j] == cols[b] {
                            assert_eq!(x[(i, j)], x[(a, b)]);
                        }
                    }
                }
            }
        }
    }
}
