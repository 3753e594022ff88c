//! Dataset ingestion, synthetic generators, and standardization.
//!
//! Points are stored column-per-sample (`d x n`); CSV files on disk hold one
//! sample per row and are transposed on load.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fmt_f64;

#[derive(Debug, Clone)]
pub struct Dataset {
    /// `d x n` matrix, one column per sample.
    pub points: Array2<f64>,
    /// Ground-truth labels, one per sample. -1 marks noise points.
    pub labels: Option<Vec<i64>>,
    pub feature_names: Option<Vec<String>>,
    pub name: String,
}

impl Dataset {
    pub fn new(points: Array2<f64>, labels: Option<Vec<i64>>, name: &str) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::InvalidParam("dataset must have d >= 1, n >= 1".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam("dataset contains non-finite entries".into()));
        }
        if let Some(ref l) = labels {
            if l.len() != points.ncols() {
                return Err(Error::InvalidParam(format!(
                    "label count {} != sample count {}",
                    l.len(),
                    points.ncols()
                )));
            }
            if l.iter().any(|&v| v < -1) {
                return Err(Error::InvalidParam("labels must be >= -1 (-1 = noise)".into()));
            }
        }
        Ok(Dataset {
            points,
            labels,
            feature_names: None,
            name: name.to_string(),
        })
    }

    pub fn dims(&self) -> usize {
        self.points.nrows()
    }

    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    /// Root-mean-square pairwise Euclidean distance over all sample pairs,
    /// computed from moments: mean_{i != j} ||x_i - x_j||^2 = 2n/(n-1) * tr(cov).
    pub fn rms_pairwise_distance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let d = self.dims();
        let mut mean = vec![0.0; d];
        for col in self.points.columns() {
            for (m, v) in mean.iter_mut().zip(col.iter()) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        let mut total_var = 0.0;
        for col in self.points.columns() {
            for (m, v) in mean.iter().zip(col.iter()) {
                total_var += (v - m) * (v - m);
            }
        }
        total_var /= n as f64;
        (2.0 * n as f64 / (n as f64 - 1.0) * total_var).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    GaussianMixture2d,
    GaussianMixture20d,
    GaussianGrid,
    UniformBlocksNoisy,
}

impl GeneratorKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian-mixture-2d" => Ok(Self::GaussianMixture2d),
            "gaussian-mixture-20d" => Ok(Self::GaussianMixture20d),
            "gaussian-grid" => Ok(Self::GaussianGrid),
            "uniform-blocks-noisy" => Ok(Self::UniformBlocksNoisy),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::GaussianMixture2d => "gaussian-mixture-2d",
            Self::GaussianMixture20d => "gaussian-mixture-20d",
            Self::GaussianGrid => "gaussian-grid",
            Self::UniformBlocksNoisy => "uniform-blocks-noisy",
        }
    }

    pub fn default_n(&self) -> usize {
        match self {
            Self::GaussianMixture2d | Self::GaussianMixture20d => 300,
            Self::GaussianGrid => 500,
            Self::UniformBlocksNoisy => 750,
        }
    }
}

/// Kind-specific overrides; every field has a per-kind default.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GeneratorExtra {
    /// Mixture component count (mixtures only, default 6, max 6).
    pub components: Option<usize>,
    /// Per-component covariance is `cov_scale * I`.
    pub cov_scale: Option<f64>,
    /// Background noise point count (uniform-blocks-noisy only, default 100).
    pub noise_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub seed: u64,
    pub extra: GeneratorExtra,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, n: usize, seed: u64) -> Self {
        GeneratorSpec {
            kind,
            n,
            seed,
            extra: GeneratorExtra::default(),
        }
    }
}

/// Six 2-D component means on a regular hexagon of circumradius 12, so every
/// adjacent pair is exactly 12 apart (24 sigma at the default covariance
/// 0.25 I). The symmetric layout makes all six components fuse at the same
/// gamma, which keeps the c = 6 plateau clean.
pub const MIXTURE_MEANS_2D: [[f64; 2]; 6] = [
    [12.0, 0.0],
    [6.0, 10.392304845413264],
    [-6.0, 10.392304845413264],
    [-12.0, 0.0],
    [-6.0, -10.392304845413264],
    [6.0, -10.392304845413264],
];

/// Centers of the 13 unit blocks, spaced 4 apart (3-unit gaps between blocks).
pub const BLOCK_CENTERS: [[f64; 2]; 13] = [
    [0.0, 0.0],
    [4.0, 0.0],
    [8.0, 0.0],
    [12.0, 0.0],
    [0.0, 4.0],
    [4.0, 4.0],
    [8.0, 4.0],
    [12.0, 4.0],
    [0.0, 8.0],
    [4.0, 8.0],
    [8.0, 8.0],
    [12.0, 8.0],
    [0.0, 12.0],
];

pub fn generate(spec: &GeneratorSpec) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(Error::InvalidParam("sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        GeneratorKind::GaussianMixture2d => gaussian_mixture(spec, &mut rng, 2),
        GeneratorKind::GaussianMixture20d => gaussian_mixture(spec, &mut rng, 20),
        GeneratorKind::GaussianGrid => gaussian_grid(spec, &mut rng),
        GeneratorKind::UniformBlocksNoisy => uniform_blocks(spec, &mut rng),
    }
}

fn gaussian_mixture(spec: &GeneratorSpec, rng: &mut ChaCha8Rng, dims: usize) -> Result<Dataset> {
    let comps = spec.extra.components.unwrap_or(6);
    if comps == 0 || comps > MIXTURE_MEANS_2D.len() {
        return Err(Error::InvalidParam(format!(
            "component count must be in 1..={}",
            MIXTURE_MEANS_2D.len()
        )));
    }
    if spec.n % comps != 0 {
        return Err(Error::InvalidParam(format!(
            "n = {} is not divisible by {} components",
            spec.n, comps
        )));
    }
    let sigma = spec.extra.cov_scale.unwrap_or(0.25).sqrt();
    let per = spec.n / comps;
    let mut points = Array2::zeros((dims, spec.n));
    let mut labels = Vec::with_capacity(spec.n);
    for (c, mean2) in MIXTURE_MEANS_2D.iter().take(comps).enumerate() {
        for i in 0..per {
            let col = c * per + i;
            for row in 0..dims {
                let m = if row < 2 { mean2[row] } else { 0.0 };
                let z: f64 = rng.sample(StandardNormal);
                points[(row, col)] = m + sigma * z;
            }
            labels.push(c as i64);
        }
    }
    let name = if dims == 2 {
        "gaussian-mixture-2d"
    } else {
        "gaussian-mixture-20d"
    };
    Dataset::new(points, Some(labels), name)
}

fn gaussian_grid(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    // 5x5 grid of means (1 + 10(i-1), 1 + 10(j-1)), i,j = 1..5; covariance 0.25 I.
    let comps = 25;
    if spec.n % comps != 0 {
        return Err(Error::InvalidParam(format!(
            "n = {} is not divisible by the {} grid components",
            spec.n, comps
        )));
    }
    let sigma = spec.extra.cov_scale.unwrap_or(0.25).sqrt();
    let per = spec.n / comps;
    let mut points = Array2::zeros((2, spec.n));
    let mut labels = Vec::with_capacity(spec.n);
    for c in 0..comps {
        let (i, j) = (c / 5, c % 5);
        let mean = [1.0 + 10.0 * i as f64, 1.0 + 10.0 * j as f64];
        for p in 0..per {
            let col = c * per + p;
            for row in 0..2 {
                let z: f64 = rng.sample(StandardNormal);
                points[(row, col)] = mean[row] + sigma * z;
            }
            labels.push(c as i64);
        }
    }
    Dataset::new(points, Some(labels), "gaussian-grid")
}

fn uniform_blocks(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let noise = spec.extra.noise_points.unwrap_or(100);
    let blocks = BLOCK_CENTERS.len();
    if spec.n <= noise || (spec.n - noise) % blocks != 0 {
        return Err(Error::InvalidParam(format!(
            "n = {} must be noise ({}) plus a multiple of {} block points",
            spec.n, noise, blocks
        )));
    }
    let per = (spec.n - noise) / blocks;
    let mut points = Array2::zeros((2, spec.n));
    let mut labels = Vec::with_capacity(spec.n);
    for (c, center) in BLOCK_CENTERS.iter().enumerate() {
        for p in 0..per {
            let col = c * per + p;
            for row in 0..2 {
                points[(row, col)] = center[row] + rng.gen_range(-0.5..0.5);
            }
            labels.push(c as i64);
        }
    }
    // Noise is uniform over the bounding box of the blocks.
    let (lo, hi) = (-0.5, 12.5);
    for p in 0..noise {
        let col = blocks * per + p;
        for row in 0..2 {
            points[(row, col)] = rng.gen_range(lo..hi);
        }
        labels.push(-1);
    }
    Dataset::new(points, Some(labels), "uniform-blocks-noisy")
}

/// Center each feature row and scale it to unit sample standard deviation.
/// Zero-variance rows are centered only.
pub fn standardize(ds: &Dataset) -> Result<Dataset> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::InvalidParam("standardize requires n >= 2".into()));
    }
    let mut points = ds.points.clone();
    for mut row in points.rows_mut() {
        let mean = row.iter().sum::<f64>() / n as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        let sd = var.sqrt();
        for v in row.iter_mut() {
            *v -= mean;
            if sd > 0.0 {
                *v /= sd;
            }
        }
    }
    let mut out = Dataset::new(points, ds.labels.clone(), &ds.name)?;
    out.feature_names = ds.feature_names.clone();
    Ok(out)
}

fn is_numeric(field: &str) -> bool {
    field.trim().parse::<f64>().is_ok()
}

/// Load a samples-as-rows CSV. `#`-prefixed lines are skipped; a non-numeric
/// first row is taken as a header. When `has_labels`, the last column is the
/// label: integer labels are kept verbatim, any other strings are mapped to
/// dense integers in first-appearance order.
pub fn load_csv(path: &Path, has_labels: bool, delimiter: char) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        rows.push((idx + 1, line.split(delimiter).collect()));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    let width = rows[0].1.len();
    for (line, fields) in &rows {
        if fields.len() != width {
            return Err(Error::RaggedRows {
                line: *line,
                expected: width,
                found: fields.len(),
            });
        }
    }
    let mut feature_names = None;
    let mut start = 0;
    if rows[0].1.iter().any(|f| !is_numeric(f)) {
        let mut names: Vec<String> = rows[0].1.iter().map(|s| s.trim().to_string()).collect();
        if has_labels {
            names.pop();
        }
        feature_names = Some(names);
        start = 1;
        if rows.len() == 1 {
            return Err(Error::EmptyFile);
        }
    }
    let data_rows = &rows[start..];
    let n = data_rows.len();
    let d = if has_labels { width - 1 } else { width };
    if d == 0 {
        return Err(Error::InvalidParam("no feature columns".into()));
    }
    let mut points = Array2::zeros((d, n));
    for (col, (line, fields)) in data_rows.iter().enumerate() {
        for (row, field) in fields.iter().take(d).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::NonNumericField {
                line: *line,
                column: row + 1,
                value: field.trim().to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumericField {
                    line: *line,
                    column: row + 1,
                    value: field.trim().to_string(),
                });
            }
            points[(row, col)] = v;
        }
    }
    let labels = if has_labels {
        let raw: Vec<&str> = data_rows.iter().map(|(_, f)| f[width - 1].trim()).collect();
        let all_int = raw.iter().all(|s| s.parse::<i64>().is_ok());
        let vals = if all_int {
            raw.iter().map(|s| s.parse::<i64>().unwrap()).collect()
        } else {
            let mut map: HashMap<&str, i64> = HashMap::new();
            let mut next = 0i64;
            raw.iter()
                .map(|s| {
                    *map.entry(s).or_insert_with(|| {
                        let v = next;
                        next += 1;
                        v
                    })
                })
                .collect()
        };
        Some(vals)
    } else {
        None
    };
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let mut ds = Dataset::new(points, labels, &stem)?;
    ds.feature_names = feature_names;
    Ok(ds)
}

/// Write a dataset as a samples-as-rows CSV with 17-significant-digit floats.
pub fn save_csv(ds: &Dataset, path: &Path, delimiter: char) -> Result<()> {
    let mut out = String::new();
    if let Some(ref names) = ds.feature_names {
        let mut header: Vec<String> = names.clone();
        if ds.labels.is_some() {
            header.push("label".to_string());
        }
        let _ = writeln!(out, "{}", header.join(&delimiter.to_string()));
    }
    for col in 0..ds.len() {
        let mut fields: Vec<String> = (0..ds.dims()).map(|r| fmt_f64(ds.points[(r, col)])).collect();
        if let Some(ref labels) = ds.labels {
            fields.push(labels[col].to_string());
        }
        let _ = writeln!(out, "{}", fields.join(&delimiter.to_string()));
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
