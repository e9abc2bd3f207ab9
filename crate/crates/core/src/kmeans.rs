//! Lloyd's K-means on the within-cluster sum of squares, with seeded
//! restarts and an elbow sweep over k.

use rand::seq::index::sample;
use rayon::prelude::*;
use thiserror::Error;

use crate::nn::Matrix;
use crate::report::{format_float, CsvTable};

#[derive(Debug, Error, PartialEq)]
pub enum KMeansError {
    #[error("k = {k} needs at least k points, got {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = KMeansError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig { k, max_iterations: 300, restarts: 100, seed }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(KMeansError::InvalidConfig("k must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(KMeansError::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.k > n {
            return Err(KMeansError::KTooLarge { k: self.k, n });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Matrix,
    pub assignments: Vec<usize>,
    pub wcss: f64,
    pub iterations_run: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn rows(m: &Matrix) -> Vec<&[f64]> {
    m.rows().into_iter().map(|r| r.to_slice().expect("standard layout")).collect()
}

fn standard(m: &Matrix) -> std::borrow::Cow<'_, Matrix> {
    if m.is_standard_layout() {
        std::borrow::Cow::Borrowed(m)
    } else {
        std::borrow::Cow::Owned(m.as_standard_layout().to_owned())
    }
}

/// Nearest centroid per point; ties go to the lowest centroid index.
pub fn assign_step(points: &Matrix, centroids: &Matrix) -> Result<Vec<usize>> {
    if points.ncols() != centroids.ncols() {
        return Err(KMeansError::ShapeMismatch(format!(
            "points have {} dimensions, centroids {}",
            points.ncols(),
            centroids.ncols()
        )));
    }
    if centroids.nrows() == 0 {
        return Err(KMeansError::ShapeMismatch("no centroids".into()));
    }
    let (p, c) = (standard(points), standard(centroids));
    let cs = rows(&c);
    Ok(rows(&p)
        .par_iter()
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, cj) in cs.iter().enumerate() {
                let d = sq_dist(x, cj);
                if d < best_d {
                    best = j;
                    best_d = d;
                }
            }
            best
        })
        .collect())
}

/// Cluster means. An empty cluster is re-seeded to the point farthest from
/// its own (new) centroid; several empty clusters take the farthest points
/// in decreasing order of distance.
pub fn update_step(points: &Matrix, assignments: &[usize], k: usize) -> Matrix {
    let d = points.ncols();
    let mut sums = Matrix::zeros((k, d));
    let mut counts = vec![0usize; k];
    for (row, &a) in points.rows().into_iter().zip(assignments) {
        sums.row_mut(a).scaled_add(1.0, &row);
        counts[a] += 1;
    }
    for (j, &c) in counts.iter().enumerate() {
        if c > 0 {
            sums.row_mut(j).mapv_inplace(|v| v / c as f64);
        }
    }
    let empty: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
    if !empty.is_empty() && points.nrows() > 0 {
        let mut far: Vec<(f64, usize)> = points
            .rows()
            .into_iter()
            .zip(assignments)
            .enumerate()
            .map(|(i, (row, &a))| {
                let dist: f64 = row.iter().zip(sums.row(a)).map(|(x, y)| (x - y) * (x - y)).sum();
                (dist, i)
            })
            .collect();
        far.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (slot, &j) in empty.iter().enumerate() {
            let (_, i) = far[slot % far.len()];
            sums.row_mut(j).assign(&points.row(i));
        }
    }
    sums
}

/// `Σ_i ‖x_i − μ_{a_i}‖²`.
pub fn wcss(points: &Matrix, centroids: &Matrix, assignments: &[usize]) -> Result<f64> {
    if points.ncols() != centroids.ncols() || points.nrows() != assignments.len() {
        return Err(KMeansError::ShapeMismatch(format!(
            "{} points of dim {}, {} assignments, centroids of dim {}",
            points.nrows(),
            points.ncols(),
            assignments.len(),
            centroids.ncols()
        )));
    }
    if let Some(&bad) = assignments.iter().find(|&&a| a >= centroids.nrows()) {
        return Err(KMeansError::ShapeMismatch(format!("assignment {bad} out of range")));
    }
    let (p, c) = (standard(points), standard(centroids));
    let cs = rows(&c);
    Ok(rows(&p).iter().zip(assignments).map(|(x, &a)| sq_dist(x, cs[a])).sum())
}

/// One Lloyd run from the given centroids. Returns the model and the WCSS
/// after every update step.
pub fn lloyd(points: &Matrix, initial: Matrix, max_iterations: usize) -> Result<(KMeansModel, Vec<f64>)> {
    let k = initial.nrows();
    let mut centroids = initial;
    let mut assignments = assign_step(points, &centroids)?;
    let mut trace = vec![wcss(points, &centroids, &assignments)?];
    let mut iterations_run = 0;
    for _ in 0..max_iterations {
        iterations_run += 1;
        centroids = update_step(points, &assignments, k);
        let w = wcss(points, &centroids, &assignments)?;
        let prev = *trace.last().expect("non-empty trace");
        debug_assert!(w <= prev + 1e-9 * prev.abs().max(1.0), "Lloyd step increased WCSS from {prev} to {w}");
        trace.push(w);
        let next = assign_step(points, &centroids)?;
        if next == assignments {
            break;
        }
        assignments = next;
    }
    let wcss = wcss(points, &centroids, &assignments)?;
    Ok((KMeansModel { k, centroids, assignments, wcss, iterations_run }, trace))
}

fn random_init(points: &Matrix, k: usize, seed: u64) -> Matrix {
    let mut rng = crate::rng_from_seed(seed);
    let idx = sample(&mut rng, points.nrows(), k).into_vec();
    points.select(ndarray::Axis(0), &idx)
}

/// Best of `restarts` seeded Lloyd runs. Restart `r` is seeded from stream
/// `r` of `seed`, so more restarts never give a worse result.
pub fn fit(points: &Matrix, config: &KMeansConfig) -> Result<KMeansModel> {
    config.validate(points.nrows())?;
    let runs: Vec<Result<KMeansModel>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let init = random_init(points, config.k, crate::derive_seed(config.seed, r as u64));
            lloyd(points, init, config.max_iterations).map(|(m, _)| m)
        })
        .collect();
    let mut best: Option<KMeansModel> = None;
    for run in runs {
        let m = run?;
        if best.as_ref().is_none_or(|b| m.wcss < b.wcss) {
            best = Some(m);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElbowReport {
    /// `(k, best WCSS)` in sweep order.
    pub entries: Vec<(usize, f64)>,
}

impl ElbowReport {
    /// Discrete second differences `W(k−1) − 2W(k) + W(k+1)` at interior
    /// points whose neighbours are consecutive k.
    pub fn second_differences(&self) -> Vec<(usize, f64)> {
        self.entries
            .windows(3)
            .filter(|w| w[0].0 + 1 == w[1].0 && w[1].0 + 1 == w[2].0)
            .map(|w| (w[1].0, w[0].1 - 2.0 * w[1].1 + w[2].1))
            .collect()
    }

    /// k with the largest second difference (first on ties).
    pub fn elbow_k(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, d) in self.second_differences() {
            if best.is_none_or(|(_, b)| d > b) {
                best = Some((k, d));
            }
        }
        best.map(|(k, _)| k)
    }

    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["k", "wcss"]);
        for &(k, w) in &self.entries {
            t.push(vec![k.to_string(), format_float(w)]);
        }
        t
    }
}

/// Best WCSS for every k. Should a larger k come out worse than the k just
/// below it, that entry is re-run with twice the restarts (up to three
/// times) and finally warm-started from the smaller solution plus its
/// farthest point, which cannot be worse.
pub fn elbow_sweep(
    points: &Matrix,
    k_range: &[usize],
    restarts: usize,
    max_iterations: usize,
    seed: u64,
) -> Result<ElbowReport> {
    let mut entries = Vec::with_capacity(k_range.len());
    let mut previous: Option<KMeansModel> = None;
    for &k in k_range {
        let mut config =
            KMeansConfig { k, max_iterations, restarts, seed: crate::derive_seed(seed, k as u64) };
        let mut model = fit(points, &config)?;
        if let Some(prev) = previous.as_ref().filter(|p| p.k < k) {
            let mut attempts = 0;
            while model.wcss > prev.wcss && attempts < 3 {
                config.restarts *= 2;
                model = fit(points, &config)?;
                attempts += 1;
            }
            if model.wcss > prev.wcss {
                model = warm_start(points, prev, k, max_iterations)?;
            }
        }
        entries.push((k, model.wcss));
        previous = Some(model);
    }
    Ok(ElbowReport { entries })
}

fn warm_start(points: &Matrix, prev: &KMeansModel, k: usize, max_iterations: usize) -> Result<KMeansModel> {
    let mut init = Matrix::zeros((k, points.ncols()));
    init.slice_mut(ndarray::s![..prev.k, ..]).assign(&prev.centroids);
    let mut dist: Vec<(f64, usize)> = points
        .rows()
        .into_iter()
        .zip(&prev.assignments)
        .enumerate()
        .map(|(i, (row, &a))| {
            (row.iter().zip(prev.centroids.row(a)).map(|(x, y)| (x - y) * (x - y)).sum(), i)
        })
        .collect();
    dist.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (slot, j) in (prev.k..k).enumerate() {
        init.row_mut(j).assign(&points.row(dist[slot % dist.len()].1));
    }
    Ok(lloyd(points, init, max_iterations)?.0)
}
