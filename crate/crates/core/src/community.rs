//! Spectral community estimation on aggregated matrices, and the
//! misclustering error used to score it.
//!
//! The pipeline is aggregate -> embed -> cluster: rows of the top-`K`
//! eigenvector matrix (by `|lambda|`) of either the aggregated adjacency
//! matrix or of `I - L` feed a k-means++ / Lloyd clusterer with restarts.
//! Embedding rows are not length-normalized by default; a flag is exposed
//! for experimentation.
//!
//! The misclustering error of an estimate `Z-hat` against the truth `Z` is
//! `min over permutations Pi of (1/n) ||Z-hat - Z Pi||_F^2`, which equals
//! `2 / n` times the number of misassigned rows under the optimal label
//! matching. The minimization is exact: permutations are enumerated for
//! `K <= 8` and solved by a Hungarian assignment above that.

use ndarray::Array2;
use rand::Rng;
use rand_pcg::Pcg64Mcg;
use thiserror::Error;

use crate::aggregate::{self, AggregateError};
use crate::graph_model::{GraphModelError, MeanMatrix, ModelTag};
use crate::lazy_process::NetworkSequence;
use crate::rng;
use crate::spectral::{self, SpectralError};

#[derive(Debug, Error, PartialEq)]
pub enum CommunityError {
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("label vectors have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("label {label} out of range for K = {k}")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("membership needs at least one community")]
    EmptyMembership,
}

/// Ground-truth community structure: per-vertex labels in `0..K` plus the
/// `K x K` connectivity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunitySpec {
    labels: Vec<usize>,
    k: usize,
    connectivity: Array2<f64>,
    pub self_loops: bool,
}

impl CommunitySpec {
    pub fn new(
        labels: Vec<usize>,
        k: usize,
        connectivity: Array2<f64>,
    ) -> Result<Self, CommunityError> {
        if k == 0 || labels.is_empty() {
            return Err(CommunityError::EmptyMembership);
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= k) {
            return Err(CommunityError::LabelOutOfRange { label, k });
        }
        Ok(Self {
            labels,
            k,
            connectivity,
            self_loops: true,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Membership matrix `Z` with one unit entry per row.
    pub fn membership_matrix(&self) -> Array2<f64> {
        membership_matrix(&self.labels, self.k)
    }

    /// The block mean matrix `P = Z B Z^T`.
    pub fn mean_matrix(&self) -> Result<MeanMatrix, GraphModelError> {
        let n = self.labels.len();
        let mut entries = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                entries[(i, j)] = self.connectivity[(self.labels[i], self.labels[j])];
            }
        }
        if !self.self_loops {
            for i in 0..n {
                entries[(i, i)] = 0.0;
            }
        }
        MeanMatrix::new(entries, ModelTag::Sbm)
    }
}

fn membership_matrix(labels: &[usize], k: usize) -> Array2<f64> {
    let mut z = Array2::zeros((labels.len(), k));
    for (i, &l) in labels.iter().enumerate() {
        z[(i, l)] = 1.0;
    }
    z
}

/// Output of the clustering step.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    /// Estimated label of each vertex, in `0..K`.
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares of the winning restart.
    pub kmeans_objective: f64,
    pub restarts_used: usize,
    pub k: usize,
}

impl ClusteringResult {
    /// Implied membership matrix `Z-hat`.
    pub fn membership_matrix(&self) -> Array2<f64> {
        membership_matrix(&self.labels, self.k)
    }

    /// CSV export `vertex,label` with 1-based vertex ids and labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex,label\n");
        for (i, &l) in self.labels.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, l + 1));
        }
        out
    }
}

/// Which aggregated matrix the embedding is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedMode {
    /// Top eigenvectors of the aggregated adjacency matrix.
    Adjacency,
    /// Top eigenvectors of `I - L` for the aggregated normalized Laplacian.
    Laplacian,
}

impl std::fmt::Display for EmbedMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EmbedMode::Adjacency => "adjacency",
            EmbedMode::Laplacian => "laplacian",
        })
    }
}

/// Rows of the matrix of top-`K` eigenvectors of a symmetric matrix.
pub fn spectral_embed(m: &Array2<f64>, k: usize) -> Result<Array2<f64>, SpectralError> {
    spectral_embed_opts(m, k, false)
}

/// Embedding with optional row length normalization (off by default; rows
/// with zero norm are left untouched).
pub fn spectral_embed_opts(
    m: &Array2<f64>,
    k: usize,
    row_normalize: bool,
) -> Result<Array2<f64>, SpectralError> {
    let eig = spectral::top_k_eigenpairs_default(m, k)?;
    let mut x = eig.vectors;
    if row_normalize {
        for mut row in x.rows_mut() {
            let nrm = row.dot(&row).sqrt();
            if nrm > 0.0 {
                row.mapv_inplace(|v| v / nrm);
            }
        }
    }
    Ok(x)
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_pp_init(x: &Array2<f64>, k: usize, stream: &mut Pcg64Mcg) -> Array2<f64> {
    let n = x.nrows();
    let d = x.ncols();
    let mut centers = Array2::zeros((k, d));
    let first = stream.random_range(0..n);
    centers.row_mut(0).assign(&x.row(first));
    let mut dist2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let target = stream.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in dist2.iter().enumerate() {
                acc += w;
                if acc >= target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All remaining points coincide with chosen centers.
            stream.random_range(0..n)
        };
        centers.row_mut(c).assign(&x.row(pick));
        for (i, d2) in dist2.iter_mut().enumerate() {
            let nd = sq_dist(x.row(i), centers.row(c));
            if nd < *d2 {
                *d2 = nd;
            }
        }
    }
    centers
}

const LLOYD_CAP: usize = 100;

fn lloyd(x: &Array2<f64>, k: usize, stream: &mut Pcg64Mcg) -> (Vec<usize>, f64) {
    let n = x.nrows();
    let d = x.ncols();
    let mut centers = kmeans_pp_init(x, k, stream);
    let mut labels = vec![0usize; n];
    for _ in 0..LLOYD_CAP {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dd = sq_dist(x.row(i), centers.row(c));
                if dd < best_d {
                    best_d = dd;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        // Recompute centers; an emptied cluster is reseeded at the point
        // farthest from its current center.
        let mut counts = vec![0usize; k];
        let mut sums = Array2::<f64>::zeros((k, d));
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let mut row = sums.row_mut(l);
            row += &x.row(i);
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mut row = centers.row_mut(c);
                row.assign(&sums.row(c));
                row.mapv_inplace(|v| v / counts[c] as f64);
            } else {
                let far = (0..n)
                    .max_by(|&i, &j| {
                        let di = sq_dist(x.row(i), centers.row(labels[i]));
                        let dj = sq_dist(x.row(j), centers.row(labels[j]));
                        di.partial_cmp(&dj).unwrap()
                    })
                    .unwrap();
                centers.row_mut(c).assign(&x.row(far));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let objective: f64 = (0..n)
        .map(|i| sq_dist(x.row(i), centers.row(labels[i])))
        .sum();
    (labels, objective)
}

/// k-means++ with Lloyd iterations over independent restarts; returns the
/// labeling of minimum within-cluster sum of squares (ties broken toward
/// the earliest restart). Deterministic given `seed`.
pub fn approx_kmeans(x: &Array2<f64>, k: usize, restarts: usize, seed: u64) -> ClusteringResult {
    assert!(restarts >= 1, "need at least one restart");
    assert!(
        k >= 1 && k <= x.nrows(),
        "K = {k} out of range for {} points",
        x.nrows()
    );
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..restarts {
        let mut stream = rng::stream(seed, rng::ctx::KMEANS, r as u32, 0);
        let (labels, objective) = lloyd(x, k, &mut stream);
        if best.as_ref().is_none_or(|(_, b)| objective < *b) {
            best = Some((labels, objective));
        }
    }
    let (labels, kmeans_objective) = best.unwrap();
    ClusteringResult {
        labels,
        kmeans_objective,
        restarts_used: restarts,
        k,
    }
}

/// Agreement counts: `C[a][b]` = number of vertices with estimated label
/// `a` and true label `b`.
fn confusion(labels_hat: &[usize], labels: &[usize], k: usize) -> Array2<f64> {
    let mut c = Array2::zeros((k, k));
    for (&a, &b) in labels_hat.iter().zip(labels.iter()) {
        c[(a, b)] += 1.0;
    }
    c
}

fn max_agreement_brute(c: &Array2<f64>) -> f64 {
    let k = c.nrows();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = f64::NEG_INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let score: f64 = (0..k).map(|a| c[(a, p[a])]).sum();
        if score > best {
            best = score;
        }
    });
    best
}

fn permute(items: &mut [usize], start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}

/// Hungarian algorithm (potentials formulation) for the minimum-cost
/// square assignment. Returns the optimal total cost.
fn min_cost_assignment(cost: &Array2<f64>) -> f64 {
    let n = cost.nrows();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1]; // row matched to each column (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| cost[(p[j] - 1, j - 1)]).sum()
}

fn max_agreement_assignment(c: &Array2<f64>) -> f64 {
    // Maximize total agreement = minimize (max_entry - agreement).
    let k = c.nrows();
    let top = c.iter().cloned().fold(0.0f64, f64::max);
    let cost = Array2::from_shape_fn((k, k), |(a, b)| top - c[(a, b)]);
    k as f64 * top - min_cost_assignment(&cost)
}

/// Misclustering error `min_Pi (1/n) ||Z-hat - Z Pi||_F^2`, computed
/// exactly: each misassigned row under the optimal matching contributes 2
/// to the squared Frobenius norm, so the error is `2 (n - agreement) / n`.
pub fn misclustering_error(
    labels_hat: &[usize],
    labels: &[usize],
    k: usize,
) -> Result<f64, CommunityError> {
    if labels_hat.len() != labels.len() {
        return Err(CommunityError::LengthMismatch(
            labels_hat.len(),
            labels.len(),
        ));
    }
    for &l in labels_hat.iter().chain(labels.iter()) {
        if l >= k {
            return Err(CommunityError::LabelOutOfRange { label: l, k });
        }
    }
    let n = labels.len();
    if n == 0 {
        return Err(CommunityError::EmptyMembership);
    }
    let c = confusion(labels_hat, labels, k);
    let agreement = if k <= 8 {
        max_agreement_brute(&c)
    } else {
        max_agreement_assignment(&c)
    };
    Ok(2.0 * (n as f64 - agreement) / n as f64)
}

/// Full pipeline: aggregate the sequence, embed the chosen matrix, cluster.
pub fn estimate_communities(
    seq: &NetworkSequence,
    k: usize,
    mode: EmbedMode,
    restarts: usize,
    seed: u64,
) -> Result<ClusteringResult, CommunityError> {
    let (counts, degrees) = aggregate::aggregate_adjacency(seq);
    let n = seq.n();
    let target = match mode {
        EmbedMode::Adjacency => Array2::from_shape_fn((n, n), |(i, j)| counts[(i, j)] as f64),
        EmbedMode::Laplacian => {
            let l = aggregate::aggregate_laplacian(&counts, &degrees)?;
            let eye: Array2<f64> = Array2::eye(n);
            eye - &l
        }
    };
    let embedding = spectral_embed(&target, k)?;
    Ok(approx_kmeans(&embedding, k, restarts, seed))
}
