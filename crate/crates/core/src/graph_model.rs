//! Mean matrices for edge-probability models.
//!
//! A [`MeanMatrix`] is the symmetric matrix `P = ((p_ij))` of edge
//! probabilities that parametrizes a lazy IER process. Constructors are
//! provided for stochastic block models (`P = Z B Z^T` with contiguous
//! blocks), for the logistic graphon `W(x, y) = 1 / (k (1 + exp(-x - y)))`
//! sampled at i.i.d. uniform latent positions, and for explicit matrices.
//!
//! Whether diagonal entries (self-loops) participate is a property of the
//! model spec: the generating process ranges over all pairs `i <= j`, so by
//! default `p_ii` is populated; setting `self_loops = false` forces the
//! diagonal to zero.

use ndarray::Array2;
use rand::Rng;
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum GraphModelError {
    #[error("community sizes sum to {sum}, expected n = {n}")]
    SizesMismatch { sum: usize, n: usize },
    #[error("community sizes must be positive")]
    EmptyCommunity,
    #[error("probability entry ({i}, {j}) = {value} outside [0, 1]")]
    ProbabilityOutOfRange { i: usize, j: usize, value: f64 },
    #[error("matrix entry ({i}, {j}) differs from ({j}, {i}): not symmetric")]
    Asymmetric { i: usize, j: usize },
    #[error("matrix must be square, got {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("graphon scale k = {k} must be at least 1")]
    ScaleTooSmall { k: f64 },
    #[error("mean matrix CSV parse error at line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Which family a mean matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    Sbm,
    Graphon,
    Explicit,
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelTag::Sbm => "sbm",
            ModelTag::Graphon => "graphon",
            ModelTag::Explicit => "explicit",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ModelTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sbm" => Ok(ModelTag::Sbm),
            "graphon" => Ok(ModelTag::Graphon),
            "explicit" => Ok(ModelTag::Explicit),
            other => Err(format!("unknown model tag `{other}`")),
        }
    }
}

/// Symmetric matrix of edge probabilities.
///
/// Invariants (checked on construction): square, symmetric, all entries in
/// `[0, 1]`. Immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanMatrix {
    entries: Array2<f64>,
    model_tag: ModelTag,
}

impl MeanMatrix {
    /// Validates and wraps an explicit probability matrix.
    pub fn new(entries: Array2<f64>, model_tag: ModelTag) -> Result<Self, GraphModelError> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(GraphModelError::NotSquare { rows, cols });
        }
        for i in 0..rows {
            for j in i..cols {
                let v = entries[(i, j)];
                if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                    return Err(GraphModelError::ProbabilityOutOfRange { i, j, value: v });
                }
                if entries[(j, i)] != v {
                    return Err(GraphModelError::Asymmetric { i, j });
                }
            }
        }
        Ok(Self { entries, model_tag })
    }

    /// Explicit mean matrix (tagged as such).
    pub fn explicit(entries: Array2<f64>) -> Result<Self, GraphModelError> {
        Self::new(entries, ModelTag::Explicit)
    }

    /// Constant off-diagonal probability `p`; diagonal `p` as well when
    /// `self_loops` is set, else zero.
    pub fn constant(n: usize, p: f64, self_loops: bool) -> Result<Self, GraphModelError> {
        let mut m = Array2::from_elem((n, n), p);
        if !self_loops {
            for i in 0..n {
                m[(i, i)] = 0.0;
            }
        }
        Self::new(m, ModelTag::Explicit)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn model_tag(&self) -> ModelTag {
        self.model_tag
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Expected degree of vertex `i`: the full row sum, diagonal included.
    pub fn expected_degree(&self, i: usize) -> f64 {
        self.entries.row(i).sum()
    }

    /// Dense CSV: a header line `n,model_tag` followed by `n` rows of `n`
    /// comma-separated entries at 17 significant digits (round-trip exact).
    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        out.push_str(&format!("{},{}\n", n, self.model_tag));
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| format!("{:.16e}", self.entries[(i, j)]))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the dense CSV format written by [`MeanMatrix::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, GraphModelError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(GraphModelError::Csv {
            line: 1,
            message: "empty input".into(),
        })?;
        let mut parts = header.split(',');
        let n: usize =
            parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or(GraphModelError::Csv {
                    line: 1,
                    message: "bad vertex count".into(),
                })?;
        let tag: ModelTag =
            parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or(GraphModelError::Csv {
                    line: 1,
                    message: "bad model tag".into(),
                })?;
        let mut entries = Array2::zeros((n, n));
        for i in 0..n {
            let (lineno, line) = lines.next().ok_or(GraphModelError::Csv {
                line: i + 2,
                message: format!("expected {n} matrix rows"),
            })?;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n {
                return Err(GraphModelError::Csv {
                    line: lineno + 1,
                    message: format!("expected {n} fields, found {}", fields.len()),
                });
            }
            for (j, f) in fields.iter().enumerate() {
                entries[(i, j)] = f.trim().parse().map_err(|_| GraphModelError::Csv {
                    line: lineno + 1,
                    message: format!("bad number `{f}`"),
                })?;
            }
        }
        Self::new(entries, tag)
    }
}

/// Per-layer expected degree summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeStats {
    pub d_min: f64,
    pub d_max: f64,
    pub d_avg: f64,
}

/// Minimum, maximum and average expected degree of `P` (row sums,
/// diagonal included).
pub fn degree_stats(p: &MeanMatrix) -> DegreeStats {
    let n = p.n();
    let mut d_min = f64::INFINITY;
    let mut d_max = f64::NEG_INFINITY;
    let mut total = 0.0;
    for i in 0..n {
        let d = p.expected_degree(i);
        d_min = d_min.min(d);
        d_max = d_max.max(d);
        total += d;
    }
    DegreeStats {
        d_min,
        d_max,
        d_avg: total / n as f64,
    }
}

/// Two-parameter block model: `K` communities of given sizes and a
/// symmetric `K x K` connectivity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    pub n: usize,
    pub community_sizes: Vec<usize>,
    pub connectivity: Array2<f64>,
    pub self_loops: bool,
}

impl SbmSpec {
    pub fn new(
        n: usize,
        community_sizes: Vec<usize>,
        connectivity: Array2<f64>,
    ) -> Result<Self, GraphModelError> {
        let spec = Self {
            n,
            community_sizes,
            connectivity,
            self_loops: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_self_loops(mut self, yes: bool) -> Self {
        self.self_loops = yes;
        self
    }

    pub fn validate(&self) -> Result<(), GraphModelError> {
        if self.community_sizes.iter().any(|&s| s == 0) {
            return Err(GraphModelError::EmptyCommunity);
        }
        let sum: usize = self.community_sizes.iter().sum();
        if sum != self.n {
            return Err(GraphModelError::SizesMismatch { sum, n: self.n });
        }
        let k = self.community_sizes.len();
        let (rows, cols) = self.connectivity.dim();
        if rows != k || cols != k {
            return Err(GraphModelError::NotSquare { rows, cols });
        }
        for a in 0..k {
            for b in a..k {
                let v = self.connectivity[(a, b)];
                if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                    return Err(GraphModelError::ProbabilityOutOfRange {
                        i: a,
                        j: b,
                        value: v,
                    });
                }
                if self.connectivity[(b, a)] != v {
                    return Err(GraphModelError::Asymmetric { i: a, j: b });
                }
            }
        }
        Ok(())
    }

    /// Block label of each vertex; vertices are assigned contiguously in
    /// the order of `community_sizes`.
    pub fn membership(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n);
        for (block, &size) in self.community_sizes.iter().enumerate() {
            out.extend(std::iter::repeat_n(block, size));
        }
        out
    }

    /// Convenience for the two-equal-community model with intra probability
    /// `a / n` and inter probability `b / n`.
    pub fn two_block(n: usize, a: f64, b: f64) -> Result<Self, GraphModelError> {
        let half = n / 2;
        let conn = ndarray::array![[a / n as f64, b / n as f64], [b / n as f64, a / n as f64]];
        Self::new(n, vec![half, n - half], conn)
    }
}

/// Builds `P = Z B Z^T` for the block membership implied by
/// `community_sizes`. Diagonal entries equal the within-block probability
/// unless self-loops are disabled.
pub fn build_sbm_mean(spec: &SbmSpec) -> Result<MeanMatrix, GraphModelError> {
    spec.validate()?;
    let blocks = spec.membership();
    let n = spec.n;
    let mut entries = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            entries[(i, j)] = spec.connectivity[(blocks[i], blocks[j])];
        }
    }
    if !spec.self_loops {
        for i in 0..n {
            entries[(i, i)] = 0.0;
        }
    }
    MeanMatrix::new(entries, ModelTag::Sbm)
}

/// Logistic graphon spec: `p_ij = 1 / (k (1 + exp(-U_i - U_j)))` with
/// i.i.d. `U ~ Unif(0, 1)` latent positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphonSpec {
    pub n: usize,
    pub k_scale: f64,
    pub self_loops: bool,
}

impl GraphonSpec {
    pub fn new(n: usize, k_scale: f64) -> Result<Self, GraphModelError> {
        if !(k_scale >= 1.0) {
            return Err(GraphModelError::ScaleTooSmall { k: k_scale });
        }
        Ok(Self {
            n,
            k_scale,
            self_loops: true,
        })
    }

    pub fn with_self_loops(mut self, yes: bool) -> Self {
        self.self_loops = yes;
        self
    }
}

/// The logistic graphon kernel.
#[inline]
pub fn graphon_kernel(k_scale: f64, x: f64, y: f64) -> f64 {
    1.0 / (k_scale * (1.0 + (-x - y).exp()))
}

/// Evaluates the graphon at explicit latent positions. This is the
/// deterministic half of [`sample_graphon_mean`], split out so tests can
/// pin the positions.
pub fn graphon_mean_from_positions(
    positions: &[f64],
    k_scale: f64,
    self_loops: bool,
) -> Result<MeanMatrix, GraphModelError> {
    if !(k_scale >= 1.0) {
        return Err(GraphModelError::ScaleTooSmall { k: k_scale });
    }
    let n = positions.len();
    let mut entries = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = if i == j && !self_loops {
                0.0
            } else {
                graphon_kernel(k_scale, positions[i], positions[j])
            };
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    MeanMatrix::new(entries, ModelTag::Graphon)
}

/// Draws latent positions from the seeded stream and evaluates the graphon.
/// Deterministic given `seed`.
pub fn sample_graphon_mean(spec: &GraphonSpec, seed: u64) -> Result<MeanMatrix, GraphModelError> {
    let mut stream = rng::stream(seed, rng::ctx::GRAPHON, 0, 0);
    let positions: Vec<f64> = (0..spec.n).map(|_| stream.random::<f64>()).collect();
    graphon_mean_from_positions(&positions, spec.k_scale, spec.self_loops)
}
