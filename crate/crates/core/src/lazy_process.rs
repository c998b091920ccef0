//! Generators for lazy IER network sequences, plus exact per-edge oracles.
//!
//! Three generators share the same sparse layer representation:
//!
//! - [`simulate`]: the direct Markov recursion. Layer 1 is drawn entrywise
//!   from `Bernoulli(p_ij)`; afterwards each edge keeps its state with
//!   probability `alpha` and otherwise resamples.
//! - [`renewal_simulate`]: an equivalent construction that draws i.i.d.
//!   `Geometric(1 - alpha)` holding times and refreshes the edge at each
//!   renewal. Distributionally identical to [`simulate`]; returns the
//!   renewal bookkeeping so tests can check it directly.
//! - [`simulate_piecewise`]: a single changepoint at epoch `tau`. Layers up
//!   to `tau` use mean `P`; at `tau + 1` each edge sticks with probability
//!   `alpha` or refreshes from `Q`, and the process continues with `Q`.
//!
//! Every unordered edge `(i, j)` owns a private substream keyed by
//! `(seed, i, j)`, consumed in layer order: one uniform for the stick coin,
//! one more when refreshing. Edges are therefore mutually independent and
//! the output is reproducible bit for bit regardless of evaluation order.
//!
//! The oracles [`edge_moments`] (exact mean/variance/lag covariances of the
//! aggregated edge count) and [`edge_sum_distribution`] (exact distribution
//! of the aggregated count by dynamic programming) are the reference points
//! for the simulator equivalence tests.

use ndarray::Array2;
use rand::Rng;
use rand_pcg::Pcg64Mcg;
use thiserror::Error;

use crate::graph_model::MeanMatrix;
use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum LazyProcessError {
    #[error("stickiness alpha = {0} outside [0, 1)")]
    AlphaOutOfRange(f64),
    #[error("layer count must be at least 1")]
    NoLayers,
    #[error("mean matrices have different sizes: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("changepoint tau = {tau} outside [1, {max}]")]
    TauOutOfRange { tau: usize, max: usize },
    #[error("edge-sum oracle supports T <= 64, got {0}")]
    OracleScale(usize),
    #[error("edge list parse error at line {line}: {message}")]
    EdgeList { line: usize, message: String },
}

/// Parameters of a (stationary) lazy IER process.
#[derive(Debug, Clone)]
pub struct LazyProcessParams {
    pub mean: MeanMatrix,
    pub alpha: f64,
    pub num_layers: usize,
}

impl LazyProcessParams {
    pub fn new(mean: MeanMatrix, alpha: f64, num_layers: usize) -> Result<Self, LazyProcessError> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(LazyProcessError::AlphaOutOfRange(alpha));
        }
        if num_layers == 0 {
            return Err(LazyProcessError::NoLayers);
        }
        Ok(Self {
            mean,
            alpha,
            num_layers,
        })
    }
}

/// Generation metadata carried along with a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamsTag {
    pub alpha: f64,
    pub seed: u64,
    pub model: String,
}

/// A sequence of `T` symmetric binary adjacency matrices, stored as sorted
/// upper-triangular edge lists (`i <= j`).
#[derive(Debug, Clone)]
pub struct NetworkSequence {
    n: usize,
    layers: Vec<Vec<(u32, u32)>>,
    tag: ParamsTag,
}

impl NetworkSequence {
    /// Wraps explicit layers; edges are normalized to `i <= j`, sorted and
    /// deduplicated. Intended for fixtures and the edge-list reader.
    pub fn from_layers(
        n: usize,
        layers: Vec<Vec<(u32, u32)>>,
        tag: ParamsTag,
    ) -> Result<Self, LazyProcessError> {
        let mut norm = Vec::with_capacity(layers.len());
        for (t, layer) in layers.into_iter().enumerate() {
            let mut edges: Vec<(u32, u32)> = layer
                .into_iter()
                .map(|(i, j)| if i <= j { (i, j) } else { (j, i) })
                .collect();
            edges.sort_unstable();
            edges.dedup();
            if let Some(&(_, j)) = edges.iter().find(|&&(_, j)| j as usize >= n) {
                return Err(LazyProcessError::EdgeList {
                    line: t + 2,
                    message: format!("vertex {} out of range for n = {}", j, n),
                });
            }
            norm.push(edges);
        }
        if norm.is_empty() {
            return Err(LazyProcessError::NoLayers);
        }
        Ok(Self {
            n,
            layers: norm,
            tag,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn tag(&self) -> &ParamsTag {
        &self.tag
    }

    /// Edges of layer `t` (0-based), sorted upper-triangular.
    pub fn layer_edges(&self, t: usize) -> &[(u32, u32)] {
        &self.layers[t]
    }

    pub fn layers(&self) -> &[Vec<(u32, u32)>] {
        &self.layers
    }

    /// Presence of edge `(i, j)` in layer `t`; order-insensitive.
    pub fn edge_present(&self, t: usize, i: u32, j: u32) -> bool {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.layers[t].binary_search(&key).is_ok()
    }

    /// Dense 0/1 materialization of layer `t`. Guarded to moderate sizes;
    /// the sparse representation is the primary one.
    pub fn layer_dense(&self, t: usize) -> Array2<f64> {
        assert!(self.n <= 2048, "dense materialization limited to n <= 2048");
        let mut a = Array2::zeros((self.n, self.n));
        for &(i, j) in &self.layers[t] {
            a[(i as usize, j as usize)] = 1.0;
            a[(j as usize, i as usize)] = 1.0;
        }
        a
    }

    /// Layered edge-list text format: header `n T alpha`, then one line
    /// `t i j` per present edge (1-based, `i <= j`). Round-trip exact.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} {} {}\n",
            self.n,
            self.num_layers(),
            self.tag.alpha
        ));
        for (t, layer) in self.layers.iter().enumerate() {
            for &(i, j) in layer {
                out.push_str(&format!("{} {} {}\n", t + 1, i + 1, j + 1));
            }
        }
        out
    }

    /// Parses the format written by [`NetworkSequence::to_edge_list`].
    pub fn from_edge_list(text: &str) -> Result<Self, LazyProcessError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(LazyProcessError::EdgeList {
            line: 1,
            message: "empty input".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(LazyProcessError::EdgeList {
                line: 1,
                message: "header must be `n T alpha`".into(),
            });
        }
        let parse_err = |line: usize, what: &str| LazyProcessError::EdgeList {
            line,
            message: format!("bad {what}"),
        };
        let n: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(1, "vertex count"))?;
        let t_len: usize = fields[1].parse().map_err(|_| parse_err(1, "layer count"))?;
        let alpha: f64 = fields[2].parse().map_err(|_| parse_err(1, "alpha"))?;
        let mut layers = vec![Vec::new(); t_len];
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(LazyProcessError::EdgeList {
                    line: idx + 1,
                    message: "expected `t i j`".into(),
                });
            }
            let t: usize = parts[0]
                .parse()
                .map_err(|_| parse_err(idx + 1, "layer index"))?;
            let i: u32 = parts[1].parse().map_err(|_| parse_err(idx + 1, "vertex"))?;
            let j: u32 = parts[2].parse().map_err(|_| parse_err(idx + 1, "vertex"))?;
            if t == 0 || t > t_len {
                return Err(LazyProcessError::EdgeList {
                    line: idx + 1,
                    message: format!("layer {t} outside 1..={t_len}"),
                });
            }
            if i == 0 || j == 0 || i > j || j as usize > n {
                return Err(LazyProcessError::EdgeList {
                    line: idx + 1,
                    message: format!("edge ({i}, {j}) must satisfy 1 <= i <= j <= {n}"),
                });
            }
            layers[t - 1].push((i - 1, j - 1));
        }
        Self::from_layers(
            n,
            layers,
            ParamsTag {
                alpha,
                seed: 0,
                model: "edge-list".into(),
            },
        )
    }
}

/// Renewal bookkeeping for one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRenewal {
    pub i: u32,
    pub j: u32,
    /// Renewal epochs `S^(k) <= T`, strictly increasing.
    pub renewal_times: Vec<usize>,
    /// Number of renewals by time `T` (equals `renewal_times.len()`).
    pub renewal_count: usize,
    /// Bernoulli refresh values in draw order, starting with the initial
    /// value in force from epoch 1.
    pub refresh_indicators: Vec<bool>,
}

/// Renewal bookkeeping for a whole sequence (edges with positive mean only).
#[derive(Debug, Clone, Default)]
pub struct RenewalTrace {
    pub edges: Vec<EdgeRenewal>,
}

impl RenewalTrace {
    pub fn edge(&self, i: u32, j: u32) -> Option<&EdgeRenewal> {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.edges.iter().find(|e| (e.i, e.j) == key)
    }
}

#[inline]
fn bernoulli(stream: &mut Pcg64Mcg, p: f64) -> bool {
    stream.random::<f64>() < p
}

/// One trajectory of the two-state edge chain, possibly with a mean switch
/// after `tau`. The stick coin is drawn first at every step; the refresh
/// value only when refreshing.
fn edge_path(
    stream: &mut Pcg64Mcg,
    p_pre: f64,
    p_post: f64,
    tau: usize,
    alpha: f64,
    t_len: usize,
    path: &mut Vec<bool>,
) {
    path.clear();
    let p_at = |t: usize| if t <= tau { p_pre } else { p_post };
    let mut state = bernoulli(stream, p_at(1));
    path.push(state);
    for t in 2..=t_len {
        let stick = stream.random::<f64>() < alpha;
        if !stick {
            state = bernoulli(stream, p_at(t));
        }
        path.push(state);
    }
}

fn collect_layers(
    n: usize,
    t_len: usize,
    mut per_edge: impl FnMut(u32, u32, &mut Vec<bool>) -> bool,
) -> Vec<Vec<(u32, u32)>> {
    let mut layers = vec![Vec::new(); t_len];
    let mut path = Vec::with_capacity(t_len);
    for i in 0..n as u32 {
        for j in i..n as u32 {
            if !per_edge(i, j, &mut path) {
                continue;
            }
            for (t, &present) in path.iter().enumerate() {
                if present {
                    layers[t].push((i, j));
                }
            }
        }
    }
    layers
}

/// Direct Markov simulation of the lazy IER process. Deterministic given
/// `seed`; edges with `p_ij = 0` are skipped (their trajectory is
/// identically zero and their substream untouched).
pub fn simulate(params: &LazyProcessParams, seed: u64) -> NetworkSequence {
    let n = params.mean.n();
    let t_len = params.num_layers;
    let layers = collect_layers(n, t_len, |i, j, path| {
        let p = params.mean.get(i as usize, j as usize);
        if p == 0.0 {
            return false;
        }
        let mut stream = rng::stream(seed, rng::ctx::LAZY_EDGE, i, j);
        edge_path(&mut stream, p, p, t_len, params.alpha, t_len, path);
        true
    });
    NetworkSequence {
        n,
        layers,
        tag: ParamsTag {
            alpha: params.alpha,
            seed,
            model: format!("lazy-ier:{}", params.mean.model_tag()),
        },
    }
}

/// Piecewise lazy IER process with a single changepoint at epoch `tau`:
/// layers `1..=tau` have mean `P`, the transition into `tau + 1` sticks
/// with probability `alpha` or refreshes from `Q`, and layers beyond
/// continue with mean `Q`.
pub fn simulate_piecewise(
    pre: &LazyProcessParams,
    q: &MeanMatrix,
    tau: usize,
    seed: u64,
) -> Result<NetworkSequence, LazyProcessError> {
    let n = pre.mean.n();
    if q.n() != n {
        return Err(LazyProcessError::DimensionMismatch(n, q.n()));
    }
    let t_len = pre.num_layers;
    if tau == 0 || tau + 1 > t_len {
        return Err(LazyProcessError::TauOutOfRange {
            tau,
            max: t_len.saturating_sub(1),
        });
    }
    let layers = collect_layers(n, t_len, |i, j, path| {
        let p = pre.mean.get(i as usize, j as usize);
        let pq = q.get(i as usize, j as usize);
        if p == 0.0 && pq == 0.0 {
            return false;
        }
        let mut stream = rng::stream(seed, rng::ctx::LAZY_EDGE, i, j);
        edge_path(&mut stream, p, pq, tau, pre.alpha, t_len, path);
        true
    });
    Ok(NetworkSequence {
        n,
        layers,
        tag: ParamsTag {
            alpha: pre.alpha,
            seed,
            model: format!("piecewise-lazy-ier:tau={tau}"),
        },
    })
}

/// Geometric(1 - alpha) on support {1, 2, ...} by inverse transform. One
/// uniform is consumed even when `alpha = 0` so the stream layout does not
/// depend on the parameter.
fn geometric_gap(stream: &mut Pcg64Mcg, alpha: f64) -> usize {
    let u = 1.0 - stream.random::<f64>(); // in (0, 1]
    if alpha == 0.0 {
        return 1;
    }
    let g = 1.0 + (u.ln() / alpha.ln()).floor();
    g as usize
}

/// Renewal construction of the same process: i.i.d. geometric holding
/// times, a fresh `Bernoulli(p_ij)` value at each renewal. Returns the
/// induced sequence together with the per-edge renewal trace.
pub fn renewal_simulate(params: &LazyProcessParams, seed: u64) -> (NetworkSequence, RenewalTrace) {
    let n = params.mean.n();
    let t_len = params.num_layers;
    let mut trace = RenewalTrace::default();
    let layers = collect_layers(n, t_len, |i, j, path| {
        let p = params.mean.get(i as usize, j as usize);
        if p == 0.0 {
            return false;
        }
        let mut stream = rng::stream(seed, rng::ctx::RENEWAL_EDGE, i, j);
        path.clear();
        path.resize(t_len, false);
        let mut renewal_times = Vec::new();
        let mut indicators = Vec::new();
        let mut value = bernoulli(&mut stream, p);
        indicators.push(value);
        let mut s_prev = 0usize;
        loop {
            let gap = geometric_gap(&mut stream, params.alpha);
            let s = s_prev + gap;
            for t in (s_prev + 1)..=s.min(t_len) {
                path[t - 1] = value;
            }
            if s >= t_len {
                if s == t_len {
                    renewal_times.push(s);
                }
                break;
            }
            renewal_times.push(s);
            value = bernoulli(&mut stream, p);
            indicators.push(value);
            s_prev = s;
        }
        trace.edges.push(EdgeRenewal {
            i,
            j,
            renewal_count: renewal_times.len(),
            renewal_times,
            refresh_indicators: indicators,
        });
        true
    });
    let seq = NetworkSequence {
        n,
        layers,
        tag: ParamsTag {
            alpha: params.alpha,
            seed,
            model: format!("renewal-lazy-ier:{}", params.mean.model_tag()),
        },
    };
    (seq, trace)
}

/// Exact moments of the aggregated edge count `a = sum_t A^(t)` for a
/// single edge with probability `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMoments {
    /// `E a = T p`.
    pub mean: f64,
    /// Exact variance, from the lag covariance structure.
    pub variance: f64,
    /// `Cov(A^(s), A^(s+h)) = p (1 - p) alpha^h` for `h = 1..T-1`.
    pub lag_cov: Vec<f64>,
}

/// Closed-form moments of the aggregated count. The chain is stationary,
/// so `Var = T p(1-p) + 2 sum_h (T - h) p(1-p) alpha^h`.
pub fn edge_moments(p: f64, alpha: f64, t_len: usize) -> EdgeMoments {
    assert!((0.0..=1.0).contains(&p), "p = {p} outside [0, 1]");
    assert!(
        (0.0..1.0).contains(&alpha),
        "alpha = {alpha} outside [0, 1)"
    );
    assert!(t_len >= 1, "need at least one layer");
    let base = p * (1.0 - p);
    let lag_cov: Vec<f64> = (1..t_len).map(|h| base * alpha.powi(h as i32)).collect();
    let mut variance = t_len as f64 * base;
    for (h, &cov) in lag_cov.iter().enumerate() {
        variance += 2.0 * (t_len - (h + 1)) as f64 * cov;
    }
    EdgeMoments {
        mean: t_len as f64 * p,
        variance,
        lag_cov,
    }
}

/// The variance bound `T p (3 - alpha) / (1 - alpha)` that the exact
/// variance satisfies in the `sqrt(T) > log_{1/alpha}(T)` regime.
pub fn edge_variance_bound(p: f64, alpha: f64, t_len: usize) -> f64 {
    t_len as f64 * p * (3.0 - alpha) / (1.0 - alpha)
}

/// Exact distribution of the aggregated edge count over `{0, ..., T}` by
/// forward dynamic programming over (current state, running sum).
pub fn edge_sum_distribution(
    p: f64,
    alpha: f64,
    t_len: usize,
) -> Result<Vec<f64>, LazyProcessError> {
    assert!((0.0..=1.0).contains(&p), "p = {p} outside [0, 1]");
    assert!(
        (0.0..1.0).contains(&alpha),
        "alpha = {alpha} outside [0, 1)"
    );
    if t_len > 64 {
        return Err(LazyProcessError::OracleScale(t_len));
    }
    if t_len == 0 {
        return Err(LazyProcessError::NoLayers);
    }
    // dp[s][state] after the current layer.
    let mut dp = vec![[0.0f64; 2]; t_len + 1];
    dp[0][0] = 1.0 - p;
    dp[1][1] = p;
    let trans = |from: usize, to: usize| -> f64 {
        let stick = if from == to { alpha } else { 0.0 };
        let refresh = (1.0 - alpha) * if to == 1 { p } else { 1.0 - p };
        stick + refresh
    };
    for _ in 2..=t_len {
        let mut next = vec![[0.0f64; 2]; t_len + 1];
        for (s, probs) in dp.iter().enumerate() {
            for (from, &mass) in probs.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for to in 0..2 {
                    next[s + to][to] += mass * trans(from, to);
                }
            }
        }
        dp = next;
    }
    Ok(dp.iter().map(|probs| probs[0] + probs[1]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model;
    use crate::stats;

    fn single_edge_params(p: f64, alpha: f64, t_len: usize) -> LazyProcessParams {
        // A 2-vertex network without self-loops carries exactly one edge.
        let mean = graph_model::MeanMatrix::constant(2, p, false).unwrap();
        LazyProcessParams::new(mean, alpha, t_len).unwrap()
    }

    /// Brute-force moments by enumerating all 2^T trajectories of one edge.
    fn enumerate_moments(p: f64, alpha: f64, t_len: usize) -> (f64, f64) {
        assert!(t_len <= 16);
        let mut mean = 0.0;
        let mut second = 0.0;
        for mask in 0u32..(1 << t_len) {
            let bit = |t: usize| (mask >> t) & 1 == 1;
            let mut prob = if bit(0) { p } else { 1.0 - p };
            for t in 1..t_len {
                let stay = if bit(t) == bit(t - 1) { alpha } else { 0.0 };
                let refresh = (1.0 - alpha) * if bit(t) { p } else { 1.0 - p };
                prob *= stay + refresh;
            }
            let s = (0..t_len).filter(|&t| bit(t)).count() as f64;
            mean += prob * s;
            second += prob * s * s;
        }
        (mean, second - mean * mean)
    }

    #[test]
    fn moments_match_trajectory_enumeration() {
        let (mean, var) = enumerate_moments(0.5, 0.5, 3);
        let m = edge_moments(0.5, 0.5, 3);
        assert!((m.mean - mean).abs() < 1e-12);
        assert!(
            (m.variance - var).abs() < 1e-12,
            "{} vs {}",
            m.variance,
            var
        );
    }

    #[test]
    fn moments_single_layer() {
        let m = edge_moments(0.3, 0.7, 1);
        assert_eq!(m.mean, 0.3);
        assert!((m.variance - 0.21).abs() < 1e-15);
        assert!(m.lag_cov.is_empty());
    }

    #[test]
    fn variance_respects_paper_bound_on_grid() {
        for &p in &[0.1f64, 0.5, 0.9] {
            for &alpha in &[0.0f64, 0.3, 0.6, 0.9] {
                for t_len in 1..=20usize {
                    let cond = if alpha == 0.0 {
                        true
                    } else {
                        (t_len as f64).sqrt() > (t_len as f64).ln() / (1.0 / alpha).ln()
                    };
                    if !cond {
                        continue;
                    }
                    let m = edge_moments(p, alpha, t_len);
                    let bound = edge_variance_bound(p, alpha, t_len);
                    assert!(
                        m.variance <= bound + 1e-12,
                        "p={p} alpha={alpha} T={t_len}: {} > {}",
                        m.variance,
                        bound
                    );
                }
            }
        }
    }

    #[test]
    fn distribution_point_mass_at_t_when_p_one() {
        let d = edge_sum_distribution(1.0, 0.5, 4).unwrap();
        assert!((d[4] - 1.0).abs() < 1e-15);
        assert!(d[..4].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn distribution_binomial_when_alpha_zero() {
        let d = edge_sum_distribution(0.5, 0.0, 2).unwrap();
        assert!((d[0] - 0.25).abs() < 1e-15);
        assert!((d[1] - 0.5).abs() < 1e-15);
        assert!((d[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn distribution_two_step_sticky_chain() {
        // P(sum = 0) = (1-p)(alpha + (1-alpha)(1-p)) with p = 0.5, alpha = 0.9.
        let d = edge_sum_distribution(0.5, 0.9, 2).unwrap();
        assert!((d[0] - 0.475).abs() < 1e-12);
        assert!((d[1] - 0.05).abs() < 1e-12);
        assert!((d[2] - 0.475).abs() < 1e-12);
    }

    #[test]
    fn distribution_sums_to_one() {
        for &(p, alpha, t_len) in &[(0.2, 0.3, 7), (0.9, 0.95, 33), (0.5, 0.0, 64)] {
            let d = edge_sum_distribution(p, alpha, t_len).unwrap();
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(edge_sum_distribution(0.5, 0.5, 65).is_err());
    }

    #[test]
    fn simulate_is_deterministic() {
        let params = single_edge_params(0.5, 0.6, 8);
        let a = simulate(&params, 1234);
        let b = simulate(&params, 1234);
        assert_eq!(a.layers(), b.layers());
        let c = simulate(&params, 1235);
        assert_ne!(a.layers(), c.layers());
    }

    #[test]
    fn independent_layers_when_alpha_zero() {
        let params = single_edge_params(0.5, 0.0, 2);
        let reps = 10_000;
        let mut x = Vec::with_capacity(reps);
        let mut y = Vec::with_capacity(reps);
        for r in 0..reps {
            let seq = simulate(&params, r as u64);
            x.push(seq.edge_present(0, 0, 1) as u8 as f64);
            y.push(seq.edge_present(1, 0, 1) as u8 as f64);
        }
        let corr = correlation(&x, &y);
        assert!(
            corr.abs() < 0.05,
            "lag-1 autocorrelation {corr} at alpha = 0"
        );
    }

    #[test]
    fn lag_autocorrelation_decays_geometrically() {
        // Stationary chain: Corr(A^(1), A^(1+h)) = alpha^h.
        let alpha = 0.8f64;
        let params = single_edge_params(0.5, alpha, 4);
        let reps = 10_000usize;
        let mut layers: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(reps)).collect();
        for r in 0..reps {
            let seq = simulate(&params, 777 + r as u64);
            for (t, layer) in layers.iter_mut().enumerate() {
                layer.push(seq.edge_present(t, 0, 1) as u8 as f64);
            }
        }
        for h in 1..4 {
            let corr = correlation(&layers[0], &layers[h]);
            let se = 3.0 / (reps as f64).sqrt();
            assert!(
                (corr - alpha.powi(h as i32)).abs() < 3.0 * se + 0.01,
                "lag {h}: corr {corr} vs {}",
                alpha.powi(h as i32)
            );
        }
    }

    fn correlation(x: &[f64], y: &[f64]) -> f64 {
        let mx = stats::mean(x);
        let my = stats::mean(y);
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for (a, b) in x.iter().zip(y) {
            sxy += (a - mx) * (b - my);
            sxx += (a - mx) * (a - mx);
            syy += (b - my) * (b - my);
        }
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn renewal_gaps_all_one_when_alpha_zero() {
        let params = single_edge_params(0.5, 0.0, 6);
        let (_, trace) = renewal_simulate(&params, 42);
        let edge = trace.edge(0, 1).unwrap();
        assert_eq!(edge.renewal_times, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(edge.renewal_count, 6);
    }

    #[test]
    fn renewal_count_has_binomial_mean() {
        let t_len = 10usize;
        let alpha = 0.3f64;
        let params = single_edge_params(0.5, alpha, t_len);
        let reps = 4000;
        let counts: Vec<f64> = (0..reps)
            .map(|r| {
                let (_, trace) = renewal_simulate(&params, 9000 + r as u64);
                trace.edge(0, 1).unwrap().renewal_count as f64
            })
            .collect();
        let want = t_len as f64 * (1.0 - alpha);
        let sd = (t_len as f64 * alpha * (1.0 - alpha)).sqrt();
        let se = sd / (reps as f64).sqrt();
        let got = stats::mean(&counts);
        assert!(
            (got - want).abs() < 3.0 * se,
            "mean renewal count {got} vs {want}"
        );
    }

    #[test]
    fn renewal_times_strictly_increasing() {
        let params = single_edge_params(0.4, 0.85, 32);
        for seed in 0..50 {
            let (_, trace) = renewal_simulate(&params, seed);
            let e = trace.edge(0, 1).unwrap();
            assert!(e.renewal_times.windows(2).all(|w| w[0] < w[1]));
            assert!(e.renewal_times.iter().all(|&s| (1..=32).contains(&s)));
        }
    }

    #[test]
    fn renewal_matches_oracle_distribution() {
        // T = 3, p = 0.5, alpha = 0.5: chi-square against the DP oracle.
        let (p, alpha, t_len) = (0.5, 0.5, 3usize);
        let params = single_edge_params(p, alpha, t_len);
        let reps = 100_000usize;
        let mut counts = vec![0u64; t_len + 1];
        for r in 0..reps {
            let (seq, _) = renewal_simulate(&params, r as u64);
            let s: usize = (0..t_len).map(|t| seq.edge_present(t, 0, 1) as usize).sum();
            counts[s] += 1;
        }
        let expected: Vec<f64> = edge_sum_distribution(p, alpha, t_len)
            .unwrap()
            .iter()
            .map(|q| q * reps as f64)
            .collect();
        let pval = stats::chi_square_gof(&counts, &expected);
        assert!(pval > 0.01, "renewal GOF p-value {pval}");
    }

    #[test]
    fn piecewise_degenerate_switch() {
        // alpha = 0, P = 0, Q = 1, tau = 2, T = 4: the aggregated count is 2.
        let p = graph_model::MeanMatrix::constant(3, 0.0, false).unwrap();
        let q = graph_model::MeanMatrix::constant(3, 1.0, false).unwrap();
        let params = LazyProcessParams::new(p, 0.0, 4).unwrap();
        let seq = simulate_piecewise(&params, &q, 2, 5).unwrap();
        for t in 0..2 {
            assert!(seq.layer_edges(t).is_empty());
        }
        for t in 2..4 {
            assert_eq!(seq.layer_edges(t).len(), 3); // all off-diagonal pairs
        }
    }

    #[test]
    fn piecewise_equals_stationary_when_means_agree() {
        // P = Q: the edge-sum distribution must match the stationary oracle.
        let (p, alpha, t_len, tau) = (0.4, 0.5, 4usize, 2usize);
        let params = single_edge_params(p, alpha, t_len);
        let reps = 40_000usize;
        let mut counts = vec![0u64; t_len + 1];
        for r in 0..reps {
            let seq = simulate_piecewise(&params, &params.mean.clone(), tau, r as u64).unwrap();
            let s: usize = (0..t_len).map(|t| seq.edge_present(t, 0, 1) as usize).sum();
            counts[s] += 1;
        }
        let expected: Vec<f64> = edge_sum_distribution(p, alpha, t_len)
            .unwrap()
            .iter()
            .map(|q| q * reps as f64)
            .collect();
        let pval = stats::chi_square_gof(&counts, &expected);
        assert!(pval > 0.01, "piecewise GOF p-value {pval}");
    }

    #[test]
    fn piecewise_layer_means_switch_at_tau() {
        // With the stick-to-previous transition at tau + 1, the exact layer
        // mean for t > tau is q + alpha^(t - tau) (p - q): the switch decays
        // geometrically instead of being instantaneous. At alpha = 0 the
        // means are exactly p up to tau and q beyond.
        for &(alpha, reps) in &[(0.0f64, 20_000usize), (0.6, 20_000)] {
            let (p_val, q_val, t_len, tau) = (0.2, 0.7, 6usize, 3usize);
            let p = graph_model::MeanMatrix::constant(2, p_val, false).unwrap();
            let q = graph_model::MeanMatrix::constant(2, q_val, false).unwrap();
            let params = LazyProcessParams::new(p, alpha, t_len).unwrap();
            let mut freq = vec![0.0; t_len];
            for r in 0..reps {
                let seq = simulate_piecewise(&params, &q, tau, r as u64).unwrap();
                for (t, f) in freq.iter_mut().enumerate() {
                    *f += seq.edge_present(t, 0, 1) as u8 as f64;
                }
            }
            for (t, f) in freq.iter().enumerate() {
                let epoch = t + 1;
                let want = if epoch <= tau {
                    p_val
                } else {
                    q_val + alpha.powi((epoch - tau) as i32) * (p_val - q_val)
                };
                let se = (want * (1.0 - want) / reps as f64).sqrt();
                let got = f / reps as f64;
                assert!(
                    (got - want).abs() < 3.0 * se + 1e-3,
                    "alpha {alpha} layer {epoch}: mean {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn piecewise_rejects_bad_arguments() {
        let p = graph_model::MeanMatrix::constant(2, 0.5, false).unwrap();
        let q3 = graph_model::MeanMatrix::constant(3, 0.5, false).unwrap();
        let params = LazyProcessParams::new(p.clone(), 0.5, 4).unwrap();
        assert!(matches!(
            simulate_piecewise(&params, &q3, 2, 0).unwrap_err(),
            LazyProcessError::DimensionMismatch(2, 3)
        ));
        assert!(matches!(
            simulate_piecewise(&params, &p, 4, 0).unwrap_err(),
            LazyProcessError::TauOutOfRange { .. }
        ));
    }

    #[test]
    fn edge_list_round_trip_exact() {
        let spec = graph_model::SbmSpec::two_block(12, 7.0, 1.0).unwrap();
        let mean = graph_model::build_sbm_mean(&spec).unwrap();
        let params = LazyProcessParams::new(mean, 0.25, 5).unwrap();
        let seq = simulate(&params, 31);
        let text = seq.to_edge_list();
        let parsed = NetworkSequence::from_edge_list(&text).unwrap();
        assert_eq!(parsed.layers(), seq.layers());
        assert_eq!(parsed.tag().alpha, 0.25);
        assert_eq!(parsed.to_edge_list(), text);
    }

    #[test]
    fn edge_list_parse_errors_carry_line_numbers() {
        let bad = "3 2 0.5\n1 2 1\n";
        match NetworkSequence::from_edge_list(bad) {
            Err(LazyProcessError::EdgeList { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected edge list error, got {other:?}"),
        }
        let bad_layer = "3 2 0.5\n5 1 2\n";
        assert!(NetworkSequence::from_edge_list(bad_layer).is_err());
    }
}
