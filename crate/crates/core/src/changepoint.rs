//! CUSUM statistic and single-changepoint estimator for network sequences.
//!
//! The statistic at a split point `t` is
//!
//! ```text
//! S_xi(t) = ((t/T)(1 - t/T))^xi * || mean(A^(1..t)) - mean(A^(t+1..T)) ||
//! ```
//!
//! with `||.||` the operator norm, and the estimate is the argmax of
//! `S_xi` over the buffered window `[Lambda, T - Lambda]`, ties broken
//! toward the smallest `t`. The population profile has a closed form in
//! terms of `||P - Q||` that rises strictly up to the true changepoint and
//! falls strictly beyond it; [`population_cusum`] implements it.

use ndarray::Array2;
use rand::Rng;
use std::collections::BTreeSet;
use thiserror::Error;

use crate::graph_model::{GraphModelError, MeanMatrix, ModelTag};
use crate::lazy_process::NetworkSequence;
use crate::rng;
use crate::spectral::{self, SpectralError};

#[derive(Debug, Error, PartialEq)]
pub enum ChangepointError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    GraphModel(#[from] GraphModelError),
    #[error("boundary buffer Lambda = {lambda} invalid for T = {t_total}: need 1 <= Lambda <= T - Lambda")]
    LambdaOutOfRange { lambda: usize, t_total: usize },
    #[error("requested {delta_e} perturbed pairs but only {max} unordered pairs exist")]
    TooManyPairs { delta_e: usize, max: usize },
    #[error("changepoint tau = {tau} outside [1, {max}]")]
    TauOutOfRange { tau: usize, max: usize },
    #[error("weight exponent xi = {0} outside [0, 1]")]
    XiOutOfRange(f64),
}

/// Pre/post-change means and CUSUM parameters.
#[derive(Debug, Clone)]
pub struct ChangepointSpec {
    pub p: MeanMatrix,
    pub q: MeanMatrix,
    pub tau: usize,
    pub xi: f64,
    pub lambda: usize,
}

impl ChangepointSpec {
    pub fn new(
        p: MeanMatrix,
        q: MeanMatrix,
        tau: usize,
        xi: f64,
        lambda: usize,
    ) -> Result<Self, ChangepointError> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(ChangepointError::XiOutOfRange(xi));
        }
        Ok(Self {
            p,
            q,
            tau,
            xi,
            lambda,
        })
    }

    /// `kappa = min(tau, T - tau)`; the buffer must satisfy
    /// `Lambda <= kappa`.
    pub fn kappa(&self, t_total: usize) -> usize {
        self.tau.min(t_total - self.tau)
    }

    pub fn validate(&self, t_total: usize) -> Result<(), ChangepointError> {
        if self.tau == 0 || self.tau >= t_total {
            return Err(ChangepointError::TauOutOfRange {
                tau: self.tau,
                max: t_total - 1,
            });
        }
        if self.lambda == 0 || self.lambda > self.kappa(t_total) {
            return Err(ChangepointError::LambdaOutOfRange {
                lambda: self.lambda,
                t_total,
            });
        }
        Ok(())
    }
}

/// The evaluated CUSUM profile over the window `[Lambda, T - Lambda]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CusumProfile {
    /// First split point evaluated (`Lambda`).
    pub t_start: usize,
    /// `S_xi(t)` for consecutive `t` starting at `t_start`.
    pub values: Vec<f64>,
    /// Estimated changepoint: smallest argmax of the profile.
    pub argmax: usize,
    /// Number of split points attaining the maximum.
    pub tie_count: usize,
}

impl CusumProfile {
    /// CSV export `t,S_xi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,S_xi\n");
        for (idx, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{:.11e}\n", self.t_start + idx, v));
        }
        out
    }
}

fn weight(t: usize, t_total: usize, xi: f64) -> f64 {
    let frac = t as f64 / t_total as f64;
    (frac * (1.0 - frac)).powf(xi)
}

fn add_layer(acc: &mut Array2<f64>, seq: &NetworkSequence, t: usize) {
    for &(i, j) in seq.layer_edges(t) {
        let (i, j) = (i as usize, j as usize);
        acc[(i, j)] += 1.0;
        if i != j {
            acc[(j, i)] += 1.0;
        }
    }
}

/// Weighted operator-norm difference between the mean of the first `t`
/// layers and the mean of the rest. `t` must lie in `[1, T - 1]`.
pub fn cusum_statistic(seq: &NetworkSequence, t: usize, xi: f64) -> Result<f64, SpectralError> {
    let t_total = seq.num_layers();
    assert!(
        t >= 1 && t < t_total,
        "split point t = {t} outside [1, {}]",
        t_total - 1
    );
    assert!((0.0..=1.0).contains(&xi), "xi = {xi} outside [0, 1]");
    let n = seq.n();
    let mut head = Array2::zeros((n, n));
    let mut tail = Array2::zeros((n, n));
    for s in 0..t {
        add_layer(&mut head, seq, s);
    }
    for s in t..t_total {
        add_layer(&mut tail, seq, s);
    }
    let diff = head / t as f64 - tail / (t_total - t) as f64;
    let norm = spectral::operator_norm_default(&diff)?;
    Ok(weight(t, t_total, xi) * norm)
}

/// Evaluates the CUSUM profile over `[Lambda, T - Lambda]` and returns the
/// argmax (smallest split point on ties).
pub fn estimate_changepoint(
    seq: &NetworkSequence,
    lambda: usize,
    xi: f64,
) -> Result<CusumProfile, ChangepointError> {
    let t_total = seq.num_layers();
    if lambda == 0 || 2 * lambda > t_total {
        return Err(ChangepointError::LambdaOutOfRange { lambda, t_total });
    }
    if !(0.0..=1.0).contains(&xi) {
        return Err(ChangepointError::XiOutOfRange(xi));
    }
    let n = seq.n();
    let mut total = Array2::zeros((n, n));
    for s in 0..t_total {
        add_layer(&mut total, seq, s);
    }
    let mut prefix: Array2<f64> = Array2::zeros((n, n));
    let t_end = t_total - lambda;
    let mut values = Vec::with_capacity(t_end - lambda + 1);
    for t in 1..=t_end {
        add_layer(&mut prefix, seq, t - 1);
        if t < lambda {
            continue;
        }
        let head = &prefix / t as f64;
        let tail = (&total - &prefix) / (t_total - t) as f64;
        let diff = head - tail;
        let norm = spectral::operator_norm_default(&diff)?;
        values.push(weight(t, t_total, xi) * norm);
    }
    let mut argmax = 0usize;
    for (idx, &v) in values.iter().enumerate() {
        if v > values[argmax] {
            argmax = idx;
        }
    }
    let max = values[argmax];
    let tie_count = values.iter().filter(|&&v| v == max).count();
    Ok(CusumProfile {
        t_start: lambda,
        values,
        argmax: lambda + argmax,
        tie_count,
    })
}

/// Closed-form population CUSUM profile at split point `t`:
///
/// ```text
/// t <= tau:  t^xi / (T-t)^(1-xi) * (T - tau) / T^(2 xi) * ||P - Q||
/// t >  tau:  (T-t)^xi / t^(1-xi) * tau / T^(2 xi) * ||P - Q||
/// ```
pub fn population_cusum(spec: &ChangepointSpec, t_total: usize, t: usize) -> f64 {
    assert!(
        t >= 1 && t < t_total,
        "split point t = {t} outside [1, {}]",
        t_total - 1
    );
    let diff = spec.p.entries() - spec.q.entries();
    let norm = spectral::operator_norm_unfailing(&diff);
    population_cusum_with_norm(spec.tau, spec.xi, t_total, t, norm)
}

fn population_cusum_with_norm(tau: usize, xi: f64, t_total: usize, t: usize, norm: f64) -> f64 {
    let tf = t as f64;
    let total = t_total as f64;
    let tauf = tau as f64;
    if t <= tau {
        tf.powf(xi) / (total - tf).powf(1.0 - xi) * (total - tauf) / total.powf(2.0 * xi) * norm
    } else {
        (total - tf).powf(xi) / tf.powf(1.0 - xi) * tauf / total.powf(2.0 * xi) * norm
    }
}

/// Population profile over all split points `1..T-1`; the matrix norm is
/// computed once.
pub fn population_cusum_profile(spec: &ChangepointSpec, t_total: usize) -> Vec<f64> {
    let diff = spec.p.entries() - spec.q.entries();
    let norm = spectral::operator_norm_unfailing(&diff);
    (1..t_total)
        .map(|t| population_cusum_with_norm(spec.tau, spec.xi, t_total, t, norm))
        .collect()
}

/// Number of unordered off-diagonal pairs on `n` vertices.
fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Decodes a pair index in `[0, n(n-1)/2)` to `(i, j)` with `i < j`, under
/// row-major ordering of the strict upper triangle.
fn decode_pair(mut idx: usize, n: usize) -> (usize, usize) {
    let mut i = 0usize;
    let mut row_len = n - 1;
    while idx >= row_len {
        idx -= row_len;
        i += 1;
        row_len -= 1;
    }
    (i, i + 1 + idx)
}

/// Perturbed mean: `delta_e` distinct unordered pairs are sampled without
/// replacement (Floyd's algorithm) and their probabilities increased by
/// `delta_p`, clipped at 1. Deterministic given `seed`.
pub fn build_perturbed_mean(
    p: &MeanMatrix,
    delta_e: usize,
    delta_p: f64,
    seed: u64,
) -> Result<MeanMatrix, ChangepointError> {
    let n = p.n();
    let max = pair_count(n);
    if delta_e > max {
        return Err(ChangepointError::TooManyPairs { delta_e, max });
    }
    let mut stream = rng::stream(seed, rng::ctx::PERTURB, 0, 0);
    let mut chosen: BTreeSet<usize> = BTreeSet::new();
    for k in (max - delta_e)..max {
        let r = stream.random_range(0..=k);
        if !chosen.insert(r) {
            chosen.insert(k);
        }
    }
    let mut entries = p.entries().clone();
    for &idx in &chosen {
        let (i, j) = decode_pair(idx, n);
        let v = (entries[(i, j)] + delta_p).min(1.0);
        entries[(i, j)] = v;
        entries[(j, i)] = v;
    }
    Ok(MeanMatrix::new(entries, ModelTag::Explicit)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model::{sample_graphon_mean, GraphonSpec};
    use crate::lazy_process::{NetworkSequence, ParamsTag};

    fn tag() -> ParamsTag {
        ParamsTag {
            alpha: 0.0,
            seed: 0,
            model: "fixture".into(),
        }
    }

    #[test]
    fn identical_layers_give_zero_statistic() {
        let layer = vec![(0u32, 1u32), (1, 2)];
        let seq = NetworkSequence::from_layers(
            3,
            vec![layer.clone(), layer.clone(), layer.clone(), layer],
            tag(),
        )
        .unwrap();
        for t in 1..4 {
            let s = cusum_statistic(&seq, t, 0.5).unwrap();
            assert!(s.abs() < 1e-12, "t = {t}: {s}");
        }
    }

    #[test]
    fn xi_zero_removes_the_weight() {
        let seq = NetworkSequence::from_layers(
            3,
            vec![vec![(0, 1)], vec![(0, 1), (1, 2)], vec![], vec![(0, 2)]],
            tag(),
        )
        .unwrap();
        for t in 1..4usize {
            let raw = cusum_statistic(&seq, t, 0.0).unwrap();
            let weighted = cusum_statistic(&seq, t, 0.5).unwrap();
            let w = ((t as f64 / 4.0) * (1.0 - t as f64 / 4.0)).sqrt();
            assert!((weighted - w * raw).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn statistic_matches_direct_dense_computation() {
        // T = 4, n = 3: independent dense evaluation of the weighted
        // difference's top absolute eigenvalue.
        let layers = vec![
            vec![(0u32, 1u32)],
            vec![(1, 2), (0, 2)],
            vec![(0, 1), (1, 2)],
            vec![],
        ];
        let seq = NetworkSequence::from_layers(3, layers, tag()).unwrap();
        for t in 1..4usize {
            let got = cusum_statistic(&seq, t, 0.5).unwrap();
            let mut head: Array2<f64> = Array2::zeros((3, 3));
            let mut tail: Array2<f64> = Array2::zeros((3, 3));
            for s in 0..t {
                head += &seq.layer_dense(s);
            }
            for s in t..4 {
                tail += &seq.layer_dense(s);
            }
            let diff = head / t as f64 - tail / (4 - t) as f64;
            let want = ((t as f64 / 4.0) * (1.0 - t as f64 / 4.0)).sqrt()
                * spectral::dense::operator_norm(&diff);
            assert!((got - want).abs() < 1e-9, "t = {t}: {got} vs {want}");
        }
    }

    #[test]
    fn deterministic_switch_is_located_exactly() {
        // Layers 1..tau empty, tau+1..T complete: argmax lands on tau.
        let n = 5u32;
        let complete: Vec<(u32, u32)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let tau = 3usize;
        let t_total = 8usize;
        let layers: Vec<Vec<(u32, u32)>> = (0..t_total)
            .map(|t| {
                if t < tau {
                    Vec::new()
                } else {
                    complete.clone()
                }
            })
            .collect();
        let seq = NetworkSequence::from_layers(n as usize, layers, tag()).unwrap();
        let profile = estimate_changepoint(&seq, 1, 0.5).unwrap();
        assert_eq!(profile.argmax, tau);
        assert_eq!(profile.tie_count, 1);
    }

    #[test]
    fn flat_sequence_estimate_stays_in_window() {
        // No signal at all: only the window contract is asserted.
        let seq = NetworkSequence::from_layers(
            4,
            vec![
                vec![(0, 1)],
                vec![(2, 3)],
                vec![(0, 2)],
                vec![(1, 3)],
                vec![(0, 3)],
                vec![(1, 2)],
            ],
            tag(),
        )
        .unwrap();
        let profile = estimate_changepoint(&seq, 2, 0.5).unwrap();
        assert!(profile.argmax >= 2 && profile.argmax <= 4);
        assert_eq!(profile.values.len(), 3);
    }

    #[test]
    fn estimator_matches_exhaustive_toy_search() {
        // Toy scale: compare the argmax against exhaustive evaluation with
        // the dense eigensolver.
        for seed in 0..6u64 {
            let spec = GraphonSpec::new(4, 2.0).unwrap();
            let p = sample_graphon_mean(&spec, seed).unwrap();
            let params = crate::lazy_process::LazyProcessParams::new(p.clone(), 0.3, 6).unwrap();
            let q = build_perturbed_mean(&p, 3, 0.4, seed).unwrap();
            let seq = crate::lazy_process::simulate_piecewise(&params, &q, 3, seed).unwrap();
            let profile = estimate_changepoint(&seq, 1, 0.5).unwrap();

            let mut best_t = 0usize;
            let mut best_v = f64::NEG_INFINITY;
            for t in 1..=5usize {
                let mut head: Array2<f64> = Array2::zeros((4, 4));
                let mut tail: Array2<f64> = Array2::zeros((4, 4));
                for s in 0..t {
                    head += &seq.layer_dense(s);
                }
                for s in t..6 {
                    tail += &seq.layer_dense(s);
                }
                let diff = head / t as f64 - tail / (6 - t) as f64;
                let v = ((t as f64 / 6.0) * (1.0 - t as f64 / 6.0)).sqrt()
                    * spectral::dense::operator_norm(&diff);
                if v > best_v + 1e-12 {
                    best_v = v;
                    best_t = t;
                }
            }
            assert_eq!(profile.argmax, best_t, "seed {seed}");
        }
    }

    #[test]
    fn statistic_is_invariant_under_vertex_relabeling() {
        let layers = vec![
            vec![(0u32, 1u32), (2, 3)],
            vec![(1, 3)],
            vec![(0, 2), (1, 2)],
        ];
        let seq = NetworkSequence::from_layers(4, layers.clone(), tag()).unwrap();
        let perm = [2u32, 0, 3, 1];
        let relabeled: Vec<Vec<(u32, u32)>> = layers
            .iter()
            .map(|l| {
                l.iter()
                    .map(|&(i, j)| (perm[i as usize], perm[j as usize]))
                    .collect()
            })
            .collect();
        let seq2 = NetworkSequence::from_layers(4, relabeled, tag()).unwrap();
        for t in 1..3 {
            let a = cusum_statistic(&seq, t, 0.5).unwrap();
            let b = cusum_statistic(&seq2, t, 0.5).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn population_profile_peaks_at_tau_with_branch_agreement() {
        let spec_g = GraphonSpec::new(10, 3.0).unwrap();
        let p = sample_graphon_mean(&spec_g, 1).unwrap();
        let q = build_perturbed_mean(&p, 5, 0.3, 2).unwrap();
        let t_total = 12usize;
        let tau = 5usize;
        for &xi in &[0.0, 0.5, 1.0] {
            let spec = ChangepointSpec::new(p.clone(), q.clone(), tau, xi, 1).unwrap();
            // Both closed-form branches agree at t = tau.
            let diff = spec.p.entries() - spec.q.entries();
            let norm = spectral::dense::operator_norm(&diff);
            let left = population_cusum_with_norm(tau, xi, t_total, tau, norm);
            let right = {
                let tf = tau as f64;
                let total = t_total as f64;
                (total - tf).powf(xi) / tf.powf(1.0 - xi) * tf / total.powf(2.0 * xi) * norm
            };
            assert!((left - right).abs() < 1e-12, "xi = {xi}");
            // Strictly increasing before tau, strictly decreasing after.
            let profile = population_cusum_profile(&spec, t_total);
            for w in profile[..tau].windows(2) {
                assert!(
                    w[0] < w[1],
                    "xi = {xi}: not increasing before tau: {profile:?}"
                );
            }
            for w in profile[tau - 1..].windows(2) {
                assert!(
                    w[0] > w[1],
                    "xi = {xi}: not decreasing after tau: {profile:?}"
                );
            }
        }
    }

    #[test]
    fn population_profile_vanishes_when_means_agree() {
        let spec_g = GraphonSpec::new(6, 2.0).unwrap();
        let p = sample_graphon_mean(&spec_g, 3).unwrap();
        let spec = ChangepointSpec::new(p.clone(), p, 2, 0.5, 1).unwrap();
        for v in population_cusum_profile(&spec, 8) {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn perturbation_with_zero_delta_is_identity() {
        let spec_g = GraphonSpec::new(20, 5.0).unwrap();
        let p = sample_graphon_mean(&spec_g, 4).unwrap();
        let q = build_perturbed_mean(&p, 10, 0.0, 9).unwrap();
        assert_eq!(p.entries(), q.entries());
    }

    #[test]
    fn perturbation_frobenius_mass_is_exact_without_clipping() {
        // k = 72 graphon entries stay below 1 - 0.05, so no clipping: the
        // squared Frobenius distance is exactly 2 * delta_e * delta_p^2.
        let spec_g = GraphonSpec::new(500, 72.0).unwrap();
        let p = sample_graphon_mean(&spec_g, 11).unwrap();
        let q = build_perturbed_mean(&p, 100, 0.05, 13).unwrap();
        let fro2: f64 = (p.entries() - q.entries()).iter().map(|v| v * v).sum();
        assert!((fro2 - 0.5).abs() < 1e-12, "Frobenius^2 = {fro2}");
    }

    #[test]
    fn perturbation_saturates_all_pairs() {
        let p = MeanMatrix::constant(6, 0.2, false).unwrap();
        let q = build_perturbed_mean(&p, 15, 1.0, 3).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 0.2 } else { 1.0 };
                let got = q.get(i, j);
                let expect = if i == j { p.get(i, i) } else { want };
                assert_eq!(got, expect, "({i},{j})");
            }
        }
    }

    #[test]
    fn perturbation_rejects_oversized_requests() {
        let p = MeanMatrix::constant(4, 0.1, false).unwrap();
        assert!(matches!(
            build_perturbed_mean(&p, 7, 0.1, 0).unwrap_err(),
            ChangepointError::TooManyPairs { delta_e: 7, max: 6 }
        ));
    }

    #[test]
    fn perturbation_is_deterministic_and_picks_distinct_pairs() {
        let p = MeanMatrix::constant(30, 0.1, false).unwrap();
        let a = build_perturbed_mean(&p, 40, 0.2, 77).unwrap();
        let b = build_perturbed_mean(&p, 40, 0.2, 77).unwrap();
        assert_eq!(a.entries(), b.entries());
        let changed = a
            .entries()
            .indexed_iter()
            .filter(|&((i, j), &v)| i < j && v != p.get(i, j))
            .count();
        assert_eq!(changed, 40);
    }

    #[test]
    fn pair_decoding_round_trips() {
        let n = 30usize;
        let mut idx = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                assert_eq!(decode_pair(idx, n), (i, j));
                idx += 1;
            }
        }
        assert_eq!(idx, pair_count(n));
    }

    #[test]
    fn profile_csv_has_split_points() {
        let profile = CusumProfile {
            t_start: 2,
            values: vec![0.5, 1.25],
            argmax: 3,
            tie_count: 1,
        };
        let csv = profile.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,S_xi");
        assert!(lines[1].starts_with("2,5."));
        assert!(lines[2].starts_with("3,1.25"));
    }

    #[test]
    fn spec_validation_enforces_window() {
        let p = MeanMatrix::constant(4, 0.2, false).unwrap();
        let spec = ChangepointSpec::new(p.clone(), p.clone(), 3, 0.5, 3).unwrap();
        assert_eq!(spec.kappa(10), 3);
        assert!(spec.validate(10).is_ok());
        assert!(matches!(
            spec.validate(4).unwrap_err(),
            ChangepointError::LambdaOutOfRange { .. }
        ));
        let bad_tau = ChangepointSpec::new(p.clone(), p, 9, 0.5, 1).unwrap();
        assert!(matches!(
            bad_tau.validate(5).unwrap_err(),
            ChangepointError::TauOutOfRange { .. }
        ));
    }
}
