//! Aggregated adjacency and Laplacian matrices, with their population
//! counterparts.
//!
//! For a sequence of layers `A^(1..T)` the aggregate is `A = sum_t A^(t)`
//! with degrees `d_i = sum_j A_ij` and normalized Laplacian
//! `L = I - D^{-1/2} A D^{-1/2}`. The population versions replace `A` by
//! `T P` and degrees by `T sum_j p_ij`; the population Laplacian is
//! independent of `T` since the factor cancels.
//!
//! Aggregation is exact (integer counts); Laplacians are computed in double
//! precision. A vertex with zero aggregated degree makes the Laplacian
//! undefined, and the functions here refuse with a [`AggregateError::ZeroDegree`]
//! listing every offending vertex rather than imputing anything.

use ndarray::Array2;
use thiserror::Error;

use crate::graph_model::MeanMatrix;
use crate::lazy_process::NetworkSequence;

#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error("zero aggregated degree at vertices {vertices:?}")]
    ZeroDegree { vertices: Vec<usize> },
}

/// Entrywise sum of the layers and the aggregated degrees
/// `d_i = sum_t sum_j A^(t)_ij` (a self-loop counts once).
pub fn aggregate_adjacency(seq: &NetworkSequence) -> (Array2<u32>, Vec<u64>) {
    let n = seq.n();
    let mut counts: Array2<u32> = Array2::zeros((n, n));
    for t in 0..seq.num_layers() {
        for &(i, j) in seq.layer_edges(t) {
            let (i, j) = (i as usize, j as usize);
            counts[(i, j)] += 1;
            if i != j {
                counts[(j, i)] += 1;
            }
        }
    }
    let degrees: Vec<u64> = (0..n)
        .map(|i| (0..n).map(|j| counts[(i, j)] as u64).sum())
        .collect();
    (counts, degrees)
}

/// Normalized Laplacian `L_ij = 1{i=j} - A_ij / sqrt(d_i d_j)` of an
/// aggregated matrix. All degrees must be positive.
pub fn aggregate_laplacian(
    counts: &Array2<u32>,
    degrees: &[u64],
) -> Result<Array2<f64>, AggregateError> {
    let zero: Vec<usize> = degrees
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(i, _)| i)
        .collect();
    if !zero.is_empty() {
        return Err(AggregateError::ZeroDegree { vertices: zero });
    }
    let n = degrees.len();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
    let mut l = Array2::eye(n);
    for i in 0..n {
        for j in 0..n {
            if counts[(i, j)] != 0 {
                l[(i, j)] -= counts[(i, j)] as f64 * inv_sqrt[i] * inv_sqrt[j];
            }
        }
    }
    Ok(l)
}

/// Population aggregates: `A-bar = T P`, `d-bar_i = T sum_j p_ij`, and the
/// population Laplacian.
#[derive(Debug, Clone)]
pub struct PopulationAggregates {
    pub pop_a: Array2<f64>,
    pub pop_degrees: Vec<f64>,
    pub pop_l: Array2<f64>,
}

pub fn population_aggregates(
    p: &MeanMatrix,
    t_len: usize,
) -> Result<PopulationAggregates, AggregateError> {
    let n = p.n();
    let expected: Vec<f64> = (0..n).map(|i| p.expected_degree(i)).collect();
    let zero: Vec<usize> = expected
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= 0.0)
        .map(|(i, _)| i)
        .collect();
    if !zero.is_empty() {
        return Err(AggregateError::ZeroDegree { vertices: zero });
    }
    let t = t_len as f64;
    let pop_a = p.entries() * t;
    let pop_degrees: Vec<f64> = expected.iter().map(|d| d * t).collect();
    let inv_sqrt: Vec<f64> = pop_degrees.iter().map(|&d| 1.0 / d.sqrt()).collect();
    let mut pop_l = Array2::eye(n);
    for i in 0..n {
        for j in 0..n {
            let v = pop_a[(i, j)];
            if v != 0.0 {
                pop_l[(i, j)] -= v * inv_sqrt[i] * inv_sqrt[j];
            }
        }
    }
    Ok(PopulationAggregates {
        pop_a,
        pop_degrees,
        pop_l,
    })
}

/// Sample aggregates and their population counterparts, bundled.
#[derive(Debug, Clone)]
pub struct AggregateView {
    pub a: Array2<u32>,
    pub degrees: Vec<u64>,
    pub l: Array2<f64>,
    pub pop_a: Array2<f64>,
    pub pop_degrees: Vec<f64>,
    pub pop_l: Array2<f64>,
}

impl AggregateView {
    /// Aggregates `seq` and pairs it with the population matrices of `p`
    /// over the same number of layers.
    pub fn build(seq: &NetworkSequence, p: &MeanMatrix) -> Result<Self, AggregateError> {
        let (a, degrees) = aggregate_adjacency(seq);
        let l = aggregate_laplacian(&a, &degrees)?;
        let pop = population_aggregates(p, seq.num_layers())?;
        Ok(Self {
            a,
            degrees,
            l,
            pop_a: pop.pop_a,
            pop_degrees: pop.pop_degrees,
            pop_l: pop.pop_l,
        })
    }

    /// Deviation `A - A-bar` as a dense symmetric matrix.
    pub fn adjacency_deviation(&self) -> Array2<f64> {
        let n = self.degrees.len();
        Array2::from_shape_fn((n, n), |(i, j)| self.a[(i, j)] as f64 - self.pop_a[(i, j)])
    }

    /// Deviation `L - L-bar`.
    pub fn laplacian_deviation(&self) -> Array2<f64> {
        &self.l - &self.pop_l
    }
}

/// Dense CSV in the MeanMatrix layout (`n,tag` header, then `n` rows of
/// `n` fields at 17 significant digits).
pub fn dense_csv(m: &Array2<f64>, tag: &str) -> String {
    let n = m.nrows();
    let mut out = format!("{n},{tag}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model::{build_sbm_mean, MeanMatrix, SbmSpec};
    use crate::lazy_process::{simulate, LazyProcessParams, NetworkSequence, ParamsTag};
    use crate::spectral;
    use ndarray::Array2;

    fn tag() -> ParamsTag {
        ParamsTag {
            alpha: 0.0,
            seed: 0,
            model: "fixture".into(),
        }
    }

    #[test]
    fn single_layer_aggregate_is_the_layer() {
        let seq = NetworkSequence::from_layers(4, vec![vec![(0, 1), (2, 3)]], tag()).unwrap();
        let (a, degrees) = aggregate_adjacency(&seq);
        assert_eq!(a[(0, 1)], 1);
        assert_eq!(a[(1, 0)], 1);
        assert_eq!(a[(2, 3)], 1);
        assert_eq!(a[(0, 2)], 0);
        assert_eq!(degrees, vec![1, 1, 1, 1]);
    }

    #[test]
    fn identical_layers_scale_by_t() {
        let layer = vec![(0, 1), (1, 2)];
        let seq = NetworkSequence::from_layers(
            3,
            vec![layer.clone(), layer.clone(), layer.clone(), layer],
            tag(),
        )
        .unwrap();
        let (a, degrees) = aggregate_adjacency(&seq);
        assert_eq!(a[(0, 1)], 4);
        assert_eq!(a[(1, 2)], 4);
        assert_eq!(degrees[1], 8);
    }

    #[test]
    fn aggregate_matches_entrywise_triple_sum() {
        let spec = SbmSpec::two_block(5, 3.0, 2.0).unwrap();
        let mean = build_sbm_mean(&spec).unwrap();
        let params = LazyProcessParams::new(mean, 0.4, 3).unwrap();
        let seq = simulate(&params, 8);
        let (a, degrees) = aggregate_adjacency(&seq);
        let dense_sum: Array2<f64> = (0..3)
            .map(|t| seq.layer_dense(t))
            .fold(Array2::zeros((5, 5)), |acc, l| acc + l);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(a[(i, j)] as f64, dense_sum[(i, j)], "({i},{j})");
            }
            let row: f64 = (0..5).map(|j| dense_sum[(i, j)]).sum();
            assert_eq!(degrees[i] as f64, row);
        }
    }

    #[test]
    fn complete_graph_laplacian_closed_form() {
        // K_n aggregated once: L = I - (J - I) / (n - 1).
        let n = 6u32;
        let edges: Vec<(u32, u32)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let seq = NetworkSequence::from_layers(n as usize, vec![edges], tag()).unwrap();
        let (a, degrees) = aggregate_adjacency(&seq);
        let l = aggregate_laplacian(&a, &degrees).unwrap();
        let n = n as usize;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { -1.0 / (n as f64 - 1.0) };
                assert!((l[(i, j)] - want).abs() < 1e-12);
            }
        }
        // Smallest eigenvalue 0: L applied to the all-ones vector vanishes.
        let ones = ndarray::Array1::from_elem(n, 1.0);
        let img = l.dot(&ones);
        assert!(img.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn regular_graph_rows_of_i_minus_l_sum_to_one() {
        // A 4-cycle is 2-regular; each row of I - L sums to 1.
        let seq =
            NetworkSequence::from_layers(4, vec![vec![(0, 1), (1, 2), (2, 3), (0, 3)]], tag())
                .unwrap();
        let (a, degrees) = aggregate_adjacency(&seq);
        let l = aggregate_laplacian(&a, &degrees).unwrap();
        for i in 0..4 {
            let row_sum: f64 = (0..4)
                .map(|j| if i == j { 1.0 - l[(i, j)] } else { -l[(i, j)] })
                .sum();
            assert!((row_sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_degree_vertices_are_reported() {
        let seq = NetworkSequence::from_layers(4, vec![vec![(0, 1)]], tag()).unwrap();
        let (a, degrees) = aggregate_adjacency(&seq);
        match aggregate_laplacian(&a, &degrees) {
            Err(AggregateError::ZeroDegree { vertices }) => assert_eq!(vertices, vec![2, 3]),
            other => panic!("expected ZeroDegree, got {other:?}"),
        }
    }

    #[test]
    fn constant_population_laplacian_is_centering_matrix() {
        // P constant c with self-loops: L-bar = I - J/n.
        let p = MeanMatrix::constant(5, 0.3, true).unwrap();
        let pop = population_aggregates(&p, 7).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 - 0.2 } else { -0.2 };
                assert!((pop.pop_l[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn doubling_t_scales_pop_a_but_not_pop_l() {
        let spec = SbmSpec::two_block(10, 6.0, 2.0).unwrap();
        let p = build_sbm_mean(&spec).unwrap();
        let one = population_aggregates(&p, 10).unwrap();
        let two = population_aggregates(&p, 20).unwrap();
        assert!(one
            .pop_a
            .iter()
            .zip(two.pop_a.iter())
            .all(|(a, b)| (2.0 * a - b).abs() < 1e-12));
        assert!(one
            .pop_l
            .iter()
            .zip(two.pop_l.iter())
            .all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn population_rejects_isolated_vertices() {
        let mut entries = Array2::zeros((3, 3));
        entries[(0, 1)] = 0.5;
        entries[(1, 0)] = 0.5;
        let p = MeanMatrix::explicit(entries).unwrap();
        match population_aggregates(&p, 3) {
            Err(AggregateError::ZeroDegree { vertices }) => assert_eq!(vertices, vec![2]),
            other => panic!("expected ZeroDegree, got {other:?}"),
        }
    }

    #[test]
    fn sbm_population_smallest_nonzero_singular_value() {
        // Two equal blocks, intra 7/n, inter 1/n: the nonzero eigenvalues of
        // P are (a + b)/2 and (a - b)/2; checked against the dense route.
        let spec = SbmSpec::two_block(500, 7.0, 1.0).unwrap();
        let p = build_sbm_mean(&spec).unwrap();
        let (values, _) = spectral::dense::sym_eigen(p.entries());
        let nonzero: Vec<f64> = values
            .iter()
            .map(|v| v.abs())
            .filter(|v| *v > 1e-9 * values[0].abs())
            .collect();
        assert_eq!(nonzero.len(), 2);
        let gamma = nonzero.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((gamma - 3.0).abs() < 1e-8, "gamma_adj = {gamma}");
        assert!((nonzero[0] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn population_laplacian_has_unit_eigenvalue_at_sqrt_degrees() {
        let spec = SbmSpec::two_block(40, 8.0, 2.0).unwrap();
        let p = build_sbm_mean(&spec).unwrap();
        let pop = population_aggregates(&p, 11).unwrap();
        let sqrt_d = ndarray::Array1::from_iter(pop.pop_degrees.iter().map(|d| d.sqrt()));
        let i_minus_l = Array2::eye(40) - &pop.pop_l;
        let img = i_minus_l.dot(&sqrt_d);
        for (a, b) in img.iter().zip(sqrt_d.iter()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn dense_csv_has_header_and_rows() {
        let m = Array2::from_elem((2, 2), 1.5);
        let csv = dense_csv(&m, "aggregate");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "2,aggregate");
        assert!(lines[1].starts_with("1.5"));
    }
}
