//! Monte-Carlo study drivers: concentration of the aggregated matrices,
//! community estimation error, and changepoint estimation error, each over
//! a grid of stickiness values and model parameters.
//!
//! A study is a grid of cells (model parameters x alpha) with `R`
//! replicates per cell. Every replicate's seed is derived from
//! `(master_seed, cell_id, replicate)`, replicates run in parallel, and
//! rows are assembled in a fixed order, so the output is byte-identical
//! regardless of thread count. Replicates that fail (zero aggregated
//! degree, eigensolver non-convergence) are recorded with an error tag and
//! excluded from summaries rather than dropped.

use rayon::prelude::*;
use thiserror::Error;

use crate::aggregate;
use crate::changepoint::{self, ChangepointError};
use crate::community::{self, EmbedMode};
use crate::graph_model::{
    build_sbm_mean, degree_stats, sample_graphon_mean, GraphModelError, GraphonSpec, SbmSpec,
};
use crate::lazy_process::{simulate, simulate_piecewise, LazyProcessError, LazyProcessParams};
use crate::rng;
use crate::spectral;
use crate::stats;

#[derive(Debug, Error, PartialEq)]
pub enum StudyError {
    #[error("study grid is empty: {0}")]
    EmptyGrid(String),
    #[error("alpha = {0} outside [0, 1)")]
    BadAlpha(f64),
    #[error("replicates must be at least 1")]
    NoReplicates,
    #[error("changepoint study needs its parameter grid")]
    MissingChangepointGrid,
    #[error("scaling fit needs at least 3 alpha values including 0, got {0:?}")]
    DegenerateGrid(Vec<f64>),
    #[error(transparent)]
    GraphModel(#[from] GraphModelError),
    #[error(transparent)]
    Lazy(#[from] LazyProcessError),
    #[error(transparent)]
    Changepoint(#[from] ChangepointError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Concentration,
    Community,
    Changepoint,
}

impl std::fmt::Display for StudyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StudyKind::Concentration => "concentration",
            StudyKind::Community => "community",
            StudyKind::Changepoint => "changepoint",
        })
    }
}

/// Changepoint-study parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangepointGrid {
    pub graphon_k: f64,
    pub delta_e: Vec<usize>,
    pub delta_p: Vec<f64>,
    pub tau: usize,
    pub xi: f64,
    pub lambda: usize,
}

/// Full study configuration. Which fields are consulted depends on `kind`:
/// concentration uses `sbm_cells` and `graphon_cells`, community uses
/// `sbm_cells`, changepoint uses `changepoint`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub n: usize,
    pub num_layers: usize,
    pub replicates: usize,
    pub alpha_grid: Vec<f64>,
    pub master_seed: u64,
    pub self_loops: bool,
    /// Two-equal-block cells `(a, b)` with probabilities `a/n`, `b/n`.
    pub sbm_cells: Vec<(f64, f64)>,
    /// Logistic graphon scale values.
    pub graphon_cells: Vec<f64>,
    pub kmeans_restarts: usize,
    pub changepoint: Option<ChangepointGrid>,
}

impl StudyConfig {
    pub fn new(kind: StudyKind, n: usize, num_layers: usize, replicates: usize) -> Self {
        Self {
            kind,
            n,
            num_layers,
            replicates,
            alpha_grid: vec![0.0, 0.3, 0.6, 0.9],
            master_seed: 0,
            self_loops: true,
            sbm_cells: Vec::new(),
            graphon_cells: Vec::new(),
            kmeans_restarts: 20,
            changepoint: None,
        }
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        if self.replicates == 0 {
            return Err(StudyError::NoReplicates);
        }
        if self.alpha_grid.is_empty() {
            return Err(StudyError::EmptyGrid("alpha_grid".into()));
        }
        for &a in &self.alpha_grid {
            if !(0.0..1.0).contains(&a) {
                return Err(StudyError::BadAlpha(a));
            }
        }
        match self.kind {
            StudyKind::Concentration => {
                if self.sbm_cells.is_empty() && self.graphon_cells.is_empty() {
                    return Err(StudyError::EmptyGrid("sbm_cells / graphon_cells".into()));
                }
            }
            StudyKind::Community => {
                if self.sbm_cells.is_empty() {
                    return Err(StudyError::EmptyGrid("sbm_cells".into()));
                }
            }
            StudyKind::Changepoint => {
                let grid = self
                    .changepoint
                    .as_ref()
                    .ok_or(StudyError::MissingChangepointGrid)?;
                if grid.delta_e.is_empty() || grid.delta_p.is_empty() {
                    return Err(StudyError::EmptyGrid("delta_e / delta_p".into()));
                }
            }
        }
        Ok(())
    }
}

/// What one grid cell holds, beyond alpha.
#[derive(Debug, Clone, PartialEq)]
enum CellModel {
    Sbm {
        a: f64,
        b: f64,
    },
    Graphon {
        k: f64,
    },
    Perturbed {
        k: f64,
        delta_e: usize,
        delta_p: f64,
    },
}

/// Cell description carried into results so plots can label series.
#[derive(Debug, Clone, PartialEq)]
pub struct CellInfo {
    pub cell_id: usize,
    pub alpha: f64,
    /// Legend label shared by all alphas of the same parameter setting.
    pub series: String,
    /// Figure-panel grouping: model family for concentration plots, the
    /// perturbation size for changepoint panels.
    pub family: String,
    pub param_json: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub cell_id: usize,
    pub param_json: String,
    pub replicate: usize,
    pub metric: String,
    /// NaN when `error_tag` is set.
    pub value: f64,
    pub error_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell_id: usize,
    pub metric: String,
    pub mean: f64,
    pub se: f64,
    pub n_ok: usize,
    pub n_err: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub study: StudyKind,
    pub cells: Vec<CellInfo>,
    pub rows: Vec<StudyRow>,
}

fn csv_quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn fmt_value(v: f64) -> String {
    format!("{:.11e}", v)
}

impl StudyResult {
    /// Raw rows as CSV (12 significant digits; error rows have an empty
    /// value field and a tag).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("study,cell_id,param_json,replicate,metric,value,error_tag\n");
        for r in &self.rows {
            let value = if r.error_tag.is_some() {
                String::new()
            } else {
                fmt_value(r.value)
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.study,
                r.cell_id,
                csv_quote(&r.param_json),
                r.replicate,
                r.metric,
                value,
                r.error_tag.clone().unwrap_or_default()
            ));
        }
        out
    }

    /// Per-(cell, metric) mean and standard error over non-error rows, in
    /// stable (cell, first-appearance metric) order.
    pub fn summaries(&self) -> Vec<CellSummary> {
        let mut keys: Vec<(usize, String)> = Vec::new();
        for r in &self.rows {
            let key = (r.cell_id, r.metric.clone());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        keys.iter()
            .map(|(cell_id, metric)| {
                let ok: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| {
                        r.cell_id == *cell_id && &r.metric == metric && r.error_tag.is_none()
                    })
                    .map(|r| r.value)
                    .collect();
                let n_err = self
                    .rows
                    .iter()
                    .filter(|r| {
                        r.cell_id == *cell_id && &r.metric == metric && r.error_tag.is_some()
                    })
                    .count();
                CellSummary {
                    cell_id: *cell_id,
                    metric: metric.clone(),
                    mean: stats::mean(&ok),
                    se: stats::standard_error(&ok),
                    n_ok: ok.len(),
                    n_err,
                }
            })
            .collect()
    }

    /// Summary CSV `cell_id,metric,mean,se,n_ok,n_err`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("cell_id,metric,mean,se,n_ok,n_err\n");
        for s in self.summaries() {
            let mean = if s.n_ok == 0 {
                String::new()
            } else {
                fmt_value(s.mean)
            };
            let se = if s.n_ok < 2 {
                String::new()
            } else {
                fmt_value(s.se)
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.cell_id, s.metric, mean, se, s.n_ok, s.n_err
            ));
        }
        out
    }

    pub fn cell(&self, cell_id: usize) -> &CellInfo {
        &self.cells[cell_id]
    }

    /// Values of one metric in one cell (non-error rows).
    pub fn metric_values(&self, cell_id: usize, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.cell_id == cell_id && r.metric == metric && r.error_tag.is_none())
            .map(|r| r.value)
            .collect()
    }

    pub fn error_count(&self) -> usize {
        self.rows.iter().filter(|r| r.error_tag.is_some()).count()
    }

    /// Distinct metric names in first-appearance order.
    pub fn metric_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.metric) {
                out.push(r.metric.clone());
            }
        }
        out
    }
}

fn fmt_f64(v: f64) -> String {
    // Shortest round-trip representation; integral values drop the dot.
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{}", v)
    }
}

fn cell_grid(cfg: &StudyConfig) -> Vec<(CellModel, f64)> {
    let mut cells = Vec::new();
    match cfg.kind {
        StudyKind::Concentration => {
            for &(a, b) in &cfg.sbm_cells {
                for &alpha in &cfg.alpha_grid {
                    cells.push((CellModel::Sbm { a, b }, alpha));
                }
            }
            for &k in &cfg.graphon_cells {
                for &alpha in &cfg.alpha_grid {
                    cells.push((CellModel::Graphon { k }, alpha));
                }
            }
        }
        StudyKind::Community => {
            for &(a, b) in &cfg.sbm_cells {
                for &alpha in &cfg.alpha_grid {
                    cells.push((CellModel::Sbm { a, b }, alpha));
                }
            }
        }
        StudyKind::Changepoint => {
            let grid = cfg.changepoint.as_ref().expect("validated");
            for &delta_e in &grid.delta_e {
                for &delta_p in &grid.delta_p {
                    for &alpha in &cfg.alpha_grid {
                        cells.push((
                            CellModel::Perturbed {
                                k: grid.graphon_k,
                                delta_e,
                                delta_p,
                            },
                            alpha,
                        ));
                    }
                }
            }
        }
    }
    cells
}

fn cell_info(cfg: &StudyConfig, cell_id: usize, model: &CellModel, alpha: f64) -> CellInfo {
    let (series, family, mut params) = match model {
        CellModel::Sbm { a, b } => (
            format!("sbm({},{})", fmt_f64(*a), fmt_f64(*b)),
            "sbm".to_string(),
            format!(
                "\"model\":\"sbm\",\"a\":{},\"b\":{}",
                fmt_f64(*a),
                fmt_f64(*b)
            ),
        ),
        CellModel::Graphon { k } => (
            format!("graphon k={}", fmt_f64(*k)),
            "graphon".to_string(),
            format!("\"model\":\"graphon\",\"k\":{}", fmt_f64(*k)),
        ),
        CellModel::Perturbed {
            k,
            delta_e,
            delta_p,
        } => {
            let grid = cfg.changepoint.as_ref().expect("validated");
            (
                format!("de={}", delta_e),
                format!("dp={}", fmt_f64(*delta_p)),
                format!(
                    "\"model\":\"graphon\",\"k\":{},\"delta_e\":{},\"delta_p\":{},\"tau\":{},\"xi\":{},\"lambda\":{}",
                    fmt_f64(*k),
                    delta_e,
                    fmt_f64(*delta_p),
                    grid.tau,
                    fmt_f64(grid.xi),
                    grid.lambda
                ),
            )
        }
    };
    params.push_str(&format!(
        ",\"alpha\":{},\"n\":{},\"T\":{}",
        fmt_f64(alpha),
        cfg.n,
        cfg.num_layers
    ));
    CellInfo {
        cell_id,
        alpha,
        series,
        family,
        param_json: format!("{{{params}}}"),
    }
}

fn ok_row(cell: &CellInfo, replicate: usize, metric: &str, value: f64) -> StudyRow {
    StudyRow {
        cell_id: cell.cell_id,
        param_json: cell.param_json.clone(),
        replicate,
        metric: metric.to_string(),
        value,
        error_tag: None,
    }
}

fn err_row(cell: &CellInfo, replicate: usize, metric: &str, tag: String) -> StudyRow {
    StudyRow {
        cell_id: cell.cell_id,
        param_json: cell.param_json.clone(),
        replicate,
        metric: metric.to_string(),
        value: f64::NAN,
        error_tag: Some(tag),
    }
}

fn run_cells<F>(cfg: &StudyConfig, per_replicate: F) -> Vec<StudyRow>
where
    F: Fn(&CellInfo, &CellModel, f64, usize, u64) -> Vec<StudyRow> + Sync,
{
    let grid = cell_grid(cfg);
    let cells: Vec<CellInfo> = grid
        .iter()
        .enumerate()
        .map(|(id, (model, alpha))| cell_info(cfg, id, model, *alpha))
        .collect();
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..cfg.replicates).map(move |r| (c, r)))
        .collect();
    tasks
        .par_iter()
        .map(|&(c, r)| {
            let seed = rng::derive_seed(cfg.master_seed, c as u64, r as u64);
            per_replicate(&cells[c], &grid[c].0, grid[c].1, r, seed)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn study_cells(cfg: &StudyConfig) -> Vec<CellInfo> {
    cell_grid(cfg)
        .iter()
        .enumerate()
        .map(|(id, (model, alpha))| cell_info(cfg, id, model, *alpha))
        .collect()
}

/// Per replicate: simulate, aggregate, and record the scaled deviations
/// `||A - A-bar|| / sqrt(T d_avg)` and `||L - L-bar|| sqrt(T d_avg)`.
/// Graphon cells redraw their mean matrix each replicate and the population
/// matrices condition on it.
pub fn run_concentration_study(cfg: &StudyConfig) -> Result<StudyResult, StudyError> {
    cfg.validate()?;
    let n = cfg.n;
    let t_len = cfg.num_layers;
    let rows = run_cells(cfg, |cell, model, alpha, rep, seed| {
        let mean = match model {
            CellModel::Sbm { a, b } => {
                let spec = match SbmSpec::two_block(n, *a, *b) {
                    Ok(s) => s.with_self_loops(cfg.self_loops),
                    Err(e) => return vec![err_row(cell, rep, "adj_dev_scaled", e.to_string())],
                };
                build_sbm_mean(&spec)
            }
            CellModel::Graphon { k } => GraphonSpec::new(n, *k)
                .map(|s| s.with_self_loops(cfg.self_loops))
                .and_then(|s| sample_graphon_mean(&s, seed)),
            CellModel::Perturbed { .. } => unreachable!("not a concentration cell"),
        };
        let mean = match mean {
            Ok(m) => m,
            Err(e) => return vec![err_row(cell, rep, "adj_dev_scaled", e.to_string())],
        };
        let params = match LazyProcessParams::new(mean, alpha, t_len) {
            Ok(p) => p,
            Err(e) => return vec![err_row(cell, rep, "adj_dev_scaled", e.to_string())],
        };
        let seq = simulate(&params, seed);
        let scale = (t_len as f64 * degree_stats(&params.mean).d_avg).sqrt();
        let (a, degrees) = aggregate::aggregate_adjacency(&seq);
        let pop = match aggregate::population_aggregates(&params.mean, t_len) {
            Ok(p) => p,
            Err(e) => return vec![err_row(cell, rep, "adj_dev_scaled", e.to_string())],
        };
        let mut rows = Vec::with_capacity(2);
        let dev =
            ndarray::Array2::from_shape_fn((n, n), |(i, j)| a[(i, j)] as f64 - pop.pop_a[(i, j)]);
        match spectral::operator_norm_default(&dev) {
            Ok(norm) => rows.push(ok_row(cell, rep, "adj_dev_scaled", norm / scale)),
            Err(e) => rows.push(err_row(cell, rep, "adj_dev_scaled", e.to_string())),
        }
        match aggregate::aggregate_laplacian(&a, &degrees) {
            Ok(l) => {
                let ldev = &l - &pop.pop_l;
                match spectral::operator_norm_default(&ldev) {
                    Ok(norm) => rows.push(ok_row(cell, rep, "lap_dev_scaled", norm * scale)),
                    Err(e) => rows.push(err_row(cell, rep, "lap_dev_scaled", e.to_string())),
                }
            }
            Err(e) => rows.push(err_row(cell, rep, "lap_dev_scaled", e.to_string())),
        }
        rows
    });
    Ok(StudyResult {
        study: StudyKind::Concentration,
        cells: study_cells(cfg),
        rows,
    })
}

/// Per replicate: simulate a two-block lazy SBM process and score both
/// spectral pipelines against the planted labels.
pub fn run_community_study(cfg: &StudyConfig) -> Result<StudyResult, StudyError> {
    cfg.validate()?;
    let n = cfg.n;
    let t_len = cfg.num_layers;
    let rows = run_cells(cfg, |cell, model, alpha, rep, seed| {
        let CellModel::Sbm { a, b } = model else {
            unreachable!("community cells are SBM")
        };
        let spec = match SbmSpec::two_block(n, *a, *b) {
            Ok(s) => s.with_self_loops(cfg.self_loops),
            Err(e) => return vec![err_row(cell, rep, "me_adjacency", e.to_string())],
        };
        let truth = spec.membership();
        let mean = match build_sbm_mean(&spec) {
            Ok(m) => m,
            Err(e) => return vec![err_row(cell, rep, "me_adjacency", e.to_string())],
        };
        let params = match LazyProcessParams::new(mean, alpha, t_len) {
            Ok(p) => p,
            Err(e) => return vec![err_row(cell, rep, "me_adjacency", e.to_string())],
        };
        let seq = simulate(&params, seed);
        let mut rows = Vec::with_capacity(2);
        for (metric, mode) in [
            ("me_adjacency", EmbedMode::Adjacency),
            ("me_laplacian", EmbedMode::Laplacian),
        ] {
            match community::estimate_communities(&seq, 2, mode, cfg.kmeans_restarts, seed) {
                Ok(res) => match community::misclustering_error(&res.labels, &truth, 2) {
                    Ok(me) => rows.push(ok_row(cell, rep, metric, me)),
                    Err(e) => rows.push(err_row(cell, rep, metric, e.to_string())),
                },
                Err(e) => rows.push(err_row(cell, rep, metric, e.to_string())),
            }
        }
        rows
    });
    Ok(StudyResult {
        study: StudyKind::Community,
        cells: study_cells(cfg),
        rows,
    })
}

/// Per replicate: draw a graphon mean, perturb it, simulate the piecewise
/// process and record the absolute changepoint estimation error.
pub fn run_changepoint_study(cfg: &StudyConfig) -> Result<StudyResult, StudyError> {
    cfg.validate()?;
    let grid = cfg.changepoint.clone().expect("validated");
    let n = cfg.n;
    let t_len = cfg.num_layers;
    let rows = run_cells(cfg, |cell, model, alpha, rep, seed| {
        let CellModel::Perturbed {
            k,
            delta_e,
            delta_p,
        } = model
        else {
            unreachable!("changepoint cells are perturbed graphons")
        };
        let metric = "abs_err";
        let mean = match GraphonSpec::new(n, *k)
            .map(|s| s.with_self_loops(cfg.self_loops))
            .and_then(|s| sample_graphon_mean(&s, seed))
        {
            Ok(m) => m,
            Err(e) => return vec![err_row(cell, rep, metric, e.to_string())],
        };
        let q = match changepoint::build_perturbed_mean(&mean, *delta_e, *delta_p, seed) {
            Ok(q) => q,
            Err(e) => return vec![err_row(cell, rep, metric, e.to_string())],
        };
        let params = match LazyProcessParams::new(mean, alpha, t_len) {
            Ok(p) => p,
            Err(e) => return vec![err_row(cell, rep, metric, e.to_string())],
        };
        let seq = match simulate_piecewise(&params, &q, grid.tau, seed) {
            Ok(s) => s,
            Err(e) => return vec![err_row(cell, rep, metric, e.to_string())],
        };
        match changepoint::estimate_changepoint(&seq, grid.lambda, grid.xi) {
            Ok(profile) => {
                let err = profile.argmax.abs_diff(grid.tau) as f64;
                vec![ok_row(cell, rep, metric, err)]
            }
            Err(e) => vec![err_row(cell, rep, metric, e.to_string())],
        }
    });
    Ok(StudyResult {
        study: StudyKind::Changepoint,
        cells: study_cells(cfg),
        rows,
    })
}

/// Dispatches on the configured study kind.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult, StudyError> {
    match cfg.kind {
        StudyKind::Concentration => run_concentration_study(cfg),
        StudyKind::Community => run_community_study(cfg),
        StudyKind::Changepoint => run_changepoint_study(cfg),
    }
}

/// One regression per (series, metric): log mean deviation against
/// log(1/(1-alpha)).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFit {
    pub series: String,
    pub family: String,
    pub metric: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub per_series: Vec<SeriesFit>,
    /// Mean slope across series; the headline number.
    pub mean_slope: f64,
}

/// Fits the stickiness scaling law: for each (series, metric) the per-alpha
/// mean deviations are regressed as `log mean ~ log(1/(1-alpha))`. An exact
/// `c / sqrt(1-alpha)` input yields slope 1/2 with unit R^2. Requires at
/// least three alpha values including 0.
pub fn fit_alpha_scaling(result: &StudyResult) -> Result<ScalingFit, StudyError> {
    let mut alphas: Vec<f64> = result.cells.iter().map(|c| c.alpha).collect();
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    alphas.dedup();
    if alphas.len() < 3 || alphas.first() != Some(&0.0) {
        return Err(StudyError::DegenerateGrid(alphas));
    }
    let summaries = result.summaries();
    // A series is one parameter setting across alphas; family + legend
    // label identifies it uniquely in every study kind.
    let mut series_names: Vec<(String, String)> = Vec::new();
    for c in &result.cells {
        let key = (c.family.clone(), c.series.clone());
        if !series_names.contains(&key) {
            series_names.push(key);
        }
    }
    let mut per_series = Vec::new();
    for (family, series) in &series_names {
        for metric in result.metric_names() {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for cell in result
                .cells
                .iter()
                .filter(|c| &c.series == series && &c.family == family)
            {
                if let Some(s) = summaries
                    .iter()
                    .find(|s| s.cell_id == cell.cell_id && s.metric == metric && s.n_ok > 0)
                {
                    if s.mean > 0.0 {
                        xs.push((1.0 / (1.0 - cell.alpha)).ln());
                        ys.push(s.mean.ln());
                    }
                }
            }
            if xs.len() < 3 {
                continue;
            }
            if let Some(fit) = stats::linear_fit(&xs, &ys) {
                per_series.push(SeriesFit {
                    series: series.clone(),
                    family: family.clone(),
                    metric: metric.clone(),
                    slope: fit.slope,
                    intercept: fit.intercept,
                    r_squared: fit.r_squared,
                });
            }
        }
    }
    if per_series.is_empty() {
        return Err(StudyError::DegenerateGrid(alphas));
    }
    let mean_slope = stats::mean(&per_series.iter().map(|s| s.slope).collect::<Vec<_>>());
    Ok(ScalingFit {
        per_series,
        mean_slope,
    })
}
