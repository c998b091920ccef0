//! Subcommand implementations.
//!
//! ```text
//! lazynet simulate --n 10 --t 3 --alpha 0.5 --sbm 7,1 --seed 42 -o out.edg
//! lazynet concentration --config desk.cfg --out results/
//! lazynet community --profile desk --out results/
//! lazynet changepoint --profile paper --out results/ --threads 8
//! lazynet oracle --p 0.5 --alpha 0.5 --t 3
//! ```
//!
//! Study outputs land in `--out`: `rows.csv`, `summary.csv`, figure SVGs
//! and `manifest.txt`. `--config` also accepts a previously written
//! manifest, which replays the embedded configuration.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use lazynet::experiments::{fit_alpha_scaling, run_study, StudyConfig, StudyKind, StudyResult};
use lazynet::graph_model::{build_sbm_mean, sample_graphon_mean, GraphonSpec, SbmSpec};
use lazynet::lazy_process::{
    edge_moments, edge_sum_distribution, edge_variance_bound, simulate, LazyProcessParams,
};

use crate::config::{self, Profile};
use crate::manifest::{self, RunManifest};
use crate::svg::{emit_svg_plot, PlotPoint, PlotSeries};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(config::ConfigError),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Message(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}\n\n{USAGE}"),
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Message(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e)
    }
}

const USAGE: &str = "\
usage: lazynet <command> [options]

commands:
  simulate       generate one network sequence as a layered edge list
                   --n N --t T --alpha A --seed S (--sbm a,b | --graphon k) -o FILE
  concentration  run the aggregated-matrix concentration study
  community      run the community estimation study
  changepoint    run the changepoint estimation study
                   each: (--config FILE | --profile desk|paper) [--out DIR] [--threads N]
  oracle         print exact edge-moment and edge-distribution reports
                   --p P --alpha A --t T [-o FILE]
  help           show this message";

struct Args {
    tokens: Vec<String>,
    used: Vec<bool>,
}

impl Args {
    fn new(tokens: &[String]) -> Self {
        Self {
            tokens: tokens.to_vec(),
            used: vec![false; tokens.len()],
        }
    }

    fn opt(&mut self, names: &[&str]) -> Result<Option<String>, CliError> {
        for i in 0..self.tokens.len() {
            if !self.used[i] && names.contains(&self.tokens[i].as_str()) {
                self.used[i] = true;
                let Some(value) = self.tokens.get(i + 1) else {
                    return Err(CliError::Usage(format!("{} needs a value", self.tokens[i])));
                };
                self.used[i + 1] = true;
                return Ok(Some(value.clone()));
            }
        }
        Ok(None)
    }

    fn require(&mut self, names: &[&str]) -> Result<String, CliError> {
        self.opt(names)?
            .ok_or_else(|| CliError::Usage(format!("missing required option {}", names.join("/"))))
    }

    fn parse<T: std::str::FromStr>(&mut self, names: &[&str]) -> Result<T, CliError> {
        let raw = self.require(names)?;
        raw.parse().map_err(|_| {
            CliError::Usage(format!("bad value `{raw}` for option {}", names.join("/")))
        })
    }

    fn parse_opt<T: std::str::FromStr>(&mut self, names: &[&str]) -> Result<Option<T>, CliError> {
        match self.opt(names)? {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("bad value `{raw}` for {}", names.join("/")))),
        }
    }

    fn finish(&self) -> Result<(), CliError> {
        for (i, token) in self.tokens.iter().enumerate() {
            if !self.used[i] {
                return Err(CliError::Usage(format!("unexpected argument `{token}`")));
            }
        }
        Ok(())
    }
}

pub fn dispatch(args: &[String]) -> Result<(), CliError> {
    let Some(command) = args.first() else {
        println!("{USAGE}");
        return Ok(());
    };
    let rest = &args[1..];
    match command.as_str() {
        "simulate" => cmd_simulate(rest),
        "concentration" => cmd_study(StudyKind::Concentration, rest),
        "community" => cmd_study(StudyKind::Community, rest),
        "changepoint" => cmd_study(StudyKind::Changepoint, rest),
        "oracle" => cmd_oracle(rest),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_simulate(args: &[String]) -> Result<(), CliError> {
    let mut args = Args::new(args);
    let n: usize = args.parse(&["--n"])?;
    let t_len: usize = args.parse(&["--t"])?;
    let alpha: f64 = args.parse(&["--alpha"])?;
    let seed: u64 = args.parse(&["--seed"])?;
    let out: String = args.require(&["-o", "--out"])?;
    let sbm: Option<String> = args.opt(&["--sbm"])?;
    let graphon: Option<f64> = args.parse_opt(&["--graphon"])?;
    args.finish()?;

    let mean = match (sbm, graphon) {
        (Some(pair), None) => {
            let (a, b) = pair
                .split_once(',')
                .ok_or_else(|| CliError::Usage(format!("bad --sbm value `{pair}` (want a,b)")))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad --sbm intra-block value `{a}`")))?;
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad --sbm inter-block value `{b}`")))?;
            let spec = SbmSpec::two_block(n, a, b).map_err(|e| CliError::Message(e.to_string()))?;
            build_sbm_mean(&spec).map_err(|e| CliError::Message(e.to_string()))?
        }
        (None, Some(k)) => {
            let spec = GraphonSpec::new(n, k).map_err(|e| CliError::Message(e.to_string()))?;
            sample_graphon_mean(&spec, seed).map_err(|e| CliError::Message(e.to_string()))?
        }
        _ => {
            return Err(CliError::Usage(
                "simulate needs exactly one of --sbm a,b or --graphon k".into(),
            ))
        }
    };
    let params =
        LazyProcessParams::new(mean, alpha, t_len).map_err(|e| CliError::Message(e.to_string()))?;
    let seq = simulate(&params, seed);
    write_file(Path::new(&out), &seq.to_edge_list())
}

fn load_config(kind: StudyKind, args: &mut Args) -> Result<StudyConfig, CliError> {
    let config_path: Option<String> = args.opt(&["--config"])?;
    let profile: Option<Profile> = args.parse_opt(&["--profile"])?;
    match (config_path, profile) {
        (Some(path), None) => {
            let text = read_file(Path::new(&path))?;
            let text = if manifest::is_manifest(&text) {
                manifest::extract_config(&text).ok_or_else(|| {
                    CliError::Message(format!("{path}: manifest has no config block"))
                })?
            } else {
                text
            };
            Ok(config::parse_study_config(&text, kind)?)
        }
        (None, Some(profile)) => Ok(config::profile_config(kind, profile)),
        _ => Err(CliError::Usage(
            "study commands need exactly one of --config FILE or --profile desk|paper".into(),
        )),
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn cmd_study(kind: StudyKind, args: &[String]) -> Result<(), CliError> {
    let mut args = Args::new(args);
    let cfg = load_config(kind, &mut args)?;
    let out_dir: String = args.opt(&["--out"])?.unwrap_or_else(|| ".".into());
    let threads: Option<usize> = args.parse_opt(&["--threads"])?;
    args.finish()?;

    let out = PathBuf::from(&out_dir);
    fs::create_dir_all(&out).map_err(|source| CliError::Io {
        path: out.clone(),
        source,
    })?;

    let started_unix = unix_now();
    let result = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Message(e.to_string()))?;
            pool.install(|| run_study(&cfg))
        }
        None => run_study(&cfg),
    }
    .map_err(|e| CliError::Message(e.to_string()))?;
    let finished_unix = unix_now();

    let mut outputs = vec!["rows.csv".to_string(), "summary.csv".to_string()];
    write_file(&out.join("rows.csv"), &result.to_csv())?;
    write_file(&out.join("summary.csv"), &result.summary_csv())?;
    for (name, svg) in study_figures(kind, &result)? {
        write_file(&out.join(&name), &svg)?;
        outputs.push(name);
    }
    if kind == StudyKind::Concentration {
        if let Ok(fit) = fit_alpha_scaling(&result) {
            let mut report = String::from("series,metric,slope,intercept,r_squared\n");
            for s in &fit.per_series {
                report.push_str(&format!(
                    "{} {},{},{:.11e},{:.11e},{:.11e}\n",
                    s.family, s.series, s.metric, s.slope, s.intercept, s.r_squared
                ));
            }
            report.push_str(&format!("mean_slope,,{:.11e},,\n", fit.mean_slope));
            write_file(&out.join("scaling_fit.csv"), &report)?;
            outputs.push("scaling_fit.csv".to_string());
        }
    }
    outputs.push("manifest.txt".to_string());

    let manifest = RunManifest {
        version: crate::VERSION.to_string(),
        study: kind.to_string(),
        master_seed: cfg.master_seed,
        started_unix,
        finished_unix,
        outputs,
        error_rows: result.error_count(),
        config_text: config::render_study_config(&cfg),
    };
    write_file(&out.join("manifest.txt"), &manifest.render())?;
    println!(
        "{kind}: {} rows ({} errors) -> {}",
        result.rows.len(),
        result.error_count(),
        out.display()
    );
    Ok(())
}

/// Series of (alpha, mean, se) points for one metric, restricted to cells
/// of one family, in stable legend order.
fn metric_series(result: &StudyResult, family: &str, metric: &str) -> Vec<PlotSeries> {
    let summaries = result.summaries();
    let mut labels: Vec<String> = Vec::new();
    for c in result.cells.iter().filter(|c| c.family == family) {
        if !labels.contains(&c.series) {
            labels.push(c.series.clone());
        }
    }
    labels
        .into_iter()
        .map(|label| {
            let mut points: Vec<PlotPoint> = result
                .cells
                .iter()
                .filter(|c| c.family == family && c.series == label)
                .filter_map(|c| {
                    summaries
                        .iter()
                        .find(|s| s.cell_id == c.cell_id && s.metric == metric && s.n_ok > 0)
                        .map(|s| PlotPoint {
                            x: c.alpha,
                            y: s.mean,
                            se: if s.n_ok >= 2 { s.se } else { 0.0 },
                        })
                })
                .collect();
            points.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
            PlotSeries { label, points }
        })
        .filter(|s| !s.points.is_empty())
        .collect()
}

/// Figure set emulating the reference layout: concentration gets one
/// adjacency and one Laplacian panel per model family (figures 1 and 2),
/// community gets both pipelines (figure 3), changepoint one panel per
/// perturbation size (figure 4).
fn study_figures(kind: StudyKind, result: &StudyResult) -> Result<Vec<(String, String)>, CliError> {
    let mut figures = Vec::new();
    let mut push = |name: String,
                    title: &str,
                    y_label: &str,
                    series: Vec<PlotSeries>|
     -> Result<(), CliError> {
        if series.is_empty() {
            return Ok(());
        }
        let svg = emit_svg_plot(title, "alpha", y_label, &series)
            .map_err(|e| CliError::Message(e.to_string()))?;
        figures.push((name, svg));
        Ok(())
    };
    match kind {
        StudyKind::Concentration => {
            for (fig, family) in [("fig1", "sbm"), ("fig2", "graphon")] {
                push(
                    format!("{fig}-adj.svg"),
                    &format!("aggregated adjacency deviation ({family})"),
                    "||A - Abar|| / sqrt(T d_avg)",
                    metric_series(result, family, "adj_dev_scaled"),
                )?;
                push(
                    format!("{fig}-lap.svg"),
                    &format!("aggregated Laplacian deviation ({family})"),
                    "||L - Lbar|| * sqrt(T d_avg)",
                    metric_series(result, family, "lap_dev_scaled"),
                )?;
            }
        }
        StudyKind::Community => {
            push(
                "fig3-adj.svg".to_string(),
                "misclustering error (adjacency pipeline)",
                "mean ME",
                metric_series(result, "sbm", "me_adjacency"),
            )?;
            push(
                "fig3-lap.svg".to_string(),
                "misclustering error (Laplacian pipeline)",
                "mean ME",
                metric_series(result, "sbm", "me_laplacian"),
            )?;
        }
        StudyKind::Changepoint => {
            let mut families: Vec<String> = Vec::new();
            for c in &result.cells {
                if !families.contains(&c.family) {
                    families.push(c.family.clone());
                }
            }
            for family in families {
                let suffix = family.replace("dp=", "dp");
                push(
                    format!("fig4-{suffix}.svg"),
                    &format!("changepoint estimation error ({family})"),
                    "mean |tau_hat - tau|",
                    metric_series(result, &family, "abs_err"),
                )?;
            }
        }
    }
    Ok(figures)
}

fn cmd_oracle(args: &[String]) -> Result<(), CliError> {
    let mut args = Args::new(args);
    let p: f64 = args.parse(&["--p"])?;
    let alpha: f64 = args.parse(&["--alpha"])?;
    let t_len: usize = args.parse(&["--t"])?;
    let out: Option<String> = args.opt(&["-o", "--out"])?;
    args.finish()?;
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::Usage(format!("--p {p} outside [0, 1]")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(CliError::Usage(format!("--alpha {alpha} outside [0, 1)")));
    }
    if t_len == 0 || t_len > 64 {
        return Err(CliError::Usage(format!(
            "--t {t_len} outside 1..=64 (oracle scale)"
        )));
    }

    let m = edge_moments(p, alpha, t_len);
    let bound = edge_variance_bound(p, alpha, t_len);
    let bound_applies = if alpha == 0.0 {
        true
    } else {
        (t_len as f64).sqrt() > (t_len as f64).ln() / (1.0 / alpha).ln()
    };
    let mut report = String::new();
    report.push_str(&format!(
        "edge-sum oracle: p = {p}, alpha = {alpha}, T = {t_len}\n"
    ));
    report.push_str(&format!(
        "mean aggregated count (T p)          = {}\n",
        m.mean
    ));
    report.push_str(&format!(
        "renewal-window mean ((T+1) p)        = {}  [alternative convention; the layer sum uses T p]\n",
        (t_len + 1) as f64 * p
    ));
    report.push_str(&format!(
        "variance (exact)                     = {}\n",
        m.variance
    ));
    report.push_str(&format!(
        "variance bound T p (3-a)/(1-a)       = {}  [in force: {}]\n",
        bound,
        if bound_applies {
            "yes"
        } else {
            "no (sqrt(T) <= log_1/a(T))"
        }
    ));
    if !m.lag_cov.is_empty() {
        let lags: Vec<String> = m.lag_cov.iter().map(|v| v.to_string()).collect();
        report.push_str(&format!(
            "lag covariances h = 1..{}: {}\n",
            t_len - 1,
            lags.join(", ")
        ));
    }
    report.push_str("aggregated-count distribution:\n");
    let dist =
        edge_sum_distribution(p, alpha, t_len).map_err(|e| CliError::Message(e.to_string()))?;
    for (s, prob) in dist.iter().enumerate() {
        report.push_str(&format!("  P(a = {s}) = {prob}\n"));
    }
    match out {
        Some(path) => write_file(Path::new(&path), &report),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}
