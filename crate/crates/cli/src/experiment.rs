//! Benchmark harness: grid execution over (k, beta, penalty, algorithm)
//! with per-replicate dataset reuse, append-only results, crash-safe
//! resume, and aggregation.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use nalbn::bundled;
use nalbn::data::Dataset;
use nalbn::derive_seed;
use nalbn::graph::{scaled_shd, Dag};
use nalbn::io::load_bn;
use nalbn::model::{forward_sample, BayesianNetwork};
use nalbn::scoring::{Penalty, ScoredSearchState};
use nalbn::search::{exact_order_search, tabu_search, OrderSearchConfig, SearchResult, TabuConfig};
use nalbn::sem::{structural_em, SemConfig};

use crate::error::CliError;

pub const RESULTS_HEADER: &str =
    "network,algorithm,penalty,k,n,beta,replicate,shd,scaled_shd,score_calls,wall_time_ms,learned_arcs,em_iterations";

/// Grid specification; omitted fields fall back to the desk-scale defaults.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: String,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_k_grid")]
    pub k_grid: Vec<usize>,
    #[serde(default = "default_beta_grid")]
    pub beta_grid: Vec<f64>,
    #[serde(default = "default_penalties")]
    pub penalties: Vec<String>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<String>,
    #[serde(default = "default_max_parents")]
    pub max_parents: usize,
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_replicates() -> usize {
    20
}
fn default_k_grid() -> Vec<usize> {
    vec![10, 50, 250]
}
fn default_beta_grid() -> Vec<f64> {
    vec![0.0, 0.1, 0.2]
}
fn default_penalties() -> Vec<String> {
    ["alpha:0.10", "alpha:0.25", "alpha:0.60", "bic", "aic"]
        .map(String::from)
        .to_vec()
}
fn default_algorithms() -> Vec<String> {
    ["order-exact", "tabu", "sem"].map(String::from).to_vec()
}
fn default_max_parents() -> usize {
    2
}
fn default_particles() -> usize {
    500
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.replicates == 0 {
            return Err(CliError::Data("replicates must be positive".into()));
        }
        if self.k_grid.is_empty() || self.beta_grid.is_empty() {
            return Err(CliError::Data("k and beta grids must be non-empty".into()));
        }
        if self.penalties.is_empty() || self.algorithms.is_empty() {
            return Err(CliError::Data("penalty and algorithm lists must be non-empty".into()));
        }
        if self.k_grid.contains(&0) {
            return Err(CliError::Data("relative sample sizes must be at least 1".into()));
        }
        if self.beta_grid.iter().any(|&b| !(0.0..=1.0).contains(&b)) {
            return Err(CliError::Data("beta values must lie in [0, 1]".into()));
        }
        for a in &self.algorithms {
            if !matches!(a.as_str(), "order-exact" | "tabu" | "sem") {
                return Err(CliError::Data(format!("unknown algorithm {a:?}")));
            }
        }
        Ok(())
    }
}

/// Accepts `bic`, `aic` or `alpha:<value>`.
pub fn parse_penalty(spec: &str, n_nodes: usize) -> Result<Penalty, CliError> {
    match spec {
        "bic" => Ok(Penalty::Bic),
        "aic" => Ok(Penalty::Aic),
        _ => {
            let value = spec
                .strip_prefix("alpha:")
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|&a| a > 0.0)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "bad penalty {spec:?}: expected bic, aic or alpha:<positive value>"
                    ))
                })?;
            Ok(Penalty::Custom { alpha: value, n_nodes })
        }
    }
}

/// Loads a network file, accepting the names of bundled networks as well.
pub fn load_network(spec: &str) -> Result<BayesianNetwork, CliError> {
    match spec {
        "discrete8" => Ok(bundled::discrete8()),
        "gaussian8" => Ok(bundled::gaussian8()),
        "cg8" => Ok(bundled::cg8()),
        path => Ok(load_bn(path)?),
    }
}

fn network_label(spec: &str) -> String {
    Path::new(spec)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string())
}

struct LearnedMetrics {
    result: SearchResult,
    em_iterations: Option<usize>,
}

fn run_one(
    algorithm: &str,
    data: &Dataset,
    truth: &BayesianNetwork,
    penalty: Penalty,
    max_parents: usize,
    particles: usize,
    seed: u64,
) -> Result<LearnedMetrics, CliError> {
    let n_nodes = data.n_cols();
    match algorithm {
        "order-exact" => {
            let cfg = OrderSearchConfig {
                ordering: truth.dag().topological_order()?,
                max_parents,
            };
            let mut state = ScoredSearchState::new();
            let result = exact_order_search(data, &cfg, penalty, &mut state)?;
            Ok(LearnedMetrics { result, em_iterations: None })
        }
        "tabu" => {
            let mut cfg = TabuConfig::for_nodes(n_nodes);
            cfg.seed = seed;
            let mut state = ScoredSearchState::new();
            let result = tabu_search(
                data,
                &cfg,
                penalty,
                &mut state,
                &Dag::empty(data.names().to_vec()),
            );
            Ok(LearnedMetrics { result, em_iterations: None })
        }
        "sem" => {
            let mut cfg = SemConfig::for_nodes(n_nodes);
            cfg.particles = particles;
            cfg.seed = seed;
            let mut state = ScoredSearchState::new();
            let result = structural_em(data, &cfg, &mut state)?;
            let iters = result.iterations;
            Ok(LearnedMetrics { result, em_iterations: Some(iters) })
        }
        other => Err(CliError::Usage(format!("unknown algorithm {other:?}"))),
    }
}

fn format_beta(beta: f64) -> String {
    format!("{beta}")
}

type RowKey = (String, String, usize, String, usize);

fn existing_keys(path: &Path) -> Result<HashSet<RowKey>, CliError> {
    let mut keys = HashSet::new();
    if !path.exists() {
        return Ok(keys);
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    for record in reader.records() {
        let r = record?;
        if r.len() < 7 {
            continue;
        }
        let algorithm = r[1].to_string();
        let penalty = r[2].to_string();
        let k: usize = r[3].parse().unwrap_or(0);
        let beta = r[5].to_string();
        let replicate: usize = r[6].parse().unwrap_or(0);
        keys.insert((algorithm, penalty, k, beta, replicate));
    }
    Ok(keys)
}

/// Runs the full grid. One dataset is generated per (cell, replicate) and
/// shared by every algorithm and penalty; rows already present in the
/// output are skipped, so an interrupted run resumes where it stopped.
/// Returns the number of rows appended.
pub fn run_experiment(cfg: &ExperimentConfig, out_path: &Path) -> Result<usize, CliError> {
    let truth = load_network(&cfg.network)?;
    let label = network_label(&cfg.network);
    let truth_cpdag = truth.dag().to_cpdag();
    let true_arcs = truth.dag().arc_count();
    let dim_total = truth.dim_theta_total();
    let n_nodes = truth.dag().node_count();

    let done = existing_keys(out_path)?;
    let needs_header = !out_path.exists()
        || std::fs::metadata(out_path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = OpenOptions::new().create(true).append(true).open(out_path)?;
    if needs_header {
        writeln!(file, "{RESULTS_HEADER}")?;
    }

    let mut written = 0usize;
    for (cell, (&k, &beta)) in cfg
        .k_grid
        .iter()
        .flat_map(|k| cfg.beta_grid.iter().map(move |b| (k, b)))
        .enumerate()
    {
        let n = k * dim_total;
        let beta_str = format_beta(beta);
        for rep in 0..cfg.replicates {
            // (algorithm, penalty-label, penalty) jobs for this replicate;
            // sem scores its M-step with bic regardless of the grid
            let mut jobs: Vec<(String, String)> = Vec::new();
            for algorithm in &cfg.algorithms {
                if algorithm == "sem" {
                    jobs.push(("sem".into(), "bic".into()));
                } else {
                    for p in &cfg.penalties {
                        jobs.push((algorithm.clone(), p.clone()));
                    }
                }
            }
            jobs.retain(|(a, p)| {
                !done.contains(&(a.clone(), p.clone(), k, beta_str.clone(), rep))
            });
            if jobs.is_empty() {
                continue;
            }

            let cell_u = cell as u64;
            let rep_u = rep as u64;
            let complete =
                forward_sample(&truth, n, derive_seed(cfg.base_seed, &[cell_u, rep_u, 0]));
            let data = if beta > 0.0 {
                complete.inject_mcar(beta, derive_seed(cfg.base_seed, &[cell_u, rep_u, 1]))?
            } else {
                complete
            };

            for (algorithm, penalty_label) in jobs {
                let penalty = parse_penalty(&penalty_label, n_nodes)?;
                let seed = derive_seed(cfg.base_seed, &[cell_u, rep_u, 2]);
                let prefix =
                    format!("{label},{algorithm},{penalty_label},{k},{n},{beta_str},{rep}");
                match run_one(&algorithm, &data, &truth, penalty, cfg.max_parents, cfg.particles, seed)
                {
                    Ok(m) => {
                        let shd = m.result.dag.to_cpdag().shd(&truth_cpdag)?;
                        let sshd = scaled_shd(&m.result.dag.to_cpdag(), &truth_cpdag, true_arcs)?;
                        let em = m
                            .em_iterations
                            .map(|i| i.to_string())
                            .unwrap_or_default();
                        writeln!(
                            file,
                            "{prefix},{shd},{sshd:.6},{calls},{ms},{arcs},{em}",
                            calls = m.result.score_calls,
                            ms = m.result.wall_time.as_millis(),
                            arcs = m.result.dag.arc_count(),
                        )?;
                    }
                    Err(e) => {
                        eprintln!("warning: {prefix} failed: {e}");
                        writeln!(file, "{prefix},,,,,,")?;
                    }
                }
                file.flush()?;
                written += 1;
            }
        }
    }
    Ok(written)
}

#[derive(Default)]
struct GroupStats {
    n: usize,
    scaled_shds: Vec<f64>,
    shds: Vec<f64>,
    calls: Vec<f64>,
    wall_ms: Vec<f64>,
    arcs: Vec<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn ratio_field(value: f64, reference: Option<f64>) -> String {
    let Some(r) = reference else {
        return String::new();
    };
    if (value - r).abs() < 1e-12 {
        "1.000000".to_string()
    } else if r == 0.0 {
        String::new()
    } else {
        format!("{:.6}", value / r)
    }
}

pub const SUMMARY_HEADER: &str = "network,algorithm,penalty,k,beta,n,replicates,mean_shd,mean_scaled_shd,median_scaled_shd,mean_score_calls,mean_wall_time_ms,mean_learned_arcs,shd_ratio_vs_sem,calls_ratio_vs_sem,time_ratio_vs_sem";

/// Aggregates a results CSV per (network, algorithm, penalty, k, beta),
/// adding ratios against the structural-EM rows of the same cell where
/// those exist. Error rows (empty metrics) are skipped.
pub fn summarize(results_path: &Path) -> Result<String, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(results_path)?;
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != RESULTS_HEADER {
        return Err(CliError::Data(format!(
            "unexpected results header: {header:?}"
        )));
    }

    type Key = (String, String, String, usize, String);
    let mut groups: BTreeMap<Key, GroupStats> = BTreeMap::new();
    for record in reader.records() {
        let r = record?;
        if r[7].is_empty() {
            continue; // error row
        }
        let key: Key = (
            r[0].to_string(),
            r[1].to_string(),
            r[2].to_string(),
            r[3].parse().map_err(|_| CliError::Data("bad k field".into()))?,
            r[5].to_string(),
        );
        let g = groups.entry(key).or_default();
        g.n = r[4].parse().unwrap_or(0);
        g.shds.push(r[7].parse().map_err(|_| CliError::Data("bad shd field".into()))?);
        g.scaled_shds
            .push(r[8].parse().map_err(|_| CliError::Data("bad scaled_shd field".into()))?);
        g.calls.push(r[9].parse().unwrap_or(0.0));
        g.wall_ms.push(r[10].parse().unwrap_or(0.0));
        g.arcs.push(r[11].parse().unwrap_or(0.0));
    }

    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for ((network, algorithm, penalty, k, beta), g) in &groups {
        let sem = groups.get(&(
            network.clone(),
            "sem".to_string(),
            "bic".to_string(),
            *k,
            beta.clone(),
        ));
        let sem_ref = |f: fn(&GroupStats) -> f64| -> Option<f64> {
            match (algorithm.as_str(), sem) {
                ("sem", _) | (_, None) => None,
                (_, Some(s)) => Some(f(s)),
            }
        };
        let row = format!(
            "{network},{algorithm},{penalty},{k},{beta},{n},{reps},{mean_shd:.6},{mean_sshd:.6},{median_sshd:.6},{mean_calls:.6},{mean_ms:.6},{mean_arcs:.6},{r_shd},{r_calls},{r_ms}",
            n = g.n,
            reps = g.scaled_shds.len(),
            mean_shd = mean(&g.shds),
            mean_sshd = mean(&g.scaled_shds),
            median_sshd = median(&g.scaled_shds),
            mean_calls = mean(&g.calls),
            mean_ms = mean(&g.wall_ms),
            mean_arcs = mean(&g.arcs),
            r_shd = ratio_field(mean(&g.scaled_shds), sem_ref(|s| mean(&s.scaled_shds))),
            r_calls = ratio_field(mean(&g.calls), sem_ref(|s| mean(&s.calls))),
            r_ms = ratio_field(mean(&g.wall_ms), sem_ref(|s| mean(&s.wall_ms))),
        );
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}
