//! Command-line front end: sampling, missingness injection, structure
//! learning, parameter fitting, structural distance, and the benchmark
//! harness.

mod error;
mod experiment;

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use nalbn::data::{read_csv_with, Dataset};
use nalbn::graph::Dag;
use nalbn::io::{load_schema, load_structure, save_bn};
use nalbn::model::{forward_sample, BayesianNetwork};
use nalbn::scoring::ScoredSearchState;
use nalbn::search::{exact_order_search, tabu_search, OrderSearchConfig, SearchResult, TabuConfig};
use nalbn::sem::{structural_em, SemConfig};

use error::CliError;
use experiment::{load_network, parse_penalty, run_experiment, summarize, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "nalbn",
    version,
    about = "Bayesian network structure learning from incomplete data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    /// Exact per-node search given a known node ordering
    OrderExact,
    /// Tabu search from the empty graph
    Tabu,
    /// Structural EM with likelihood-weighted imputation
    Sem,
}

#[derive(Subcommand)]
enum Command {
    /// Forward-sample a network into a CSV dataset
    Sample {
        /// Network JSON file, or a bundled name (discrete8, gaussian8, cg8)
        network: String,
        #[arg(short = 'n', long)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value = "NA")]
        na_token: String,
    },
    /// Mask cells of a complete CSV completely at random
    Inject {
        data: PathBuf,
        /// Network or schema JSON declaring column types and levels
        #[arg(long)]
        schema: String,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value = "NA")]
        na_token: String,
    },
    /// Learn a structure from (possibly incomplete) CSV data
    Learn {
        data: PathBuf,
        /// Network or schema JSON declaring column types and levels
        #[arg(long)]
        schema: String,
        #[arg(long, value_enum)]
        algorithm: Algorithm,
        /// Node ordering (one name per line); required for order-exact
        #[arg(long)]
        order_file: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        max_parents: usize,
        /// bic, aic or alpha:<value>
        #[arg(long, default_value = "bic")]
        penalty: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Particles per row for the structural-EM E-step
        #[arg(long, default_value_t = 500)]
        particles: usize,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value = "NA")]
        na_token: String,
    },
    /// Fit MLE parameters for a fixed structure
    Fit {
        structure: PathBuf,
        data: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value = "NA")]
        na_token: String,
    },
    /// Structural Hamming distance between two networks, up to Markov
    /// equivalence
    Shd {
        a: String,
        b: String,
    },
    /// Run a benchmark grid from a JSON config; flags override config
    /// fields
    Experiment {
        config: PathBuf,
        /// Results CSV (appended to; resumes if it exists)
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        network: Option<String>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        k_grid: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        beta_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        penalties: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<String>>,
        #[arg(long)]
        max_parents: Option<usize>,
        #[arg(long)]
        particles: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
    },
    /// Aggregate a results CSV per grid cell
    Summarize {
        results: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn load_dataset(path: &Path, schema_spec: &str, na: &str) -> Result<Dataset, CliError> {
    let schema = match schema_spec {
        "discrete8" | "gaussian8" | "cg8" => load_network(schema_spec)?.schema(),
        _ => load_schema(schema_spec)?,
    };
    Ok(read_csv_with(path, &schema, na)?)
}

fn read_ordering(path: &Path, data: &Dataset) -> Result<Vec<usize>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut ordering = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let idx = data
            .schema()
            .index_of(line)
            .ok_or_else(|| CliError::Data(format!("ordering names unknown node {line:?}")))?;
        ordering.push(idx);
    }
    Ok(ordering)
}

fn write_sidecar(
    out: &Path,
    algorithm: &str,
    penalty: &str,
    seed: u64,
    result: &SearchResult,
    em_iterations: Option<usize>,
) -> Result<(), CliError> {
    let mut meta = serde_json::Map::new();
    meta.insert("algorithm".into(), algorithm.into());
    meta.insert("penalty".into(), penalty.into());
    meta.insert("seed".into(), seed.into());
    meta.insert("score".into(), result.score.into());
    meta.insert("score_calls".into(), result.score_calls.into());
    meta.insert(
        "wall_time_ms".into(),
        (result.wall_time.as_millis() as u64).into(),
    );
    meta.insert("iterations".into(), result.iterations.into());
    meta.insert("converged".into(), result.converged.into());
    meta.insert(
        "em_iterations".into(),
        em_iterations.map(|i| i as u64).map_or(serde_json::Value::Null, Into::into),
    );
    if let Some(trace) = &result.em_trace {
        meta.insert("em_score_trace".into(), serde_json::to_value(trace)?);
    }
    let path = sidecar_path(out);
    std::fs::write(path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sample { network, rows, seed, out, na_token } => {
            let bn = load_network(&network)?;
            let data = forward_sample(&bn, rows, seed);
            data.write_csv_with(&out, &na_token)?;
            println!("wrote {} rows x {} columns to {}", data.n_rows(), data.n_cols(), out.display());
        }
        Command::Inject { data, schema, beta, seed, out, na_token } => {
            let dataset = load_dataset(&data, &schema, &na_token)?;
            let injected = dataset.inject_mcar(beta, seed)?;
            injected.write_csv_with(&out, &na_token)?;
            println!(
                "masked {:.6} of cells, wrote {}",
                injected.missing_fraction(),
                out.display()
            );
        }
        Command::Learn {
            data,
            schema,
            algorithm,
            order_file,
            max_parents,
            penalty,
            seed,
            particles,
            out,
            na_token,
        } => {
            let dataset = load_dataset(&data, &schema, &na_token)?;
            let n_nodes = dataset.n_cols();
            let penalty_value = parse_penalty(&penalty, n_nodes)?;

            let (label, result, em_iterations) = match algorithm {
                Algorithm::OrderExact => {
                    let order_file = order_file.ok_or_else(|| {
                        CliError::Usage("order-exact needs --order-file".into())
                    })?;
                    let cfg = OrderSearchConfig {
                        ordering: read_ordering(&order_file, &dataset)?,
                        max_parents,
                    };
                    let mut state = ScoredSearchState::new();
                    let r = exact_order_search(&dataset, &cfg, penalty_value, &mut state)?;
                    ("order-exact", r, None)
                }
                Algorithm::Tabu => {
                    let mut cfg = TabuConfig::for_nodes(n_nodes);
                    cfg.seed = seed;
                    let mut state = ScoredSearchState::new();
                    let r = tabu_search(
                        &dataset,
                        &cfg,
                        penalty_value,
                        &mut state,
                        &Dag::empty(dataset.names().to_vec()),
                    );
                    ("tabu", r, None)
                }
                Algorithm::Sem => {
                    if penalty != "bic" {
                        return Err(CliError::Usage(
                            "sem scores its M-step with bic; pass --penalty bic".into(),
                        ));
                    }
                    let mut cfg = SemConfig::for_nodes(n_nodes);
                    cfg.particles = particles;
                    cfg.seed = seed;
                    let mut state = ScoredSearchState::new();
                    let r = structural_em(&dataset, &cfg, &mut state)?;
                    let iters = r.iterations;
                    ("sem", r, Some(iters))
                }
            };

            let bn = BayesianNetwork::fit(&result.dag, &dataset)?;
            save_bn(&bn, &out)?;
            write_sidecar(&out, label, &penalty, seed, &result, em_iterations)?;
            println!(
                "learned {} arcs, score {:.6}, {} score calls, {} ms; wrote {} and {}",
                result.dag.arc_count(),
                result.score,
                result.score_calls,
                result.wall_time.as_millis(),
                out.display(),
                sidecar_path(&out).display()
            );
        }
        Command::Fit { structure, data, out, na_token } => {
            let (dag, types) = load_structure(&structure)?;
            let schema = nalbn::data::Schema {
                names: dag.names().to_vec(),
                types,
            };
            let dataset = read_csv_with(&data, &schema, &na_token)?;
            let bn = BayesianNetwork::fit(&dag, &dataset)?;
            save_bn(&bn, &out)?;
            println!("fitted {} nodes, wrote {}", dag.node_count(), out.display());
        }
        Command::Shd { a, b } => {
            let (dag_a, _) = load_structure_or_bundled(&a)?;
            let (dag_b, _) = load_structure_or_bundled(&b)?;
            let d = dag_a.to_cpdag().shd(&dag_b.to_cpdag())?;
            println!("{d}");
        }
        Command::Experiment {
            config,
            out,
            network,
            replicates,
            k_grid,
            beta_grid,
            penalties,
            algorithms,
            max_parents,
            particles,
            base_seed,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(v) = network {
                cfg.network = v;
            }
            if let Some(v) = replicates {
                cfg.replicates = v;
            }
            if let Some(v) = k_grid {
                cfg.k_grid = v;
            }
            if let Some(v) = beta_grid {
                cfg.beta_grid = v;
            }
            if let Some(v) = penalties {
                cfg.penalties = v;
            }
            if let Some(v) = algorithms {
                cfg.algorithms = v;
            }
            if let Some(v) = max_parents {
                cfg.max_parents = v;
            }
            if let Some(v) = particles {
                cfg.particles = v;
            }
            if let Some(v) = base_seed {
                cfg.base_seed = v;
            }
            cfg.validate()?;
            let out_path = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("results.csv"));
            let written = run_experiment(&cfg, &out_path)?;
            println!("appended {written} rows to {}", out_path.display());
        }
        Command::Summarize { results, out } => {
            let table = summarize(&results)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, &table)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{table}"),
            }
        }
    }
    Ok(())
}

fn load_structure_or_bundled(spec: &str) -> Result<(Dag, Vec<nalbn::model::NodeType>), CliError> {
    match spec {
        "discrete8" | "gaussian8" | "cg8" => {
            let bn = load_network(spec)?;
            Ok((bn.dag().clone(), bn.node_types().to_vec()))
        }
        path => Ok(load_structure(path)?),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cli)));
    let err = match outcome {
        Ok(Ok(())) => return,
        Ok(Err(err)) => err,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unexpected panic".into());
            CliError::Internal(msg)
        }
    };
    eprintln!("error: {err}");
    std::process::exit(err.exit_code());
}
