//! Structural EM baseline: likelihood-weighted single imputation in the
//! E-step, complete-data BIC tabu search in the M-step.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{Dataset, Value};
use crate::derive_seed;
use crate::graph::Dag;
use crate::model::{split_parents, BayesianNetwork, FitError, NodeType};
use crate::scoring::{Penalty, ScoredSearchState};
use crate::search::{tabu_search, SearchResult, TabuConfig};

#[derive(Debug, Error)]
pub enum SemError {
    #[error("row {row}: all particle weights are zero (evidence impossible under the network)")]
    DegenerateEvidence { row: usize },
    #[error("parameter fit failed: {0}")]
    Fit(#[from] FitError),
}

/// Structural EM parameters. The inner tabu search always scores with
/// complete-data BIC.
#[derive(Debug, Clone)]
pub struct SemConfig {
    pub particles: usize,
    pub max_em_iterations: usize,
    pub score_tolerance: f64,
    pub tabu: TabuConfig,
    pub seed: u64,
}

impl SemConfig {
    pub fn for_nodes(n_nodes: usize) -> Self {
        SemConfig {
            particles: 500,
            max_em_iterations: 20,
            score_tolerance: 1e-6,
            tabu: TabuConfig::for_nodes(n_nodes),
            seed: 0,
        }
    }
}

/// Completes one row by likelihood weighting: forward-samples the network
/// in topological order with observed cells clamped, weights each particle
/// by the likelihood of the clamped evidence, then summarizes missing cells
/// with the weighted mode (discrete) or weighted mean (continuous).
/// Complete rows come back unchanged without consuming randomness.
pub fn impute_row(
    bn: &BayesianNetwork,
    data: &Dataset,
    row: usize,
    particles: usize,
    seed: u64,
) -> Result<Vec<Value>, SemError> {
    let n = data.n_cols();
    let evidence: Vec<Option<Value>> = (0..n).map(|c| data.value(c, row)).collect();
    if evidence.iter().all(Option::is_some) {
        return Ok(evidence.into_iter().map(Option::unwrap).collect());
    }

    let order = bn.dag().topological_order().expect("network DAG is acyclic");
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..n)
        .map(|node| split_parents(bn.dag(), bn.node_types(), node))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // per missing node: accumulated weighted draws
    let missing: Vec<usize> =
        (0..n).filter(|&c| evidence[c].is_none()).collect();
    let mut level_weights: Vec<Vec<f64>> = missing
        .iter()
        .map(|&c| match &data.types()[c] {
            NodeType::Discrete { levels } => vec![0.0; levels.len()],
            NodeType::Gaussian => Vec::new(),
        })
        .collect();
    let mut mean_accum = vec![0.0f64; missing.len()];
    let mut weight_total = 0.0f64;

    let mut assignment: Vec<Value> = vec![Value::Real(0.0); n];
    let mut disc_buf: Vec<u32> = Vec::new();
    let mut cont_buf: Vec<f64> = Vec::new();

    for _ in 0..particles {
        let mut log_weight = 0.0f64;
        for &node in &order {
            let (disc, cont) = &splits[node];
            disc_buf.clear();
            cont_buf.clear();
            for &p in disc {
                match assignment[p] {
                    Value::Discrete(v) => disc_buf.push(v),
                    Value::Real(_) => unreachable!("discrete parent holds a discrete value"),
                }
            }
            for &p in cont {
                match assignment[p] {
                    Value::Real(x) => cont_buf.push(x),
                    Value::Discrete(_) => unreachable!("continuous parent holds a real value"),
                }
            }
            match evidence[node] {
                Some(v) => {
                    assignment[node] = v;
                    match bn.local(node).log_density(v, &disc_buf, &cont_buf) {
                        Ok(ld) => log_weight += ld,
                        // evidence impossible under this particle's ancestors
                        Err(_) => log_weight = f64::NEG_INFINITY,
                    }
                }
                None => {
                    assignment[node] = bn.local(node).sample(&disc_buf, &cont_buf, &mut rng);
                }
            }
        }
        let weight = log_weight.exp();
        if weight > 0.0 {
            weight_total += weight;
            for (slot, &node) in missing.iter().enumerate() {
                match assignment[node] {
                    Value::Discrete(v) => level_weights[slot][v as usize] += weight,
                    Value::Real(x) => mean_accum[slot] += weight * x,
                }
            }
        }
    }

    if weight_total <= 0.0 {
        return Err(SemError::DegenerateEvidence { row });
    }

    let mut completed: Vec<Value> = evidence
        .iter()
        .map(|v| v.unwrap_or(Value::Real(0.0)))
        .collect();
    for (slot, &node) in missing.iter().enumerate() {
        completed[node] = match &data.types()[node] {
            NodeType::Discrete { .. } => {
                let weights = &level_weights[slot];
                let mut best = 0usize;
                for (k, &w) in weights.iter().enumerate() {
                    if w > weights[best] {
                        best = k;
                    }
                }
                Value::Discrete(best as u32)
            }
            NodeType::Gaussian => Value::Real(mean_accum[slot] / weight_total),
        };
    }
    Ok(completed)
}

/// Imputes every row of the dataset; rows get independent seeds derived
/// from `(seed, row)`, so row order and parallel scheduling cannot change
/// the result. The output is fully observed and observed cells are copied
/// through untouched.
pub fn impute_dataset(
    bn: &BayesianNetwork,
    data: &Dataset,
    particles: usize,
    seed: u64,
) -> Result<Dataset, SemError> {
    let mut out = Dataset::zeroed(data.schema().clone(), data.n_rows());
    for row in 0..data.n_rows() {
        let row_seed = derive_seed(seed, &[row as u64]);
        let values = impute_row(bn, data, row, particles, row_seed)?;
        for (col, v) in values.into_iter().enumerate() {
            out.set(col, row, v);
        }
    }
    Ok(out)
}

/// Structural EM: iterate (impute with the current network) -> (tabu search
/// with complete-data BIC on the imputed data) -> (refit parameters) until
/// the structure repeats, the score moves less than the tolerance, or the
/// iteration cap is reached. Parameters start from an empty-graph fit on
/// available cases; the M-step always restarts tabu from the empty graph so
/// complete data reduces to a single plain tabu run.
pub fn structural_em(
    data: &Dataset,
    cfg: &SemConfig,
    state: &mut ScoredSearchState,
) -> Result<SearchResult, SemError> {
    let start = Instant::now();
    let calls_before = state.score_calls();
    let names = data.names().to_vec();

    let empty = Dag::empty(names.clone());
    let mut bn = BayesianNetwork::fit(&empty, data)?;

    let mut prev_dag = empty.clone();
    let mut prev_score: Option<f64> = None;
    let mut best: Option<(Dag, f64)> = None;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut em_iterations = 0usize;

    while em_iterations < cfg.max_em_iterations {
        em_iterations += 1;

        let imputed = impute_dataset(&bn, data, cfg.particles, cfg.seed)?;

        // scores from the previous M-step refer to a different imputed
        // dataset; only the call counter carries over
        state.clear_cache();
        let m_step = tabu_search(&imputed, &cfg.tabu, Penalty::Bic, state, &empty);
        trace.push(m_step.score);

        bn = BayesianNetwork::fit(&m_step.dag, &imputed)?;

        if best.as_ref().is_none_or(|(_, s)| m_step.score > *s) {
            best = Some((m_step.dag.clone(), m_step.score));
        }

        let structure_stable = m_step.dag == prev_dag;
        let score_stable = prev_score
            .is_some_and(|p| (m_step.score - p).abs() < cfg.score_tolerance);
        prev_dag = m_step.dag;
        prev_score = Some(m_step.score);

        if structure_stable || score_stable {
            converged = true;
            break;
        }
    }

    let (dag, score) = if converged {
        (prev_dag, prev_score.expect("at least one M-step ran"))
    } else {
        best.expect("at least one M-step ran")
    };
    Ok(SearchResult {
        dag,
        score,
        score_calls: state.score_calls() - calls_before,
        wall_time: start.elapsed(),
        iterations: em_iterations,
        converged,
        em_trace: Some(trace),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        forward_sample, Cpt, GaussianRegression, LocalDistribution,
    };
    use crate::scoring::spl_score;

    fn binary_type(prefix: &str) -> NodeType {
        NodeType::Discrete { levels: vec![format!("{prefix}0"), format!("{prefix}1")] }
    }

    fn one_node_bn() -> BayesianNetwork {
        BayesianNetwork::new(
            Dag::empty(vec!["A".into()]),
            vec![binary_type("a")],
            vec![LocalDistribution::Cpt(Cpt::new(vec![], vec![vec![0.9, 0.1]]).unwrap())],
        )
        .unwrap()
    }

    #[test]
    fn complete_row_passes_through_unchanged() {
        let bn = one_node_bn();
        let d = forward_sample(&bn, 5, 1);
        // seed must be irrelevant: no randomness is consumed
        let a = impute_row(&bn, &d, 2, 500, 1).unwrap();
        let b = impute_row(&bn, &d, 2, 500, 999).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], d.value(0, 2).unwrap());
    }

    #[test]
    fn missing_cell_imputes_to_the_mode() {
        let bn = one_node_bn();
        let d = forward_sample(&bn, 1, 1).inject_mcar(1.0, 2).unwrap();
        let mut hits = 0;
        for seed in 0..20 {
            let v = impute_row(&bn, &d, 0, 500, seed).unwrap();
            if v[0] == Value::Discrete(0) {
                hits += 1;
            }
        }
        assert!(hits >= 19, "mode imputed in only {hits}/20 seeds");
    }

    fn bivariate_bn() -> BayesianNetwork {
        // X ~ N(1, 1), Y = 0.5 + 2 X + eps, eps ~ N(0, 0.64)
        let dag = Dag::from_arcs(vec!["X".into(), "Y".into()], &[(0, 1)]).unwrap();
        let types = vec![NodeType::Gaussian, NodeType::Gaussian];
        let locals = vec![
            LocalDistribution::Gaussian(GaussianRegression::new(1.0, vec![], 1.0).unwrap()),
            LocalDistribution::Gaussian(GaussianRegression::new(0.5, vec![2.0], 0.64).unwrap()),
        ];
        BayesianNetwork::new(dag, types, locals).unwrap()
    }

    #[test]
    fn continuous_imputation_tracks_conditional_mean() {
        let bn = bivariate_bn();
        // one row: X missing, Y observed at 4.0
        let masked = {
            use crate::data::ColumnData;
            Dataset::from_parts(
                bn.schema(),
                vec![ColumnData::Real(vec![0.0]), ColumnData::Real(vec![4.0])],
                vec![vec![false], vec![true]],
            )
            .unwrap()
        };
        // exact posterior: mean = mu + b s2 (y - a - b mu) / (b^2 s2 + v)
        let (mu, s2, a, b, v) = (1.0, 1.0, 0.5, 2.0, 0.64);
        let exact = mu + b * s2 * (4.0 - a - b * mu) / (b * b * s2 + v);
        let row = impute_row(&bn, &masked, 0, 2_000, 11).unwrap();
        let got = match row[0] {
            Value::Real(x) => x,
            _ => unreachable!(),
        };
        // generous bound; the acceptance suite checks the tight one
        assert!((got - exact).abs() < 0.1, "imputed {got}, exact {exact}");
    }

    fn chain4_bn() -> BayesianNetwork {
        let dag = Dag::from_arcs(
            vec!["A".into(), "B".into(), "C".into(), "D".into()],
            &[(0, 1), (1, 2), (2, 3)],
        )
        .unwrap();
        let types = vec![
            binary_type("a"),
            binary_type("b"),
            binary_type("c"),
            binary_type("d"),
        ];
        let edge = |lo: f64| {
            Cpt::new(vec![2], vec![vec![lo, 1.0 - lo], vec![1.0 - lo, lo]]).unwrap()
        };
        let locals = vec![
            LocalDistribution::Cpt(Cpt::new(vec![], vec![vec![0.45, 0.55]]).unwrap()),
            LocalDistribution::Cpt(edge(0.85)),
            LocalDistribution::Cpt(edge(0.2)),
            LocalDistribution::Cpt(edge(0.8)),
        ];
        BayesianNetwork::new(dag, types, locals).unwrap()
    }

    #[test]
    fn complete_data_reduces_to_plain_tabu() {
        let d = forward_sample(&chain4_bn(), 2_000, 8);
        let cfg = SemConfig::for_nodes(4);
        let mut sem_state = ScoredSearchState::new();
        let sem = structural_em(&d, &cfg, &mut sem_state).unwrap();
        let mut tabu_state = ScoredSearchState::new();
        let direct = tabu_search(
            &d,
            &cfg.tabu,
            Penalty::Bic,
            &mut tabu_state,
            &Dag::empty(d.names().to_vec()),
        );
        assert_eq!(sem.dag, direct.dag);
        assert!(sem.converged);
        assert!(sem.score_calls >= direct.score_calls);
        assert_eq!(sem.iterations, 2); // second pass confirms stability
    }

    #[test]
    fn sem_beats_empty_graph_on_incomplete_chain() {
        let bn = chain4_bn();
        let truth = bn.dag().to_cpdag();
        let empty_shd = Dag::empty(bn.dag().names().to_vec())
            .to_cpdag()
            .shd(&truth)
            .unwrap();
        let mut wins = 0;
        for seed in 0..20 {
            let complete = forward_sample(&bn, 5_000, 400 + seed);
            let d = complete.inject_mcar(0.1, 500 + seed).unwrap();
            let mut cfg = SemConfig::for_nodes(4);
            cfg.particles = 200; // plenty for 4 binary nodes
            cfg.seed = seed;
            let mut state = ScoredSearchState::new();
            let res = structural_em(&d, &cfg, &mut state).unwrap();
            if res.dag.to_cpdag().shd(&truth).unwrap() <= empty_shd {
                wins += 1;
            }
        }
        assert!(wins >= 19, "beat the empty graph in only {wins}/20 seeds");
    }

    #[test]
    fn imputed_dataset_is_complete_and_preserves_observed_cells() {
        let bn = chain4_bn();
        let complete = forward_sample(&bn, 500, 77);
        let d = complete.inject_mcar(0.3, 78).unwrap();
        let imputed = impute_dataset(&bn, &d, 100, 5).unwrap();
        assert!(imputed.is_fully_observed());
        for row in 0..d.n_rows() {
            for col in 0..d.n_cols() {
                if let Some(v) = d.value(col, row) {
                    assert_eq!(imputed.value(col, row), Some(v));
                }
            }
        }
    }

    #[test]
    fn em_trace_is_recorded() {
        let bn = chain4_bn();
        let d = forward_sample(&bn, 1_000, 31).inject_mcar(0.2, 32).unwrap();
        let mut cfg = SemConfig::for_nodes(4);
        cfg.particles = 100;
        let mut state = ScoredSearchState::new();
        let res = structural_em(&d, &cfg, &mut state).unwrap();
        let trace = res.em_trace.as_ref().unwrap();
        assert_eq!(trace.len(), res.iterations);
        // the final score is audited against its own imputed data already;
        // here just check the reported score came from the trace
        assert!(trace.contains(&res.score));

        // the M-step nests a full tabu run per iteration, so with two or
        // more iterations the EM loop pays strictly more score calls than
        // one direct search over the same data
        assert!(res.iterations >= 2);
        let mut direct_state = ScoredSearchState::new();
        let direct = tabu_search(
            &d,
            &cfg.tabu,
            Penalty::Bic,
            &mut direct_state,
            &Dag::empty(d.names().to_vec()),
        );
        assert!(res.score_calls >= direct.score_calls);
    }

    #[test]
    fn sem_result_score_is_finite_spl_on_imputed_data() {
        // sanity: the returned DAG scores finitely on the observed data too
        let bn = chain4_bn();
        let d = forward_sample(&bn, 1_000, 61).inject_mcar(0.1, 62).unwrap();
        let mut cfg = SemConfig::for_nodes(4);
        cfg.particles = 100;
        let mut state = ScoredSearchState::new();
        let res = structural_em(&d, &cfg, &mut state).unwrap();
        let mut fresh = ScoredSearchState::new();
        let spl = spl_score(&d, &res.dag, Penalty::Bic, &mut fresh);
        assert!(spl.is_finite());
    }
}
