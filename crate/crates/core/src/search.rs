//! Structure search over the penalized node-average likelihood score:
//! exact per-node search under a known topological ordering, tabu search
//! for unknown ordering, and an exhaustive oracle for small node sets.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use itertools::Itertools;
use thiserror::Error;

use crate::data::Dataset;
use crate::graph::{ArcOp, Dag, Mutation};
use crate::model::{dim_theta_parents, validate_structure};
use crate::scoring::{score_delta, spl_score, Penalty, ScoredSearchState};

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("ordering is not a permutation of the node set")]
    InvalidOrdering,
    #[error("exhaustive enumeration supports at most {limit} nodes, got {got}")]
    TooManyNodes { limit: usize, got: usize },
}

/// Exact search configuration: a known topological ordering and a cap on
/// parent-set size.
#[derive(Debug, Clone)]
pub struct OrderSearchConfig {
    pub ordering: Vec<usize>,
    pub max_parents: usize,
}

/// Tabu search parameters.
#[derive(Debug, Clone, Copy)]
pub struct TabuConfig {
    pub tabu_list_length: usize,
    pub max_iterations: usize,
    pub max_non_improving: usize,
    pub seed: u64,
}

impl TabuConfig {
    /// Defaults sized so desk-scale runs finish in seconds.
    pub fn for_nodes(n_nodes: usize) -> Self {
        TabuConfig {
            tabu_list_length: 10,
            max_iterations: 200 + 15 * n_nodes,
            max_non_improving: 15,
            seed: 0,
        }
    }
}

/// Outcome of one structure-learning run.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub dag: Dag,
    pub score: f64,
    pub score_calls: u64,
    pub wall_time: Duration,
    pub iterations: usize,
    /// False only when an EM outer loop gave up before stabilizing.
    pub converged: bool,
    /// Per-iteration M-step scores when the run embeds an EM loop.
    pub em_trace: Option<Vec<f64>>,
}

/// For each node independently, picks the parent subset of its
/// order-predecessors (size at most `max_parents`) maximizing the node term
/// minus its penalty share. Globally optimal given the ordering and cap.
/// Ties break toward smaller subsets, then lexicographically.
pub fn exact_order_search(
    data: &Dataset,
    cfg: &OrderSearchConfig,
    penalty: Penalty,
    state: &mut ScoredSearchState,
) -> Result<SearchResult, SearchError> {
    let start = Instant::now();
    let n = data.n_cols();
    let types = data.types();
    if cfg.ordering.len() != n {
        return Err(SearchError::InvalidOrdering);
    }
    let mut seen = vec![false; n];
    for &node in &cfg.ordering {
        if node >= n || seen[node] {
            return Err(SearchError::InvalidOrdering);
        }
        seen[node] = true;
    }

    let calls_before = state.score_calls();
    let lambda = penalty.lambda(data.n_rows());
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    let mut candidates_seen = 0usize;

    for (pos, &node) in cfg.ordering.iter().enumerate() {
        let mut predecessors: Vec<usize> = cfg.ordering[..pos].to_vec();
        predecessors.sort_unstable();
        if types[node].is_discrete() {
            predecessors.retain(|&p| types[p].is_discrete());
        }

        let mut best_parents: Vec<usize> = Vec::new();
        let mut best_value = f64::NEG_INFINITY;
        let mut first = true;
        for size in 0..=cfg.max_parents.min(predecessors.len()) {
            for subset in predecessors.iter().copied().combinations(size) {
                candidates_seen += 1;
                let term = state.node_score(data, node, &subset).value
                    - lambda * dim_theta_parents(types, node, &subset) as f64;
                // first candidate (empty set) seeds the running best, so an
                // all-invalid node still gets a defined answer
                if first || term > best_value {
                    best_value = term;
                    best_parents = subset;
                    first = false;
                }
            }
        }
        for p in best_parents {
            arcs.push((p, node));
        }
    }

    let dag = Dag::from_arcs(data.names().to_vec(), &arcs)
        .expect("parents precede children in the ordering");
    let score = spl_score(data, &dag, penalty, state);
    Ok(SearchResult {
        dag,
        score,
        score_calls: state.score_calls() - calls_before,
        wall_time: start.elapsed(),
        iterations: candidates_seen,
        converged: true,
        em_trace: None,
    })
}

fn legal_neighbors(dag: &Dag, types: &[crate::model::NodeType]) -> Vec<Mutation> {
    let n = dag.node_count();
    let mut moves = Vec::new();
    let arcs = dag.arcs();
    // deletes first, then reverses, then adds: equal-score ties resolve
    // toward lower model complexity
    for &(p, c) in &arcs {
        moves.push(Mutation::delete(p, c));
    }
    for &(p, c) in &arcs {
        // reversing p -> c makes p the child; discrete p then needs a
        // discrete parent
        if types[p].is_discrete() && !types[c].is_discrete() {
            continue;
        }
        moves.push(Mutation::reverse(p, c));
    }
    for p in 0..n {
        for c in 0..n {
            if p == c || dag.has_arc(p, c) || dag.has_arc(c, p) {
                continue;
            }
            if types[c].is_discrete() && !types[p].is_discrete() {
                continue;
            }
            moves.push(Mutation::add(p, c));
        }
    }
    moves
}

fn undo_signature(m: Mutation) -> Mutation {
    match m.op {
        ArcOp::Add => Mutation::delete(m.parent, m.child),
        ArcOp::Delete => Mutation::add(m.parent, m.child),
        ArcOp::Reverse => Mutation::reverse(m.child, m.parent),
    }
}

/// Steepest-ascent hill climbing over add/delete/reverse with a tabu list
/// of undo moves. Accepts the best non-tabu neighbor each iteration (a tabu
/// move is allowed only when it beats the global best), stops after
/// `max_non_improving` iterations without a new best or at
/// `max_iterations`, and returns the best DAG seen.
pub fn tabu_search(
    data: &Dataset,
    cfg: &TabuConfig,
    penalty: Penalty,
    state: &mut ScoredSearchState,
    initial: &Dag,
) -> SearchResult {
    let start = Instant::now();
    let calls_before = state.score_calls();
    let types = data.types();

    let mut current = initial.clone();
    let mut current_score = spl_score(data, &current, penalty, state);
    let mut best = current.clone();
    let mut best_score = current_score;

    let mut tabu: VecDeque<Mutation> = VecDeque::with_capacity(cfg.tabu_list_length);
    let mut non_improving = 0usize;
    let mut iterations = 0usize;

    while iterations < cfg.max_iterations && non_improving < cfg.max_non_improving {
        let mut chosen: Option<(Mutation, f64)> = None;
        for m in legal_neighbors(&current, types) {
            if current.mutate(m).is_err() {
                continue; // would close a cycle
            }
            let delta = score_delta(state, data, &current, m, penalty);
            if delta == f64::NEG_INFINITY {
                continue; // invalid candidate, skipped silently
            }
            let candidate_score = current_score + delta;
            if tabu.contains(&m) && candidate_score <= best_score {
                continue; // tabu without aspiration
            }
            match chosen {
                Some((_, best_delta)) if delta <= best_delta => {}
                _ => chosen = Some((m, delta)),
            }
        }

        let Some((m, delta)) = chosen else {
            break; // every neighbor tabu or invalid
        };
        current = current.mutate(m).expect("legality checked above");
        current_score += delta;
        iterations += 1;

        #[cfg(debug_assertions)]
        {
            let audited = spl_score(data, &current, penalty, state);
            debug_assert!(
                (audited - current_score).abs() <= 1e-8 * (1.0 + audited.abs()),
                "incremental score drifted: {current_score} vs {audited}"
            );
        }

        if tabu.len() == cfg.tabu_list_length {
            tabu.pop_front();
        }
        tabu.push_back(undo_signature(m));

        if current_score > best_score {
            best = current.clone();
            best_score = current_score;
            non_improving = 0;
        } else {
            non_improving += 1;
        }
    }

    let score = spl_score(data, &best, penalty, state);
    SearchResult {
        dag: best,
        score,
        score_calls: state.score_calls() - calls_before,
        wall_time: start.elapsed(),
        iterations,
        converged: true,
        em_trace: None,
    }
}

const EXHAUSTIVE_NODE_LIMIT: usize = 5;

/// Every DAG over the given node names, by enumeration of arc subsets.
/// Test oracle; refuses more than five nodes.
pub fn all_dags(names: &[String]) -> Result<Vec<Dag>, SearchError> {
    let n = names.len();
    if n > EXHAUSTIVE_NODE_LIMIT {
        return Err(SearchError::TooManyNodes { limit: EXHAUSTIVE_NODE_LIMIT, got: n });
    }
    let mut pairs = Vec::new();
    for p in 0..n {
        for c in 0..n {
            if p != c {
                pairs.push((p, c));
            }
        }
    }
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        let arcs: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &a)| a)
            .collect();
        if let Ok(dag) = Dag::from_arcs(names.to_vec(), &arcs) {
            out.push(dag);
        }
    }
    Ok(out)
}

/// Global argmax of the penalized score by full enumeration; ties go to the
/// DAG with fewer arcs. Test oracle for the heuristic searches.
pub fn exhaustive_search(
    data: &Dataset,
    penalty: Penalty,
    state: &mut ScoredSearchState,
) -> Result<SearchResult, SearchError> {
    let start = Instant::now();
    let calls_before = state.score_calls();
    let types = data.types();
    let dags = all_dags(data.names())?;
    let considered = dags.len();

    let mut best: Option<(Dag, f64)> = None;
    for dag in dags {
        if !validate_structure(&dag, types).is_empty() {
            continue;
        }
        let score = spl_score(data, &dag, penalty, state);
        let better = match &best {
            None => true,
            Some((b, s)) => {
                score > *s || (score == *s && dag.arc_count() < b.arc_count())
            }
        };
        if better {
            best = Some((dag, score));
        }
    }
    let (dag, score) = best.expect("the empty graph is always enumerated");
    Ok(SearchResult {
        dag,
        score,
        score_calls: state.score_calls() - calls_before,
        wall_time: start.elapsed(),
        iterations: considered,
        converged: true,
        em_trace: None,
    })
}
