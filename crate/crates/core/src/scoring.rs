//! Node-average likelihood scores over locally-complete data, the penalty
//! family, the penalized network score, and the decomposed score cache with
//! call counting.
//!
//! Every node term is the mean natural-log density over the rows where the
//! node and all of its parents are observed, evaluated at the MLE fitted on
//! those same rows. Candidates with no usable rows or a degenerate fit get
//! a `-inf` sentinel: they lose every comparison and are never patched with
//! pseudo-counts.

use std::collections::HashMap;

use thiserror::Error;

use crate::data::{ColumnData, Dataset};
use crate::graph::{ArcOp, Dag, Mutation};
use crate::model::{self, dim_theta_parents, dim_theta_total, fit_node, LocalDistribution};

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("operation requires fully observed data")]
    MissingData,
}

/// Penalization coefficient rule applied per sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    Bic,
    Aic,
    /// lambda = n^(-alpha) / n_nodes
    Custom { alpha: f64, n_nodes: usize },
}

impl Penalty {
    /// The coefficient that multiplies total parameter count in the
    /// penalized score.
    pub fn lambda(&self, n: usize) -> f64 {
        debug_assert!(n >= 1, "sample size must be positive");
        let n = n as f64;
        match self {
            Penalty::Bic => n.ln() / (2.0 * n),
            Penalty::Aic => 1.0 / n,
            Penalty::Custom { alpha, n_nodes } => n.powf(-alpha) / *n_nodes as f64,
        }
    }
}

impl std::fmt::Display for Penalty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Penalty::Bic => write!(f, "bic"),
            Penalty::Aic => write!(f, "aic"),
            Penalty::Custom { alpha, .. } => write!(f, "alpha:{alpha}"),
        }
    }
}

/// Per-node score term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeScore {
    /// Mean log-density over the locally-complete rows, or `-inf` when the
    /// candidate is invalid.
    pub value: f64,
    /// Size of the locally-complete subset the term was computed on.
    pub n_local: usize,
    pub degenerate: bool,
}

impl NodeScore {
    fn invalid(n_local: usize) -> Self {
        NodeScore { value: f64::NEG_INFINITY, n_local, degenerate: true }
    }
}

/// Mean log-density of `node` given `parents` on the locally-complete
/// subset, at the MLE fitted on that subset. Failures are encoded in the
/// sentinel, never raised.
pub fn nal_node(data: &Dataset, node: usize, parents: &[usize]) -> NodeScore {
    let types = data.types();
    if types[node].is_discrete() && parents.iter().any(|&p| !types[p].is_discrete()) {
        return NodeScore::invalid(0);
    }
    let rows = data.locally_complete_rows(node, parents);
    if rows.is_empty() {
        return NodeScore::invalid(0);
    }
    let local = match fit_node(data, &rows, node, parents) {
        Ok(local) => local,
        Err(_) => return NodeScore::invalid(rows.len()),
    };
    if local.is_degenerate() {
        return NodeScore::invalid(rows.len());
    }
    let value = mean_log_density(data, &rows, node, parents, &local);
    NodeScore { value, n_local: rows.len(), degenerate: false }
}

fn mean_log_density(
    data: &Dataset,
    rows: &[usize],
    node: usize,
    parents: &[usize],
    local: &LocalDistribution,
) -> f64 {
    let types = data.types();
    let (disc, cont) = model::split_parent_slice(types, parents.iter().copied());
    let disc_cols: Vec<&[u32]> = disc.iter().map(|&p| discrete_col(data, p)).collect();
    let cont_cols: Vec<&[f64]> = cont.iter().map(|&p| real_col(data, p)).collect();

    let mut total = 0.0;
    match local {
        LocalDistribution::Cpt(cpt) => {
            // log table once, then a lookup per row
            let ln_rows: Vec<Vec<f64>> =
                cpt.rows().iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect();
            let child = discrete_col(data, node);
            let cards = cpt.parent_cards();
            let mut values = vec![0u32; disc_cols.len()];
            for &r in rows {
                for (slot, col) in values.iter_mut().zip(&disc_cols) {
                    *slot = col[r];
                }
                let config = model::parent_config_index(&values, cards);
                total += ln_rows[config][child[r] as usize];
            }
        }
        LocalDistribution::Gaussian(g) => {
            let child = real_col(data, node);
            let ln_norm = -0.5 * (2.0 * std::f64::consts::PI * g.variance).ln();
            let inv_two_var = 1.0 / (2.0 * g.variance);
            let mut x = vec![0.0; cont_cols.len()];
            for &r in rows {
                for (slot, col) in x.iter_mut().zip(&cont_cols) {
                    *slot = col[r];
                }
                let z = child[r] - g.mean(&x);
                total += ln_norm - z * z * inv_two_var;
            }
        }
        LocalDistribution::CgMixture(m) => {
            let child = real_col(data, node);
            let cards = m.parent_cards();
            let ln_norms: Vec<f64> = m
                .components()
                .iter()
                .map(|g| -0.5 * (2.0 * std::f64::consts::PI * g.variance).ln())
                .collect();
            let mut values = vec![0u32; disc_cols.len()];
            let mut x = vec![0.0; cont_cols.len()];
            for &r in rows {
                for (slot, col) in values.iter_mut().zip(&disc_cols) {
                    *slot = col[r];
                }
                for (slot, col) in x.iter_mut().zip(&cont_cols) {
                    *slot = col[r];
                }
                let config = model::parent_config_index(&values, cards);
                let g = m.component(config);
                let z = child[r] - g.mean(&x);
                total += ln_norms[config] - z * z / (2.0 * g.variance);
            }
        }
    }
    total / rows.len() as f64
}

fn discrete_col(data: &Dataset, col: usize) -> &[u32] {
    match data.column(col) {
        ColumnData::Discrete(v) => v,
        ColumnData::Real(_) => unreachable!("type-checked before evaluation"),
    }
}

fn real_col(data: &Dataset, col: usize) -> &[f64] {
    match data.column(col) {
        ColumnData::Real(v) => v,
        ColumnData::Discrete(_) => unreachable!("type-checked before evaluation"),
    }
}

/// Decomposed score cache keyed by `(node, parent set)`, with a monotone
/// counter of scoring-function calls. Cache hits do not count.
#[derive(Debug, Default)]
pub struct ScoredSearchState {
    cache: HashMap<(usize, Vec<usize>), NodeScore>,
    calls: u64,
}

impl ScoredSearchState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn score_calls(&self) -> u64 {
        self.calls
    }

    pub fn cached_terms(&self) -> usize {
        self.cache.len()
    }

    /// Drops cached terms but keeps the call counter; used when the
    /// underlying dataset changes between searches.
    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }

    /// Cached node term; computes and counts a scoring-function call on a
    /// miss.
    pub fn node_score(&mut self, data: &Dataset, node: usize, parents: &[usize]) -> NodeScore {
        let mut key: Vec<usize> = parents.to_vec();
        key.sort_unstable();
        if let Some(&hit) = self.cache.get(&(node, key.clone())) {
            return hit;
        }
        self.calls += 1;
        let score = nal_node(data, node, &key);
        self.cache.insert((node, key), score);
        score
    }
}

/// Penalized network score: the sum of node-average likelihood terms minus
/// `lambda(n) * dim_theta_total`, with `n` the total number of dataset
/// rows. Any invalid node term makes the whole score `-inf`.
pub fn spl_score(
    data: &Dataset,
    dag: &Dag,
    penalty: Penalty,
    state: &mut ScoredSearchState,
) -> f64 {
    let types = data.types();
    if !model::validate_structure(dag, types).is_empty() {
        return f64::NEG_INFINITY;
    }
    let mut total = 0.0;
    for node in 0..dag.node_count() {
        let parents: Vec<usize> = dag.parents(node).iter().copied().collect();
        total += state.node_score(data, node, &parents).value;
    }
    if total == f64::NEG_INFINITY {
        return total;
    }
    total - penalty.lambda(data.n_rows()) * dim_theta_total(dag, types) as f64
}

/// Complete-data BIC; errors if any cell is missing.
pub fn complete_bic(
    data: &Dataset,
    dag: &Dag,
    state: &mut ScoredSearchState,
) -> Result<f64, ScoreError> {
    complete_penalized(data, dag, Penalty::Bic, state)
}

/// Complete-data AIC; errors if any cell is missing.
pub fn complete_aic(
    data: &Dataset,
    dag: &Dag,
    state: &mut ScoredSearchState,
) -> Result<f64, ScoreError> {
    complete_penalized(data, dag, Penalty::Aic, state)
}

fn complete_penalized(
    data: &Dataset,
    dag: &Dag,
    penalty: Penalty,
    state: &mut ScoredSearchState,
) -> Result<f64, ScoreError> {
    if !data.is_fully_observed() {
        return Err(ScoreError::MissingData);
    }
    Ok(spl_score(data, dag, penalty, state))
}

fn parent_vec(dag: &Dag, node: usize) -> Vec<usize> {
    dag.parents(node).iter().copied().collect()
}

/// Score change of a legal mutation, recomputing only the nodes whose
/// parent set changes (one for add/delete, two for reverse). Equals the
/// full-rescore difference; a mutation into an invalid candidate returns
/// `-inf`, and repairing an invalid node returns `+inf`.
pub fn score_delta(
    state: &mut ScoredSearchState,
    data: &Dataset,
    dag: &Dag,
    mutation: Mutation,
    penalty: Penalty,
) -> f64 {
    let types = data.types();
    let lambda = penalty.lambda(data.n_rows());
    let (p, c) = (mutation.parent, mutation.child);

    // (node, old parent set, new parent set) for every affected node
    let mut touched: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::with_capacity(2);
    match mutation.op {
        ArcOp::Add => {
            let old = parent_vec(dag, c);
            let mut new = old.clone();
            new.push(p);
            new.sort_unstable();
            touched.push((c, old, new));
        }
        ArcOp::Delete => {
            let old = parent_vec(dag, c);
            let new: Vec<usize> = old.iter().copied().filter(|&x| x != p).collect();
            touched.push((c, old, new));
        }
        ArcOp::Reverse => {
            let old_c = parent_vec(dag, c);
            let new_c: Vec<usize> = old_c.iter().copied().filter(|&x| x != p).collect();
            touched.push((c, old_c, new_c));
            let old_p = parent_vec(dag, p);
            let mut new_p = old_p.clone();
            new_p.push(c);
            new_p.sort_unstable();
            touched.push((p, old_p, new_p));
        }
    }

    let mut delta = 0.0;
    let mut dim_change = 0i64;
    for (node, old, new) in &touched {
        let new_score = state.node_score(data, *node, new);
        if new_score.value == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let old_score = state.node_score(data, *node, old);
        if old_score.value == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        delta += new_score.value - old_score.value;
        dim_change += dim_theta_parents(types, *node, new) as i64
            - dim_theta_parents(types, *node, old) as i64;
    }
    delta - lambda * dim_change as f64
}
