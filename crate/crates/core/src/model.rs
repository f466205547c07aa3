//! Network model classes: discrete CPTs, Gaussian linear regressions and
//! per-configuration mixtures of regressions, with maximum-likelihood
//! fitting, density evaluation, parameter counting and forward sampling.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::data::{ColumnData, Dataset, Schema, Value};
use crate::graph::Dag;

/// Fits with an MLE variance below this are clamped here and flagged
/// degenerate; scoring rejects them rather than trusting an exact fit.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("empty row subset")]
    EmptyRowSubset,
    #[error("too few rows: got {got}, need at least {needed}")]
    TooFewRows { needed: usize, got: usize },
    #[error("rank-deficient design (collinear parents)")]
    RankDeficient,
    #[error("column {0} is not discrete")]
    NotDiscrete(usize),
    #[error("column {0} is not gaussian")]
    NotGaussian(usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("discrete node needs at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("duplicate level label {0:?}")]
    DuplicateLevel(String),
    #[error("gaussian parent {parent} of discrete child {child}")]
    GaussianParentOfDiscrete { parent: String, child: String },
    #[error("node {node}: distribution shape does not match structure")]
    ShapeMismatch { node: String },
    #[error("cpt row {config} sums to {sum}, not 1")]
    RowNotNormalized { config: usize, sum: f64 },
    #[error("probability out of [0, 1]")]
    BadProbability,
    #[error("variance must be positive")]
    NonPositiveVariance,
    #[error("unseen level {level} for a node with {cardinality} levels")]
    UnseenLevel { level: usize, cardinality: usize },
    #[error("no component for parent configuration {0}")]
    UnknownConfig(usize),
    #[error("density requested from a degenerate fit")]
    DegenerateComponent,
}

/// Node type: discrete over an ordered level list, or Gaussian.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeType {
    Discrete { levels: Vec<String> },
    Gaussian,
}

impl NodeType {
    pub fn discrete(levels: Vec<String>) -> Result<Self, ModelError> {
        if levels.len() < 2 {
            return Err(ModelError::TooFewLevels(levels.len()));
        }
        for (i, l) in levels.iter().enumerate() {
            if levels[..i].contains(l) {
                return Err(ModelError::DuplicateLevel(l.clone()));
            }
        }
        Ok(NodeType::Discrete { levels })
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, NodeType::Discrete { .. })
    }

    /// Number of levels for discrete nodes, `None` for Gaussian.
    pub fn cardinality(&self) -> Option<usize> {
        match self {
            NodeType::Discrete { levels } => Some(levels.len()),
            NodeType::Gaussian => None,
        }
    }
}

/// Index of a joint discrete-parent assignment, row-major over the parents
/// in node-list order (the first parent varies slowest). This enumeration
/// is part of the network JSON format.
pub fn parent_config_index(values: &[u32], cards: &[usize]) -> usize {
    debug_assert_eq!(values.len(), cards.len());
    values
        .iter()
        .zip(cards)
        .fold(0usize, |acc, (&v, &card)| acc * card + v as usize)
}

/// Conditional probability table over the child's levels, one row per
/// discrete-parent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    parent_cards: Vec<usize>,
    probs: Vec<Vec<f64>>,
    degenerate: bool,
}

impl Cpt {
    pub fn new(parent_cards: Vec<usize>, probs: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let expected: usize = parent_cards.iter().product();
        if probs.len() != expected {
            return Err(ModelError::ShapeMismatch { node: String::new() });
        }
        for (config, row) in probs.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(ModelError::RowNotNormalized { config, sum });
            }
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(ModelError::BadProbability);
            }
        }
        Ok(Cpt { parent_cards, probs, degenerate: false })
    }

    pub fn parent_cards(&self) -> &[usize] {
        &self.parent_cards
    }

    pub fn n_configs(&self) -> usize {
        self.probs.len()
    }

    pub fn row(&self, config: usize) -> &[f64] {
        &self.probs[config]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn log_mass(&self, level: u32, parent_values: &[u32]) -> Result<f64, ModelError> {
        let config = parent_config_index(parent_values, &self.parent_cards);
        let row = self.probs.get(config).ok_or(ModelError::UnknownConfig(config))?;
        let p = *row.get(level as usize).ok_or(ModelError::UnseenLevel {
            level: level as usize,
            cardinality: row.len(),
        })?;
        Ok(p.ln())
    }

    fn sample(&self, parent_values: &[u32], rng: &mut impl Rng) -> u32 {
        let config = parent_config_index(parent_values, &self.parent_cards);
        let row = &self.probs[config];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return k as u32;
            }
        }
        (row.len() - 1) as u32
    }
}

/// Linear regression of a Gaussian child on its continuous parents.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianRegression {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub variance: f64,
    degenerate: bool,
}

impl GaussianRegression {
    pub fn new(intercept: f64, coefficients: Vec<f64>, variance: f64) -> Result<Self, ModelError> {
        if variance.is_nan() || variance <= 0.0 {
            return Err(ModelError::NonPositiveVariance);
        }
        Ok(GaussianRegression { intercept, coefficients, variance, degenerate: false })
    }

    fn degenerate(intercept: f64, n_coefficients: usize) -> Self {
        GaussianRegression {
            intercept,
            coefficients: vec![0.0; n_coefficients],
            variance: VARIANCE_FLOOR,
            degenerate: true,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn mean(&self, parent_values: &[f64]) -> f64 {
        debug_assert_eq!(parent_values.len(), self.coefficients.len());
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(parent_values)
                .map(|(b, x)| b * x)
                .sum::<f64>()
    }

    pub fn log_density(&self, x: f64, parent_values: &[f64]) -> Result<f64, ModelError> {
        if self.degenerate {
            return Err(ModelError::DegenerateComponent);
        }
        let mean = self.mean(parent_values);
        let z = x - mean;
        Ok(-0.5 * (2.0 * std::f64::consts::PI * self.variance).ln()
            - z * z / (2.0 * self.variance))
    }

    fn sample(&self, parent_values: &[f64], rng: &mut impl Rng) -> f64 {
        let normal = Normal::new(self.mean(parent_values), self.variance.sqrt())
            .expect("positive variance");
        normal.sample(rng)
    }
}

/// Mixture of linear regressions: one component per configuration of the
/// discrete parents, each regressing on the continuous parents.
#[derive(Debug, Clone, PartialEq)]
pub struct CgMixture {
    parent_cards: Vec<usize>,
    components: Vec<GaussianRegression>,
}

impl CgMixture {
    pub fn new(
        parent_cards: Vec<usize>,
        components: Vec<GaussianRegression>,
    ) -> Result<Self, ModelError> {
        let expected: usize = parent_cards.iter().product();
        if components.len() != expected {
            return Err(ModelError::ShapeMismatch { node: String::new() });
        }
        Ok(CgMixture { parent_cards, components })
    }

    pub fn parent_cards(&self) -> &[usize] {
        &self.parent_cards
    }

    pub fn components(&self) -> &[GaussianRegression] {
        &self.components
    }

    pub fn component(&self, config: usize) -> &GaussianRegression {
        &self.components[config]
    }

    pub fn is_degenerate(&self) -> bool {
        self.components.iter().any(GaussianRegression::is_degenerate)
    }

    pub fn log_density(
        &self,
        x: f64,
        discrete_parent_values: &[u32],
        continuous_parent_values: &[f64],
    ) -> Result<f64, ModelError> {
        let config = parent_config_index(discrete_parent_values, &self.parent_cards);
        let comp = self.components.get(config).ok_or(ModelError::UnknownConfig(config))?;
        comp.log_density(x, continuous_parent_values)
    }
}

/// Local distribution attached to one node. Gaussian nodes without discrete
/// parents use the plain regression form.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalDistribution {
    Cpt(Cpt),
    Gaussian(GaussianRegression),
    CgMixture(CgMixture),
}

impl LocalDistribution {
    pub fn is_degenerate(&self) -> bool {
        match self {
            LocalDistribution::Cpt(c) => c.is_degenerate(),
            LocalDistribution::Gaussian(g) => g.is_degenerate(),
            LocalDistribution::CgMixture(m) => m.is_degenerate(),
        }
    }

    /// Natural-log density (or mass) of the child value given parent values
    /// split by type, each in node-list order.
    pub fn log_density(
        &self,
        child: Value,
        discrete_parent_values: &[u32],
        continuous_parent_values: &[f64],
    ) -> Result<f64, ModelError> {
        match (self, child) {
            (LocalDistribution::Cpt(c), Value::Discrete(level)) => {
                c.log_mass(level, discrete_parent_values)
            }
            (LocalDistribution::Gaussian(g), Value::Real(x)) => {
                g.log_density(x, continuous_parent_values)
            }
            (LocalDistribution::CgMixture(m), Value::Real(x)) => {
                m.log_density(x, discrete_parent_values, continuous_parent_values)
            }
            _ => Err(ModelError::ShapeMismatch { node: String::new() }),
        }
    }

    pub fn sample(
        &self,
        discrete_parent_values: &[u32],
        continuous_parent_values: &[f64],
        rng: &mut impl Rng,
    ) -> Value {
        match self {
            LocalDistribution::Cpt(c) => Value::Discrete(c.sample(discrete_parent_values, rng)),
            LocalDistribution::Gaussian(g) => {
                Value::Real(g.sample(continuous_parent_values, rng))
            }
            LocalDistribution::CgMixture(m) => {
                let config = parent_config_index(discrete_parent_values, &m.parent_cards);
                Value::Real(m.components[config].sample(continuous_parent_values, rng))
            }
        }
    }
}

/// A DAG plus one fitted local distribution per node.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    dag: Dag,
    node_types: Vec<NodeType>,
    locals: Vec<LocalDistribution>,
}

impl BayesianNetwork {
    pub fn new(
        dag: Dag,
        node_types: Vec<NodeType>,
        locals: Vec<LocalDistribution>,
    ) -> Result<Self, ModelError> {
        if node_types.len() != dag.node_count() || locals.len() != dag.node_count() {
            return Err(ModelError::ShapeMismatch { node: String::new() });
        }
        if let Some(&(p, c)) = validate_structure(&dag, &node_types).first() {
            return Err(ModelError::GaussianParentOfDiscrete {
                parent: dag.name(p).to_string(),
                child: dag.name(c).to_string(),
            });
        }
        for node in 0..dag.node_count() {
            let (disc, cont) = split_parents(&dag, &node_types, node);
            let cards: Vec<usize> = disc
                .iter()
                .map(|&p| node_types[p].cardinality().expect("discrete parent"))
                .collect();
            let shape_err = || ModelError::ShapeMismatch { node: dag.name(node).to_string() };
            match (&node_types[node], &locals[node]) {
                (NodeType::Discrete { levels }, LocalDistribution::Cpt(cpt)) => {
                    if cpt.parent_cards() != cards.as_slice()
                        || cpt.rows().iter().any(|r| r.len() != levels.len())
                    {
                        return Err(shape_err());
                    }
                }
                (NodeType::Gaussian, LocalDistribution::Gaussian(g)) => {
                    if !disc.is_empty() || g.coefficients.len() != cont.len() {
                        return Err(shape_err());
                    }
                }
                (NodeType::Gaussian, LocalDistribution::CgMixture(m)) => {
                    if disc.is_empty()
                        || m.parent_cards() != cards.as_slice()
                        || m.components().iter().any(|g| g.coefficients.len() != cont.len())
                    {
                        return Err(shape_err());
                    }
                }
                _ => return Err(shape_err()),
            }
        }
        Ok(BayesianNetwork { dag, node_types, locals })
    }

    /// Maximum-likelihood fit of every node on its locally-complete rows.
    pub fn fit(dag: &Dag, data: &Dataset) -> Result<Self, FitError> {
        let types = data.types();
        let mut locals = Vec::with_capacity(dag.node_count());
        for node in 0..dag.node_count() {
            let parents: Vec<usize> = dag.parents(node).iter().copied().collect();
            let rows = data.locally_complete_rows(node, &parents);
            locals.push(fit_node(data, &rows, node, &parents)?);
        }
        let bn = BayesianNetwork {
            dag: dag.clone(),
            node_types: types.to_vec(),
            locals,
        };
        Ok(bn)
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn node_types(&self) -> &[NodeType] {
        &self.node_types
    }

    pub fn local(&self, node: usize) -> &LocalDistribution {
        &self.locals[node]
    }

    pub fn schema(&self) -> Schema {
        Schema {
            names: self.dag.names().to_vec(),
            types: self.node_types.clone(),
        }
    }

    pub fn dim_theta_total(&self) -> usize {
        dim_theta_total(&self.dag, &self.node_types)
    }
}

/// Flags every arc from a Gaussian parent into a discrete child.
pub fn validate_structure(dag: &Dag, node_types: &[NodeType]) -> Vec<(usize, usize)> {
    let mut violations = Vec::new();
    for (p, c) in dag.arcs() {
        if node_types[c].is_discrete() && !node_types[p].is_discrete() {
            violations.push((p, c));
        }
    }
    violations
}

/// Splits `node`'s parents into (discrete, continuous), each in node-list
/// order.
pub fn split_parents(dag: &Dag, node_types: &[NodeType], node: usize) -> (Vec<usize>, Vec<usize>) {
    split_parent_slice(node_types, dag.parents(node).iter().copied())
}

pub fn split_parent_slice(
    node_types: &[NodeType],
    parents: impl IntoIterator<Item = usize>,
) -> (Vec<usize>, Vec<usize>) {
    let mut disc = Vec::new();
    let mut cont = Vec::new();
    for p in parents {
        if node_types[p].is_discrete() {
            disc.push(p);
        } else {
            cont.push(p);
        }
    }
    (disc, cont)
}

/// Relative-frequency MLE of a CPT on the given rows. Parent configurations
/// never observed in the subset get a uniform row and mark the fit
/// degenerate.
pub fn fit_cpt(
    data: &Dataset,
    rows: &[usize],
    child: usize,
    discrete_parents: &[usize],
) -> Result<Cpt, FitError> {
    if rows.is_empty() {
        return Err(FitError::EmptyRowSubset);
    }
    let child_card = data.types()[child]
        .cardinality()
        .ok_or(FitError::NotDiscrete(child))?;
    let mut cards = Vec::with_capacity(discrete_parents.len());
    for &p in discrete_parents {
        cards.push(data.types()[p].cardinality().ok_or(FitError::NotDiscrete(p))?);
    }
    let n_configs: usize = cards.iter().product();

    let child_col = discrete_column(data, child)?;
    let parent_cols: Vec<&[u32]> = discrete_parents
        .iter()
        .map(|&p| discrete_column(data, p))
        .collect::<Result<_, _>>()?;

    let mut counts = vec![vec![0u64; child_card]; n_configs];
    let mut parent_values = vec![0u32; discrete_parents.len()];
    for &r in rows {
        for (slot, col) in parent_values.iter_mut().zip(&parent_cols) {
            *slot = col[r];
        }
        let config = parent_config_index(&parent_values, &cards);
        counts[config][child_col[r] as usize] += 1;
    }

    let mut degenerate = false;
    let mut probs = Vec::with_capacity(n_configs);
    for config_counts in &counts {
        let total: u64 = config_counts.iter().sum();
        if total == 0 {
            degenerate = true;
            probs.push(vec![1.0 / child_card as f64; child_card]);
        } else {
            probs.push(config_counts.iter().map(|&c| c as f64 / total as f64).collect());
        }
    }
    Ok(Cpt { parent_cards: cards, probs, degenerate })
}

fn discrete_column(data: &Dataset, col: usize) -> Result<&[u32], FitError> {
    match data.column(col) {
        ColumnData::Discrete(v) => Ok(v),
        ColumnData::Real(_) => Err(FitError::NotDiscrete(col)),
    }
}

fn real_column(data: &Dataset, col: usize) -> Result<&[f64], FitError> {
    match data.column(col) {
        ColumnData::Real(v) => Ok(v),
        ColumnData::Discrete(_) => Err(FitError::NotGaussian(col)),
    }
}

/// Least-squares MLE of a linear regression; the variance uses divisor `n`.
/// Fits with fewer than `parents + 2` rows, or with a floored variance, are
/// flagged degenerate.
pub fn fit_gaussian_regression(
    data: &Dataset,
    rows: &[usize],
    child: usize,
    continuous_parents: &[usize],
) -> Result<GaussianRegression, FitError> {
    if rows.is_empty() {
        return Err(FitError::EmptyRowSubset);
    }
    let p = continuous_parents.len();
    if rows.len() < p + 1 {
        return Err(FitError::TooFewRows { needed: p + 1, got: rows.len() });
    }
    let y = real_column(data, child)?;
    let xs: Vec<&[f64]> = continuous_parents
        .iter()
        .map(|&c| real_column(data, c))
        .collect::<Result<_, _>>()?;

    fit_regression_raw(rows, y, &xs)
}

/// Shared regression core over raw column slices: solves the normal
/// equations (W^T W) beta = W^T y with W = [1 | parents].
fn fit_regression_raw(
    rows: &[usize],
    y: &[f64],
    xs: &[&[f64]],
) -> Result<GaussianRegression, FitError> {
    let p = xs.len();
    let d = p + 1;
    let n = rows.len() as f64;

    let mut xtx = DMatrix::<f64>::zeros(d, d);
    let mut xty = DVector::<f64>::zeros(d);
    let mut yty = 0.0;
    let mut w = vec![0.0; d];
    for &r in rows {
        w[0] = 1.0;
        for (k, col) in xs.iter().enumerate() {
            w[k + 1] = col[r];
        }
        for i in 0..d {
            for j in i..d {
                xtx[(i, j)] += w[i] * w[j];
            }
            xty[i] += w[i] * y[r];
        }
        yty += y[r] * y[r];
    }
    for i in 0..d {
        for j in 0..i {
            xtx[(i, j)] = xtx[(j, i)];
        }
    }

    let beta = Cholesky::new(xtx)
        .ok_or(FitError::RankDeficient)?
        .solve(&xty);

    let sse = (yty - beta.dot(&xty)).max(0.0);
    let mut variance = sse / n;
    let mut degenerate = rows.len() < p + 2;
    if variance < VARIANCE_FLOOR {
        variance = VARIANCE_FLOOR;
        degenerate = true;
    }
    Ok(GaussianRegression {
        intercept: beta[0],
        coefficients: beta.as_slice()[1..].to_vec(),
        variance,
        degenerate,
    })
}

/// Partitions the rows by discrete-parent configuration and fits one
/// regression per partition. Partitions too small for a valid fit produce a
/// degenerate component instead of an error.
pub fn fit_cg_mixture(
    data: &Dataset,
    rows: &[usize],
    child: usize,
    discrete_parents: &[usize],
    continuous_parents: &[usize],
) -> Result<CgMixture, FitError> {
    if rows.is_empty() {
        return Err(FitError::EmptyRowSubset);
    }
    let p = continuous_parents.len();
    let mut cards = Vec::with_capacity(discrete_parents.len());
    for &dp in discrete_parents {
        cards.push(data.types()[dp].cardinality().ok_or(FitError::NotDiscrete(dp))?);
    }
    let n_configs: usize = cards.iter().product();

    let y = real_column(data, child)?;
    let xs: Vec<&[f64]> = continuous_parents
        .iter()
        .map(|&c| real_column(data, c))
        .collect::<Result<_, _>>()?;
    let parent_cols: Vec<&[u32]> = discrete_parents
        .iter()
        .map(|&dp| discrete_column(data, dp))
        .collect::<Result<_, _>>()?;

    let mut partitions: Vec<Vec<usize>> = vec![Vec::new(); n_configs];
    let mut parent_values = vec![0u32; discrete_parents.len()];
    for &r in rows {
        for (slot, col) in parent_values.iter_mut().zip(&parent_cols) {
            *slot = col[r];
        }
        partitions[parent_config_index(&parent_values, &cards)].push(r);
    }

    let mut components = Vec::with_capacity(n_configs);
    for part in &partitions {
        if part.len() < p + 2 {
            let intercept = if part.is_empty() {
                0.0
            } else {
                part.iter().map(|&r| y[r]).sum::<f64>() / part.len() as f64
            };
            components.push(GaussianRegression::degenerate(intercept, p));
        } else {
            components.push(fit_regression_raw(part, y, &xs)?);
        }
    }
    Ok(CgMixture { parent_cards: cards, components })
}

/// Fits the MLE local distribution for `child` given a full parent list,
/// dispatching on the child's type.
pub fn fit_node(
    data: &Dataset,
    rows: &[usize],
    child: usize,
    parents: &[usize],
) -> Result<LocalDistribution, FitError> {
    let types = data.types();
    let (disc, cont) = split_parent_slice(types, parents.iter().copied());
    if types[child].is_discrete() {
        debug_assert!(cont.is_empty(), "discrete child with continuous parents");
        Ok(LocalDistribution::Cpt(fit_cpt(data, rows, child, &disc)?))
    } else if disc.is_empty() {
        Ok(LocalDistribution::Gaussian(fit_gaussian_regression(
            data, rows, child, &cont,
        )?))
    } else {
        Ok(LocalDistribution::CgMixture(fit_cg_mixture(
            data, rows, child, &disc, &cont,
        )?))
    }
}

/// Free-parameter count of one node's local distribution under the given
/// parent set.
pub fn dim_theta_parents(node_types: &[NodeType], node: usize, parents: &[usize]) -> usize {
    let (disc, cont) = split_parent_slice(node_types, parents.iter().copied());
    let configs: usize = disc
        .iter()
        .map(|&p| node_types[p].cardinality().expect("discrete parent"))
        .product();
    match &node_types[node] {
        NodeType::Discrete { levels } => {
            debug_assert!(cont.is_empty(), "discrete child with continuous parents");
            (levels.len() - 1) * configs
        }
        NodeType::Gaussian => (2 + cont.len()) * configs,
    }
}

pub fn dim_theta(dag: &Dag, node_types: &[NodeType], node: usize) -> usize {
    let parents: Vec<usize> = dag.parents(node).iter().copied().collect();
    dim_theta_parents(node_types, node, &parents)
}

/// Total free-parameter count of the network; strictly monotone under arc
/// addition.
pub fn dim_theta_total(dag: &Dag, node_types: &[NodeType]) -> usize {
    (0..dag.node_count())
        .map(|node| dim_theta(dag, node_types, node))
        .sum()
}

/// Draws `n` i.i.d. complete rows in topological order; deterministic for a
/// given seed.
pub fn forward_sample(bn: &BayesianNetwork, n: usize, seed: u64) -> Dataset {
    let order = bn.dag().topological_order().expect("network DAG is acyclic");
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..bn.dag().node_count())
        .map(|node| split_parents(bn.dag(), bn.node_types(), node))
        .collect();
    let mut data = Dataset::zeroed(bn.schema(), n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut disc_buf = Vec::new();
    let mut cont_buf = Vec::new();
    for row in 0..n {
        for &node in &order {
            let (disc, cont) = &splits[node];
            disc_buf.clear();
            cont_buf.clear();
            for &p in disc {
                match data.value(p, row) {
                    Some(Value::Discrete(v)) => disc_buf.push(v),
                    _ => unreachable!("parent sampled before child"),
                }
            }
            for &p in cont {
                match data.value(p, row) {
                    Some(Value::Real(x)) => cont_buf.push(x),
                    _ => unreachable!("parent sampled before child"),
                }
            }
            let value = bn.local(node).sample(&disc_buf, &cont_buf, &mut rng);
            data.set(node, row, value);
        }
    }
    data
}
