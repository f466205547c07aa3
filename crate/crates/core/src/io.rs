//! Network file format: nodes, arcs and parameters in a single JSON
//! document.
//!
//! ```json
//! {
//!   "nodes": [
//!     {"name": "A", "type": "discrete", "levels": ["a0", "a1"]},
//!     {"name": "X", "type": "gaussian"}
//!   ],
//!   "arcs": [["A", "X"]],
//!   "parameters": {
//!     "A": [[0.3, 0.7]],
//!     "X": {
//!       "0": {"intercept": -1.5, "coefficients": [], "variance": 1.0},
//!       "1": {"intercept": 1.0, "coefficients": [], "variance": 0.8}
//!     }
//!   }
//! }
//! ```
//!
//! Discrete nodes map to an array of CPT rows, one per parent
//! configuration; Gaussian nodes map configuration index to a regression.
//! Configurations enumerate row-major over the discrete parents in
//! node-list order (first parent varies slowest), so emission is bit-exact
//! and reproducible. Files without a `parameters` key describe structure
//! only.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Schema;
use crate::graph::{Dag, GraphError};
use crate::model::{
    BayesianNetwork, CgMixture, Cpt, GaussianRegression, LocalDistribution, ModelError, NodeType,
    split_parents,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("arc references unknown node {0:?}")]
    UnknownNodeInArc(String),
    #[error("node {name}: unknown type {kind:?}")]
    BadNodeType { name: String, kind: String },
    #[error("node {0}: discrete nodes need a levels list")]
    MissingLevels(String),
    #[error("file has no parameters section")]
    MissingParameters,
    #[error("node {node}: {reason}")]
    BadParameters { node: String, reason: String },
}

#[derive(Serialize, Deserialize)]
struct NodeSpec {
    name: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct RegressionSpec {
    intercept: f64,
    coefficients: Vec<f64>,
    variance: f64,
}

#[derive(Serialize, Deserialize)]
struct BnFile {
    nodes: Vec<NodeSpec>,
    #[serde(default)]
    arcs: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parameters: Option<serde_json::Map<String, serde_json::Value>>,
}

fn parse_nodes(nodes: &[NodeSpec]) -> Result<(Vec<String>, Vec<NodeType>), IoError> {
    let mut names = Vec::with_capacity(nodes.len());
    let mut types = Vec::with_capacity(nodes.len());
    for spec in nodes {
        names.push(spec.name.clone());
        match spec.kind.as_str() {
            "discrete" => {
                let levels = spec
                    .levels
                    .clone()
                    .ok_or_else(|| IoError::MissingLevels(spec.name.clone()))?;
                types.push(NodeType::discrete(levels)?);
            }
            "gaussian" => types.push(NodeType::Gaussian),
            other => {
                return Err(IoError::BadNodeType {
                    name: spec.name.clone(),
                    kind: other.to_string(),
                })
            }
        }
    }
    Ok((names, types))
}

fn parse_dag(names: Vec<String>, arcs: &[(String, String)]) -> Result<Dag, IoError> {
    let mut pairs = Vec::with_capacity(arcs.len());
    for (p, c) in arcs {
        let pi = names
            .iter()
            .position(|n| n == p)
            .ok_or_else(|| IoError::UnknownNodeInArc(p.clone()))?;
        let ci = names
            .iter()
            .position(|n| n == c)
            .ok_or_else(|| IoError::UnknownNodeInArc(c.clone()))?;
        pairs.push((pi, ci));
    }
    Ok(Dag::from_arcs(names, &pairs)?)
}

/// Parses only the schema (node names, types and levels); arcs and
/// parameters are ignored, so any network or structure file works as a
/// sidecar schema.
pub fn schema_from_json_str(text: &str) -> Result<Schema, IoError> {
    let file: BnFile = serde_json::from_str(text)?;
    let (names, types) = parse_nodes(&file.nodes)?;
    Ok(Schema { names, types })
}

/// Parses structure (nodes and arcs); parameters are optional and ignored.
pub fn structure_from_json_str(text: &str) -> Result<(Dag, Vec<NodeType>), IoError> {
    let file: BnFile = serde_json::from_str(text)?;
    let (names, types) = parse_nodes(&file.nodes)?;
    let dag = parse_dag(names, &file.arcs)?;
    Ok((dag, types))
}

/// Parses a fully parameterized network.
pub fn bn_from_json_str(text: &str) -> Result<BayesianNetwork, IoError> {
    let file: BnFile = serde_json::from_str(text)?;
    let (names, types) = parse_nodes(&file.nodes)?;
    let dag = parse_dag(names.clone(), &file.arcs)?;
    let params = file.parameters.as_ref().ok_or(IoError::MissingParameters)?;

    let mut locals = Vec::with_capacity(names.len());
    for node in 0..names.len() {
        let name = &names[node];
        let bad = |reason: &str| IoError::BadParameters {
            node: name.clone(),
            reason: reason.to_string(),
        };
        let value = params.get(name).ok_or_else(|| bad("no parameter entry"))?;
        let (disc, _cont) = split_parents(&dag, &types, node);
        let cards: Vec<usize> = disc
            .iter()
            .map(|&p| types[p].cardinality().expect("validated structure"))
            .collect();
        let n_configs: usize = cards.iter().product();

        match &types[node] {
            NodeType::Discrete { .. } => {
                let rows: Vec<Vec<f64>> = serde_json::from_value(value.clone())
                    .map_err(|e| bad(&format!("bad cpt rows: {e}")))?;
                locals.push(LocalDistribution::Cpt(Cpt::new(cards, rows)?));
            }
            NodeType::Gaussian => {
                let map: serde_json::Map<String, serde_json::Value> =
                    serde_json::from_value(value.clone())
                        .map_err(|e| bad(&format!("bad regression map: {e}")))?;
                let mut components: Vec<Option<GaussianRegression>> = vec![None; n_configs];
                for (key, spec_value) in &map {
                    let config: usize = key
                        .parse()
                        .map_err(|_| bad(&format!("bad configuration key {key:?}")))?;
                    if config >= n_configs {
                        return Err(bad(&format!(
                            "configuration {config} out of range (need {n_configs})"
                        )));
                    }
                    let spec: RegressionSpec = serde_json::from_value(spec_value.clone())
                        .map_err(|e| bad(&format!("bad regression: {e}")))?;
                    components[config] = Some(GaussianRegression::new(
                        spec.intercept,
                        spec.coefficients,
                        spec.variance,
                    )?);
                }
                let components: Vec<GaussianRegression> = components
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| c.ok_or_else(|| bad(&format!("missing configuration {i}"))))
                    .collect::<Result<_, _>>()?;
                if disc.is_empty() {
                    locals.push(LocalDistribution::Gaussian(
                        components.into_iter().next().expect("one configuration"),
                    ));
                } else {
                    locals.push(LocalDistribution::CgMixture(CgMixture::new(
                        cards, components,
                    )?));
                }
            }
        }
    }
    Ok(BayesianNetwork::new(dag, types, locals)?)
}

fn node_specs(names: &[String], types: &[NodeType]) -> Vec<NodeSpec> {
    names
        .iter()
        .zip(types)
        .map(|(name, ty)| match ty {
            NodeType::Discrete { levels } => NodeSpec {
                name: name.clone(),
                kind: "discrete".into(),
                levels: Some(levels.clone()),
            },
            NodeType::Gaussian => NodeSpec {
                name: name.clone(),
                kind: "gaussian".into(),
                levels: None,
            },
        })
        .collect()
}

fn named_arcs(dag: &Dag) -> Vec<(String, String)> {
    dag.arcs()
        .into_iter()
        .map(|(p, c)| (dag.name(p).to_string(), dag.name(c).to_string()))
        .collect()
}

/// Serializes a structure-only file (no parameters).
pub fn structure_to_json_string(dag: &Dag, types: &[NodeType]) -> String {
    let file = BnFile {
        nodes: node_specs(dag.names(), types),
        arcs: named_arcs(dag),
        parameters: None,
    };
    serde_json::to_string_pretty(&file).expect("structure serializes")
}

fn regression_value(g: &GaussianRegression) -> serde_json::Value {
    serde_json::to_value(RegressionSpec {
        intercept: g.intercept,
        coefficients: g.coefficients.clone(),
        variance: g.variance,
    })
    .expect("regression serializes")
}

/// Serializes a parameterized network; map keys follow node-list and
/// configuration order so output is reproducible byte for byte.
pub fn bn_to_json_string(bn: &BayesianNetwork) -> String {
    let dag = bn.dag();
    let mut params = serde_json::Map::new();
    for node in 0..dag.node_count() {
        let value = match bn.local(node) {
            LocalDistribution::Cpt(cpt) => {
                serde_json::to_value(cpt.rows()).expect("cpt serializes")
            }
            LocalDistribution::Gaussian(g) => {
                let mut map = serde_json::Map::new();
                map.insert("0".to_string(), regression_value(g));
                serde_json::Value::Object(map)
            }
            LocalDistribution::CgMixture(m) => {
                let mut map = serde_json::Map::new();
                for (config, g) in m.components().iter().enumerate() {
                    map.insert(config.to_string(), regression_value(g));
                }
                serde_json::Value::Object(map)
            }
        };
        params.insert(dag.name(node).to_string(), value);
    }
    let file = BnFile {
        nodes: node_specs(dag.names(), bn.node_types()),
        arcs: named_arcs(dag),
        parameters: Some(params),
    };
    serde_json::to_string_pretty(&file).expect("network serializes")
}

pub fn load_bn(path: impl AsRef<Path>) -> Result<BayesianNetwork, IoError> {
    bn_from_json_str(&fs::read_to_string(path)?)
}

pub fn load_structure(path: impl AsRef<Path>) -> Result<(Dag, Vec<NodeType>), IoError> {
    structure_from_json_str(&fs::read_to_string(path)?)
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Schema, IoError> {
    schema_from_json_str(&fs::read_to_string(path)?)
}

pub fn save_bn(bn: &BayesianNetwork, path: impl AsRef<Path>) -> Result<(), IoError> {
    fs::write(path, bn_to_json_string(bn))?;
    Ok(())
}
