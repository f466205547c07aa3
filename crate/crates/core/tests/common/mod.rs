//! Shared generators for the integration suites: random DAGs, random
//! networks, random datasets.

use nalbn::data::{ColumnData, Dataset, Schema};
use nalbn::graph::Dag;
use nalbn::model::{
    BayesianNetwork, CgMixture, Cpt, GaussianRegression, LocalDistribution, NodeType,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[allow(dead_code)]
pub fn node_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("N{i}")).collect()
}

/// Random DAG: each ordered pair (i, j) with i < j becomes an arc with the
/// given probability, then node labels are left in place (the identity
/// ordering is topological).
#[allow(dead_code)] // each test target links its own selection of helpers
pub fn random_order_dag(n: usize, arc_prob: f64, rng: &mut ChaCha8Rng) -> Dag {
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < arc_prob {
                arcs.push((i, j));
            }
        }
    }
    Dag::from_arcs(node_names(n), &arcs).expect("order-respecting arcs are acyclic")
}

/// Random DAG with arbitrary arc orientations, built by rejection.
#[allow(dead_code)]
pub fn random_dag(n: usize, arc_prob: f64, rng: &mut ChaCha8Rng) -> Dag {
    loop {
        let mut arcs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random::<f64>() < arc_prob / 2.0 {
                    arcs.push((i, j));
                }
            }
        }
        if let Ok(dag) = Dag::from_arcs(node_names(n), &arcs) {
            return dag;
        }
    }
}

/// CPT row with entries bounded away from zero.
fn random_cpt_row(card: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..card).map(|_| 0.2 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random discrete network over the DAG with the given cardinalities.
#[allow(dead_code)]
pub fn random_discrete_bn(dag: &Dag, cards: &[usize], rng: &mut ChaCha8Rng) -> BayesianNetwork {
    let types: Vec<NodeType> = cards
        .iter()
        .enumerate()
        .map(|(i, &card)| NodeType::Discrete {
            levels: (0..card).map(|k| format!("n{i}l{k}")).collect(),
        })
        .collect();
    let locals: Vec<LocalDistribution> = (0..dag.node_count())
        .map(|node| {
            let parent_cards: Vec<usize> =
                dag.parents(node).iter().map(|&p| cards[p]).collect();
            let n_configs: usize = parent_cards.iter().product();
            let rows: Vec<Vec<f64>> =
                (0..n_configs).map(|_| random_cpt_row(cards[node], rng)).collect();
            LocalDistribution::Cpt(Cpt::new(parent_cards, rows).expect("rows normalized"))
        })
        .collect();
    BayesianNetwork::new(dag.clone(), types, locals).expect("valid discrete network")
}

/// Random conditional Gaussian network: nodes are discrete or Gaussian per
/// `discrete_mask`, and the DAG must already respect the type constraint.
#[allow(dead_code)]
pub fn random_cg_bn(dag: &Dag, discrete_mask: &[bool], rng: &mut ChaCha8Rng) -> BayesianNetwork {
    let types: Vec<NodeType> = discrete_mask
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d {
                NodeType::Discrete { levels: vec![format!("n{i}l0"), format!("n{i}l1")] }
            } else {
                NodeType::Gaussian
            }
        })
        .collect();
    let locals: Vec<LocalDistribution> = (0..dag.node_count())
        .map(|node| {
            let parents: Vec<usize> = dag.parents(node).iter().copied().collect();
            let disc: Vec<usize> = parents.iter().copied().filter(|&p| discrete_mask[p]).collect();
            let cont: Vec<usize> =
                parents.iter().copied().filter(|&p| !discrete_mask[p]).collect();
            if discrete_mask[node] {
                let parent_cards = vec![2usize; disc.len()];
                let n_configs: usize = parent_cards.iter().product();
                let rows: Vec<Vec<f64>> =
                    (0..n_configs).map(|_| random_cpt_row(2, rng)).collect();
                LocalDistribution::Cpt(Cpt::new(parent_cards, rows).expect("rows normalized"))
            } else {
                let regression = |rng: &mut ChaCha8Rng| {
                    GaussianRegression::new(
                        rng.random::<f64>() * 4.0 - 2.0,
                        (0..cont.len()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
                        0.5 + rng.random::<f64>(),
                    )
                    .expect("positive variance")
                };
                if disc.is_empty() {
                    LocalDistribution::Gaussian(regression(rng))
                } else {
                    let n_configs = 1usize << disc.len();
                    let comps: Vec<GaussianRegression> =
                        (0..n_configs).map(|_| regression(rng)).collect();
                    LocalDistribution::CgMixture(
                        CgMixture::new(vec![2usize; disc.len()], comps).expect("shape"),
                    )
                }
            }
        })
        .collect();
    BayesianNetwork::new(dag.clone(), types, locals).expect("valid network")
}

/// Dataset of i.i.d. cells: uniform levels for discrete columns, standard
/// normal-ish reals for Gaussian columns. No joint structure, which keeps
/// every parent configuration well populated.
#[allow(dead_code)]
pub fn iid_dataset(types: &[NodeType], n_rows: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let names = node_names(types.len());
    let columns: Vec<ColumnData> = types
        .iter()
        .map(|t| match t {
            NodeType::Discrete { levels } => ColumnData::Discrete(
                (0..n_rows)
                    .map(|_| rng.random_range(0..levels.len()) as u32)
                    .collect(),
            ),
            NodeType::Gaussian => ColumnData::Real(
                (0..n_rows)
                    .map(|_| {
                        // sum of uniforms: symmetric, light-tailed, cheap
                        (0..4).map(|_| rng.random::<f64>()).sum::<f64>() - 2.0
                    })
                    .collect(),
            ),
        })
        .collect();
    let observed = vec![vec![true; n_rows]; types.len()];
    Dataset::from_parts(Schema { names, types: types.to_vec() }, columns, observed)
        .expect("congruent shapes")
}
