//! Directed acyclic graphs over named nodes, their Markov-equivalence classes
//! (CPDAGs), and the structural Hamming distance between classes.

use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph contains a directed cycle")]
    CycleDetected,
    #[error("arc {0} -> {1} would create a directed cycle")]
    CycleWouldForm(String, String),
    #[error("arc {0} -> {1} not found")]
    ArcNotFound(String, String),
    #[error("arc {0} -> {1} already present")]
    ArcAlreadyPresent(String, String),
    #[error("self-loop on node {0}")]
    SelfLoop(String),
    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error("graphs are defined over different node sets")]
    NodeSetMismatch,
    #[error("true arc count must be positive")]
    ZeroArcCount,
}

/// Structure mutation used by the search neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArcOp {
    Add,
    Delete,
    Reverse,
}

/// A single arc edit: `op` applied to the arc `parent -> child`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mutation {
    pub op: ArcOp,
    pub parent: usize,
    pub child: usize,
}

impl Mutation {
    pub fn add(parent: usize, child: usize) -> Self {
        Mutation { op: ArcOp::Add, parent, child }
    }
    pub fn delete(parent: usize, child: usize) -> Self {
        Mutation { op: ArcOp::Delete, parent, child }
    }
    pub fn reverse(parent: usize, child: usize) -> Self {
        Mutation { op: ArcOp::Reverse, parent, child }
    }
}

/// Directed acyclic graph with an ordered node list.
///
/// Nodes are addressed by their position in the node list; all iteration
/// orders derive from that position so identical inputs produce identical
/// outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    parents: Vec<BTreeSet<usize>>,
}

impl Dag {
    /// Arc-free DAG over the given nodes.
    pub fn empty(names: Vec<String>) -> Self {
        let n = names.len();
        Dag { names, parents: vec![BTreeSet::new(); n] }
    }

    /// Builds a DAG from raw `(parent, child)` pairs, rejecting self-loops,
    /// duplicates and cycles.
    pub fn from_arcs(names: Vec<String>, arcs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut dag = Dag::empty(names);
        for &(p, c) in arcs {
            if p >= dag.names.len() {
                return Err(GraphError::NodeOutOfRange(p));
            }
            if c >= dag.names.len() {
                return Err(GraphError::NodeOutOfRange(c));
            }
            if p == c {
                return Err(GraphError::SelfLoop(dag.names[p].clone()));
            }
            if !dag.parents[c].insert(p) {
                return Err(GraphError::ArcAlreadyPresent(
                    dag.names[p].clone(),
                    dag.names[c].clone(),
                ));
            }
        }
        dag.topological_order()?;
        Ok(dag)
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, node: usize) -> &str {
        &self.names[node]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Parent set of `node`, ordered by node-list position.
    pub fn parents(&self, node: usize) -> &BTreeSet<usize> {
        &self.parents[node]
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        (0..self.names.len())
            .filter(|&c| self.parents[c].contains(&node))
            .collect()
    }

    pub fn has_arc(&self, parent: usize, child: usize) -> bool {
        self.parents[child].contains(&parent)
    }

    /// All arcs as `(parent, child)`, sorted by child then parent.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (child, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push((p, child));
            }
        }
        out
    }

    pub fn arc_count(&self) -> usize {
        self.parents.iter().map(|p| p.len()).sum()
    }

    /// Kahn ordering with ties broken by node-list position, so the result
    /// is unique for a given graph.
    pub fn topological_order(&self) -> Result<Vec<usize>, GraphError> {
        let n = self.names.len();
        let mut remaining: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let mut placed = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for _ in 0..n {
            let next = (0..n).find(|&i| !placed[i] && remaining[i] == 0);
            let Some(next) = next else {
                return Err(GraphError::CycleDetected);
            };
            placed[next] = true;
            order.push(next);
            for (c, rem) in remaining.iter_mut().enumerate() {
                if self.parents[c].contains(&next) {
                    *rem -= 1;
                }
            }
        }
        Ok(order)
    }

    /// True if `to` is reachable from `from` along directed arcs.
    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; self.names.len()];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if seen[v] {
                continue;
            }
            seen[v] = true;
            for c in self.children(v) {
                stack.push(c);
            }
        }
        false
    }

    /// Applies an arc edit, returning the new DAG. Edits that would break
    /// acyclicity are rejected.
    pub fn mutate(&self, m: Mutation) -> Result<Dag, GraphError> {
        let (p, c) = (m.parent, m.child);
        if p >= self.names.len() {
            return Err(GraphError::NodeOutOfRange(p));
        }
        if c >= self.names.len() {
            return Err(GraphError::NodeOutOfRange(c));
        }
        if p == c {
            return Err(GraphError::SelfLoop(self.names[p].clone()));
        }
        let mut out = self.clone();
        match m.op {
            ArcOp::Add => {
                if self.has_arc(p, c) {
                    return Err(GraphError::ArcAlreadyPresent(
                        self.names[p].clone(),
                        self.names[c].clone(),
                    ));
                }
                if self.reaches(c, p) {
                    return Err(GraphError::CycleWouldForm(
                        self.names[p].clone(),
                        self.names[c].clone(),
                    ));
                }
                out.parents[c].insert(p);
            }
            ArcOp::Delete => {
                if !out.parents[c].remove(&p) {
                    return Err(GraphError::ArcNotFound(
                        self.names[p].clone(),
                        self.names[c].clone(),
                    ));
                }
            }
            ArcOp::Reverse => {
                if !self.has_arc(p, c) {
                    return Err(GraphError::ArcNotFound(
                        self.names[p].clone(),
                        self.names[c].clone(),
                    ));
                }
                out.parents[c].remove(&p);
                // reaches() on the arc-free graph: a surviving path p ~> c
                // would close a cycle with the reversed arc.
                if out.reaches(p, c) {
                    return Err(GraphError::CycleWouldForm(
                        self.names[c].clone(),
                        self.names[p].clone(),
                    ));
                }
                out.parents[p].insert(c);
            }
        }
        Ok(out)
    }

    /// Converts to the completed partially-directed graph of the DAG's
    /// Markov equivalence class: v-structure arcs stay directed, the
    /// orientation closure is completed, everything else is undirected.
    pub fn to_cpdag(&self) -> Cpdag {
        let n = self.names.len();
        let mut adjacent = vec![vec![false; n]; n];
        for (p, c) in self.arcs() {
            adjacent[p][c] = true;
            adjacent[c][p] = true;
        }

        let mut directed: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut undirected: BTreeSet<(usize, usize)> = BTreeSet::new();

        // v-structures: a -> c <- b with a, b non-adjacent.
        for c in 0..n {
            let ps: Vec<usize> = self.parents[c].iter().copied().collect();
            for i in 0..ps.len() {
                for j in (i + 1)..ps.len() {
                    if !adjacent[ps[i]][ps[j]] {
                        directed.insert((ps[i], c));
                        directed.insert((ps[j], c));
                    }
                }
            }
        }
        for (p, c) in self.arcs() {
            if !directed.contains(&(p, c)) {
                undirected.insert(unordered(p, c));
            }
        }

        meek_closure(n, &adjacent, &mut directed, &mut undirected);

        Cpdag { names: self.names.clone(), directed, undirected }
    }
}

fn unordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Orientation closure over a pattern (rules R1-R3); sound and complete for
/// patterns arising from a DAG's skeleton plus v-structures.
fn meek_closure(
    n: usize,
    adjacent: &[Vec<bool>],
    directed: &mut BTreeSet<(usize, usize)>,
    undirected: &mut BTreeSet<(usize, usize)>,
) {
    loop {
        let mut to_orient: Option<(usize, usize)> = None;

        'scan: for &(a, b) in undirected.iter() {
            for (x, y) in [(a, b), (b, a)] {
                // R1: w -> x, x - y, w and y non-adjacent  =>  x -> y
                let r1 = directed
                    .iter()
                    .any(|&(w, v)| v == x && w != y && !adjacent[w][y]);
                // R2: x -> w -> y with x - y  =>  x -> y
                let r2 = (0..n)
                    .any(|w| directed.contains(&(x, w)) && directed.contains(&(w, y)));
                // R3: x - c, x - d, c -> y, d -> y, c and d non-adjacent  =>  x -> y
                let r3 = (0..n).any(|c| {
                    ((c + 1)..n).any(|d| {
                        !adjacent[c][d]
                            && undirected.contains(&unordered(x, c))
                            && undirected.contains(&unordered(x, d))
                            && directed.contains(&(c, y))
                            && directed.contains(&(d, y))
                    })
                });
                if r1 || r2 || r3 {
                    to_orient = Some((x, y));
                    break 'scan;
                }
            }
        }

        match to_orient {
            Some((x, y)) => {
                undirected.remove(&unordered(x, y));
                directed.insert((x, y));
            }
            None => break,
        }
    }
}

/// Completed partially-directed acyclic graph: the canonical representative
/// of a Markov equivalence class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cpdag {
    names: Vec<String>,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairState {
    Absent,
    Undirected,
    Forward,
    Backward,
}

impl Cpdag {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn directed_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub fn undirected_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.undirected
    }

    pub fn edge_count(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }

    fn pair_state(&self, a: usize, b: usize) -> PairState {
        debug_assert!(a < b);
        if self.undirected.contains(&(a, b)) {
            PairState::Undirected
        } else if self.directed.contains(&(a, b)) {
            PairState::Forward
        } else if self.directed.contains(&(b, a)) {
            PairState::Backward
        } else {
            PairState::Absent
        }
    }

    /// Structural Hamming distance: the number of node pairs whose edge
    /// status (absent / undirected / either direction) differs.
    pub fn shd(&self, other: &Cpdag) -> Result<usize, GraphError> {
        if self.names != other.names {
            return Err(GraphError::NodeSetMismatch);
        }
        let n = self.names.len();
        let mut count = 0;
        for a in 0..n {
            for b in (a + 1)..n {
                if self.pair_state(a, b) != other.pair_state(a, b) {
                    count += 1;
                }
            }
        }
        Ok(count)
    }
}

/// SHD divided by the true network's arc count.
pub fn scaled_shd(learned: &Cpdag, truth: &Cpdag, true_arc_count: usize) -> Result<f64, GraphError> {
    if true_arc_count == 0 {
        return Err(GraphError::ZeroArcCount);
    }
    Ok(learned.shd(truth)? as f64 / true_arc_count as f64)
}
