//! Probabilistic circuits: a topologically ordered DAG of indicator leaves,
//! weighted sum nodes, and product nodes.
//!
//! Weights live on sum edges. Child ids are always smaller than the id of
//! the node that references them, so a single forward sweep over `nodes`
//! is a valid bottom-up evaluation order.

mod format;
mod structure;

pub use format::{parse_circuit, write_circuit};
pub use structure::{check_structure, compute_scopes, Determinism, Scope, StructReport, Violation};

use crate::error::{Error, Result};
use crate::transform::TransformMeta;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Indicator {
        var: usize,
        val: usize,
    },
    Sum {
        children: Vec<NodeId>,
        weights: Vec<f64>,
    },
    Product {
        children: Vec<NodeId>,
    },
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Indicator { .. } => &[],
            Node::Sum { children, .. } | Node::Product { children } => children,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    nodes: Vec<Node>,
    root: NodeId,
    cardinalities: Vec<usize>,
    names: Vec<Option<String>>,
    transform: TransformMeta,
}

impl Circuit {
    /// Builds a circuit and checks every structural invariant.
    pub fn new(
        cardinalities: Vec<usize>,
        nodes: Vec<Node>,
        root: NodeId,
        transform: TransformMeta,
    ) -> Result<Self> {
        let names = vec![None; cardinalities.len()];
        let c = Circuit {
            nodes,
            root,
            cardinalities,
            names,
            transform,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn num_vars(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn transform(&self) -> TransformMeta {
        self.transform
    }

    pub fn names(&self) -> &[Option<String>] {
        &self.names
    }

    /// Display name of a variable, falling back to its index.
    pub fn var_name(&self, var: usize) -> String {
        self.names[var].clone().unwrap_or_else(|| var.to_string())
    }

    pub fn with_names(mut self, names: Vec<Option<String>>) -> Result<Self> {
        if names.len() != self.num_vars() {
            return Err(Error::InvalidCircuit(format!(
                "{} names for {} variables",
                names.len(),
                self.num_vars()
            )));
        }
        self.names = names;
        Ok(self)
    }

    /// Same structure, new sum weights (visited in node order) and transform.
    pub(crate) fn map_weights(
        &self,
        mut f: impl FnMut(f64) -> f64,
        transform: TransformMeta,
    ) -> Circuit {
        let nodes = self
            .nodes
            .iter()
            .map(|n| match n {
                Node::Sum { children, weights } => Node::Sum {
                    children: children.clone(),
                    weights: weights.iter().map(|&w| f(w)).collect(),
                },
                other => other.clone(),
            })
            .collect();
        Circuit {
            nodes,
            root: self.root,
            cardinalities: self.cardinalities.clone(),
            names: self.names.clone(),
            transform,
        }
    }

    /// All sum-edge weights in node order.
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes
            .iter()
            .flat_map(|n| match n {
                Node::Sum { weights, .. } => weights.as_slice(),
                _ => &[],
            })
            .copied()
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCircuit(msg));
        if self.nodes.is_empty() {
            return bad("circuit has no nodes".into());
        }
        if self.root >= self.nodes.len() {
            return bad(format!("root {} is not a node id", self.root));
        }
        if let Some(var) = self.cardinalities.iter().position(|&k| k < 2) {
            return bad(format!("variable {var} has cardinality below 2"));
        }
        for (id, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Indicator { var, val } => {
                    if *var >= self.num_vars() {
                        return bad(format!("node {id}: variable {var} out of range"));
                    }
                    if *val >= self.cardinalities[*var] {
                        return bad(format!(
                            "node {id}: value {val} out of range for variable {var}"
                        ));
                    }
                }
                Node::Sum { children, weights } => {
                    if children.len() != weights.len() {
                        return bad(format!(
                            "node {id}: {} children but {} weights",
                            children.len(),
                            weights.len()
                        ));
                    }
                    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
                        return bad(format!(
                            "node {id}: weight {w} is not a finite non-negative number"
                        ));
                    }
                }
                Node::Product { children } => {
                    let mut sorted = children.clone();
                    sorted.sort_unstable();
                    if sorted.windows(2).any(|w| w[0] == w[1]) {
                        return bad(format!("node {id}: duplicate product child"));
                    }
                }
            }
            if !matches!(node, Node::Indicator { .. }) && node.children().is_empty() {
                return bad(format!("node {id}: empty child list"));
            }
            if let Some(&child) = node.children().iter().find(|&&ch| ch >= id) {
                return Err(Error::Topology {
                    line: 0,
                    node: id,
                    child,
                });
            }
        }
        Ok(())
    }
}

/// Incremental construction in topological order.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    nodes: Vec<Node>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn indicator(&mut self, var: usize, val: usize) -> NodeId {
        self.push(Node::Indicator { var, val })
    }

    pub fn sum(&mut self, children: Vec<NodeId>, weights: Vec<f64>) -> NodeId {
        self.push(Node::Sum { children, weights })
    }

    pub fn product(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(Node::Product { children })
    }

    pub fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn finish(self, cardinalities: Vec<usize>, root: NodeId) -> Result<Circuit> {
        Circuit::new(cardinalities, self.nodes, root, TransformMeta::None)
    }
}
