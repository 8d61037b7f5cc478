//! Circuit evaluation under an emulated precision, in linear or log domain.

mod mpe;
mod rescale;

pub use mpe::{mpe, MpeResult};
pub use rescale::{evaluate_rescaled, Strategy};

use serde::Serialize;

use crate::circuit::{Circuit, Node};
use crate::error::{Error, Result};
use crate::evidence::Evidence;
use crate::numerics::{fp_add, fp_mul, Precision};
use crate::transform::{recover_log, TransformMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Linear,
    /// binary64 log values with max-shifted exponent summation; ignores the
    /// requested precision.
    Log,
}

/// Emulated arithmetic operation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub mul: u64,
    pub add: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    /// Raw root value in the target format (binary64 carrier).
    pub value: f64,
    pub log_value: f64,
    pub underflow_count: u64,
    pub overflow_count: u64,
    pub rescale_k: i64,
    pub restarts: u64,
    /// True probability after undoing the circuit transform and any
    /// dynamic rescaling.
    pub recovered: f64,
    /// Rooted circuit under partial evidence: the root of a sum is not the
    /// sum of roots, so `recovered` is only an approximation.
    pub approximate_recovery: bool,
    pub ops: OpCounts,
}

fn check_evidence(c: &Circuit, e: &Evidence) -> Result<()> {
    if e.num_vars() != c.num_vars() {
        return Err(Error::Evidence(format!(
            "evidence covers {} variables, circuit has {}",
            e.num_vars(),
            c.num_vars()
        )));
    }
    e.validate(c.cardinalities())
}

fn approximate(c: &Circuit, e: &Evidence) -> bool {
    matches!(c.transform(), TransformMeta::NthRoot(n) if n > 1) && !e.is_complete()
}

/// Rounds every sum weight into the target format. Returns the rounded
/// weights (node-indexed; empty for non-sum nodes) and the number of
/// weights lost to underflow.
pub(crate) fn load_weights(c: &Circuit, p: Precision) -> (Vec<Vec<f64>>, u64) {
    let mut lost = 0;
    let table = c
        .nodes()
        .iter()
        .map(|n| match n {
            Node::Sum { weights, .. } => weights
                .iter()
                .map(|&w| {
                    let r = p.round(w);
                    if w != 0.0 && (r == 0.0 || r.abs() < p.eps_uf()) {
                        lost += 1;
                    }
                    r
                })
                .collect(),
            _ => Vec::new(),
        })
        .collect();
    (table, lost)
}

pub fn evaluate(c: &Circuit, e: &Evidence, p: Precision, domain: Domain) -> Result<EvalResult> {
    check_evidence(c, e)?;
    match domain {
        Domain::Linear => Ok(evaluate_linear(c, e, p)),
        Domain::Log => Ok(evaluate_log(c, e)),
    }
}

fn evaluate_linear(c: &Circuit, e: &Evidence, p: Precision) -> EvalResult {
    let (weights, lost) = load_weights(c, p);
    let mut underflows = lost;
    let mut overflows = 0;
    let mut ops = OpCounts::default();
    let mut values = vec![0.0; c.node_count()];

    let mut tally = |out: crate::numerics::FpOutcome| {
        if out.underflow_event() {
            underflows += 1;
        }
        if out.overflowed {
            overflows += 1;
        }
        out.value
    };

    for (id, node) in c.nodes().iter().enumerate() {
        values[id] = match node {
            Node::Indicator { var, val } => {
                if e.admits(*var, *val) {
                    1.0
                } else {
                    0.0
                }
            }
            Node::Product { children } => {
                let mut acc = values[children[0]];
                for &ch in &children[1..] {
                    ops.mul += 1;
                    acc = tally(fp_mul(p, acc, values[ch]));
                }
                acc
            }
            Node::Sum { children, .. } => {
                let mut acc: Option<f64> = None;
                for (&ch, &w) in children.iter().zip(&weights[id]) {
                    ops.mul += 1;
                    let term = tally(fp_mul(p, w, values[ch]));
                    acc = Some(match acc {
                        None => term,
                        Some(a) => {
                            ops.add += 1;
                            tally(fp_add(p, a, term))
                        }
                    });
                }
                acc.unwrap_or(0.0)
            }
        };
    }

    let value = values[c.root()];
    let log_value = value.ln();
    EvalResult {
        value,
        log_value,
        underflow_count: underflows,
        overflow_count: overflows,
        rescale_k: 0,
        restarts: 0,
        recovered: recover_log(log_value, c.transform(), c.num_vars()).exp(),
        approximate_recovery: approximate(c, e),
        ops,
    }
}

/// `ln(sum(exp(xs)))`, shifted by the maximum.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn evaluate_log(c: &Circuit, e: &Evidence) -> EvalResult {
    let mut ops = OpCounts::default();
    let mut values = vec![f64::NEG_INFINITY; c.node_count()];
    let mut terms = Vec::new();
    for (id, node) in c.nodes().iter().enumerate() {
        values[id] = match node {
            Node::Indicator { var, val } => {
                if e.admits(*var, *val) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Node::Product { children } => {
                ops.add += children.len() as u64 - 1;
                children.iter().map(|&ch| values[ch]).sum()
            }
            Node::Sum { children, weights } => {
                terms.clear();
                terms.extend(children.iter().zip(weights).map(|(&ch, &w)| {
                    if w > 0.0 {
                        w.ln() + values[ch]
                    } else {
                        f64::NEG_INFINITY
                    }
                }));
                ops.add += children.len() as u64;
                log_sum_exp(&terms)
            }
        };
    }
    let log_value = values[c.root()];
    EvalResult {
        value: log_value.exp(),
        log_value,
        underflow_count: 0,
        overflow_count: 0,
        rescale_k: 0,
        restarts: 0,
        recovered: recover_log(log_value, c.transform(), c.num_vars()).exp(),
        approximate_recovery: approximate(c, e),
        ops,
    }
}

/// Instrumented binary64 evaluation of the active sub-circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveTrace {
    /// Largest number of simultaneously non-zero weighted children seen at
    /// any sum node.
    pub max_active_children: usize,
    /// Weighted sum edges on the active sub-circuit reached from the root,
    /// counted with multiplicity.
    pub weighted_edges: usize,
}

pub fn trace_active(c: &Circuit, e: &Evidence) -> Result<ActiveTrace> {
    check_evidence(c, e)?;
    let mut values = vec![0.0f64; c.node_count()];
    let mut max_active = 0;
    for (id, node) in c.nodes().iter().enumerate() {
        values[id] = match node {
            Node::Indicator { var, val } => f64::from(u8::from(e.admits(*var, *val))),
            Node::Product { children } => children.iter().map(|&ch| values[ch]).product(),
            Node::Sum { children, weights } => {
                let active = children
                    .iter()
                    .zip(weights)
                    .filter(|(&ch, &w)| w * values[ch] != 0.0)
                    .count();
                max_active = max_active.max(active);
                children
                    .iter()
                    .zip(weights)
                    .map(|(&ch, &w)| w * values[ch])
                    .sum()
            }
        };
    }
    let mut edges = 0;
    let mut stack = vec![c.root()];
    while let Some(id) = stack.pop() {
        match c.node(id) {
            Node::Indicator { .. } => {}
            Node::Product { children } => stack.extend(children),
            Node::Sum { children, weights } => {
                for (&ch, &w) in children.iter().zip(weights) {
                    if w * values[ch] != 0.0 {
                        edges += 1;
                        stack.push(ch);
                    }
                }
            }
        }
    }
    Ok(ActiveTrace {
        max_active_children: max_active,
        weighted_edges: edges,
    })
}
