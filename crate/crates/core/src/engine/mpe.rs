//! Most probable explanation by an upward max-sum pass in log space and a
//! downward pass along the recorded argmax children.

use serde::Serialize;

use crate::circuit::{check_structure, Circuit, Node};
use crate::error::{Error, Result};
use crate::evidence::{Assignment, Evidence};
use crate::transform::recover_log;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpeResult {
    pub assignment: Assignment,
    /// Maximized log value of the circuit as stored (transformed weights
    /// included).
    pub log_value: f64,
    /// `log_value` with the circuit transform undone.
    pub recovered_log_value: f64,
}

pub fn mpe(c: &Circuit, e: &Evidence) -> Result<MpeResult> {
    super::check_evidence(c, e)?;
    let report = check_structure(c);
    if !report.deterministic {
        return Err(Error::NotDeterministic(format!(
            "determinism is {:?}; max-sum is only exact on deterministic circuits",
            report.determinism
        )));
    }

    let mut best = vec![f64::NEG_INFINITY; c.node_count()];
    let mut choice = vec![usize::MAX; c.node_count()];
    for (id, node) in c.nodes().iter().enumerate() {
        best[id] = match node {
            Node::Indicator { var, val } => {
                if e.admits(*var, *val) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Node::Product { children } => children.iter().map(|&ch| best[ch]).sum(),
            Node::Sum { children, weights } => {
                let mut top = f64::NEG_INFINITY;
                for (&ch, &w) in children.iter().zip(weights) {
                    if w <= 0.0 || best[ch] == f64::NEG_INFINITY {
                        continue;
                    }
                    let cand = w.ln() + best[ch];
                    // Ties go to the lowest child id.
                    if cand > top || (cand == top && ch < choice[id]) {
                        top = cand;
                        choice[id] = ch;
                    }
                }
                top
            }
        };
    }

    let log_value = best[c.root()];
    if log_value == f64::NEG_INFINITY {
        return Err(Error::Unsatisfiable);
    }

    let mut values: Vec<Option<usize>> = e.values().to_vec();
    let mut stack = vec![c.root()];
    while let Some(id) = stack.pop() {
        match c.node(id) {
            Node::Indicator { var, val } => {
                values[*var].get_or_insert(*val);
            }
            Node::Product { children } => stack.extend(children),
            Node::Sum { .. } => stack.push(choice[id]),
        }
    }
    let assignment = Assignment(values.into_iter().map(|v| v.unwrap_or(0)).collect());
    Ok(MpeResult {
        assignment,
        log_value,
        recovered_log_value: recover_log(log_value, c.transform(), c.num_vars()),
    })
}
