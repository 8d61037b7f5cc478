//! Dynamic-range analysis: the smallest non-zero circuit output `P_min`,
//! the minimal root index that lifts it above a format's underflow
//! threshold, and per-evidence precision sweeps.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{check_structure, Circuit, Node};
use crate::engine::{evaluate, evaluate_rescaled, Domain, OpCounts, Strategy};
use crate::error::{Error, Result};
use crate::evidence::{Assignment, Evidence};
use crate::numerics::{Format, Precision};
use crate::transform::{undo_transform, TransformMeta};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PminResult {
    /// Natural log of `P_min`; stays finite where `P_min` itself would
    /// underflow binary64.
    pub log_value: f64,
    pub witness: Assignment,
}

impl PminResult {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn log10(&self) -> f64 {
        self.log_value / std::f64::consts::LN_10
    }
}

/// Minimum non-zero output over complete assignments, by a bottom-up
/// min-product pass in log space.
pub fn p_min(c: &Circuit) -> Result<PminResult> {
    let report = check_structure(c);
    if !report.deterministic {
        return Err(Error::NotDeterministic(format!(
            "determinism is {:?}; P_min would not be the assignment-wise minimum",
            report.determinism
        )));
    }
    if !report.decomposable {
        return Err(Error::NotDecomposable(
            "product children share variables; P_min is not a product of minima".into(),
        ));
    }

    // +inf marks "never non-zero".
    let mut best = vec![f64::INFINITY; c.node_count()];
    let mut choice = vec![usize::MAX; c.node_count()];
    for (id, node) in c.nodes().iter().enumerate() {
        best[id] = match node {
            Node::Indicator { .. } => 0.0,
            Node::Product { children } => children.iter().map(|&ch| best[ch]).sum(),
            Node::Sum { children, weights } => {
                if weights.iter().all(|&w| w <= 0.0) {
                    return Err(Error::AllZeroWeights(id));
                }
                let mut low = f64::INFINITY;
                for (&ch, &w) in children.iter().zip(weights) {
                    if w <= 0.0 || best[ch] == f64::INFINITY {
                        continue;
                    }
                    let cand = w.ln() + best[ch];
                    if cand < low || (cand == low && ch < choice[id]) {
                        low = cand;
                        choice[id] = ch;
                    }
                }
                low
            }
        };
    }
    let log_value = best[c.root()];
    if log_value == f64::INFINITY {
        return Err(Error::ZeroCircuit);
    }

    let mut values: Vec<Option<usize>> = vec![None; c.num_vars()];
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
    Ok(PminResult {
        log_value,
        witness: Assignment(values.into_iter().map(|v| v.unwrap_or(0)).collect()),
    })
}

/// Smallest `n >= 1` with `P_min^(1/n) >= eps_uf`, plus `margin`.
/// `log_p_min` is the natural log of `P_min`.
pub fn root_index(log_p_min: f64, p: Precision, margin: u32) -> Result<u32> {
    if log_p_min.is_nan() || log_p_min == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument("P_min must be positive".into()));
    }
    if log_p_min == f64::INFINITY {
        return Err(Error::InvalidArgument("P_min must be finite".into()));
    }
    let log_eps = p.eps_uf().ln();
    if log_p_min >= log_eps {
        return Ok(1 + margin);
    }
    let fits = |n: u64| log_p_min / n as f64 >= log_eps;
    let mut n = ((log_p_min / log_eps).ceil() as u64).max(1);
    while n > 1 && fits(n - 1) {
        n -= 1;
    }
    while !fits(n) {
        n += 1;
    }
    u32::try_from(n)
        .ok()
        .and_then(|n| n.checked_add(margin))
        .ok_or_else(|| Error::InvalidArgument("root index does not fit in 32 bits".into()))
}

/// Parses a positive decimal such as `4.6e-271` into its natural log
/// without ever forming the (possibly sub-binary64) value itself.
pub fn parse_log_value(text: &str) -> Result<f64> {
    let t = text.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse `{t}` as a positive number"));
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let m: f64 = mantissa.parse().map_err(|_| bad())?;
    if !(m.is_finite() && m > 0.0) {
        return Err(bad());
    }
    Ok(m.ln() + exponent as f64 * std::f64::consts::LN_10)
}

/// Formats `exp(log_value)` in scientific notation from its log, so values
/// below the binary64 range still print. Matches Rust's `{:.*e}` layout.
pub fn format_from_log(log_value: f64, digits: usize) -> String {
    if log_value == f64::NEG_INFINITY {
        return format!("{:.*e}", digits, 0.0);
    }
    let log10 = log_value / std::f64::consts::LN_10;
    let mut exp = log10.floor();
    let mut mant = 10f64.powf(log10 - exp);
    let scale = 10f64.powi(digits as i32);
    if (mant * scale).round() / scale >= 10.0 {
        mant /= 10.0;
        exp += 1.0;
    }
    format!("{:.*}e{}", digits, mant, exp as i64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeRow {
    pub evidence_id: usize,
    pub precision: Format,
    pub ftz: bool,
    pub reference_value: f64,
    pub emulated_value: f64,
    pub recovered_value: f64,
    pub underflow_count: u64,
    pub rescale_k: i64,
    pub rel_error: f64,
    pub ops: OpCounts,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RangeReport {
    pub rows: Vec<RangeRow>,
}

pub const CSV_HEADER: &str =
    "evidence_id,precision,ftz,reference_value,emulated_value,recovered_value,underflow_count,rescale_k,rel_error";

impl RangeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:e},{:e},{:e},{},{},{:e}",
                r.evidence_id,
                r.precision,
                r.ftz,
                r.reference_value,
                r.emulated_value,
                r.recovered_value,
                r.underflow_count,
                r.rescale_k,
                r.rel_error
            );
        }
        out
    }

    pub fn total_ops(&self) -> OpCounts {
        self.rows
            .iter()
            .fold(OpCounts::default(), |acc, r| OpCounts {
                mul: acc.mul + r.ops.mul,
                add: acc.add + r.ops.add,
            })
    }
}

/// One row per (evidence, precision), in input order. The reference is the
/// binary64 log-domain value of the circuit with its transform undone.
/// With `rescale`, complete-evidence rows use dynamic rescaling; partial
/// evidence rows fall back to plain evaluation.
pub fn range_report(
    c: &Circuit,
    evidence: &[Evidence],
    precisions: &[Precision],
    rescale: Option<(f64, Strategy)>,
) -> Result<RangeReport> {
    let original = match c.transform() {
        TransformMeta::None => None,
        _ => Some(undo_transform(c)),
    };
    let reference_circuit = original.as_ref().unwrap_or(c);
    let rows = evidence
        .par_iter()
        .enumerate()
        .map(|(id, e)| {
            let reference = evaluate(reference_circuit, e, Precision::F64, Domain::Log)?.value;
            precisions
                .iter()
                .map(|&p| {
                    let r = match rescale {
                        Some((sf, strategy)) if e.is_complete() => {
                            evaluate_rescaled(c, e, p, sf, strategy)?
                        }
                        _ => evaluate(c, e, p, Domain::Linear)?,
                    };
                    let rel_error = if reference > 0.0 {
                        (r.recovered - reference).abs() / reference
                    } else if r.recovered == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    Ok(RangeRow {
                        evidence_id: id,
                        precision: p.format,
                        ftz: p.flush_to_zero,
                        reference_value: reference,
                        emulated_value: r.value,
                        recovered_value: r.recovered,
                        underflow_count: r.underflow_count,
                        rescale_k: r.rescale_k,
                        rel_error,
                        ops: r.ops,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RangeReport {
        rows: rows.into_iter().flatten().collect(),
    })
}
