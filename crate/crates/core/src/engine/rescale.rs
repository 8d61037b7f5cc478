//! Dynamic rescaling: values that would underflow are multiplied by a
//! scale factor `SF` and a counter `k` records how many times. The true
//! root value is `P_scaled / SF^k`.
//!
//! Each node value is a pair (mantissa in the target format, integer
//! exponent of `SF`). Products add exponents; a deterministic sum under
//! complete evidence has a single non-zero term and adopts its exponent.
//!
//! The restart strategy runs the same arithmetic, but instead of boosting in
//! place it aborts the pass at the first would-underflow operation, records
//! one extra boost for that operation, and starts over. Its final pass is
//! operation-for-operation identical to the inline strategy.

use std::collections::HashMap;

use serde::Serialize;

use super::{check_evidence, load_weights, EvalResult, OpCounts};
use crate::circuit::{check_structure, Circuit, Node, NodeId};
use crate::error::{Error, Result};
use crate::evidence::Evidence;
use crate::numerics::{fp_add, fp_mul, Precision};
use crate::transform::recover_log;

/// Safety bound on boosts applied at a single operation.
const MAX_BOOSTS_PER_OP: u32 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Inline,
    Restart,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inline" => Ok(Strategy::Inline),
            "restart" => Ok(Strategy::Restart),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy `{other}`"
            ))),
        }
    }
}

/// Operation site: (node, operand index within the node).
type Site = (NodeId, usize);

#[derive(Debug, Clone, Copy)]
struct Scaled {
    mantissa: f64,
    exponent: i64,
}

struct Pass<'a> {
    p: Precision,
    sf: f64,
    weights: &'a [Vec<f64>],
    /// `None` boosts inline; `Some` applies planned boosts and aborts on the
    /// first unplanned underflow.
    plan: Option<&'a HashMap<Site, u32>>,
    ops: OpCounts,
    underflows: u64,
    overflows: u64,
}

enum Abort {
    Underflow(Site),
    Failed(Error),
}

impl Pass<'_> {
    fn boost(&mut self, acc: &mut Scaled) {
        self.ops.mul += 1;
        let out = fp_mul(self.p, acc.mantissa, self.sf);
        if out.overflowed {
            self.overflows += 1;
        }
        acc.mantissa = out.value;
        acc.exponent += 1;
    }

    /// `acc * factor`, boosting `acc` until the product clears the
    /// underflow threshold.
    fn mul(
        &mut self,
        site: Site,
        mut acc: Scaled,
        factor: f64,
    ) -> std::result::Result<Scaled, Abort> {
        if let Some(plan) = self.plan {
            for _ in 0..plan.get(&site).copied().unwrap_or(0) {
                self.boost(&mut acc);
            }
        }
        let mut boosts = 0;
        loop {
            self.ops.mul += 1;
            let out = fp_mul(self.p, acc.mantissa, factor);
            if out.overflowed {
                self.overflows += 1;
            }
            if !out.underflow_event() {
                return Ok(Scaled {
                    mantissa: out.value,
                    exponent: acc.exponent,
                });
            }
            if self.plan.is_some() {
                return Err(Abort::Underflow(site));
            }
            boosts += 1;
            if boosts > MAX_BOOSTS_PER_OP {
                return Err(Abort::Failed(Error::InvalidArgument(
                    "scale factor too small to clear the underflow threshold".into(),
                )));
            }
            self.boost(&mut acc);
        }
    }

    fn run(&mut self, c: &Circuit, e: &Evidence) -> std::result::Result<Scaled, Abort> {
        let mut values: Vec<Scaled> = Vec::with_capacity(c.node_count());
        for (id, node) in c.nodes().iter().enumerate() {
            let v = match node {
                Node::Indicator { var, val } => Scaled {
                    mantissa: if e.admits(*var, *val) { 1.0 } else { 0.0 },
                    exponent: 0,
                },
                Node::Product { children } => {
                    let mut acc = values[children[0]];
                    for (i, &ch) in children.iter().enumerate().skip(1) {
                        let other = values[ch];
                        acc = self.mul((id, i), acc, other.mantissa)?;
                        acc.exponent += other.exponent;
                    }
                    if acc.mantissa == 0.0 {
                        acc.exponent = 0;
                    }
                    acc
                }
                Node::Sum { children, .. } => {
                    let mut acc: Option<Scaled> = None;
                    for (i, (&ch, &w)) in children.iter().zip(&self.weights[id]).enumerate() {
                        let term = self.mul((id, i), values[ch], w)?;
                        if term.mantissa == 0.0 {
                            continue;
                        }
                        acc = Some(match acc {
                            None => term,
                            Some(a) if a.exponent == term.exponent => {
                                self.ops.add += 1;
                                let out = fp_add(self.p, a.mantissa, term.mantissa);
                                if out.underflow_event() {
                                    self.underflows += 1;
                                }
                                Scaled {
                                    mantissa: out.value,
                                    exponent: a.exponent,
                                }
                            }
                            Some(_) => {
                                return Err(Abort::Failed(Error::NotDeterministic(format!(
                                    "sum node {id} has several non-zero children under complete evidence"
                                ))))
                            }
                        });
                    }
                    acc.unwrap_or(Scaled {
                        mantissa: 0.0,
                        exponent: 0,
                    })
                }
            };
            values.push(v);
        }
        Ok(values[c.root()])
    }
}

pub fn evaluate_rescaled(
    c: &Circuit,
    e: &Evidence,
    p: Precision,
    sf: f64,
    strategy: Strategy,
) -> Result<EvalResult> {
    if !(sf.is_finite() && sf > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "scale factor must exceed 1, got {sf}"
        )));
    }
    check_evidence(c, e)?;
    if !e.is_complete() {
        return Err(Error::Evidence(
            "dynamic rescaling requires complete evidence".into(),
        ));
    }
    let report = check_structure(c);
    if !report.deterministic {
        return Err(Error::NotDeterministic(format!(
            "determinism is {:?}",
            report.determinism
        )));
    }
    // The factor actually applied is the one representable in the format.
    let sf = p.round(sf);
    if !(sf.is_finite() && sf > 1.0) {
        return Err(Error::InvalidArgument(
            "scale factor not representable".into(),
        ));
    }
    let (weights, lost) = load_weights(c, p);

    let mut pass = Pass {
        p,
        sf,
        weights: &weights,
        plan: None,
        ops: OpCounts::default(),
        underflows: lost,
        overflows: 0,
    };
    let mut restarts = 0;
    let root = match strategy {
        Strategy::Inline => match pass.run(c, e) {
            Ok(v) => v,
            Err(Abort::Failed(err)) => return Err(err),
            Err(Abort::Underflow(_)) => unreachable!("inline passes never abort on underflow"),
        },
        Strategy::Restart => {
            let mut plan: HashMap<Site, u32> = HashMap::new();
            let mut total = OpCounts::default();
            loop {
                let mut attempt = Pass {
                    p,
                    sf,
                    weights: &weights,
                    plan: Some(&plan),
                    ops: OpCounts::default(),
                    underflows: lost,
                    overflows: 0,
                };
                let outcome = attempt.run(c, e);
                total.mul += attempt.ops.mul;
                total.add += attempt.ops.add;
                match outcome {
                    Ok(v) => {
                        pass.ops = total;
                        pass.underflows = attempt.underflows;
                        pass.overflows = attempt.overflows;
                        break v;
                    }
                    Err(Abort::Failed(err)) => return Err(err),
                    Err(Abort::Underflow(site)) => {
                        let boosts = plan.entry(site).or_insert(0);
                        *boosts += 1;
                        if *boosts > MAX_BOOSTS_PER_OP {
                            return Err(Error::InvalidArgument(
                                "scale factor too small to clear the underflow threshold".into(),
                            ));
                        }
                        restarts += 1;
                    }
                }
            }
        }
    };

    let log_value = root.mantissa.ln();
    let log_unscaled = log_value - root.exponent as f64 * sf.ln();
    Ok(EvalResult {
        value: root.mantissa,
        log_value,
        underflow_count: pass.underflows,
        overflow_count: pass.overflows,
        rescale_k: root.exponent,
        restarts,
        recovered: recover_log(log_unscaled, c.transform(), c.num_vars()).exp(),
        approximate_recovery: false,
        ops: pass.ops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::engine::{evaluate, Domain};

    fn independent(v: usize, w: f64) -> Circuit {
        let mut b = CircuitBuilder::new();
        let mut sums = Vec::new();
        for var in 0..v {
            let a = b.indicator(var, 0);
            let z = b.indicator(var, 1);
            sums.push(b.sum(vec![a, z], vec![w, 1.0 - w]));
        }
        let root = b.product(sums);
        b.finish(vec![2; v], root).unwrap()
    }

    #[test]
    fn no_underflow_is_a_no_op() {
        let c = independent(4, 0.3);
        let e = Evidence::from_values(vec![Some(0); 4]);
        let plain = evaluate(&c, &e, Precision::F32, Domain::Linear).unwrap();
        for s in [Strategy::Inline, Strategy::Restart] {
            let r = evaluate_rescaled(&c, &e, Precision::F32, 10.0, s).unwrap();
            assert_eq!(r.rescale_k, 0);
            assert_eq!(r.restarts, 0);
            assert_eq!(r.value, plain.value);
        }
    }

    #[test]
    fn independent_chain_matches_expected_k() {
        let c = independent(30, 0.05);
        let e = Evidence::from_values(vec![Some(0); 30]);
        let inline = evaluate_rescaled(&c, &e, Precision::F32, 10.0, Strategy::Inline).unwrap();
        assert_eq!(inline.rescale_k, 2);
        let truth = 0.05f64.powi(30);
        assert!((inline.recovered - truth).abs() / truth < 1e-4);
        let restart = evaluate_rescaled(&c, &e, Precision::F32, 10.0, Strategy::Restart).unwrap();
        assert_eq!(restart.recovered, inline.recovered);
        assert_eq!(restart.restarts, 2);
    }

    #[test]
    fn preconditions() {
        let c = independent(3, 0.5);
        let full = Evidence::from_values(vec![Some(0); 3]);
        assert!(evaluate_rescaled(&c, &full, Precision::F32, 1.0, Strategy::Inline).is_err());
        assert!(evaluate_rescaled(
            &c,
            &Evidence::empty(3),
            Precision::F32,
            10.0,
            Strategy::Inline
        )
        .is_err());
        let mut b = CircuitBuilder::new();
        let a = b.indicator(0, 0);
        let a2 = b.indicator(0, 0);
        let s = b.sum(vec![a, a2], vec![0.5, 0.5]);
        let nd = b.finish(vec![2], s).unwrap();
        let e = Evidence::from_values(vec![Some(0)]);
        assert!(matches!(
            evaluate_rescaled(&nd, &e, Precision::F32, 10.0, Strategy::Inline),
            Err(Error::NotDeterministic(_))
        ));
    }
}
