//! Discrete Bayesian networks: the joint factorization, brute-force
//! inference oracles, and compilation into circuits.

mod compile;
mod format;

pub use compile::{compile, compile_with, CompileOptions};
pub use format::{parse_bn, write_bn};

use crate::error::{Error, Result};
pub use crate::evidence::{Assignment, Evidence};

/// Largest state space the enumeration oracles will walk.
pub const STATE_GUARD: u128 = 1 << 24;

const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub cardinality: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    vars: Vec<Variable>,
    parents: Vec<Vec<usize>>,
    /// Row-major: one row of `cardinality` entries per parent configuration,
    /// configurations in lexicographic order with the first parent most
    /// significant.
    cpts: Vec<Vec<f64>>,
}

impl BayesNet {
    pub fn new(vars: Vec<Variable>, parents: Vec<Vec<usize>>, cpts: Vec<Vec<f64>>) -> Result<Self> {
        let n = vars.len();
        if n == 0 {
            return Err(Error::InvalidNetwork("network has no variables".into()));
        }
        if parents.len() != n || cpts.len() != n {
            return Err(Error::InvalidNetwork(
                "parents/CPTs do not match variable count".into(),
            ));
        }
        for (i, v) in vars.iter().enumerate() {
            if v.cardinality < 2 {
                return Err(Error::InvalidNetwork(format!(
                    "`{}` has cardinality below 2",
                    v.name
                )));
            }
            if vars[..i].iter().any(|u| u.name == v.name) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate variable `{}`",
                    v.name
                )));
            }
        }
        for (i, ps) in parents.iter().enumerate() {
            for (j, &p) in ps.iter().enumerate() {
                if p >= n {
                    return Err(Error::InvalidNetwork(format!("parent id {p} out of range")));
                }
                if p == i || ps[..j].contains(&p) {
                    return Err(Error::InvalidNetwork(format!(
                        "`{}` lists `{}` as a parent more than once or of itself",
                        vars[i].name, vars[p].name
                    )));
                }
            }
        }
        let bn = BayesNet {
            vars,
            parents,
            cpts,
        };
        bn.topological_order()?;
        for i in 0..n {
            let rows = bn.parent_configurations(i);
            let card = bn.vars[i].cardinality;
            if bn.cpts[i].len() != rows * card {
                return Err(Error::InvalidNetwork(format!(
                    "CPT for `{}` has {} entries, expected {rows} rows of {card}",
                    bn.vars[i].name,
                    bn.cpts[i].len()
                )));
            }
            for (r, row) in bn.cpts[i].chunks(card).enumerate() {
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::InvalidNetwork(format!(
                        "CPT for `{}` row {r} has an entry outside [0, 1]",
                        bn.vars[i].name
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::RowSum {
                        var: bn.vars[i].name.clone(),
                        row: r,
                        sum,
                    });
                }
            }
        }
        Ok(bn)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.cardinality).collect()
    }

    pub fn names(&self) -> Vec<Option<String>> {
        self.vars.iter().map(|v| Some(v.name.clone())).collect()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn parents(&self, var: usize) -> &[usize] {
        &self.parents[var]
    }

    pub fn cpt(&self, var: usize) -> &[f64] {
        &self.cpts[var]
    }

    pub fn parent_configurations(&self, var: usize) -> usize {
        self.parents[var]
            .iter()
            .map(|&p| self.vars[p].cardinality)
            .product()
    }

    /// Row index of the parent configuration picked out by `value_of`.
    pub fn row_index(&self, var: usize, value_of: impl Fn(usize) -> usize) -> usize {
        self.parents[var]
            .iter()
            .fold(0, |acc, &p| acc * self.vars[p].cardinality + value_of(p))
    }

    /// `P(var = val | parents)` for the parent values picked out by `value_of`.
    pub fn theta(&self, var: usize, val: usize, value_of: impl Fn(usize) -> usize) -> f64 {
        let card = self.vars[var].cardinality;
        self.cpts[var][self.row_index(var, value_of) * card + val]
    }

    /// Kahn's algorithm, smallest ready id first. Errors on a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.vars.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap();
            return Err(Error::Cycle(self.vars[stuck].name.clone()));
        }
        Ok(order)
    }

    /// Product of the V conditional probabilities, in variable-id order.
    pub fn joint_probability(&self, x: &Assignment) -> f64 {
        debug_assert_eq!(x.len(), self.num_vars());
        let vals = x.values();
        (0..self.num_vars())
            .map(|i| self.theta(i, vals[i], |p| vals[p]))
            .product()
    }

    fn check_guard(&self) -> Result<()> {
        let space = self
            .vars
            .iter()
            .try_fold(1u128, |acc, v| acc.checked_mul(v.cardinality as u128))
            .unwrap_or(u128::MAX);
        if space > STATE_GUARD {
            return Err(Error::StateGuard(space));
        }
        Ok(())
    }

    /// Sum of the joint over every completion of `e`.
    pub fn brute_force_query(&self, e: &Evidence) -> Result<f64> {
        self.check_guard()?;
        let cards = self.cardinalities();
        e.validate(&cards)?;
        Ok(e.completions(&cards)
            .map(|x| self.joint_probability(&x))
            .sum())
    }

    /// Most probable completion of `e` by enumeration; ties keep the first
    /// assignment in lexicographic order.
    pub fn brute_force_mpe(&self, e: &Evidence) -> Result<(Assignment, f64)> {
        self.check_guard()?;
        let cards = self.cardinalities();
        e.validate(&cards)?;
        let mut best: Option<(Assignment, f64)> = None;
        for x in e.completions(&cards) {
            let p = self.joint_probability(&x);
            if best.as_ref().is_none_or(|(_, b)| p > *b) {
                best = Some((x, p));
            }
        }
        Ok(best.expect("at least one completion"))
    }
}
