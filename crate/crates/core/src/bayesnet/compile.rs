//! Recursive-conditioning compilation of a Bayesian network into a smooth,
//! decomposable, deterministic circuit.
//!
//! For a connected set of unassigned variables under a context, the first
//! variable `X` in the order becomes a sum node over its values, weighted by
//! `P(X = x | parents)`. Each branch is the product of the indicator
//! `X = x` and the sub-circuits of the connected components left after
//! conditioning on `X = x`. With a topological order all parents of `X` are
//! already assigned when it is reached, so every complete instantiation
//! multiplies exactly one weight per variable.

use std::collections::HashMap;

use super::BayesNet;
use crate::circuit::{Circuit, CircuitBuilder, NodeId};
use crate::error::{Error, Result};

const NODE_GUARD: usize = 1 << 24;

#[derive(Debug, Clone)]
pub struct CompileOptions {
    /// Variable elimination order; must be topological. `None` uses variable
    /// id order when that is topological, else a computed topological order.
    pub order: Option<Vec<usize>>,
    pub memoize: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            order: None,
            memoize: true,
        }
    }
}

pub fn compile(bn: &BayesNet) -> Result<Circuit> {
    compile_with(bn, &CompileOptions::default())
}

pub fn compile_with(bn: &BayesNet, opts: &CompileOptions) -> Result<Circuit> {
    let order = match &opts.order {
        Some(order) => {
            validate_order(bn, order)?;
            order.clone()
        }
        None => {
            let ids: Vec<usize> = (0..bn.num_vars()).collect();
            if validate_order(bn, &ids).is_ok() {
                ids
            } else {
                bn.topological_order()?
            }
        }
    };
    let mut position = vec![0; bn.num_vars()];
    for (pos, &v) in order.iter().enumerate() {
        position[v] = pos;
    }
    let mut neighbours = vec![Vec::new(); bn.num_vars()];
    for v in 0..bn.num_vars() {
        for &p in bn.parents(v) {
            neighbours[v].push(p);
            neighbours[p].push(v);
        }
    }

    let mut compiler = Compiler {
        bn,
        position,
        neighbours,
        builder: CircuitBuilder::new(),
        indicators: HashMap::new(),
        memo: HashMap::new(),
        memoize: opts.memoize,
        context: vec![None; bn.num_vars()],
    };
    let roots = compiler.compile_set(&order)?;
    let root = match roots[..] {
        [single] => single,
        _ => compiler.builder.product(roots),
    };
    compiler
        .builder
        .finish(bn.cardinalities(), root)?
        .with_names(bn.names())
}

fn validate_order(bn: &BayesNet, order: &[usize]) -> Result<()> {
    let n = bn.num_vars();
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || seen[v] {
            return Err(Error::BadOrder(format!("not a permutation of 0..{n}")));
        }
        for &p in bn.parents(v) {
            if !seen[p] {
                return Err(Error::BadOrder(format!(
                    "`{}` appears before its parent `{}`",
                    bn.variables()[v].name,
                    bn.variables()[p].name
                )));
            }
        }
        seen[v] = true;
    }
    if order.len() != n {
        return Err(Error::BadOrder(format!("not a permutation of 0..{n}")));
    }
    Ok(())
}

/// (component variables, assignment of the outside parents it depends on)
type MemoKey = (Vec<usize>, Vec<(usize, usize)>);

struct Compiler<'a> {
    bn: &'a BayesNet,
    position: Vec<usize>,
    neighbours: Vec<Vec<usize>>,
    builder: CircuitBuilder,
    indicators: HashMap<(usize, usize), NodeId>,
    memo: HashMap<MemoKey, NodeId>,
    memoize: bool,
    context: Vec<Option<usize>>,
}

impl Compiler<'_> {
    /// One node per connected component of `vars` (given in order).
    fn compile_set(&mut self, vars: &[usize]) -> Result<Vec<NodeId>> {
        self.components(vars)
            .into_iter()
            .map(|comp| self.compile_component(comp))
            .collect()
    }

    fn components(&self, vars: &[usize]) -> Vec<Vec<usize>> {
        let n = self.bn.num_vars();
        let mut member = vec![false; n];
        for &v in vars {
            member[v] = true;
        }
        let mut visited = vec![false; n];
        let mut comps = Vec::new();
        for &start in vars {
            if visited[start] {
                continue;
            }
            visited[start] = true;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &u in &self.neighbours[v] {
                    if member[u] && !visited[u] {
                        visited[u] = true;
                        comp.push(u);
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable_by_key(|&v| self.position[v]);
            comps.push(comp);
        }
        comps
    }

    fn indicator(&mut self, var: usize, val: usize) -> NodeId {
        *self
            .indicators
            .entry((var, val))
            .or_insert_with(|| self.builder.indicator(var, val))
    }

    fn compile_component(&mut self, comp: Vec<usize>) -> Result<NodeId> {
        let key = self.memoize.then(|| {
            let mut ctx: Vec<(usize, usize)> = comp
                .iter()
                .flat_map(|&v| self.bn.parents(v).iter().copied())
                .filter(|p| !comp.contains(p))
                .map(|p| {
                    (
                        p,
                        self.context[p].expect("parents are assigned before children"),
                    )
                })
                .collect();
            ctx.sort_unstable();
            ctx.dedup();
            (comp.clone(), ctx)
        });
        if let Some(&id) = key.as_ref().and_then(|k| self.memo.get(k)) {
            return Ok(id);
        }

        let var = comp[0];
        let rest = &comp[1..];
        let card = self.bn.variables()[var].cardinality;
        let context = &self.context;
        let row = self.bn.row_index(var, |p| {
            context[p].expect("parents are assigned before children")
        });
        let weights = self.bn.cpt(var)[row * card..(row + 1) * card].to_vec();

        let mut children = Vec::with_capacity(card);
        for val in 0..card {
            self.context[var] = Some(val);
            let ind = self.indicator(var, val);
            let subs = self.compile_set(rest)?;
            let child = if subs.is_empty() {
                ind
            } else {
                let mut factors = Vec::with_capacity(subs.len() + 1);
                factors.push(ind);
                factors.extend(subs);
                self.builder.product(factors)
            };
            children.push(child);
        }
        self.context[var] = None;

        let id = self.builder.sum(children, weights);
        if self.builder.len() > NODE_GUARD {
            return Err(Error::StateGuard(self.builder.len() as u128));
        }
        if let Some(k) = key {
            self.memo.insert(k, id);
        }
        Ok(id)
    }
}
