//! Scopes and the smoothness / decomposability / determinism checkers.
//!
//! Determinism is decided symbolically. The support of a node (the set of
//! complete assignments on which it is non-zero) is tracked as a rectangle:
//! one allowed value set per variable, absent variables unrestricted. The
//! rectangle is exact for indicators and products and for sums whose
//! children's rectangles differ in at most one variable; otherwise it is
//! the bounding rectangle and is flagged as an over-approximation.
//! Disjoint over-approximations prove disjointness; overlapping exact
//! supports prove a violation; anything else is undecided.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{Circuit, Node, NodeId};

/// Small dense bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(bits: usize) -> Self {
        BitSet {
            words: vec![0; bits.div_ceil(64)],
        }
    }

    fn full(bits: usize) -> Self {
        let mut s = BitSet::new(bits);
        for i in 0..bits {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words
            .get(i / 64)
            .is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    pub fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    fn intersect_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn is_disjoint(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64)
                .filter(move |b| w & (1 << b) != 0)
                .map(move |b| wi * 64 + b)
        })
    }
}

/// Set of variable ids a node is defined over.
pub type Scope = BitSet;

/// Per-node scopes: indicators map to their variable, inner nodes to the
/// union of their children.
pub fn compute_scopes(c: &Circuit) -> Vec<Scope> {
    let mut scopes: Vec<Scope> = Vec::with_capacity(c.node_count());
    for node in c.nodes() {
        let mut s = Scope::new(c.num_vars());
        match node {
            Node::Indicator { var, .. } => s.insert(*var),
            Node::Sum { children, .. } | Node::Product { children } => {
                for &ch in children {
                    s.union_with(&scopes[ch]);
                }
            }
        }
        scopes.push(s);
    }
    scopes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Determinism {
    Proven,
    Violated,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub node: NodeId,
    pub property: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructReport {
    pub smooth: bool,
    pub decomposable: bool,
    pub deterministic: bool,
    pub determinism: Determinism,
    pub violations: Vec<Violation>,
}

impl StructReport {
    pub fn all_hold(&self) -> bool {
        self.smooth && self.decomposable && self.deterministic
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Support {
    /// Never non-zero.
    Empty,
    Rect {
        /// Only variables with a proper subset of values allowed.
        allowed: BTreeMap<usize, BitSet>,
        exact: bool,
    },
}

impl Support {
    fn indicator(var: usize, val: usize, card: usize) -> Self {
        let mut set = BitSet::new(card);
        set.insert(val);
        Support::Rect {
            allowed: BTreeMap::from([(var, set)]),
            exact: true,
        }
    }

    fn intersect(parts: &[&Support]) -> Support {
        let mut allowed: BTreeMap<usize, BitSet> = BTreeMap::new();
        let mut exact = true;
        for part in parts {
            match part {
                Support::Empty => return Support::Empty,
                Support::Rect {
                    allowed: a,
                    exact: e,
                } => {
                    exact &= e;
                    for (var, set) in a {
                        match allowed.get_mut(var) {
                            Some(cur) => {
                                cur.intersect_with(set);
                                if cur.is_empty() {
                                    return Support::Empty;
                                }
                            }
                            None => {
                                allowed.insert(*var, set.clone());
                            }
                        }
                    }
                }
            }
        }
        Support::Rect { allowed, exact }
    }

    fn union(parts: &[&Support], cards: &[usize]) -> Support {
        let rects: Vec<(&BTreeMap<usize, BitSet>, bool)> = parts
            .iter()
            .filter_map(|p| match p {
                Support::Empty => None,
                Support::Rect { allowed, exact } => Some((allowed, *exact)),
            })
            .collect();
        if rects.is_empty() {
            return Support::Empty;
        }
        // Bounding rectangle: a variable stays restricted only if every part
        // restricts it.
        let mut bound: BTreeMap<usize, BitSet> = rects[0].0.clone();
        bound.retain(|var, _| rects.iter().all(|(r, _)| r.contains_key(var)));
        for (r, _) in &rects[1..] {
            for (var, set) in bound.iter_mut() {
                set.union_with(&r[var]);
            }
        }
        bound.retain(|var, set| *set != BitSet::full(cards[*var]));

        let all_exact = rects.iter().all(|(_, e)| *e);
        let differs_in_one = {
            let first = rects[0].0;
            let mut vars: Vec<usize> = rects.iter().flat_map(|(r, _)| r.keys().copied()).collect();
            vars.sort_unstable();
            vars.dedup();
            vars.iter()
                .filter(|v| rects.iter().any(|(r, _)| r.get(v) != first.get(v)))
                .count()
                <= 1
        };
        let one_contains_all = rects.iter().any(|(r, _)| **r == bound);
        Support::Rect {
            allowed: bound,
            exact: all_exact && (differs_in_one || one_contains_all),
        }
    }

    fn is_exact(&self) -> bool {
        match self {
            Support::Empty => true,
            Support::Rect { exact, .. } => *exact,
        }
    }

    fn disjoint(&self, other: &Support) -> bool {
        match (self, other) {
            (Support::Rect { allowed: a, .. }, Support::Rect { allowed: b, .. }) => a
                .iter()
                .any(|(var, set)| b.get(var).is_some_and(|other| set.is_disjoint(other))),
            _ => true,
        }
    }
}

pub fn check_structure(c: &Circuit) -> StructReport {
    let scopes = compute_scopes(c);
    let cards = c.cardinalities();
    let mut violations = Vec::new();
    let mut supports: Vec<Support> = Vec::with_capacity(c.node_count());
    let (mut smooth, mut decomposable) = (true, true);
    let mut determinism = Determinism::Proven;

    for (id, node) in c.nodes().iter().enumerate() {
        let support = match node {
            Node::Indicator { var, val } => Support::indicator(*var, *val, cards[*var]),
            Node::Product { children } => {
                let mut seen = Scope::new(c.num_vars());
                for &ch in children {
                    if !seen.is_disjoint(&scopes[ch]) {
                        decomposable = false;
                        violations.push(Violation {
                            node: id,
                            property: "decomposability",
                            message: format!("child {ch} shares variables with an earlier child"),
                        });
                        break;
                    }
                    seen.union_with(&scopes[ch]);
                }
                let parts: Vec<&Support> = children.iter().map(|&ch| &supports[ch]).collect();
                Support::intersect(&parts)
            }
            Node::Sum { children, weights } => {
                let first = &scopes[children[0]];
                if let Some(&ch) = children.iter().find(|&&ch| scopes[ch] != *first) {
                    smooth = false;
                    violations.push(Violation {
                        node: id,
                        property: "smoothness",
                        message: format!(
                            "child {ch} has a different scope than child {}",
                            children[0]
                        ),
                    });
                }
                let active: Vec<(NodeId, &Support)> = children
                    .iter()
                    .zip(weights)
                    .filter(|(&ch, &w)| w > 0.0 && supports[ch] != Support::Empty)
                    .map(|(&ch, _)| (ch, &supports[ch]))
                    .collect();
                'pairs: for (i, (a, sa)) in active.iter().enumerate() {
                    for (b, sb) in &active[i + 1..] {
                        if sa.disjoint(sb) {
                            continue;
                        }
                        if sa.is_exact() && sb.is_exact() {
                            determinism = Determinism::Violated;
                            violations.push(Violation {
                                node: id,
                                property: "determinism",
                                message: format!("children {a} and {b} can both be non-zero"),
                            });
                        } else {
                            if determinism == Determinism::Proven {
                                determinism = Determinism::Unknown;
                            }
                            violations.push(Violation {
                                node: id,
                                property: "determinism",
                                message: format!(
                                    "cannot prove children {a} and {b} have disjoint supports"
                                ),
                            });
                        }
                        break 'pairs;
                    }
                }
                let parts: Vec<&Support> = active.iter().map(|(_, s)| *s).collect();
                Support::union(&parts, cards)
            }
        };
        supports.push(support);
    }

    StructReport {
        smooth,
        decomposable,
        deterministic: determinism == Determinism::Proven,
        determinism,
        violations,
    }
}
