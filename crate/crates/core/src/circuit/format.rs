//! The `.pcir` text format.
//!
//! ```text
//! pcir 1
//! vars 3
//! card 2 3                  # optional, default cardinality is 2
//! name 0 K                  # optional variable label
//! node 0 indicator 0 1
//! node 1 indicator 0 0
//! node 2 sum 2 0 0.45 1 0.55
//! meta nth_root 2           # optional: meta nth_root <n> | meta scaled <c>
//! root 2
//! ```
//!
//! Node ids are dense and must appear in increasing order; every child id
//! must be smaller than the node that references it. `root` is the last line.

use std::fmt::Write as _;

use super::{Circuit, Node, NodeId};
use crate::error::{Error, Result};
use crate::transform::TransformMeta;

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

struct Fields<'a> {
    line: usize,
    iter: std::str::SplitWhitespace<'a>,
}

impl<'a> Fields<'a> {
    fn next_str(&mut self, what: &str) -> Result<&'a str> {
        self.iter
            .next()
            .ok_or_else(|| syntax(self.line, format!("missing {what}")))
    }

    fn next_usize(&mut self, what: &str) -> Result<usize> {
        let tok = self.next_str(what)?;
        tok.parse()
            .map_err(|_| syntax(self.line, format!("expected integer {what}, got `{tok}`")))
    }

    fn next_f64(&mut self, what: &str) -> Result<f64> {
        let tok = self.next_str(what)?;
        let v: f64 = tok
            .parse()
            .map_err(|_| syntax(self.line, format!("expected number {what}, got `{tok}`")))?;
        if !v.is_finite() {
            return Err(syntax(self.line, format!("{what} `{tok}` is not finite")));
        }
        Ok(v)
    }

    fn end(&mut self) -> Result<()> {
        match self.iter.next() {
            None => Ok(()),
            Some(tok) => Err(syntax(
                self.line,
                format!("unexpected trailing token `{tok}`"),
            )),
        }
    }
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines.next().ok_or_else(|| syntax(1, "empty input"))?;
    if header.split_whitespace().collect::<Vec<_>>() != ["pcir", "1"] {
        return Err(syntax(line, "expected header `pcir 1`"));
    }

    let mut cards: Option<Vec<usize>> = None;
    let mut names: Vec<Option<String>> = Vec::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut transform: Option<TransformMeta> = None;
    let mut root: Option<(usize, NodeId)> = None;
    let mut last_line = line;

    for (line, content) in lines {
        last_line = line;
        if root.is_some() {
            return Err(syntax(line, "content after `root` line"));
        }
        let mut f = Fields {
            line,
            iter: content.split_whitespace(),
        };
        let keyword = f.next_str("keyword")?;
        if keyword != "vars" && cards.is_none() {
            return Err(syntax(line, "`vars` must precede other declarations"));
        }
        match keyword {
            "vars" => {
                if cards.is_some() {
                    return Err(syntax(line, "duplicate `vars` line"));
                }
                let v = f.next_usize("variable count")?;
                cards = Some(vec![2; v]);
                names = vec![None; v];
            }
            "card" => {
                if !nodes.is_empty() {
                    return Err(syntax(line, "`card` must precede nodes"));
                }
                let var = f.next_usize("variable")?;
                let k = f.next_usize("cardinality")?;
                let cards = cards.as_mut().unwrap();
                if var >= cards.len() {
                    return Err(syntax(line, format!("variable {var} out of range")));
                }
                if k < 2 {
                    return Err(syntax(line, "cardinality must be at least 2"));
                }
                cards[var] = k;
            }
            "name" => {
                let var = f.next_usize("variable")?;
                let label = f.next_str("name")?;
                if var >= names.len() {
                    return Err(syntax(line, format!("variable {var} out of range")));
                }
                if names.iter().any(|n| n.as_deref() == Some(label)) {
                    return Err(syntax(line, format!("duplicate variable name `{label}`")));
                }
                names[var] = Some(label.to_string());
            }
            "node" => {
                let id = f.next_usize("node id")?;
                if id != nodes.len() {
                    return Err(syntax(
                        line,
                        format!("expected node id {}, got {id}", nodes.len()),
                    ));
                }
                let node = parse_node(&mut f, id, cards.as_ref().unwrap())?;
                nodes.push(node);
            }
            "meta" => {
                if transform.is_some() {
                    return Err(syntax(line, "at most one `meta` line is allowed"));
                }
                let kind = f.next_str("meta kind")?;
                transform = Some(match kind {
                    "nth_root" => {
                        let n = f.next_usize("root index")?;
                        if n < 1 || n > u32::MAX as usize {
                            return Err(syntax(line, "root index must be a positive integer"));
                        }
                        TransformMeta::NthRoot(n as u32)
                    }
                    "scaled" => {
                        let c = f.next_f64("scale")?;
                        if c <= 0.0 {
                            return Err(syntax(line, "scale must be positive"));
                        }
                        TransformMeta::Scaled(c)
                    }
                    "none" => TransformMeta::None,
                    other => return Err(syntax(line, format!("unknown meta kind `{other}`"))),
                });
            }
            "root" => {
                let id = f.next_usize("root id")?;
                if id >= nodes.len() {
                    return Err(syntax(line, format!("root {id} is not a node id")));
                }
                root = Some((line, id));
            }
            other => return Err(syntax(line, format!("unknown keyword `{other}`"))),
        }
        f.end()?;
    }

    let (_, root) = root.ok_or_else(|| syntax(last_line, "missing `root` line"))?;
    let cards = cards.ok_or_else(|| syntax(last_line, "missing `vars` line"))?;
    Circuit::new(cards, nodes, root, transform.unwrap_or_default())?.with_names(names)
}

fn parse_node(f: &mut Fields<'_>, id: NodeId, cards: &[usize]) -> Result<Node> {
    let line = f.line;
    let child = |f: &mut Fields<'_>| -> Result<NodeId> {
        let ch = f.next_usize("child id")?;
        if ch >= id {
            return Err(Error::Topology {
                line,
                node: id,
                child: ch,
            });
        }
        Ok(ch)
    };
    let kind = f.next_str("node kind")?;
    match kind {
        "indicator" => {
            let var = f.next_usize("variable")?;
            let val = f.next_usize("value")?;
            if var >= cards.len() {
                return Err(syntax(line, format!("variable {var} out of range")));
            }
            if val >= cards[var] {
                return Err(syntax(
                    line,
                    format!(
                        "value {val} out of range for variable {var} (cardinality {})",
                        cards[var]
                    ),
                ));
            }
            Ok(Node::Indicator { var, val })
        }
        "sum" => {
            let m = f.next_usize("child count")?;
            if m == 0 {
                return Err(syntax(line, "sum node needs at least one child"));
            }
            let mut children = Vec::with_capacity(m);
            let mut weights = Vec::with_capacity(m);
            for _ in 0..m {
                children.push(child(f)?);
                let w = f.next_f64("weight").map_err(|e| match e {
                    Error::Syntax { message, .. } if message.starts_with("missing") => syntax(
                        line,
                        format!("weight count mismatch: expected {m} child/weight pairs"),
                    ),
                    e => e,
                })?;
                if w < 0.0 {
                    return Err(syntax(line, format!("negative weight {w}")));
                }
                weights.push(w);
            }
            Ok(Node::Sum { children, weights })
        }
        "prod" | "product" => {
            let m = f.next_usize("child count")?;
            if m == 0 {
                return Err(syntax(line, "product node needs at least one child"));
            }
            let children = (0..m).map(|_| child(f)).collect::<Result<Vec<_>>>()?;
            Ok(Node::Product { children })
        }
        other => Err(syntax(line, format!("unknown node kind `{other}`"))),
    }
}

/// 17 significant digits: enough for any binary64 to round-trip.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_circuit(c: &Circuit) -> String {
    let mut out = String::new();
    out.push_str("pcir 1\n");
    let _ = writeln!(out, "vars {}", c.num_vars());
    for (var, &k) in c.cardinalities().iter().enumerate() {
        if k != 2 {
            let _ = writeln!(out, "card {var} {k}");
        }
    }
    for (var, name) in c.names().iter().enumerate() {
        if let Some(name) = name {
            let _ = writeln!(out, "name {var} {name}");
        }
    }
    for (id, node) in c.nodes().iter().enumerate() {
        match node {
            Node::Indicator { var, val } => {
                let _ = writeln!(out, "node {id} indicator {var} {val}");
            }
            Node::Sum { children, weights } => {
                let _ = write!(out, "node {id} sum {}", children.len());
                for (ch, w) in children.iter().zip(weights) {
                    let _ = write!(out, " {ch} {}", fmt_f64(*w));
                }
                out.push('\n');
            }
            Node::Product { children } => {
                let _ = write!(out, "node {id} prod {}", children.len());
                for ch in children {
                    let _ = write!(out, " {ch}");
                }
                out.push('\n');
            }
        }
    }
    match c.transform() {
        TransformMeta::None => {}
        TransformMeta::NthRoot(n) => {
            let _ = writeln!(out, "meta nth_root {n}");
        }
        TransformMeta::Scaled(s) => {
            let _ = writeln!(out, "meta scaled {}", fmt_f64(s));
        }
    }
    let _ = writeln!(out, "root {}", c.root());
    out
}
