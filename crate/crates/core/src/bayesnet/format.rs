//! The `.bnet` text format.
//!
//! ```text
//! bnet 1
//! var K 2
//! var T 2
//! parents T K
//! cpt K
//! 0.55 0.45
//! cpt T
//! 0.7 0.3       # K = 0
//! 0.1 0.9       # K = 1
//! ```
//!
//! A `parents` line may be omitted for root variables. CPT rows follow the
//! lexicographic order of parent value indices, first listed parent most
//! significant.

use std::fmt::Write as _;

use super::{BayesNet, Variable};
use crate::error::{Error, Result};

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

pub fn parse_bn(text: &str) -> Result<BayesNet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let (line, header) = lines.next().ok_or_else(|| syntax(1, "empty input"))?;
    if header.split_whitespace().collect::<Vec<_>>() != ["bnet", "1"] {
        return Err(syntax(line, "expected header `bnet 1`"));
    }

    let mut vars: Vec<Variable> = Vec::new();
    let mut parents: Vec<Option<Vec<usize>>> = Vec::new();
    let mut cpts: Vec<Option<Vec<f64>>> = Vec::new();
    let lookup = |vars: &[Variable], line: usize, name: &str| {
        vars.iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::InvalidNetwork(format!("line {line}: unknown variable `{name}`")))
    };

    while let Some((line, content)) = lines.next() {
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks[0] {
            "var" => {
                let [_, name, card] = toks[..] else {
                    return Err(syntax(line, "expected `var <name> <cardinality>`"));
                };
                let cardinality: usize = card
                    .parse()
                    .map_err(|_| syntax(line, format!("bad cardinality `{card}`")))?;
                if vars.iter().any(|v| v.name == name) {
                    return Err(syntax(line, format!("duplicate variable `{name}`")));
                }
                vars.push(Variable {
                    name: name.to_string(),
                    cardinality,
                });
                parents.push(None);
                cpts.push(None);
            }
            "parents" => {
                let name = toks
                    .get(1)
                    .ok_or_else(|| syntax(line, "missing variable name"))?;
                let v = lookup(&vars, line, name)?;
                if parents[v].is_some() {
                    return Err(syntax(
                        line,
                        format!("duplicate `parents` line for `{name}`"),
                    ));
                }
                let ps = toks[2..]
                    .iter()
                    .map(|p| lookup(&vars, line, p))
                    .collect::<Result<Vec<_>>>()?;
                parents[v] = Some(ps);
            }
            "cpt" => {
                let [_, name] = toks[..] else {
                    return Err(syntax(line, "expected `cpt <name>`"));
                };
                let v = lookup(&vars, line, name)?;
                if cpts[v].is_some() {
                    return Err(syntax(line, format!("duplicate CPT for `{name}`")));
                }
                let card = vars[v].cardinality;
                let rows: usize = parents[v]
                    .as_deref()
                    .unwrap_or(&[])
                    .iter()
                    .map(|&p| vars[p].cardinality)
                    .product();
                let mut table = Vec::with_capacity(rows * card);
                for r in 0..rows {
                    let (row_line, row) = lines.next().ok_or_else(|| {
                        syntax(
                            line,
                            format!("CPT for `{name}` needs {rows} rows, found {r}"),
                        )
                    })?;
                    let vals = row
                        .split_whitespace()
                        .map(|t| {
                            t.parse::<f64>()
                                .ok()
                                .filter(|x| x.is_finite())
                                .ok_or_else(|| syntax(row_line, format!("bad probability `{t}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if vals.len() != card {
                        return Err(Error::InvalidNetwork(format!(
                            "line {row_line}: arity mismatch, `{name}` row has {} entries, expected {card}",
                            vals.len()
                        )));
                    }
                    table.extend(vals);
                }
                cpts[v] = Some(table);
            }
            other => return Err(syntax(line, format!("unknown keyword `{other}`"))),
        }
    }

    let cpts = cpts
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            t.ok_or_else(|| Error::InvalidNetwork(format!("missing CPT for `{}`", vars[i].name)))
        })
        .collect::<Result<Vec<_>>>()?;
    let parents = parents.into_iter().map(Option::unwrap_or_default).collect();
    BayesNet::new(vars, parents, cpts)
}

pub fn write_bn(bn: &BayesNet) -> String {
    let mut out = String::from("bnet 1\n");
    for v in bn.variables() {
        let _ = writeln!(out, "var {} {}", v.name, v.cardinality);
    }
    for (i, v) in bn.variables().iter().enumerate() {
        if bn.parents(i).is_empty() {
            continue;
        }
        let _ = write!(out, "parents {}", v.name);
        for &p in bn.parents(i) {
            let _ = write!(out, " {}", bn.variables()[p].name);
        }
        out.push('\n');
    }
    for (i, v) in bn.variables().iter().enumerate() {
        let _ = writeln!(out, "cpt {}", v.name);
        for row in bn.cpt(i).chunks(v.cardinality) {
            let row: Vec<String> = row.iter().map(|p| format!("{p:?}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesnet::tests::KTG;

    #[test]
    fn parses_ktg() {
        let bn = parse_bn(KTG).unwrap();
        assert_eq!(bn.num_vars(), 3);
        assert_eq!(bn.parents(1), &[0]);
        assert_eq!(bn.cpt(2), &[0.4, 0.6, 0.8, 0.2]);
        assert_eq!(parse_bn(&write_bn(&bn)).unwrap(), bn);
    }

    #[test]
    fn row_sum_error() {
        let text = "bnet 1\nvar A 2\ncpt A\n0.5 0.6\n";
        assert!(matches!(parse_bn(text), Err(Error::RowSum { .. })));
    }

    #[test]
    fn cycle_error() {
        let text = "bnet 1\nvar K 2\nvar T 2\nparents K T\nparents T K\ncpt K\n0.5 0.5\n0.5 0.5\ncpt T\n0.5 0.5\n0.5 0.5\n";
        assert!(matches!(parse_bn(text), Err(Error::Cycle(_))));
    }

    #[test]
    fn arity_and_unknown_parent() {
        let arity = "bnet 1\nvar A 3\ncpt A\n0.5 0.5\n";
        assert!(parse_bn(arity).unwrap_err().to_string().contains("arity"));
        let unknown = "bnet 1\nvar A 2\nparents A B\ncpt A\n0.5 0.5\n";
        assert!(parse_bn(unknown)
            .unwrap_err()
            .to_string()
            .contains("unknown variable"));
        let missing = "bnet 1\nvar A 2\n";
        assert!(parse_bn(missing).is_err());
        assert!(parse_bn("").is_err());
    }
}
