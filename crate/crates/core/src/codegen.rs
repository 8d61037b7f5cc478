//! Straight-line C99 emission.
//!
//! The generated evaluator takes one byte per variable (255 marks a
//! marginalized variable) and computes every node in topological order with
//! one statement per node. Products multiply left to right and sums
//! accumulate `w * child` left to right, the same operation order as the
//! emulating engine, so a binary32 build reproduces `engine::evaluate` at
//! binary32 up to flush-to-zero differences.

use std::fmt::Write as _;

use crate::circuit::{Circuit, Node};
use crate::error::{Error, Result};
use crate::numerics::{Format, Precision};
use crate::transform::TransformMeta;

/// Evidence byte meaning "marginalize this variable".
pub const MARGINALIZED: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CType {
    Float,
    Double,
}

impl CType {
    fn name(self) -> &'static str {
        match self {
            CType::Float => "float",
            CType::Double => "double",
        }
    }

    fn format(self) -> Format {
        match self {
            CType::Float => Format::Binary32,
            CType::Double => Format::Binary64,
        }
    }

    fn literal(self, x: f64) -> String {
        match self {
            CType::Float => format!("{:.8e}f", x as f32),
            CType::Double => format!("{x:.16e}"),
        }
    }
}

impl TryFrom<Format> for CType {
    type Error = Error;

    fn try_from(f: Format) -> Result<Self> {
        match f {
            Format::Binary32 => Ok(CType::Float),
            Format::Binary64 => Ok(CType::Double),
            Format::Binary16 => Err(Error::Codegen(
                "binary16 has no portable C scalar type; use f32 or f64".into(),
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CodegenOptions {
    pub precision: CType,
    pub symbol_prefix: String,
    pub emit_recovery: bool,
    /// Natural log of `P_min`, recorded as a metadata constant.
    pub log_p_min: Option<f64>,
}

impl CodegenOptions {
    pub fn new(precision: CType, prefix: impl Into<String>) -> Self {
        CodegenOptions {
            precision,
            symbol_prefix: prefix.into(),
            emit_recovery: false,
            log_p_min: None,
        }
    }
}

const C_KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
    "union", "unsigned", "void", "volatile", "while",
];

fn validate(c: &Circuit, opts: &CodegenOptions) -> Result<()> {
    let prefix = &opts.symbol_prefix;
    let valid_ident = prefix
        .chars()
        .next()
        .is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_')
        && prefix
            .chars()
            .all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
        && !C_KEYWORDS.contains(&prefix.as_str());
    if !valid_ident {
        return Err(Error::Codegen(format!(
            "`{prefix}` is not a valid C identifier"
        )));
    }
    if let Some(var) = c
        .cardinalities()
        .iter()
        .position(|&k| k > MARGINALIZED as usize)
    {
        return Err(Error::Codegen(format!(
            "variable {var} has more than {} values",
            MARGINALIZED
        )));
    }
    let format = opts.precision.format();
    let p = Precision::gradual(format);
    for w in c.weights().filter(|&w| w > 0.0) {
        let r = p.round(w);
        if r < format.min_normal() {
            return Err(Error::Codegen(format!(
                "weight {w:e} is below the {format} normal range; apply a larger root index"
            )));
        }
        if r.is_infinite() {
            return Err(Error::Codegen(format!("weight {w:e} overflows {format}")));
        }
    }
    Ok(())
}

fn banner(c: &Circuit) -> String {
    format!(
        "/* Generated by pcroot: {} nodes, {} variables, transform {}. Do not edit. */\n",
        c.node_count(),
        c.num_vars(),
        c.transform().name()
    )
}

pub fn emit_header(c: &Circuit, opts: &CodegenOptions) -> Result<String> {
    validate(c, opts)?;
    let p = &opts.symbol_prefix;
    let guard = format!("{}_H", p.to_ascii_uppercase());
    let ty = opts.precision.name();
    let mut out = banner(c);
    let _ = writeln!(out, "#ifndef {guard}\n#define {guard}\n");
    let _ = writeln!(out, "#define {p}_NUM_VARS {}", c.num_vars());
    let _ = writeln!(out, "#define {p}_NUM_NODES {}", c.node_count());
    let _ = writeln!(out, "#define {p}_ROOT_N {}", c.transform().root_index());
    if let TransformMeta::Scaled(s) = c.transform() {
        let _ = writeln!(out, "#define {p}_SCALE {}", CType::Double.literal(s));
    }
    if let Some(l) = opts.log_p_min {
        let _ = writeln!(
            out,
            "#define {p}_PMIN_LOG10 {}",
            CType::Double.literal(l / std::f64::consts::LN_10)
        );
    }
    let _ = writeln!(out, "#define {p}_MARGINALIZED {MARGINALIZED}u\n");
    let _ = writeln!(out, "{ty} {p}_eval(const unsigned char* evidence);");
    if opts.emit_recovery {
        let _ = writeln!(out, "double {p}_recover(double raw);");
    }
    let _ = writeln!(out, "\n#endif /* {guard} */");
    Ok(out)
}

pub fn emit_source(c: &Circuit, opts: &CodegenOptions) -> Result<String> {
    validate(c, opts)?;
    let p = &opts.symbol_prefix;
    let ct = opts.precision;
    let ty = ct.name();
    let rounding = Precision::gradual(ct.format());

    let mut out = banner(c);
    out.push_str("#include <math.h>\n\n#pragma STDC FP_CONTRACT OFF\n\n");

    let weights: Vec<f64> = c.weights().map(|w| rounding.round(w)).collect();
    let _ = writeln!(
        out,
        "static const {ty} {p}_weights[{}] = {{",
        weights.len().max(1)
    );
    if weights.is_empty() {
        let _ = writeln!(out, "    {}", ct.literal(0.0));
    }
    for chunk in weights.chunks(4) {
        let line: Vec<String> = chunk.iter().map(|&w| ct.literal(w)).collect();
        let _ = writeln!(out, "    {},", line.join(", "));
    }
    out.push_str("};\n\n");

    let one = ct.literal(1.0);
    let zero = ct.literal(0.0);
    let _ = writeln!(out, "{ty} {p}_eval(const unsigned char* evidence)\n{{");
    let _ = writeln!(out, "    const {ty}* w = {p}_weights;");
    let mut w_index = 0;
    for (id, node) in c.nodes().iter().enumerate() {
        let _ = write!(out, "    const {ty} n{id} = ");
        match node {
            Node::Indicator { var, val } => {
                let _ = write!(
                    out,
                    "(evidence[{var}] == {MARGINALIZED}u || evidence[{var}] == {val}u) ? {one} : {zero}"
                );
            }
            Node::Product { children } => {
                let terms: Vec<String> = children.iter().map(|ch| format!("n{ch}")).collect();
                out.push_str(&terms.join(" * "));
            }
            Node::Sum { children, .. } => {
                let terms: Vec<String> = children
                    .iter()
                    .map(|ch| {
                        let t = format!("w[{w_index}] * n{ch}");
                        w_index += 1;
                        t
                    })
                    .collect();
                out.push_str(&terms.join(" + "));
            }
        }
        out.push_str(";\n");
    }
    let _ = writeln!(out, "    return n{};\n}}", c.root());

    if opts.emit_recovery {
        let _ = writeln!(out, "\ndouble {p}_recover(double raw)\n{{");
        match c.transform() {
            TransformMeta::None => out.push_str("    return raw;\n"),
            TransformMeta::NthRoot(n) => {
                out.push_str("    if (raw <= 0.0) {\n        return raw;\n    }\n");
                let _ = writeln!(out, "    return exp({}.0 * log(raw));", n);
            }
            TransformMeta::Scaled(s) => {
                out.push_str("    if (raw <= 0.0) {\n        return raw;\n    }\n");
                let _ = writeln!(
                    out,
                    "    return exp(log(raw) - {}.0 * log({}));",
                    c.num_vars(),
                    CType::Double.literal(s)
                );
            }
        }
        out.push_str("}\n");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;

    fn coin(w: f64) -> Circuit {
        let mut b = CircuitBuilder::new();
        let h = b.indicator(0, 0);
        let t = b.indicator(0, 1);
        let s = b.sum(vec![h, t], vec![w, 1.0 - w]);
        b.finish(vec![2], s).unwrap()
    }

    #[test]
    fn one_statement_per_node() {
        let c = coin(0.3);
        let src = emit_source(&c, &CodegenOptions::new(CType::Float, "pc")).unwrap();
        let stmts = src
            .lines()
            .filter(|l| l.trim_start().starts_with("const float n"))
            .count();
        assert_eq!(stmts, c.node_count());
        assert!(src.contains("float pc_eval(const unsigned char* evidence)"));
        assert!(!src.contains("malloc"));
    }

    #[test]
    fn rejects_bad_prefix_and_half() {
        let c = coin(0.3);
        for bad in ["1pc", "p-c", "", "float"] {
            assert!(emit_source(&c, &CodegenOptions::new(CType::Float, bad)).is_err());
        }
        assert!(CType::try_from(Format::Binary16).is_err());
    }

    #[test]
    fn rejects_subnormal_weights() {
        let c = coin(1e-40);
        assert!(matches!(
            emit_source(&c, &CodegenOptions::new(CType::Float, "pc")),
            Err(Error::Codegen(_))
        ));
        assert!(emit_source(&c, &CodegenOptions::new(CType::Double, "pc")).is_ok());
    }

    #[test]
    fn header_constants() {
        let c = coin(0.3);
        let mut opts = CodegenOptions::new(CType::Double, "model");
        opts.emit_recovery = true;
        let h = emit_header(&c, &opts).unwrap();
        assert!(h.contains("#define model_NUM_VARS 1"));
        assert!(h.contains("#define model_ROOT_N 1"));
        assert!(h.contains("double model_recover(double raw);"));
        assert!(h.contains("double model_eval(const unsigned char* evidence);"));
    }
}
