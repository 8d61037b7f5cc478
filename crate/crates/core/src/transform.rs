//! Uniform weight scaling and the n-th-root weight transformation.
//!
//! In a circuit where every complete-instantiation term multiplies exactly
//! `V` sum-edge weights, scaling every weight by `c` scales the output by
//! `c^V`. Replacing every weight `w` by `w^(1/n)` turns the single active
//! path product of a deterministic circuit into its n-th root, so the true
//! value comes back as `raw^n`.

use serde::{Deserialize, Serialize};

use crate::circuit::{check_structure, Circuit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformMeta {
    #[default]
    None,
    Scaled(f64),
    NthRoot(u32),
}

impl TransformMeta {
    pub fn name(&self) -> &'static str {
        match self {
            TransformMeta::None => "none",
            TransformMeta::Scaled(_) => "scaled",
            TransformMeta::NthRoot(_) => "nth_root",
        }
    }

    /// Root index (1 when not rooted).
    pub fn root_index(&self) -> u32 {
        match self {
            TransformMeta::NthRoot(n) => *n,
            _ => 1,
        }
    }
}

pub fn scale_weights(c: &Circuit, factor: f64) -> Result<Circuit> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scale factor must be positive and finite, got {factor}"
        )));
    }
    ensure_untransformed(c)?;
    let out = c.map_weights(|w| w * factor, TransformMeta::Scaled(factor));
    if let Some(w) = out.weights().find(|w| !w.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "scaled weight overflowed to {w}"
        )));
    }
    Ok(out)
}

pub fn nth_root_weights(c: &Circuit, n: u32) -> Result<Circuit> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "root index must be at least 1".into(),
        ));
    }
    ensure_untransformed(c)?;
    let report = check_structure(c);
    if !report.deterministic {
        return Err(Error::NotDeterministic(format!(
            "determinism is {:?}; the n-th root only distributes over a single active path",
            report.determinism
        )));
    }
    let inv = n as f64;
    Ok(c.map_weights(
        |w| match w {
            _ if w <= 0.0 => 0.0,
            _ if n == 1 => w,
            _ => (w.ln() / inv).exp(),
        },
        TransformMeta::NthRoot(n),
    ))
}

/// Best-effort inverse of a weight transform (`w^n` or `w / c`), used to
/// rebuild a binary64 reference circuit. Exact up to binary64 rounding.
pub fn undo_transform(c: &Circuit) -> Circuit {
    match c.transform() {
        TransformMeta::None => c.clone(),
        TransformMeta::Scaled(s) => c.map_weights(|w| w / s, TransformMeta::None),
        TransformMeta::NthRoot(n) => c.map_weights(
            |w| match w {
                _ if w <= 0.0 => 0.0,
                _ if n == 1 => w,
                _ => (w.ln() * n as f64).exp(),
            },
            TransformMeta::None,
        ),
    }
}

fn ensure_untransformed(c: &Circuit) -> Result<()> {
    match c.transform() {
        TransformMeta::None => Ok(()),
        other => Err(Error::AlreadyTransformed(other.name().into())),
    }
}

/// Natural log of the true probability given the natural log of a raw
/// transformed output.
pub fn recover_log(log_value: f64, meta: TransformMeta, num_vars: usize) -> f64 {
    if log_value == f64::NEG_INFINITY {
        return log_value;
    }
    match meta {
        TransformMeta::None => log_value,
        TransformMeta::NthRoot(n) => n as f64 * log_value,
        TransformMeta::Scaled(c) => log_value - num_vars as f64 * c.ln(),
    }
}

/// Inverts a transform on a raw output value.
pub fn recover(value: f64, meta: TransformMeta, num_vars: usize) -> f64 {
    if value <= 0.0 || meta == TransformMeta::None {
        return value;
    }
    recover_log(value.ln(), meta, num_vars).exp()
}
