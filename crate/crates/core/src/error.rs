use thiserror::Error;

use crate::circuit::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: node {node} references child {child} which does not precede it")]
    Topology {
        line: usize,
        node: NodeId,
        child: NodeId,
    },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid Bayesian network: {0}")]
    InvalidNetwork(String),

    #[error("cycle detected in parent graph involving `{0}`")]
    Cycle(String),

    #[error("CPT for `{var}` row {row} sums to {sum}, expected 1")]
    RowSum { var: String, row: usize, sum: f64 },

    #[error("variable ordering is not topological: {0}")]
    BadOrder(String),

    #[error("state space of {0} assignments exceeds the enumeration guard")]
    StateGuard(u128),

    #[error("invalid evidence: {0}")]
    Evidence(String),

    #[error("circuit is not deterministic: {0}")]
    NotDeterministic(String),

    #[error("circuit is not decomposable: {0}")]
    NotDecomposable(String),

    #[error("sum node {0} has no positive weight")]
    AllZeroWeights(NodeId),

    #[error("circuit output is identically zero")]
    ZeroCircuit,

    #[error("circuit already carries a {0} transform; recover before transforming again")]
    AlreadyTransformed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("evidence is inconsistent with the circuit support")]
    Unsatisfiable,

    #[error("code generation: {0}")]
    Codegen(String),
}

impl Error {
    /// True for refusals caused by the numeric/structural contract rather
    /// than by malformed input.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::NotDeterministic(_)
                | Error::NotDecomposable(_)
                | Error::AllZeroWeights(_)
                | Error::ZeroCircuit
                | Error::AlreadyTransformed(_)
                | Error::Unsatisfiable
                | Error::StateGuard(_)
        )
    }
}
