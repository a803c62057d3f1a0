//! Stochastic double-pushout graph rewriting.
//!
//! The crate is organised bottom-up:
//! - [`graph`]: colored multigraphs, monomorphisms, canonical forms
//! - [`dpo`]: pushouts, pushout complements, rule application and composition
//! - [`algebra`]: formal sums of rules with the rule-algebra product
//! - [`state`]: graph states, the canonical representation, observables
//! - [`moments`]: adjoint analysis, jump-closure checks, EMGF operators
//! - [`bisim`]: discrete moment bisimulation, reaction networks, SSA
//! - [`model`]: the JSON model format tying everything together

pub mod algebra;
pub mod bisim;
pub mod dpo;
pub mod graph;
pub mod model;
pub mod moments;
pub mod poly;
pub mod rational;
pub mod sampler;
pub mod state;
pub mod validate;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("morphism is not a monomorphism: {0}")]
    NotMono(String),
    #[error("malformed match: {0}")]
    MalformedMatch(String),
    #[error("term budget exceeded: {what} produced more than {budget} terms")]
    BudgetExceeded { what: String, budget: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error("closure not certified: {0}")]
    NotClosed(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Term budget for products and representations, overridable by `RASIR_TERM_BUDGET`.
pub fn term_budget() -> usize {
    std::env::var("RASIR_TERM_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(100_000)
}
