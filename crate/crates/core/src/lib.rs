//! Quantitative predicate transformers for a nondeterministic guarded command
//! language.

pub mod annotate;
pub mod gen;
pub mod infoflow;
pub mod lattice;
pub mod linear;
pub mod oracle;
pub mod parser;
pub mod proofs;
pub mod props;
pub mod syntax;
pub mod transformers;
