//! Exact ReLU networks that generate every tree within a bounded edit distance of a
//! rooted ordered labeled tree.

#![allow(clippy::needless_range_loop)]

pub mod delete;
pub mod edit;
pub mod enumerate;
pub mod generative;
pub mod insert;
pub mod locate;
pub mod oracle;
pub mod relu;
pub mod subst;
pub mod tree;
pub mod unified;

pub use relu::{NetBuilder, ReluNetwork};
pub use tree::{EulerString, LabeledTree};
