//! Exact LP machinery for quasi-bipartite Steiner tree instances.
//!
//! The crate solves the bidirected cut relaxation (BCR) with an exact
//! rational simplex driven by min-cut separation, decomposes the minimal
//! optimum into directed full components (an exact solution of the
//! directed component relaxation, DCR), and rounds BCR solutions into
//! integral Steiner trees by sampling Steiner centres. A brute-force
//! oracle over all full components anchors every one of these paths at
//! desk scale. All solver arithmetic is exact; there is no floating
//! point anywhere on a solution path.

pub mod bcr;
pub mod decompose;
pub mod flow;
pub mod gen;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod sample;
pub mod simplex;
pub mod stp;

pub use model::{ArcVector, ComponentVector, Digraph, DirectedFullComponent, Instance, Rat};
