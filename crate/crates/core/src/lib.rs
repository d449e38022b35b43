//! Construction and auditing of hierarchically hyperbolic structures on finite models.
//!
//! The crate covers index-set lattices ([`lattice`]), index maps ([`hiero`]),
//! finite metric models and their auditor ([`space`], [`model`], [`audit`],
//! [`regions`], [`probe`]), direct products ([`product`]), trees of such models
//! ([`tree`]) and graph products ([`graph`]). [`fixtures`] ships the desk-scale
//! families used by the tests and the command line tool.

pub mod audit;
pub mod fixtures;
pub mod graph;
pub mod hiero;
pub mod lattice;
pub mod model;
pub mod probe;
pub mod product;
pub mod regions;
pub mod report;
pub mod space;
pub mod tree;

pub use hiero::IndexMap;
pub use lattice::{IndexLattice, LatticeError, Meet, RelationKind};
pub use report::{Rule, ValidationReport, Violation};
pub use space::{CoarseConstants, CoarseMap, FiniteSpace};
