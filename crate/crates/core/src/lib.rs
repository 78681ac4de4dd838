//! Combinatorial engine for a hexagon/triangle tile pair on the
//! trihexagonal lattice: matching rules, forcing search, substitution
//! hierarchy, and the checks built on them.

pub mod lattice;
pub mod par;
pub mod patch;
pub mod rules;
pub mod forcing;
pub mod hierarchy;
pub mod analysis;
pub mod render;
pub mod bundle;

pub use lattice::{CellIndex, CellKind, Isometry, VertexId};
pub use patch::{Patch, PlacedTile};
pub use rules::{OrientedTile, RuleSet, Shape, TipLabel};
