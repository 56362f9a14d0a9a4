//! Classification toolkit for anti-polynomial vector fields
//! `dz/dt = conj(P(z))` with `P` monic and centred.
//!
//! The combinatorial side ([`nc_tree`], [`counting`]) is exact; the
//! analytic side ([`vector_field`], [`invariants`], [`realization`],
//! [`heteroclinic`]) is generic over the floating-point scalar through
//! [`scalar::Scalar`], with `f64` aliases exported at the crate root.

pub mod counting;
pub mod heteroclinic;
pub mod invariants;
pub mod nc_tree;
pub mod realization;
pub mod sampling;
pub mod scalar;
pub mod vector_field;

pub use heteroclinic::{HeteroInvariant, TernaryTree};
pub use invariants::{InvariantPair, PairClassification, ZoneCensus};
pub use nc_tree::{Edge, NcTree, SepalDescriptor};
pub use scalar::Scalar;
pub use vector_field::{AntiPolyField, DirectionClass, TraceConfig, TracedSeparatrix};

/// `f64` instantiations of the analytic core.
pub type Field64 = AntiPolyField<f64>;
pub type Field32 = AntiPolyField<f32>;
pub type InvariantPair64 = InvariantPair<f64>;
