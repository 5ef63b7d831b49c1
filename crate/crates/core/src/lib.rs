//! Homogeneous CR geometry in dimension three: structure constants of contact
//! Lie groups, Tanaka-Webster invariants of left-invariant pseudohermitian
//! structures, and the torsion flow with its entropy functionals reduced to ODEs.

pub mod closed_form;
pub mod entropy;
pub mod error;
pub mod flow;
pub mod lie_algebra;
pub mod presets;
pub mod pseudohermitian;
pub mod solver;

pub use error::{Error, Result};
pub use flow::{FlowKind, FlowState};
pub use lie_algebra::{NormalizedContactData, StructureConstants};
pub use pseudohermitian::{CRParameters, PseudohermitianInvariants};
pub use solver::{integrate, IntegratorOptions, TerminalEvent, Trajectory};
