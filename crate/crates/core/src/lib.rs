//! Numerical laboratory for reaction-diffusion fronts in periodic media with
//! a hostile exterior: principal eigenvalues of periodic elliptic operators,
//! penalization ladders, minimal steady states and pulsating front speeds.

pub mod eigen;
pub mod error;
pub mod evolution;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod operator;
pub mod output;
pub mod problem;
pub mod scenario;
pub mod sparse;
pub mod speeds;

pub use eigen::{component_eigenvalues, eigen_ladder, principal_eigenpair, rayleigh_check, EigenResult};
pub use error::{Error, Result};
pub use fields::{DiffusionField, LadderSchedule, ReactionKind, ReactionLadder, ReactionModel};
pub use geometry::{analyze_components, rasterize, DomainMask, DomainSpec, Primitive};
pub use grid::{Grid, Lattice};
pub use operator::{assemble, BoundaryMode, DriftScheme, OperatorMatrix};
pub use problem::{CellProblem, Mode};
