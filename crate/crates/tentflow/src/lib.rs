//! tentflow: parabolic tent-space norms, heat-flow operators, and a
//! small-data mild solver for the variable-density incompressible
//! Navier-Stokes equations on the periodic torus, together with an empirical
//! verification harness for the operator bounds and embeddings the solver
//! relies on.
//!
//! Layout:
//! - [`field`] / [`timegrid`]: grids, scalar/vector fields with paired
//!   physical/spectral views, time grids with quadrature weights.
//! - [`heat`]: heat semigroup, Riesz transforms, Leray projector, Duhamel
//!   integrals, maximal regularity operator.
//! - [`norms`]: Carleson-type tent norms over ball families, heat-flow Besov
//!   and Sobolev norms, and the composite solution-space functional.
//! - [`solver`]: mild-formulation Picard solver with semi-Lagrangian density
//!   transport, plus a pseudo-spectral reference solver.
//! - [`verify`]: seeded ensembles and inequality campaigns with refinement
//!   verdicts.
//! - [`presets`]: the standard named test fields.

// `!(x > 0.0)`-style guards are used on purpose: unlike `x <= 0.0` they
// also reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fft;
pub mod field;
pub mod heat;
pub mod norms;
pub mod presets;
pub mod solver;
pub mod timegrid;
pub mod verify;

pub use error::{Error, Result};
pub use field::{
    dealias, dealias_vector, resample, FieldBundle, FieldParts, PeriodicGrid, ScalarField,
    VectorField,
};
pub use timegrid::{SpaceTimeField, TimeGrid};
