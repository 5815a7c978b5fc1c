//! Axisymmetric electrostatics of a circular electrode on a thick substrate.
//!
//! A vertex-centred finite-volume scheme on a graded tensor mesh; face couplings
//! carry the `r`-weighted areas so the discrete operator is symmetric and exactly
//! conservative. The ideal field at the electrode rim is singular, so edge fields
//! are compared at a standardised depth below the interface.

mod banded;
mod mesh;
mod profile;
mod solver;
mod study;

pub use mesh::{AxisymMesh, MeshRule};
pub use profile::{interface_profile, FieldProfile};
pub use solver::{flux_balance, solve, FluxBalance, PotentialField};
pub use study::*;
