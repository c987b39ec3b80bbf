//! Yang-Mills physics: curvature, constraints, energy, gauge action and the
//! right-hand sides of the evolution system.

pub mod assemble;
pub mod data;
pub mod grid;

pub use assemble::{assemble_rhs, curvature, data_from_potential, gammas, ym4_rhs, ymf2_rhs, Jet};
pub use data::{random_constrained_state, random_lorenz_state, random_smooth_field};
pub use grid::{
    constraint_residuals, energy, gauge_transform, gauss_field, project_gauss_data, rebase_state,
    state_from_potential, Constraints, DiagnosticsRecord, GaugeField, GridState, Projection,
};
