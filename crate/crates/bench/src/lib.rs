//! Shared fixtures for the kernel benchmarks.

use std::sync::Arc;

use ym_core::ym::{random_constrained_state, GridState};
use ym_core::{Algebra, AlgebraSpec, SpectralContext, TorusGrid};

pub fn context(n: usize, dealias: bool) -> Arc<SpectralContext> {
    let grid = TorusGrid::standard(n).expect("power-of-two grid");
    SpectralContext::new(grid, Algebra::shared(AlgebraSpec::SU2), dealias)
}

/// Constrained su(2) data of amplitude 1e-2 on an N×N grid.
pub fn state(n: usize) -> GridState {
    random_constrained_state(&context(n, true), 1, 1e-2).expect("constrained data")
}
