//! Random smooth initial data on the torus.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::{project_gauss_data, state_from_potential, GridState};
use crate::error::Result;
use crate::field::Field;
use crate::spectral::{GridField, SpectralContext};

/// Gaussian spectral envelope width, in integer wavenumbers.
pub const DEFAULT_WIDTH: f64 = 3.0;

/// A random real field with spectrum ∝ e^{−|k|²/(2w²)}, restricted to the
/// dealias band and scaled to sup norm `amplitude`.
pub fn random_smooth_field(ctx: &Arc<SpectralContext>, seed: u64, amplitude: f64, width: f64) -> Result<GridField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = ctx.grid();
    let np = grid.points();
    let dim = ctx.dim();
    let mut spec = vec![Complex64::new(0.0, 0.0); dim * np];
    for (i, c) in spec.iter_mut().enumerate() {
        let k = i % np;
        let (k1, k2) = (grid.wavenumber(k % grid.n) as f64, grid.wavenumber(k / grid.n) as f64);
        let env = (-(k1 * k1 + k2 * k2) / (2.0 * width * width)).exp();
        let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if ctx.in_band(k) && env > 1e-18 {
            *c = z * env;
        }
    }
    let u = GridField::from_coefficients(ctx.clone(), spec)?;
    let sup = u.sup_norm();
    Ok(if sup > 0.0 { u.scale(amplitude / sup) } else { u })
}

/// Potential data (a, ȧ) with ȧ₀ = ∂ⁱaᵢ, so the Lorenz gauge holds at t = 0,
/// and F-data from the data equations.
pub fn random_lorenz_state(ctx: &Arc<SpectralContext>, seed: u64, scale: f64) -> Result<GridState> {
    let f = |k: u64| random_smooth_field(ctx, seed.wrapping_mul(7919).wrapping_add(k), scale, DEFAULT_WIDTH);
    let a = [f(0)?, f(1)?, f(2)?];
    let adot1 = f(3)?;
    let adot2 = f(4)?;
    let adot0 = a[1].deriv(1).add(&a[2].deriv(2));
    state_from_potential(a, [adot0, adot1, adot2])
}

/// [`random_lorenz_state`] followed by Gauss-law projection.
pub fn random_constrained_state(ctx: &Arc<SpectralContext>, seed: u64, scale: f64) -> Result<GridState> {
    let s = random_lorenz_state(ctx, seed, scale)?;
    Ok(project_gauss_data(&s, 1e-13, 200)?.state)
}
