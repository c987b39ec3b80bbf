//! Temporal and spatial self-convergence of the second-order evolution on
//! analytic data.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{band_limit_state, step_second_order};
use crate::algebra::{Algebra, AlgebraSpec};
use crate::error::{Result, YmError};
use crate::field::Field;
use crate::spectral::{GridField, SpectralContext, TorusGrid};
use crate::ym::{state_from_potential, GridState};

/// cosh ρ of the analytic profile 1/(cosh ρ − cos x); Fourier tails decay
/// like e^{−ρ|k|}.
pub const ANALYTIC_COSH: f64 = 1.5;

/// Potential data built from products of 1/(cosh ρ − cos(x_i + φ_i)) with
/// random phases and Lie directions, sup norm at most `scale`, Lorenz gauge
/// at t = 0.
pub fn analytic_state(ctx: &Arc<SpectralContext>, seed: u64, scale: f64) -> Result<GridState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = ctx.dim();
    let peak = (1.0 / (ANALYTIC_COSH - 1.0)).powi(2);
    let mut field = || {
        let coef: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = coef.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-12);
        let (p1, p2): (f64, f64) = (rng.random_range(0.0..6.3), rng.random_range(0.0..6.3));
        GridField::from_fn(ctx.clone(), move |a, x| {
            let g = 1.0 / ((ANALYTIC_COSH - (x[0] + p1).cos()) * (ANALYTIC_COSH - (x[1] + p2).cos()));
            scale * coef[a] / norm * g / peak
        })
    };
    let a = [field(), field(), field()];
    let adot1 = field();
    let adot2 = field();
    let adot0 = a[1].deriv(1).add(&a[2].deriv(2));
    Ok(band_limit_state(&state_from_potential(a, [adot0, adot1, adot2])?))
}

fn run(s: &GridState, dt: f64, t_end: f64) -> Result<GridState> {
    let n = (t_end / dt).round() as usize;
    let mut s = s.clone();
    for _ in 0..n {
        s = step_second_order(&s, dt)?;
    }
    Ok(s)
}

/// Sup-norm difference of all twelve components, sampled on the coarser of
/// the two grids.
pub fn state_distance(x: &GridState, y: &GridState) -> Result<f64> {
    let (cx, cy) = (x.components()?, y.components()?);
    let (nx, ny) = (cx[0].grid().n, cy[0].grid().n);
    let (coarse, fine, nc, nf) = if nx <= ny { (&cx, &cy, nx, ny) } else { (&cy, &cx, ny, nx) };
    if nf % nc != 0 {
        return Err(YmError::GridMismatch(format!("N = {nc} does not divide N = {nf}")));
    }
    let stride = nf / nc;
    let dim = coarse[0].context().dim();
    let mut sup: f64 = 0.0;
    for (u, v) in coarse.iter().zip(fine.iter()) {
        for a in 0..dim {
            let (uc, vc) = (u.component(a), v.component(a));
            for j2 in 0..nc {
                for j1 in 0..nc {
                    let d = uc[j2 * nc + j1] - vc[(j2 * stride) * nf + j1 * stride];
                    sup = sup.max(d.abs());
                }
            }
        }
    }
    Ok(sup)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TemporalStudy {
    pub n: usize,
    pub t_end: f64,
    pub dts: Vec<f64>,
    /// ‖u_{dt_k} − u_{dt_{k+1}}‖
    pub differences: Vec<f64>,
    /// log₂ of successive difference ratios.
    pub orders: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SpatialStudy {
    pub ns: Vec<usize>,
    pub dt: f64,
    pub t_end: f64,
    /// ‖u_{N_k} − u_{N_{k+1}}‖ on the coarser grid.
    pub differences: Vec<f64>,
    pub ratios: Vec<f64>,
}

fn context(spec: AlgebraSpec, n: usize) -> Result<Arc<SpectralContext>> {
    Ok(SpectralContext::new(TorusGrid::standard(n)?, Algebra::shared(spec), true))
}

/// Richardson study of RK4: the same data run with each dt in `dts` (halving).
pub fn temporal_study(spec: AlgebraSpec, n: usize, dts: &[f64], t_end: f64, seed: u64, scale: f64) -> Result<TemporalStudy> {
    let ctx = context(spec, n)?;
    let s0 = analytic_state(&ctx, seed, scale)?;
    let runs: Vec<GridState> = dts.iter().map(|&dt| run(&s0, dt, t_end)).collect::<Result<_>>()?;
    let differences: Vec<f64> = runs.windows(2).map(|w| state_distance(&w[0], &w[1])).collect::<Result<_>>()?;
    let orders = differences.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(TemporalStudy { n, t_end, dts: dts.to_vec(), differences, orders })
}

/// Self-convergence in N: the same analytic data sampled on each grid.
pub fn spatial_study(spec: AlgebraSpec, ns: &[usize], dt: f64, t_end: f64, seed: u64, scale: f64) -> Result<SpatialStudy> {
    let runs: Vec<GridState> = ns
        .iter()
        .map(|&n| run(&analytic_state(&context(spec, n)?, seed, scale)?, dt, t_end))
        .collect::<Result<_>>()?;
    let differences: Vec<f64> = runs.windows(2).map(|w| state_distance(&w[0], &w[1])).collect::<Result<_>>()?;
    let ratios = differences.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(SpatialStudy { ns: ns.to_vec(), dt, t_end, differences, ratios })
}
