//! Empirical constants for the multilinear space-time estimates on grids.
//!
//! Inputs are random free waves u(t) = Re Σ_k p̂(k) e^{i(k·x + |k|t)}; their
//! X-norm is replaced by the Ĥ^{σ,r} size of (u, Λ^{-1}∂ₜu) at t = 0, since
//! the modulation factor of a cut-off free wave is the same for every input.
//! The output is sampled on [0, 2π] under a sin² window, transformed in time
//! and measured in ‖⟨ξ⟩^σ⟨|τ|−|ξ|⟩^β Ẽ‖_{L^{r'}}. Trials scale their
//! frequency shells with N, so the ratio between grids N and 2N exposes any
//! power-law loss.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::BoundReport;
use crate::algebra::{Algebra, AlgebraSpec};
use crate::error::{Result, YmError};
use crate::field::{japanese, Field, ProductKind, SpacetimePair, Symbol};
use crate::nullforms::{gamma1, q0, q12_values, q_ab};
use crate::spectral::{discrete_norm, GridField, SpectralContext, TorusGrid};

type Pair = SpacetimePair<GridField>;

pub const GROWTH_THRESHOLD: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ProductMode {
    /// Lie brackets, as in the equations.
    Commutator,
    /// Products of basis coefficients.
    Ordinary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct BilinearConfig {
    pub r: f64,
    pub s: f64,
    pub l: f64,
    /// The "+" in the indices b = 1/r + ε and b − 1 + ε.
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    pub mode: ProductMode,
    pub algebra: AlgebraSpec,
    /// Time samples per grid point along one axis.
    pub time_samples_per_n: usize,
    /// All inputs along one Lie direction.
    pub abelian: bool,
}

impl Default for BilinearConfig {
    fn default() -> Self {
        BilinearConfig {
            r: 2.0,
            s: 0.8,
            l: -0.2,
            epsilon: 0.01,
            trials: 4,
            seed: 0,
            mode: ProductMode::Commutator,
            algebra: AlgebraSpec::SU2,
            time_samples_per_n: 4,
            abelian: false,
        }
    }
}

impl BilinearConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 1.0 && self.r <= 2.0) {
            return Err(YmError::InvalidParameter(format!("r = {} must lie in (1, 2]", self.r)));
        }
        if !(self.s.is_finite() && self.l.is_finite() && self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(YmError::InvalidParameter("s, l and ε must be finite, ε ≥ 0".into()));
        }
        if self.trials == 0 || self.time_samples_per_n < 2 {
            return Err(YmError::InvalidParameter("need at least one trial and two time samples per N".into()));
        }
        Ok(())
    }

    fn b(&self) -> f64 {
        1.0 / self.r + self.epsilon
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    A,
    F,
}

/// Input slots and whether the output is measured at s − 1 (A equation) or
/// l − 1 (F equation).
fn signature(id: u32) -> Result<(&'static [Slot], Slot)> {
    use Slot::*;
    Ok(match id {
        21 | 22 | 26 | 27 | 28 => (&[A, A], A),
        23 => (&[A, F], F),
        24 | 25 | 31 => (&[A, A], F),
        29 => (&[F, F], A),
        30 => (&[A, F], F),
        32 | 33 => (&[F, A, A], A),
        34 => (&[A, A, A, A], A),
        35 => (&[A, A, A], A),
        36 => (&[A, A, F], F),
        37 => (&[A, A, A, A], F),
        _ => return Err(YmError::UnknownEstimate(id)),
    })
}

pub const ESTIMATE_IDS: std::ops::RangeInclusive<u32> = 21..=37;

fn lam(p: &Pair, s: f64) -> Pair {
    p.apply(&Symbol::lam(s))
}

/// The time derivative as a value-only pair.
fn dt_value(p: &Pair) -> Result<GridField> {
    Ok(p.dt("estimate")?.clone())
}

/// ∂ₜ(uv) for a product p.
fn product_pair(u: &Pair, v: &Pair, p: ProductKind) -> Result<Pair> {
    let value = u.value.product(&v.value, p)?;
    let d = u.dt("estimate")?.product(&v.value, p)?.add(&u.value.product(v.dt("estimate")?, p)?);
    Ok(Pair::new(value, d))
}

/// The Q ∈ {Q₁₂, Q₀₁, Q₀₂} family.
fn q_family(u: &Pair, v: &Pair, p: ProductKind) -> Result<Vec<GridField>> {
    Ok(vec![q12_values(&u.value, &v.value, p)?, q_ab(0, 1, u, v, p)?, q_ab(0, 2, u, v, p)?])
}

/// The expression(s) of an estimate at one instant; several outputs are
/// measured separately and the largest ratio counts.
fn evaluate(id: u32, x: &[Pair], p: ProductKind) -> Result<Vec<GridField>> {
    let l1 = |q: &Pair| lam(q, -1.0);
    let l2 = |q: &Pair| lam(q, -2.0);
    Ok(match id {
        21 => q_family(&l1(&x[0]), &x[1], p)?,
        22 => vec![q12_values(&l1(&x[0]).value, &dt_value(&l1(&x[1]))?, p)?],
        23 => q_family(&l1(&x[0]), &x[1], p)?,
        24 => q_family(&x[0], &x[1], p)?,
        25 => vec![q0(&x[0], &x[1], p)?],
        26 => {
            let v = x[1].apply(&Symbol::d(1));
            vec![gamma1(&x[0], &v, p)?]
        }
        27 => vec![x[0].value.product(&dt_value(&l2(&x[1]))?, p)?],
        28 => vec![l2(&x[0]).value.product(&dt_value(&x[1])?, p)?],
        29 => vec![l1(&x[0]).value.product(&dt_value(&l1(&x[1]))?, p)?],
        30 => vec![l2(&x[0]).value.product(&dt_value(&x[1])?, p)?],
        31 => vec![l1(&x[0]).value.product(&dt_value(&x[1])?, p)?],
        32 => {
            let aa = l1(&product_pair(&x[1], &x[2], p)?);
            vec![l1(&x[0]).value.product(&dt_value(&aa)?, p)?]
        }
        33 => {
            let aa = l1(&product_pair(&x[1], &x[2], p)?);
            vec![dt_value(&l1(&x[0]))?.product(&aa.value, p)?]
        }
        34 => {
            let uv = l1(&product_pair(&x[0], &x[1], p)?);
            let wz = l1(&product_pair(&x[2], &x[3], p)?);
            vec![uv.value.product(&dt_value(&wz)?, p)?]
        }
        35 | 36 => vec![x[0].value.product(&x[1].value.product(&x[2].value, p)?, p)?],
        37 => {
            let inner = x[2].value.product(&x[3].value, p)?;
            vec![x[0].value.product(&x[1].value.product(&inner, p)?, p)?]
        }
        _ => return Err(YmError::UnknownEstimate(id)),
    })
}

/// A free wave given by its "+" spectrum p̂, component-major.
struct FreeWave {
    ctx: Arc<SpectralContext>,
    plus: Vec<Complex64>,
}

impl FreeWave {
    fn at(&self, t: f64) -> Result<Pair> {
        let np = self.ctx.grid().points();
        let (mut v, mut d) = (self.plus.clone(), self.plus.clone());
        for (i, (a, b)) in v.iter_mut().zip(d.iter_mut()).enumerate() {
            let w = norm2(self.ctx.xi(i % np));
            let ph = Complex64::from_polar(1.0, w * t);
            *a *= ph;
            *b *= Complex64::new(0.0, w) * ph;
        }
        Ok(Pair::new(GridField::from_coefficients(self.ctx.clone(), v)?, GridField::from_coefficients(self.ctx.clone(), d)?))
    }

    fn norm(&self, sigma: f64, r: f64) -> Result<f64> {
        let p = self.at(0.0)?;
        Ok(discrete_norm(&p.value, sigma, r)? + discrete_norm(&dt_value(&lam(&p, -1.0))?, sigma, r)?)
    }
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Shell parameters of one trial, fractions of the admissible band.
#[derive(Clone, Copy, Debug)]
struct Shell {
    center: f64,
    width: f64,
}

fn draw_shells(cfg: &BilinearConfig, id: u32, trial: usize, count: usize) -> Vec<(Shell, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((id as u64) << 32) | trial as u64);
    (0..count)
        .map(|_| {
            let center = rng.random_range(0.1..0.9);
            let width = rng.random_range(0.03..0.3);
            (Shell { center, width }, rng.random())
        })
        .collect()
}

fn make_wave(ctx: &Arc<SpectralContext>, band: f64, shell: Shell, seed: u64, direction: Option<&[f64]>) -> FreeWave {
    let np = ctx.grid().points();
    let dim = ctx.dim();
    let unit = 2.0 * PI / ctx.grid().l;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plus = vec![Complex64::new(0.0, 0.0); dim * np];
    let (k0, w) = (shell.center * band, (shell.width * band).max(0.5));
    for i in 0..np {
        let xi = ctx.xi(i);
        let ki = [xi[0] / unit, xi[1] / unit];
        if ki[0].abs() > band || ki[1].abs() > band {
            continue;
        }
        let env = (-(norm2(ki) - k0).powi(2) / (2.0 * w * w)).exp();
        let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * env;
        for a in 0..dim {
            plus[a * np + i] = match direction {
                Some(d) => z * d[a],
                None => Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * env,
            };
        }
    }
    FreeWave { ctx: ctx.clone(), plus }
}

/// ‖⟨ξ⟩^σ⟨|τ|−|ξ|⟩^β Ẽ‖_{L^{r'}} from spectra sampled at t_j = jT/M.
fn spacetime_norm(ctx: &SpectralContext, series: &[Arc<Vec<Complex64>>], period: f64, sigma: f64, beta: f64, r: f64) -> f64 {
    let m = series.len();
    let np = ctx.grid().points();
    let dim = series[0].len() / np;
    let l = ctx.grid().l;
    let rp = r / (r - 1.0);
    let (dt, dtau) = (period / m as f64, 2.0 * PI / period);
    let scale = l * l / (2.0 * PI) * dt;
    let cell = (2.0 * PI / l).powi(2) * dtau;
    let fft = FftPlanner::new().plan_fft_forward(m);
    let window: Vec<f64> = (0..m).map(|j| (PI * j as f64 / m as f64).sin().powi(2)).collect();
    let total: f64 = (0..np)
        .into_par_iter()
        .map(|k| {
            let xi = ctx.xi(k);
            let mut mag = vec![0.0; m];
            let mut col = vec![Complex64::new(0.0, 0.0); m];
            for a in 0..dim {
                for j in 0..m {
                    col[j] = series[j][a * np + k] * window[j];
                }
                if col.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                    continue;
                }
                fft.process(&mut col);
                for j in 0..m {
                    mag[j] += col[j].norm_sqr();
                }
            }
            let wx = japanese(xi).powf(sigma);
            (0..m)
                .map(|j| {
                    let tau = dtau * if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
                    let wt = (1.0 + (tau.abs() - norm2(xi)).powi(2)).sqrt().powf(beta);
                    (wx * wt * scale * mag[j].sqrt()).powf(rp)
                })
                .sum::<f64>()
        })
        .sum();
    (total * cell).powf(1.0 / rp)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BilinearStudy {
    pub id: u32,
    pub n: usize,
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
    pub argmax_trial: usize,
}

/// Sup over trials of output norm over the product of input norms on an
/// N-grid. Inputs occupy |k_i| ≤ N/(2m) for an m-linear term, so every
/// product is exact on the grid.
pub fn bilinear_sup(id: u32, n: usize, cfg: &BilinearConfig) -> Result<BilinearStudy> {
    cfg.validate()?;
    let (slots, target) = signature(id)?;
    let ctx = SpectralContext::new(TorusGrid::standard(n)?, Algebra::shared(cfg.algebra), false);
    let band = (n / (2 * slots.len())) as f64 - 1.0;
    if band < 1.0 {
        return Err(YmError::InvalidParameter(format!("N = {n} too small for a {}-linear term", slots.len())));
    }
    let p = match cfg.mode {
        ProductMode::Commutator => ProductKind::Bracket,
        ProductMode::Ordinary => ProductKind::Componentwise,
    };
    let b = cfg.b();
    let (sigma, beta) = (if target == Slot::A { cfg.s - 1.0 } else { cfg.l - 1.0 }, b - 1.0 + cfg.epsilon);
    let m = cfg.time_samples_per_n * n;
    let period = 2.0 * PI;
    let direction: Option<Vec<f64>> = cfg.abelian.then(|| {
        let mut d = vec![0.0; ctx.dim()];
        d[0] = 1.0;
        d
    });
    let mut ratios = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let shells = draw_shells(cfg, id, trial, slots.len());
        let waves: Vec<FreeWave> = shells.iter().map(|&(sh, seed)| make_wave(&ctx, band, sh, seed, direction.as_deref())).collect();
        let mut input = 1.0;
        for (w, slot) in waves.iter().zip(slots) {
            input *= w.norm(if *slot == Slot::A { cfg.s } else { cfg.l }, cfg.r)?;
        }
        let series: Vec<Vec<Arc<Vec<Complex64>>>> = (0..m)
            .into_par_iter()
            .map(|j| {
                let t = period * j as f64 / m as f64;
                let x: Vec<Pair> = waves.iter().map(|w| w.at(t)).collect::<Result<_>>()?;
                Ok(evaluate(id, &x, p)?.iter().map(|f| f.spectrum()).collect())
            })
            .collect::<Result<_>>()?;
        let outputs = series[0].len();
        let mut best: f64 = 0.0;
        for o in 0..outputs {
            let column: Vec<Arc<Vec<Complex64>>> = series.iter().map(|s| s[o].clone()).collect();
            best = best.max(spacetime_norm(&ctx, &column, period, sigma, beta, cfg.r));
        }
        let ratio = if input > 0.0 { best / input } else { 0.0 };
        if !ratio.is_finite() {
            return Err(YmError::NumericalAbort { time: 0.0 });
        }
        ratios.push(ratio);
    }
    let (argmax_trial, sup_ratio) =
        ratios.iter().enumerate().fold((0, 0.0), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    Ok(BilinearStudy { id, n, ratios, sup_ratio, argmax_trial })
}

/// Growth of the empirical constant from N to 2N; passes at ≤ 2.
pub fn empirical_bilinear_constant(id: u32, n: usize, cfg: &BilinearConfig) -> Result<BoundReport> {
    let coarse = bilinear_sup(id, n, cfg)?;
    let fine = bilinear_sup(id, 2 * n, cfg)?;
    let growth = if coarse.sup_ratio > 0.0 {
        fine.sup_ratio / coarse.sup_ratio
    } else if fine.sup_ratio == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let point = BTreeMap::from([
        ("n".to_string(), n as f64),
        ("supN".to_string(), coarse.sup_ratio),
        ("sup2N".to_string(), fine.sup_ratio),
        ("r".to_string(), cfg.r),
        ("s".to_string(), cfg.s),
        ("l".to_string(), cfg.l),
    ]);
    Ok(BoundReport::new(format!("estimate{id}"), cfg.trials, growth, point, GROWTH_THRESHOLD, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> BilinearConfig {
        BilinearConfig { trials: 1, time_samples_per_n: 2, ..Default::default() }
    }

    #[test]
    fn abelian_inputs_annihilate_commutator_terms() {
        for id in [21, 24, 25, 35, 37] {
            let st = bilinear_sup(id, 16, &BilinearConfig { abelian: true, ..quick() }).unwrap();
            assert!(st.sup_ratio < 1e-12, "{id}: {st:?}");
        }
        let st = bilinear_sup(21, 16, &quick()).unwrap();
        assert!(st.sup_ratio > 1e-6, "{st:?}");
    }

    #[test]
    fn q0_vanishes_on_a_single_travelling_wave() {
        let ctx = SpectralContext::new(TorusGrid::standard(16).unwrap(), Algebra::shared(AlgebraSpec::SU2), false);
        let np = 256;
        let mut plus = vec![Complex64::new(0.0, 0.0); 3 * np];
        let k = (0..np).find(|&i| ctx.xi(i) == [2.0, 1.0]).unwrap();
        plus[k] = Complex64::new(0.7, 0.2);
        plus[np + k] = Complex64::new(-0.1, 0.4);
        let u = FreeWave { ctx: ctx.clone(), plus }.at(0.3).unwrap();
        let q = q0(&u, &u, ProductKind::Componentwise).unwrap();
        assert!(q.sup_norm() < 1e-12, "{}", q.sup_norm());
    }

    #[test]
    fn free_wave_solves_the_wave_equation() {
        let ctx = SpectralContext::new(TorusGrid::standard(16).unwrap(), Algebra::shared(AlgebraSpec::SO3), false);
        let w = make_wave(&ctx, 3.0, Shell { center: 0.5, width: 0.2 }, 3, None);
        let h = 1e-4;
        let (a, b, c) = (w.at(0.5 - h).unwrap(), w.at(0.5).unwrap(), w.at(0.5 + h).unwrap());
        let utt = a.value.add(&c.value).sub(&b.value.scale(2.0)).scale(1.0 / (h * h));
        let lap = b.value.apply(&Symbol::dpow(2.0)).scale(-1.0);
        let scale = b.value.sup_norm() * 9.0;
        assert!(utt.sub(&lap).sup_norm() < 1e-5 * scale);
        let ut = c.value.sub(&a.value).scale(0.5 / h);
        assert!(ut.sub(b.dt("t").unwrap()).sup_norm() < 1e-6 * scale);
    }

    #[test]
    fn spacetime_norm_of_a_stationary_mode() {
        // c_0 = 1 for all t: Ẽ = 2π² at τ = 0 and π² at τ = ±1
        let ctx = SpectralContext::new(TorusGrid::standard(8).unwrap(), Algebra::shared(AlgebraSpec::SU2), false);
        let np = 64;
        let mut spec = vec![Complex64::new(0.0, 0.0); 3 * np];
        spec[0] = Complex64::new(1.0, 0.0);
        let series = vec![Arc::new(spec); 16];
        let got = spacetime_norm(&ctx, &series, 2.0 * PI, 0.0, 0.0, 2.0);
        let want = PI * PI * 6f64.sqrt();
        assert!((got / want - 1.0).abs() < 1e-12, "{got} {want}");
    }

    #[test]
    fn reports_are_deterministic_and_ids_checked() {
        let cfg = quick();
        assert_eq!(bilinear_sup(24, 16, &cfg).unwrap(), bilinear_sup(24, 16, &cfg).unwrap());
        assert!(matches!(bilinear_sup(20, 16, &cfg), Err(YmError::UnknownEstimate(20))));
        assert!(matches!(bilinear_sup(38, 16, &cfg), Err(YmError::UnknownEstimate(38))));
        for id in ESTIMATE_IDS {
            let st = bilinear_sup(id, 16, &cfg).unwrap();
            assert!(st.sup_ratio.is_finite() && st.sup_ratio > 0.0, "{id}: {st:?}");
        }
    }
}
