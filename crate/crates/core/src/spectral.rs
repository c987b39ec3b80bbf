//! Periodic grids, discrete Fourier transforms, multipliers, dealiased
//! products and discrete Ĥ^{s,r} norms.
//!
//! A [`GridField`] holds real basis coefficients at each grid point, laid out
//! component-major as `[a][x2][x1]`. Its spectrum is computed on demand and
//! cached; multiplier outputs are born with their spectrum attached.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::algebra::Algebra;
use crate::error::{Result, YmError};
use crate::field::{japanese, Field, ProductKind, Symbol};
use crate::planewave::PlaneWaveField;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TorusGrid {
    pub n: usize,
    pub l: f64,
}

impl TorusGrid {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(YmError::InvalidParameter(format!("grid size {n} must be a power of two ≥ 8")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(YmError::InvalidParameter(format!("period {l} must be positive")));
        }
        Ok(TorusGrid { n, l })
    }

    pub fn standard(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * std::f64::consts::PI)
    }

    pub fn points(&self) -> usize {
        self.n * self.n
    }

    pub fn dx(&self) -> f64 {
        self.l / self.n as f64
    }

    /// Integer wavenumber of FFT index j.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Physical coordinate of flat index p = x2·N + x1.
    pub fn coord(&self, p: usize) -> [f64; 2] {
        let h = self.dx();
        [(p % self.n) as f64 * h, (p / self.n) as f64 * h]
    }
}

/// In-place 2D transforms on N×N complex arrays, row index x₂.
/// `forward` includes the 1/N² normalisation, so that u = Σ c_k e^{iξ_k·x}.
pub trait Transform2d: Send + Sync {
    fn forward(&self, data: &mut [Complex64]);
    fn inverse(&self, data: &mut [Complex64]);
}

pub struct FftTransform {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftTransform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftTransform { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    fn run(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.n;
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
        let mut t = vec![ZERO; n * n];
        transpose(n, data, &mut t);
        fft.process_with_scratch(&mut t, &mut scratch);
        transpose(n, &t, data);
    }
}

fn transpose(n: usize, src: &[Complex64], dst: &mut [Complex64]) {
    const B: usize = 16;
    for i0 in (0..n).step_by(B) {
        for j0 in (0..n).step_by(B) {
            for i in i0..(i0 + B).min(n) {
                for j in j0..(j0 + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

impl Transform2d for FftTransform {
    fn forward(&self, data: &mut [Complex64]) {
        self.run(&self.fwd, data);
        let s = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        self.run(&self.inv, data);
    }
}

/// The O(N⁴) definition, used as an oracle.
pub struct DirectDft {
    n: usize,
}

impl DirectDft {
    pub fn new(n: usize) -> Self {
        DirectDft { n }
    }

    fn run(&self, data: &mut [Complex64], sign: f64, scale: f64) {
        let n = self.n;
        let w = |k: usize| Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * k as f64 / n as f64);
        let mut out = vec![ZERO; n * n];
        for k2 in 0..n {
            for k1 in 0..n {
                let mut acc = ZERO;
                for x2 in 0..n {
                    for x1 in 0..n {
                        acc += data[x2 * n + x1] * w((k1 * x1 + k2 * x2) % n);
                    }
                }
                out[k2 * n + k1] = acc * scale;
            }
        }
        data.copy_from_slice(&out);
    }
}

impl Transform2d for DirectDft {
    fn forward(&self, data: &mut [Complex64]) {
        self.run(data, -1.0, 1.0 / (self.n * self.n) as f64);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, 1.0, 1.0);
    }
}

/// Grid, algebra and transform shared by all fields of one computation.
pub struct SpectralContext {
    grid: TorusGrid,
    algebra: Arc<Algebra>,
    transform: Box<dyn Transform2d>,
    dealias: bool,
    xi: Vec<[f64; 2]>,
    mask: Vec<bool>,
    /// flat index of −k
    mirror: Vec<usize>,
    symbols: Mutex<HashMap<Vec<u64>, Arc<Vec<Complex64>>>>,
    plain: OnceLock<Arc<SpectralContext>>,
}

impl std::fmt::Debug for SpectralContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralContext")
            .field("grid", &self.grid)
            .field("algebra", &self.algebra.spec())
            .field("dealias", &self.dealias)
            .finish()
    }
}

impl SpectralContext {
    pub fn new(grid: TorusGrid, algebra: Arc<Algebra>, dealias: bool) -> Arc<Self> {
        Self::with_transform(grid, algebra, dealias, Box::new(FftTransform::new(grid.n)))
    }

    pub fn with_transform(
        grid: TorusGrid,
        algebra: Arc<Algebra>,
        dealias: bool,
        transform: Box<dyn Transform2d>,
    ) -> Arc<Self> {
        let n = grid.n;
        let base = 2.0 * std::f64::consts::PI / grid.l;
        let cut = n as i64 / 3;
        let mut xi = Vec::with_capacity(n * n);
        let mut mask = Vec::with_capacity(n * n);
        let mut mirror = Vec::with_capacity(n * n);
        for j2 in 0..n {
            for j1 in 0..n {
                let (k1, k2) = (grid.wavenumber(j1), grid.wavenumber(j2));
                xi.push([base * k1 as f64, base * k2 as f64]);
                mask.push(!dealias || (k1.abs() <= cut && k2.abs() <= cut));
                mirror.push(((n - j2) % n) * n + (n - j1) % n);
            }
        }
        Arc::new(SpectralContext {
            grid,
            algebra,
            transform,
            dealias,
            xi,
            mask,
            mirror,
            symbols: Mutex::new(HashMap::new()),
            plain: OnceLock::new(),
        })
    }

    /// The same grid and algebra with dealiasing switched.
    pub fn with_dealias(&self, dealias: bool) -> Arc<Self> {
        Self::new(self.grid, self.algebra.clone(), dealias)
    }

    /// The sibling context without dealiasing, created once. Products of
    /// band-limited fields are exact there.
    pub fn plain(self: &Arc<Self>) -> Arc<Self> {
        if !self.dealias {
            return self.clone();
        }
        self.plain.get_or_init(|| Self::new(self.grid, self.algebra.clone(), false)).clone()
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// ∂ᵢ of a complex scalar lattice.
    pub fn derivative_complex(&self, data: &[Complex64], i: usize) -> Vec<Complex64> {
        let mut z = data.to_vec();
        self.transform.forward(&mut z);
        for (k, c) in z.iter_mut().enumerate() {
            let j = if i == 1 { k % self.grid.n } else { k / self.grid.n };
            // the Nyquist wavenumber has no symmetric partner
            *c *= if j == self.grid.n / 2 { ZERO } else { Complex64::new(0.0, self.xi[k][i - 1]) };
        }
        self.transform.inverse(&mut z);
        z
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    /// Physical frequency ξ at flat spectral index.
    pub fn xi(&self, idx: usize) -> [f64; 2] {
        self.xi[idx]
    }

    pub fn in_band(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    fn symbol_table(&self, sym: &Symbol) -> Arc<Vec<Complex64>> {
        let key = sym.key();
        if let Some(t) = self.symbols.lock().expect("symbol cache").get(&key) {
            return t.clone();
        }
        let table: Arc<Vec<Complex64>> = Arc::new(self.xi.iter().map(|&x| sym.eval(x)).collect());
        self.symbols.lock().expect("symbol cache").insert(key, table.clone());
        table
    }

    /// Spectra of `dim` real lattices, two per complex transform.
    fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let np = self.grid.points();
        let dim = values.len() / np;
        let mut out = vec![ZERO; values.len()];
        out.par_chunks_mut(2 * np).enumerate().for_each(|(pair, chunk)| {
            let a = 2 * pair;
            let has_b = a + 1 < dim;
            let mut z: Vec<Complex64> = (0..np)
                .map(|p| Complex64::new(values[a * np + p], if has_b { values[(a + 1) * np + p] } else { 0.0 }))
                .collect();
            self.transform.forward(&mut z);
            for k in 0..np {
                let zm = z[self.mirror[k]].conj();
                chunk[k] = 0.5 * (z[k] + zm);
                if has_b {
                    chunk[np + k] = Complex64::new(0.0, -0.5) * (z[k] - zm);
                }
            }
        });
        out
    }

    /// Real lattices from Hermitian spectra.
    fn inverse_real(&self, spec: &[Complex64]) -> Vec<f64> {
        let np = self.grid.points();
        let dim = spec.len() / np;
        let mut out = vec![0.0; spec.len()];
        out.par_chunks_mut(2 * np).enumerate().for_each(|(pair, chunk)| {
            let a = 2 * pair;
            let has_b = a + 1 < dim;
            let i = Complex64::new(0.0, 1.0);
            let mut z: Vec<Complex64> = (0..np)
                .map(|k| spec[a * np + k] + if has_b { i * spec[(a + 1) * np + k] } else { ZERO })
                .collect();
            self.transform.inverse(&mut z);
            for p in 0..np {
                chunk[p] = z[p].re;
                if has_b {
                    chunk[np + p] = z[p].im;
                }
            }
        });
        out
    }

    /// Replaces w by the spectrum of Re(ifft w), componentwise.
    fn hermitize(&self, w: &mut [Complex64]) {
        let np = self.grid.points();
        for comp in w.chunks_mut(np) {
            let orig = comp.to_vec();
            for k in 0..np {
                comp[k] = 0.5 * (orig[k] + orig[self.mirror[k]].conj());
            }
        }
    }
}

#[derive(Clone)]
pub struct GridField {
    ctx: Arc<SpectralContext>,
    values: Arc<Vec<f64>>,
    spectrum: Arc<OnceLock<Arc<Vec<Complex64>>>>,
    band_limited: bool,
}

impl std::fmt::Debug for GridField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridField")
            .field("grid", &self.ctx.grid)
            .field("dim", &self.ctx.dim())
            .field("band_limited", &self.band_limited)
            .finish()
    }
}

impl GridField {
    pub fn from_values(ctx: Arc<SpectralContext>, values: Vec<f64>) -> Result<Self> {
        let want = ctx.dim() * ctx.grid.points();
        if values.len() != want {
            return Err(YmError::DimensionMismatch { expected: want, got: values.len() });
        }
        let band_limited = !ctx.dealias;
        Ok(Self::raw(ctx, values, band_limited))
    }

    fn raw(ctx: Arc<SpectralContext>, values: Vec<f64>, band_limited: bool) -> Self {
        GridField { ctx, values: Arc::new(values), spectrum: Arc::new(OnceLock::new()), band_limited }
    }

    fn from_spectrum(ctx: Arc<SpectralContext>, spec: Vec<Complex64>, band_limited: bool) -> Self {
        let values = ctx.inverse_real(&spec);
        let cell = OnceLock::new();
        let _ = cell.set(Arc::new(spec));
        GridField { ctx, values: Arc::new(values), spectrum: Arc::new(cell), band_limited }
    }

    /// Spectral coefficients c_k (u = Σ c_k e^{iξ_k·x}), given component-major.
    pub fn from_coefficients(ctx: Arc<SpectralContext>, mut spec: Vec<Complex64>) -> Result<Self> {
        let want = ctx.dim() * ctx.grid.points();
        if spec.len() != want {
            return Err(YmError::DimensionMismatch { expected: want, got: spec.len() });
        }
        ctx.hermitize(&mut spec);
        let band_limited = !ctx.dealias || spec_in_band(&ctx, &spec);
        Ok(Self::from_spectrum(ctx, spec, band_limited))
    }

    pub fn zeros(ctx: Arc<SpectralContext>) -> Self {
        let len = ctx.dim() * ctx.grid.points();
        Self::from_spectrum_zero(ctx, len)
    }

    fn from_spectrum_zero(ctx: Arc<SpectralContext>, len: usize) -> Self {
        let cell = OnceLock::new();
        let _ = cell.set(Arc::new(vec![ZERO; len]));
        GridField { ctx, values: Arc::new(vec![0.0; len]), spectrum: Arc::new(cell), band_limited: true }
    }

    /// Samples f(a, x) for each basis index a and grid point x.
    pub fn from_fn(ctx: Arc<SpectralContext>, f: impl Fn(usize, [f64; 2]) -> f64 + Sync) -> Self {
        let np = ctx.grid.points();
        let dim = ctx.dim();
        let grid = ctx.grid;
        let values: Vec<f64> = (0..dim * np).into_par_iter().map(|i| f(i / np, grid.coord(i % np))).collect();
        let band_limited = !ctx.dealias;
        Self::raw(ctx, values, band_limited)
    }

    /// Real part of a plane-wave field at time t. Frequencies must lie on the
    /// lattice for the sample to be exact.
    pub fn from_plane_wave(ctx: Arc<SpectralContext>, u: &PlaneWaveField, t: f64) -> Result<Self> {
        if u.algebra().spec() != ctx.algebra.spec() {
            return Err(YmError::DimensionMismatch { expected: ctx.dim(), got: u.algebra().dim() });
        }
        let lie = u.to_lie_space();
        Ok(Self::from_fn(ctx, |a, x| {
            lie.modes()
                .iter()
                .map(|m| (m.coeff[a] * Complex64::from_polar(1.0, m.tau * t + m.xi[0] * x[0] + m.xi[1] * x[1])).re)
                .sum()
        }))
    }

    /// The same values viewed in another context over the same grid and algebra.
    pub fn rebase(&self, ctx: &Arc<SpectralContext>) -> Result<Self> {
        if ctx.grid != self.ctx.grid || ctx.algebra.spec() != self.ctx.algebra.spec() {
            return Err(YmError::GridMismatch(format!("{:?} vs {:?}", self.ctx, ctx)));
        }
        Ok(GridField {
            ctx: ctx.clone(),
            values: self.values.clone(),
            spectrum: self.spectrum.clone(),
            band_limited: self.band_limited || !ctx.dealias || spec_in_band(ctx, &self.spectrum()),
        })
    }

    pub fn context(&self) -> &Arc<SpectralContext> {
        &self.ctx
    }

    pub fn grid(&self) -> TorusGrid {
        self.ctx.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Lattice of basis coefficient a.
    pub fn component(&self, a: usize) -> &[f64] {
        let np = self.ctx.grid.points();
        &self.values[a * np..(a + 1) * np]
    }

    pub fn is_band_limited(&self) -> bool {
        self.band_limited
    }

    pub fn spectrum(&self) -> Arc<Vec<Complex64>> {
        self.spectrum.get_or_init(|| Arc::new(self.ctx.forward_real(&self.values))).clone()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.ctx, &other.ctx)
            || (self.ctx.grid == other.ctx.grid
                && self.ctx.algebra.spec() == other.ctx.algebra.spec()
                && self.ctx.dealias == other.ctx.dealias)
        {
            Ok(())
        } else {
            Err(YmError::GridMismatch(format!("{:?} vs {:?}", self.ctx, other.ctx)))
        }
    }

    /// Spectral multiplication, with the dealias mask when enabled.
    pub fn apply_symbol(&self, sym: &Symbol) -> Self {
        let table = self.ctx.symbol_table(sym);
        let spec = self.spectrum();
        let np = self.ctx.grid.points();
        let mut w: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let k = i % np;
                if self.ctx.mask[k] {
                    z * table[k]
                } else {
                    ZERO
                }
            })
            .collect();
        self.ctx.hermitize(&mut w);
        Self::from_spectrum(self.ctx.clone(), w, true)
    }

    /// Truncates to the dealias band (no-op when dealiasing is off).
    pub fn band_limit(&self) -> Self {
        if self.band_limited {
            return self.clone();
        }
        self.apply_symbol(&Symbol::identity())
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Self {
        let values: Vec<f64> = self.values.iter().zip(other.values.iter()).map(|(a, b)| f(*a, *b)).collect();
        let cell = OnceLock::new();
        if let (Some(s1), Some(s2)) = (self.spectrum.get(), other.spectrum.get()) {
            // the maps used here are linear with real coefficients
            let s: Vec<Complex64> = s1
                .iter()
                .zip(s2.iter())
                .map(|(a, b)| {
                    Complex64::new(f(a.re, b.re), f(a.im, b.im))
                })
                .collect();
            let _ = cell.set(Arc::new(s));
        }
        GridField {
            ctx: self.ctx.clone(),
            values: Arc::new(values),
            spectrum: Arc::new(cell),
            band_limited: self.band_limited && other.band_limited,
        }
    }

    /// Pointwise bracket or componentwise product of band-limited inputs;
    /// the output is not truncated.
    pub fn dealiased_product(&self, other: &Self, kind: ProductKind) -> Result<Self> {
        self.check_same(other)?;
        let (u, v) = (self.band_limit(), other.band_limit());
        let np = self.ctx.grid.points();
        let dim = self.ctx.dim();
        let mut out = vec![0.0; dim * np];
        match kind {
            ProductKind::Bracket => {
                for &(a, b, c, f) in self.ctx.algebra.structure().entries() {
                    let (xa, xb) = (u.component(a), u.component(b));
                    let (ya, yb) = (v.component(a), v.component(b));
                    let oc = &mut out[c * np..(c + 1) * np];
                    for p in 0..np {
                        oc[p] += f * (xa[p] * yb[p] - xb[p] * ya[p]);
                    }
                }
            }
            ProductKind::Componentwise => {
                for (o, (x, y)) in out.iter_mut().zip(u.values.iter().zip(v.values.iter())) {
                    *o = x * y;
                }
            }
            ProductKind::Matrix => {
                return Err(YmError::Unsupported("matrix products are not closed on grid fields".into()));
            }
        }
        Ok(Self::raw(self.ctx.clone(), out, !self.ctx.dealias))
    }

    /// Quadrature L² norm: (Σ_p |u(x_p)|² h²)^{1/2}.
    pub fn l2_norm(&self) -> f64 {
        let h = self.ctx.grid.dx();
        (self.values.iter().map(|v| v * v).sum::<f64>() * h * h).sqrt()
    }

    /// max_p |u(x_p)| with |·| the coefficient norm.
    pub fn sup_norm(&self) -> f64 {
        let np = self.ctx.grid.points();
        let dim = self.ctx.dim();
        (0..np)
            .map(|p| (0..dim).map(|a| self.values[a * np + p].powi(2)).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// ⟨u, v⟩ = Σ_p Σ_a u_a v_a h².
    pub fn inner(&self, other: &Self) -> f64 {
        let h = self.ctx.grid.dx();
        self.values.iter().zip(other.values.iter()).map(|(a, b)| a * b).sum::<f64>() * h * h
    }

    /// Pointwise map over the lattice of values.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self.values.iter().map(|v| f(*v)).collect();
        Self::raw(self.ctx.clone(), values, !self.ctx.dealias)
    }
}

fn spec_in_band(ctx: &SpectralContext, spec: &[Complex64]) -> bool {
    let np = ctx.grid.points();
    spec.iter().enumerate().all(|(i, z)| ctx.mask[i % np] || *z == ZERO)
}

impl Field for GridField {
    const ORDINARY: ProductKind = ProductKind::Componentwise;

    fn zero_like(&self) -> Self {
        Self::from_spectrum_zero(self.ctx.clone(), self.values.len())
    }

    fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    fn scale(&self, c: f64) -> Self {
        let values = self.values.iter().map(|v| c * v).collect();
        let cell = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = cell.set(Arc::new(s.iter().map(|z| z * c).collect()));
        }
        GridField { ctx: self.ctx.clone(), values: Arc::new(values), spectrum: Arc::new(cell), band_limited: self.band_limited }
    }

    fn axpy(&self, c: f64, other: &Self) -> Self {
        self.zip(other, move |a, b| a + c * b)
    }

    fn apply(&self, sym: &Symbol) -> Self {
        self.apply_symbol(sym)
    }

    fn product(&self, other: &Self, kind: ProductKind) -> Result<Self> {
        self.dealiased_product(other, kind)
    }

    fn norm(&self) -> f64 {
        self.l2_norm()
    }
}

/// Discrete Ĥ^{s,r} norm (Σ_ξ |⟨ξ⟩^s û(ξ)|^{r'} (2π/L)²)^{1/r'} with
/// û(ξ) = L²/(2π)·c_k.
pub fn discrete_norm(u: &GridField, s: f64, r: f64) -> Result<f64> {
    if !(r > 1.0 && r <= 2.0) {
        return Err(YmError::InvalidParameter(format!("norm exponent r = {r} must lie in (1, 2]")));
    }
    let rp = r / (r - 1.0);
    let ctx = &u.ctx;
    let np = ctx.grid.points();
    let dim = ctx.dim();
    let l = ctx.grid.l;
    let scale = l * l / (2.0 * std::f64::consts::PI);
    let cell = (2.0 * std::f64::consts::PI / l).powi(2);
    let spec = u.spectrum();
    let total: f64 = (0..np)
        .map(|k| {
            let m = (0..dim).map(|a| spec[a * np + k].norm_sqr()).sum::<f64>().sqrt();
            (japanese(ctx.xi[k]).powf(s) * scale * m).powf(rp)
        })
        .sum();
    Ok((total * cell).powf(1.0 / rp))
}

/// The three-way splitting A = A^df + A^cf + Λ^{-2}A of a spatial vector.
pub fn split_potential<F: Field>(a: &[F; 2]) -> ([F; 2], [F; 2], [F; 2]) {
    let l2 = Symbol::lam(-2.0);
    let curl = a[1].deriv(1).sub(&a[0].deriv(2));
    let df = [curl.apply(&l2.clone().with_d(2)), curl.apply(&l2.clone().with_d(1)).scale(-1.0)];
    let div = a[0].deriv(1).add(&a[1].deriv(2));
    let cf = [div.apply(&l2.clone().with_d(1)).scale(-1.0), div.apply(&l2.clone().with_d(2)).scale(-1.0)];
    let smooth = [a[0].apply(&l2), a[1].apply(&l2)];
    (df, cf, smooth)
}

/// The vector projections of the splitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorProjection {
    DivergenceFree,
    CurlFree,
}

pub fn apply_projection<F: Field>(a: &[F; 2], which: VectorProjection) -> [F; 2] {
    let (df, cf, _) = split_potential(a);
    match which {
        VectorProjection::DivergenceFree => df,
        VectorProjection::CurlFree => cf,
    }
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"YMF2";
const SNAPSHOT_VERSION: u32 = 1;

/// Decoded snapshot file.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub dim: usize,
    pub l: f64,
    /// One `dim·N²` block per component, ordered (basis index, x₂, x₁).
    pub components: Vec<Vec<f64>>,
}

pub fn write_snapshot(path: &Path, fields: &[GridField]) -> std::io::Result<()> {
    let first = fields.first().ok_or_else(|| std::io::Error::other("no fields"))?;
    let grid = first.grid();
    let mut buf = Vec::with_capacity(24 + fields.len() * first.values.len() * 8);
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    for v in [SNAPSHOT_VERSION, grid.n as u32, first.ctx.dim() as u32, fields.len() as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&grid.l.to_le_bytes());
    for f in fields {
        for v in f.values.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::File::create(path)?.write_all(&buf)
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| YmError::Format(e.to_string()))?;
    if bytes.len() < 28 || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(YmError::Format("missing YMF2 header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    if u32_at(4) != SNAPSHOT_VERSION {
        return Err(YmError::Format(format!("unsupported version {}", u32_at(4))));
    }
    let (n, dim, count) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
    let l = f64::from_le_bytes(bytes[20..28].try_into().expect("8 bytes"));
    let block = dim * n * n;
    if bytes.len() != 28 + 8 * block * count {
        return Err(YmError::Format(format!("expected {} payload bytes", 8 * block * count)));
    }
    let values: Vec<f64> =
        bytes[28..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(Snapshot { n, dim, l, components: values.chunks(block).map(<[f64]>::to_vec).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraSpec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn ctx(n: usize, dealias: bool) -> Arc<SpectralContext> {
        SpectralContext::new(TorusGrid::standard(n).unwrap(), Algebra::shared(AlgebraSpec::SU2), dealias)
    }

    fn random_field(c: &Arc<SpectralContext>, seed: u64) -> GridField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = c.dim() * c.grid().points();
        GridField::from_values(c.clone(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Smooth random field with a few low harmonics.
    fn smooth_field(c: &Arc<SpectralContext>, seed: u64, kmax: i64) -> GridField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(usize, f64, f64, f64, f64)> = (0..12)
            .map(|_| {
                (
                    rng.random_range(0..c.dim()),
                    rng.random_range(-kmax..=kmax) as f64,
                    rng.random_range(-kmax..=kmax) as f64,
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.0..6.3),
                )
            })
            .collect();
        GridField::from_fn(c.clone(), move |a, x| {
            terms.iter().filter(|t| t.0 == a).map(|t| t.3 * (t.1 * x[0] + t.2 * x[1] + t.4).cos()).sum()
        })
    }

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::standard(4).is_err());
        assert!(TorusGrid::standard(48).is_err());
        assert!(TorusGrid::new(16, -1.0).is_err());
        let g = TorusGrid::standard(8).unwrap();
        assert_eq!((0..8).map(|j| g.wavenumber(j)).collect::<Vec<_>>(), vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }

    #[test]
    fn fft_matches_direct_dft() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in [8, 16] {
            let data: Vec<Complex64> =
                (0..n * n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let (mut a, mut b) = (data.clone(), data.clone());
            FftTransform::new(n).forward(&mut a);
            DirectDft::new(n).forward(&mut b);
            let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "n={n}: {err}");
            FftTransform::new(n).inverse(&mut a);
            DirectDft::new(n).inverse(&mut b);
            let err = a.iter().zip(&data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12);
            let err = b.iter().zip(&data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn round_trip_and_single_harmonic() {
        let c = ctx(16, false);
        let u = random_field(&c, 1);
        let back = c.inverse_real(&u.spectrum());
        let err = back.iter().zip(u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        // cos(2x₁ − x₂) in component 1 has c = ½ at ±(2, −1)
        let v = GridField::from_fn(c.clone(), |a, x| if a == 1 { (2.0 * x[0] - x[1]).cos() } else { 0.0 });
        let s = v.spectrum();
        let np = 256;
        let idx = |k1: i64, k2: i64| (k2.rem_euclid(16) * 16 + k1.rem_euclid(16)) as usize;
        assert!((s[np + idx(2, -1)] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((s[np + idx(-2, 1)] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!(s[idx(2, -1)].norm() < 1e-14);
    }

    #[test]
    fn multiplier_examples() {
        let c = ctx(16, false);
        let u = random_field(&c, 2);
        let id = u.apply(&Symbol::lam(0.0));
        assert!(id.sub(&u).sup_norm() < 1e-12);
        let k = GridField::from_fn(c.clone(), |a, _| a as f64 + 1.0);
        assert!(k.apply(&Symbol::riesz(1)).sup_norm() < 1e-14);
        let back = u.apply(&Symbol::lam(1.7)).apply(&Symbol::lam(-1.7));
        assert!(back.sub(&u).sup_norm() < 1e-12);
        // ∂₁ sin(3x₁) = 3cos(3x₁)
        let s = GridField::from_fn(c.clone(), |_, x| (3.0 * x[0]).sin());
        let ds = GridField::from_fn(c, |_, x| 3.0 * (3.0 * x[0]).cos());
        assert!(s.deriv(1).sub(&ds).sup_norm() < 1e-12);
    }

    #[test]
    fn splitting_identity() {
        // band-limited data: the Nyquist lines have no Hermitian partner
        let c = ctx(32, true);
        let a = [random_field(&c, 3).band_limit(), random_field(&c, 4).band_limit()];
        let (df, cf, sm) = split_potential(&a);
        for i in 0..2 {
            let r = df[i].add(&cf[i]).add(&sm[i]).sub(&a[i]);
            assert!(r.sup_norm() < 1e-12, "{}", r.sup_norm());
        }
        // divergence of A^df and curl of A^cf vanish
        let div = df[0].deriv(1).add(&df[1].deriv(2));
        let curl = cf[1].deriv(1).sub(&cf[0].deriv(2));
        assert!(div.sup_norm() < 1e-10 && curl.sup_norm() < 1e-10);
        let p = apply_projection(&a, VectorProjection::CurlFree);
        assert!(p[0].sub(&cf[0]).sup_norm() == 0.0);
        // projections annihilate constants
        let k = GridField::from_fn(c.clone(), |_, _| 2.0);
        let (df, cf, _) = split_potential(&[k.clone(), k]);
        assert!(df[0].sup_norm() < 1e-14 && cf[1].sup_norm() < 1e-14);
    }

    #[test]
    fn products() {
        let c = ctx(32, true);
        let u = smooth_field(&c, 5, 4);
        assert!(u.bracket(&u).unwrap().sup_norm() < 1e-14);
        // cos(x₁)·cos(2x₂) is a sum of in-band harmonics, untouched by the mask
        let f = GridField::from_fn(c.clone(), |_, x| x[0].cos());
        let g = GridField::from_fn(c.clone(), |_, x| (2.0 * x[1]).cos());
        let fg = f.product(&g, ProductKind::Componentwise).unwrap().band_limit();
        let want = GridField::from_fn(c.clone(), |_, x| x[0].cos() * (2.0 * x[1]).cos());
        assert!(fg.sub(&want).sup_norm() < 1e-13);
        let other = ctx(16, true);
        assert!(matches!(u.bracket(&GridField::zeros(other)), Err(YmError::GridMismatch(_))));
        assert!(u.product(&u, ProductKind::Matrix).is_err());
    }

    #[test]
    fn triple_product_associativity() {
        let c = ctx(64, true);
        let (u, v, w) = (smooth_field(&c, 6, 5), smooth_field(&c, 7, 5), smooth_field(&c, 8, 5));
        let p = ProductKind::Componentwise;
        let l = u.product(&v, p).unwrap().product(&w, p).unwrap().band_limit();
        let r = u.product(&v.product(&w, p).unwrap(), p).unwrap().band_limit();
        assert!(l.sub(&r).sup_norm() < 1e-10);
    }

    #[test]
    fn bracket_matches_algebra() {
        let c = ctx(8, false);
        let (u, v) = (random_field(&c, 9), random_field(&c, 10));
        let b = u.bracket(&v).unwrap();
        let alg = c.algebra().clone();
        for p in [0, 17, 63] {
            let x = crate::algebra::LieElement::new((0..3).map(|a| u.component(a)[p]).collect());
            let y = crate::algebra::LieElement::new((0..3).map(|a| v.component(a)[p]).collect());
            let z = alg.bracket(&x, &y).unwrap();
            for a in 0..3 {
                assert!((z.coeffs[a] - b.component(a)[p]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn norms() {
        let c = ctx(16, false);
        let z = GridField::zeros(c.clone());
        assert_eq!(discrete_norm(&z, 1.0, 1.5).unwrap(), 0.0);
        assert!(discrete_norm(&z, 1.0, 1.0).is_err());
        // unit constant in one component: c₀ = 1, û(0) = L²/2π, cell (2π/L)² = 1
        let one = GridField::from_fn(c.clone(), |a, _| if a == 0 { 1.0 } else { 0.0 });
        let want = (2.0 * std::f64::consts::PI).powi(2) / (2.0 * std::f64::consts::PI);
        assert!((discrete_norm(&one, 3.0, 2.0).unwrap() - want).abs() < 1e-12);
        let u = random_field(&c, 11);
        let n2 = discrete_norm(&u, 0.0, 2.0).unwrap();
        assert!((n2 * n2 - u.l2_norm().powi(2)).abs() < 1e-10 * n2 * n2);
    }

    #[test]
    fn snapshot_round_trip() {
        let c = ctx(8, false);
        let fields = [random_field(&c, 12), random_field(&c, 13)];
        let dir = std::env::temp_dir().join(format!("ymf2-{}", std::process::id()));
        write_snapshot(&dir, &fields).unwrap();
        let s = read_snapshot(&dir).unwrap();
        assert_eq!((s.n, s.dim, s.components.len()), (8, 3, 2));
        assert_eq!(s.components[1], fields[1].values());
        let bytes = std::fs::read(&dir).unwrap();
        assert_eq!(&bytes[..4], b"YMF2");
        assert_eq!(bytes.len(), 28 + 2 * 3 * 64 * 8);
        std::fs::write(&dir, b"nope").unwrap();
        assert!(read_snapshot(&dir).is_err());
        std::fs::remove_file(&dir).unwrap();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn norm_monotone_in_s(seed in 0u64..1000, s1 in -2.0f64..2.0, ds in 0.0f64..2.0, r in 1.1f64..2.0) {
            let c = ctx(8, false);
            let u = random_field(&c, seed);
            prop_assert!(discrete_norm(&u, s1, r).unwrap() <= discrete_norm(&u, s1 + ds, r).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn multipliers_are_linear(seed in 0u64..1000, a in -3.0f64..3.0) {
            let c = ctx(8, false);
            let (u, v) = (random_field(&c, seed), random_field(&c, seed + 5000));
            let sym = Symbol::lam(-1.0).with_riesz(2);
            let lhs = u.axpy(a, &v).apply(&sym);
            let rhs = u.apply(&sym).axpy(a, &v.apply(&sym));
            prop_assert!(lhs.sub(&rhs).sup_norm() < 1e-12);
        }
    }
}
