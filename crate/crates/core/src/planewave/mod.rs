//! Exact calculus on finite sums of spacetime plane waves
//! u(t,x) = Σ_k c_k e^{i(τ_k t + ξ_k·x)}.
//!
//! Coefficients live in the complexified algebra (derivatives bring factors
//! of i) or, for matrix products, in the full n×n matrix space. Random
//! frequencies are dyadic rationals, so frequency sums are exact and modes
//! that must cancel land on identical keys.

pub mod identities;

use std::cmp::Ordering;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::Algebra;
use crate::error::{Result, YmError};
use crate::field::{Field, ProductKind, SpacetimePair, Symbol};

pub const DEFAULT_MODE_CAP: usize = 4096;
/// Coefficients at or below this norm are dropped during canonicalisation.
pub const COEFF_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffSpace {
    /// Coordinates over the algebra basis (complexified).
    Lie,
    /// Row-major n×n complex matrices.
    Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    T,
    X1,
    X2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub tau: f64,
    pub xi: [f64; 2],
    pub coeff: Vec<Complex64>,
}

impl Mode {
    fn key_cmp(&self, other: &Mode) -> Ordering {
        self.tau
            .total_cmp(&other.tau)
            .then(self.xi[0].total_cmp(&other.xi[0]))
            .then(self.xi[1].total_cmp(&other.xi[1]))
    }

    fn same_key(&self, other: &Mode) -> bool {
        self.tau == other.tau && self.xi == other.xi
    }

    fn norm(&self) -> f64 {
        self.coeff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct PlaneWaveField {
    algebra: Arc<Algebra>,
    space: CoeffSpace,
    modes: Vec<Mode>,
    cap: usize,
}

fn canonicalize(mut modes: Vec<Mode>) -> Vec<Mode> {
    for m in &mut modes {
        // −0.0 and 0.0 must share a key
        m.tau += 0.0;
        m.xi[0] += 0.0;
        m.xi[1] += 0.0;
    }
    modes.sort_by(|a, b| a.key_cmp(b));
    let mut out: Vec<Mode> = Vec::with_capacity(modes.len());
    for m in modes {
        match out.last_mut() {
            Some(last) if last.same_key(&m) => {
                for (a, b) in last.coeff.iter_mut().zip(&m.coeff) {
                    *a += b;
                }
            }
            _ => out.push(m),
        }
    }
    out.retain(|m| m.norm() > COEFF_TOL);
    out
}

fn matmul(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

impl PlaneWaveField {
    pub fn new(algebra: Arc<Algebra>, space: CoeffSpace, modes: Vec<Mode>) -> Result<Self> {
        let len = match space {
            CoeffSpace::Lie => algebra.dim(),
            CoeffSpace::Matrix => algebra.n() * algebra.n(),
        };
        for m in &modes {
            if m.coeff.len() != len {
                return Err(YmError::DimensionMismatch { expected: len, got: m.coeff.len() });
            }
        }
        let modes = canonicalize(modes);
        if modes.len() > DEFAULT_MODE_CAP {
            return Err(YmError::ModeCapExceeded { cap: DEFAULT_MODE_CAP, needed: modes.len() });
        }
        Ok(PlaneWaveField { algebra, space, modes, cap: DEFAULT_MODE_CAP })
    }

    pub fn zero(algebra: Arc<Algebra>) -> Self {
        PlaneWaveField { algebra, space: CoeffSpace::Lie, modes: Vec::new(), cap: DEFAULT_MODE_CAP }
    }

    /// One mode with real algebra coefficients.
    pub fn single(algebra: Arc<Algebra>, tau: f64, xi: [f64; 2], coeffs: &[f64]) -> Result<Self> {
        let coeff = coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        Self::new(algebra, CoeffSpace::Lie, vec![Mode { tau, xi, coeff }])
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.algebra
    }

    pub fn space(&self) -> CoeffSpace {
        self.space
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    fn rebuild(&self, space: CoeffSpace, modes: Vec<Mode>) -> Self {
        PlaneWaveField { algebra: self.algebra.clone(), space, modes: canonicalize(modes), cap: self.cap }
    }

    fn map_coeffs(&self, f: impl Fn(&Mode) -> Complex64) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let s = f(m);
                Mode { tau: m.tau, xi: m.xi, coeff: m.coeff.iter().map(|c| c * s).collect() }
            })
            .collect();
        self.rebuild(self.space, modes)
    }

    /// The same field with matrix coefficients Σ c_a E_a.
    pub fn to_matrix_space(&self) -> Self {
        if self.space == CoeffSpace::Matrix {
            return self.clone();
        }
        let modes = self
            .modes
            .iter()
            .map(|m| Mode {
                tau: m.tau,
                xi: m.xi,
                coeff: self.algebra.to_matrix_complex(&m.coeff).transpose().iter().copied().collect(),
            })
            .collect();
        self.rebuild(CoeffSpace::Matrix, modes)
    }

    /// Projection of matrix coefficients back onto the algebra basis.
    pub fn to_lie_space(&self) -> Self {
        if self.space == CoeffSpace::Lie {
            return self.clone();
        }
        let n = self.algebra.n();
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let mat = crate::algebra::CMatrix::from_row_slice(n, n, &m.coeff);
                Mode { tau: m.tau, xi: m.xi, coeff: self.algebra.from_matrix_complex(&mat) }
            })
            .collect();
        self.rebuild(CoeffSpace::Lie, modes)
    }

    fn same_space(&self, other: &Self) -> (Self, Self) {
        if self.space == other.space {
            (self.clone(), other.clone())
        } else {
            (self.to_matrix_space(), other.to_matrix_space())
        }
    }

    /// Complex conjugate field: modes (−τ, −ξ) with conjugated coefficients.
    pub fn conj(&self) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| Mode {
                tau: -m.tau,
                xi: [-m.xi[0], -m.xi[1]],
                coeff: m.coeff.iter().map(|c| c.conj()).collect(),
            })
            .collect();
        self.rebuild(self.space, modes)
    }

    /// (u + ū)/2, a real-valued field.
    pub fn real_part(&self) -> Self {
        self.add(&self.conj()).scale(0.5)
    }

    /// Value at (t, x).
    pub fn evaluate(&self, t: f64, x: [f64; 2]) -> Vec<Complex64> {
        let len = self.modes.first().map_or(0, |m| m.coeff.len());
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for m in &self.modes {
            let phase = Complex64::from_polar(1.0, m.tau * t + m.xi[0] * x[0] + m.xi[1] * x[1]);
            for (o, c) in out.iter_mut().zip(&m.coeff) {
                *o += c * phase;
            }
        }
        out
    }

    /// (u, ∂ₜu).
    pub fn time_pair(&self) -> SpacetimePair<Self> {
        SpacetimePair::new(self.clone(), pw_derivative(self, Axis::T))
    }

    /// u ↦ c·u(λt, λx): frequencies scale by λ, coefficients by c.
    pub fn rescale(&self, lambda: f64, amplitude: f64) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| Mode {
                tau: lambda * m.tau,
                xi: [lambda * m.xi[0], lambda * m.xi[1]],
                coeff: m.coeff.iter().map(|c| c * amplitude).collect(),
            })
            .collect();
        self.rebuild(self.space, modes)
    }
}

/// Convolution of mode lists, each pair contributing c₁c₂ (or [c₁,c₂]) at
/// (τ₁+τ₂, ξ₁+ξ₂).
pub fn pw_product(u: &PlaneWaveField, v: &PlaneWaveField, kind: ProductKind) -> Result<PlaneWaveField> {
    if u.algebra.spec() != v.algebra.spec() {
        return Err(YmError::DimensionMismatch { expected: u.algebra.dim(), got: v.algebra.dim() });
    }
    let cap = u.cap.min(v.cap);
    let pairs = u.modes.len() * v.modes.len();
    if pairs > cap * cap {
        return Err(YmError::ModeCapExceeded { cap, needed: pairs });
    }
    let (u, v) = match kind {
        ProductKind::Matrix => (u.to_matrix_space(), v.to_matrix_space()),
        _ => u.same_space(v),
    };
    let space = u.space;
    let alg = &u.algebra;
    let n = alg.n();
    let combine = |a: &Mode, b: &Mode| -> Mode {
        let coeff = match (kind, space) {
            (ProductKind::Bracket, CoeffSpace::Lie) => {
                let mut out = vec![Complex64::new(0.0, 0.0); a.coeff.len()];
                alg.structure().bracket_acc(&a.coeff, &b.coeff, &mut out);
                out
            }
            (ProductKind::Bracket, CoeffSpace::Matrix) => {
                let ab = matmul(n, &a.coeff, &b.coeff);
                let ba = matmul(n, &b.coeff, &a.coeff);
                ab.iter().zip(&ba).map(|(x, y)| x - y).collect()
            }
            (ProductKind::Matrix, _) => matmul(n, &a.coeff, &b.coeff),
            (ProductKind::Componentwise, _) => {
                a.coeff.iter().zip(&b.coeff).map(|(x, y)| x * y).collect()
            }
        };
        Mode { tau: a.tau + b.tau, xi: [a.xi[0] + b.xi[0], a.xi[1] + b.xi[1]], coeff }
    };
    let raw: Vec<Mode> = if pairs > 4096 {
        u.modes.par_iter().flat_map_iter(|a| v.modes.iter().map(move |b| combine(a, b))).collect()
    } else {
        u.modes.iter().flat_map(|a| v.modes.iter().map(move |b| combine(a, b))).collect()
    };
    let modes = canonicalize(raw);
    if modes.len() > cap {
        return Err(YmError::ModeCapExceeded { cap, needed: modes.len() });
    }
    Ok(PlaneWaveField { algebra: u.algebra.clone(), space, modes, cap: u.cap })
}

pub fn pw_derivative(u: &PlaneWaveField, axis: Axis) -> PlaneWaveField {
    u.map_coeffs(|m| {
        let f = match axis {
            Axis::T => m.tau,
            Axis::X1 => m.xi[0],
            Axis::X2 => m.xi[1],
        };
        Complex64::new(0.0, f)
    })
}

/// Spatial multiplier; the time frequency is untouched.
pub fn pw_multiplier(u: &PlaneWaveField, sym: &Symbol) -> PlaneWaveField {
    u.map_coeffs(|m| sym.eval(m.xi))
}

/// Largest coefficient Frobenius norm; 0 for the empty field.
pub fn pw_residual_norm(u: &PlaneWaveField) -> f64 {
    u.modes.iter().map(Mode::norm).fold(0.0, f64::max)
}

impl Field for PlaneWaveField {
    const ORDINARY: ProductKind = ProductKind::Matrix;

    fn zero_like(&self) -> Self {
        self.rebuild(self.space, Vec::new())
    }

    fn add(&self, other: &Self) -> Self {
        let (a, b) = self.same_space(other);
        let mut modes = a.modes;
        modes.extend(b.modes);
        self.rebuild(a.space, modes)
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    fn scale(&self, c: f64) -> Self {
        self.map_coeffs(|_| Complex64::new(c, 0.0))
    }

    fn apply(&self, sym: &Symbol) -> Self {
        pw_multiplier(self, sym)
    }

    fn product(&self, other: &Self, kind: ProductKind) -> Result<Self> {
        pw_product(self, other, kind)
    }

    fn norm(&self) -> f64 {
        pw_residual_norm(self)
    }
}

fn dyadic(rng: &mut ChaCha8Rng, lo: f64, hi: f64, denom: f64) -> f64 {
    let steps = ((hi - lo) * denom).round() as i64;
    lo + rng.random_range(0..=steps) as f64 / denom
}

fn random_coeff(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
        .collect()
}

fn random_xi(rng: &mut ChaCha8Rng) -> [f64; 2] {
    [dyadic(rng, -2.0, 2.0, 16.0), dyadic(rng, -2.0, 2.0, 16.0)]
}

fn random_tau(rng: &mut ChaCha8Rng) -> f64 {
    let t = dyadic(rng, 0.5, 2.5, 32.0);
    if rng.random_bool(0.5) {
        t
    } else {
        -t
    }
}

/// A random field with `mode_count` modes, dyadic frequencies and complex
/// coefficients in [−1,1]².
pub fn pw_random(algebra: Arc<Algebra>, mode_count: usize, seed: u64) -> PlaneWaveField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = algebra.dim();
    let modes = (0..mode_count)
        .map(|_| Mode { tau: random_tau(&mut rng), xi: random_xi(&mut rng), coeff: random_coeff(&mut rng, dim) })
        .collect();
    PlaneWaveField::new(algebra, CoeffSpace::Lie, modes).expect("mode count within cap")
}

/// Random (A₀, A₁, A₂) with ∂^αA_α = 0 exactly: per mode a₀ = (ξ·a)/τ with
/// τ drawn from ±[0.5, 2.5].
pub fn pw_lorenz_compatible(algebra: Arc<Algebra>, mode_count: usize, seed: u64) -> [PlaneWaveField; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = algebra.dim();
    let mut m0 = Vec::with_capacity(mode_count);
    let mut m1 = Vec::with_capacity(mode_count);
    let mut m2 = Vec::with_capacity(mode_count);
    for _ in 0..mode_count {
        let tau = random_tau(&mut rng);
        let xi = random_xi(&mut rng);
        let a1 = random_coeff(&mut rng, dim);
        let a2 = random_coeff(&mut rng, dim);
        let a0 = a1.iter().zip(&a2).map(|(x, y)| (x * xi[0] + y * xi[1]) / tau).collect();
        m0.push(Mode { tau, xi, coeff: a0 });
        m1.push(Mode { tau, xi, coeff: a1 });
        m2.push(Mode { tau, xi, coeff: a2 });
    }
    let mk = |m| PlaneWaveField::new(algebra.clone(), CoeffSpace::Lie, m).expect("mode count within cap");
    [mk(m0), mk(m1), mk(m2)]
}

/// −∂ₜA₀ + ∂₁A₁ + ∂₂A₂.
pub fn pw_lorenz_residual(a: &[PlaneWaveField; 3]) -> PlaneWaveField {
    pw_derivative(&a[0], Axis::T)
        .scale(-1.0)
        .add(&pw_derivative(&a[1], Axis::X1))
        .add(&pw_derivative(&a[2], Axis::X2))
}
