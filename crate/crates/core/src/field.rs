//! The common interface shared by plane-wave sums and grid samples.
//!
//! Everything in `nullforms` and `ym` is written once against [`Field`], so the
//! same assembly code runs exactly on plane waves and pseudospectrally on grids.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, YmError};

/// Spatial Fourier multipliers. Indices are 1-based (`1` or `2`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Multiplier {
    /// ⟨ξ⟩^s
    LambdaPow(f64),
    /// |ξ|^a; the zero mode is annihilated when a < 0.
    DPow(f64),
    /// R_i = Λ^{-1}∂_i, symbol iξ_i/⟨ξ⟩.
    Riesz(usize),
    /// ∂_i, symbol iξ_i.
    Derivative(usize),
    /// Λ^{-1}∂_i; the same symbol as `Riesz`.
    LambdaInvDerivative(usize),
    /// Real or imaginary part of φ_k(iθ) with θ = t⟨ξ⟩: φ₀(z) = e^z,
    /// φ₁(z) = (e^z − 1)/z, φ₂(z) = (e^z − 1 − z)/z².
    Phase { t: f64, order: u8, imag: bool },
    /// Kernels of the exact wave propagator at frequency ω = |ξ|.
    Wave { h: f64, kernel: WaveKernel },
}

/// cos(ωh), sin(ωh)/ω, ω·sin(ωh), and the Duhamel weights for a source
/// linear in time: I₀ = (1 − cos ωh)/ω², I₁ = (ωh − sin ωh)/ω³,
/// J₀ = sin(ωh)/ω, J₁ = (1 − cos ωh)/ω².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveKernel {
    Cos,
    SinOverOmega,
    OmegaSin,
    I0,
    I1,
    J0,
    J1,
}

/// (1 − cos x)/x²
fn one_minus_cos_over_sq(x: f64) -> f64 {
    if x == 0.0 {
        0.5
    } else {
        let s = (0.5 * x).sin();
        2.0 * s * s / (x * x)
    }
}

/// (x − sin x)/x³
fn x_minus_sin_over_cube(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let x2 = x * x;
        let mut term = 1.0 / 6.0;
        let mut sum = term;
        for k in 1..=6 {
            term *= -x2 / ((2 * k + 2) * (2 * k + 3)) as f64;
            sum += term;
        }
        sum
    } else {
        (x - x.sin()) / (x * x * x)
    }
}

/// sin(x)/x
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

impl WaveKernel {
    pub fn eval(self, omega: f64, h: f64) -> f64 {
        let x = omega * h;
        match self {
            WaveKernel::Cos => x.cos(),
            WaveKernel::SinOverOmega | WaveKernel::J0 => h * sinc(x),
            WaveKernel::OmegaSin => omega * x.sin(),
            WaveKernel::I0 | WaveKernel::J1 => h * h * one_minus_cos_over_sq(x),
            WaveKernel::I1 => h * h * h * x_minus_sin_over_cube(x),
        }
    }
}

/// φ_k(iθ) for k = 0, 1, 2.
pub fn phi_function(order: u8, theta: f64) -> Complex64 {
    match order {
        0 => Complex64::new(theta.cos(), theta.sin()),
        1 => Complex64::new(sinc(theta), theta * one_minus_cos_over_sq(theta)),
        2 => Complex64::new(one_minus_cos_over_sq(theta), theta * x_minus_sin_over_cube(theta)),
        _ => panic!("phi function of order {order}"),
    }
}

#[inline]
fn comp(xi: [f64; 2], i: usize) -> f64 {
    match i {
        1 => xi[0],
        2 => xi[1],
        _ => panic!("spatial index {i} not in {{1, 2}}"),
    }
}

#[inline]
pub fn japanese(xi: [f64; 2]) -> f64 {
    (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
}

impl Multiplier {
    pub fn eval(&self, xi: [f64; 2]) -> Complex64 {
        match *self {
            Multiplier::LambdaPow(s) => Complex64::new(japanese(xi).powf(s), 0.0),
            Multiplier::DPow(a) => {
                let r = xi[0].hypot(xi[1]);
                if r == 0.0 {
                    Complex64::new(if a == 0.0 { 1.0 } else { 0.0 }, 0.0)
                } else {
                    Complex64::new(r.powf(a), 0.0)
                }
            }
            Multiplier::Riesz(i) | Multiplier::LambdaInvDerivative(i) => {
                Complex64::new(0.0, comp(xi, i) / japanese(xi))
            }
            Multiplier::Derivative(i) => Complex64::new(0.0, comp(xi, i)),
            Multiplier::Phase { t, order, imag } => {
                let z = phi_function(order, t * japanese(xi));
                Complex64::new(if imag { z.im } else { z.re }, 0.0)
            }
            Multiplier::Wave { h, kernel } => Complex64::new(kernel.eval(xi[0].hypot(xi[1]), h), 0.0),
        }
    }
}

/// A product of multipliers, evaluated in one pass.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Symbol {
    factors: Vec<Multiplier>,
    coeff: Option<f64>,
}

impl Symbol {
    pub fn identity() -> Self {
        Symbol::default()
    }

    pub fn of(m: Multiplier) -> Self {
        Symbol { factors: vec![m], coeff: None }
    }

    pub fn then(mut self, m: Multiplier) -> Self {
        self.factors.push(m);
        self
    }

    pub fn times(mut self, c: f64) -> Self {
        self.coeff = Some(self.coeff.unwrap_or(1.0) * c);
        self
    }

    pub fn lam(s: f64) -> Self {
        Self::of(Multiplier::LambdaPow(s))
    }

    pub fn d(i: usize) -> Self {
        Self::of(Multiplier::Derivative(i))
    }

    pub fn riesz(i: usize) -> Self {
        Self::of(Multiplier::Riesz(i))
    }

    pub fn dpow(a: f64) -> Self {
        Self::of(Multiplier::DPow(a))
    }

    pub fn with_d(self, i: usize) -> Self {
        self.then(Multiplier::Derivative(i))
    }

    pub fn with_lam(self, s: f64) -> Self {
        self.then(Multiplier::LambdaPow(s))
    }

    pub fn with_riesz(self, i: usize) -> Self {
        self.then(Multiplier::Riesz(i))
    }

    pub fn factors(&self) -> &[Multiplier] {
        &self.factors
    }

    /// Exact identity of the symbol, usable as a cache key.
    pub fn key(&self) -> Vec<u64> {
        let mut k = vec![self.coeff.unwrap_or(1.0).to_bits()];
        for m in &self.factors {
            let (tag, v) = match *m {
                Multiplier::LambdaPow(s) => (0, s.to_bits()),
                Multiplier::DPow(a) => (1, a.to_bits()),
                Multiplier::Riesz(i) | Multiplier::LambdaInvDerivative(i) => (2, i as u64),
                Multiplier::Derivative(i) => (3, i as u64),
                Multiplier::Phase { t, order, imag } => (4 + 2 * order as u64 + imag as u64, t.to_bits()),
                Multiplier::Wave { h, kernel } => (16 + kernel as u64, h.to_bits()),
            };
            k.push(tag);
            k.push(v);
        }
        k
    }

    pub fn eval(&self, xi: [f64; 2]) -> Complex64 {
        let mut z = Complex64::new(self.coeff.unwrap_or(1.0), 0.0);
        for m in &self.factors {
            z *= m.eval(xi);
        }
        z
    }
}

impl From<Multiplier> for Symbol {
    fn from(m: Multiplier) -> Self {
        Symbol::of(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProductKind {
    /// Lie bracket [u, v].
    Bracket,
    /// Matrix product uv (plane waves only).
    Matrix,
    /// Product of each basis coefficient separately, i.e. dim scalar fields.
    Componentwise,
}

pub trait Field: Clone + Send + Sync + Sized {
    /// The product used for the ordinary (non-commutator) null forms.
    const ORDINARY: ProductKind;

    fn zero_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn scale(&self, c: f64) -> Self;
    /// self + c·other
    fn axpy(&self, c: f64, other: &Self) -> Self {
        self.add(&other.scale(c))
    }
    fn apply(&self, sym: &Symbol) -> Self;
    fn product(&self, other: &Self, kind: ProductKind) -> Result<Self>;
    /// Size used by residual checks.
    fn norm(&self) -> f64;

    fn bracket(&self, other: &Self) -> Result<Self> {
        self.product(other, ProductKind::Bracket)
    }

    fn deriv(&self, i: usize) -> Self {
        self.apply(&Symbol::d(i))
    }
}

/// Sum of a non-empty list of fields.
pub fn sum<F: Field>(terms: &[F]) -> F {
    let mut it = terms.iter();
    let first = it.next().expect("sum of an empty list").clone();
    it.fold(first, |acc, t| acc.add(t))
}

/// A field together with its time derivative.
#[derive(Clone, Debug)]
pub struct SpacetimePair<F> {
    pub value: F,
    pub time_deriv: Option<F>,
}

impl<F: Field> SpacetimePair<F> {
    pub fn new(value: F, time_deriv: F) -> Self {
        SpacetimePair { value, time_deriv: Some(time_deriv) }
    }

    pub fn value_only(value: F) -> Self {
        SpacetimePair { value, time_deriv: None }
    }

    pub fn zero_like(&self) -> Self {
        SpacetimePair {
            value: self.value.zero_like(),
            time_deriv: self.time_deriv.as_ref().map(|f| f.zero_like()),
        }
    }

    pub fn dt(&self, who: &'static str) -> Result<&F> {
        self.time_deriv.as_ref().ok_or(YmError::MissingTimeDerivative(who))
    }

    pub fn map(&self, f: impl Fn(&F) -> F) -> Self {
        SpacetimePair { value: f(&self.value), time_deriv: self.time_deriv.as_ref().map(f) }
    }

    pub fn apply(&self, sym: &Symbol) -> Self {
        self.map(|u| u.apply(sym))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|u| u.scale(c))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.sub(b))
    }

    fn zip(&self, other: &Self, f: impl Fn(&F, &F) -> F) -> Self {
        let time_deriv = match (&self.time_deriv, &other.time_deriv) {
            (Some(a), Some(b)) => Some(f(a, b)),
            _ => None,
        };
        SpacetimePair { value: f(&self.value, &other.value), time_deriv }
    }

    /// ∂_α of the value: α = 0 is the time derivative, α = 1, 2 spatial.
    pub fn partial(&self, alpha: usize, who: &'static str) -> Result<F> {
        match alpha {
            0 => self.dt(who).cloned(),
            i => Ok(self.value.deriv(i)),
        }
    }

    /// Product rule: (uv, u̇v + uv̇). The time derivative is dropped if either
    /// factor lacks one.
    pub fn product(&self, other: &Self, kind: ProductKind) -> Result<Self> {
        let value = self.value.product(&other.value, kind)?;
        let time_deriv = match (&self.time_deriv, &other.time_deriv) {
            (Some(a), Some(b)) => {
                Some(a.product(&other.value, kind)?.add(&self.value.product(b, kind)?))
            }
            _ => None,
        };
        Ok(SpacetimePair { value, time_deriv })
    }

    pub fn bracket(&self, other: &Self) -> Result<Self> {
        self.product(other, ProductKind::Bracket)
    }
}

/// The evolution unknown (A_0, A_1, A_2; F_01, F_02, F_12), each with its time
/// derivative.
#[derive(Clone, Debug)]
pub struct FieldState<F> {
    pub a: [SpacetimePair<F>; 3],
    pub f: [SpacetimePair<F>; 3],
}

/// Slot of F_{βγ} in `FieldState::f` with the sign from antisymmetry.
pub fn f_slot(beta: usize, gamma: usize) -> Option<(usize, f64)> {
    match (beta, gamma) {
        (0, 1) => Some((0, 1.0)),
        (1, 0) => Some((0, -1.0)),
        (0, 2) => Some((1, 1.0)),
        (2, 0) => Some((1, -1.0)),
        (1, 2) => Some((2, 1.0)),
        (2, 1) => Some((2, -1.0)),
        _ => None,
    }
}

/// Index pairs (β, γ) of the three stored F components.
pub const F_INDICES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// η^{αα} for the metric diag(−1, 1, 1).
#[inline]
pub fn eta(alpha: usize) -> f64 {
    if alpha == 0 {
        -1.0
    } else {
        1.0
    }
}

impl<F: Field> FieldState<F> {
    pub fn map(&self, f: impl Fn(&SpacetimePair<F>) -> SpacetimePair<F>) -> Self {
        FieldState {
            a: [f(&self.a[0]), f(&self.a[1]), f(&self.a[2])],
            f: [f(&self.f[0]), f(&self.f[1]), f(&self.f[2])],
        }
    }

    pub fn zero_like(&self) -> Self {
        self.map(|p| p.zero_like())
    }

    /// F_{βγ} as a pair, `None` on the diagonal.
    pub fn f_component(&self, beta: usize, gamma: usize) -> Option<SpacetimePair<F>> {
        f_slot(beta, gamma).map(|(k, s)| if s > 0.0 { self.f[k].clone() } else { self.f[k].scale(-1.0) })
    }

    /// All twelve fields in the order A, ∂ₜA, F, ∂ₜF. Missing time
    /// derivatives are an error.
    pub fn components(&self) -> Result<Vec<F>> {
        let mut out = Vec::with_capacity(12);
        for p in &self.a {
            out.push(p.value.clone());
        }
        for p in &self.a {
            out.push(p.dt("FieldState")?.clone());
        }
        for p in &self.f {
            out.push(p.value.clone());
        }
        for p in &self.f {
            out.push(p.dt("FieldState")?.clone());
        }
        Ok(out)
    }

    /// Inverse of [`FieldState::components`].
    pub fn from_components(c: Vec<F>) -> Result<Self> {
        if c.len() != 12 {
            return Err(YmError::InvalidParameter(format!("expected 12 components, got {}", c.len())));
        }
        let p = |v: usize, d: usize| SpacetimePair::new(c[v].clone(), c[d].clone());
        Ok(FieldState { a: [p(0, 3), p(1, 4), p(2, 5)], f: [p(6, 9), p(7, 10), p(8, 11)] })
    }
}
