//! Matrix Lie algebras su(n) and so(n) over an orthonormal basis.
//!
//! The inner product is ⟨X,Y⟩ = Re tr(X Y†). For su(n) the basis is
//! E = −i·H with H running over the normalised generalised Gell-Mann
//! matrices (symmetric and antisymmetric off-diagonal pairs first, then the
//! diagonal ones); for su(2) this gives E_a = −(i/√2)σ_a. For so(n) the basis
//! is (E_jk − E_kj)/√2, j < k.

use std::ops::{AddAssign, Mul, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, YmError};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgebraKind {
    #[serde(alias = "su")]
    SU,
    #[serde(alias = "so")]
    SO,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub kind: AlgebraKind,
    pub n: usize,
}

impl AlgebraSpec {
    pub const SU2: AlgebraSpec = AlgebraSpec { kind: AlgebraKind::SU, n: 2 };
    pub const SO3: AlgebraSpec = AlgebraSpec { kind: AlgebraKind::SO, n: 3 };

    /// Matrix sizes 2..=4 are supported.
    pub fn new(kind: AlgebraKind, n: usize) -> Result<Self> {
        if !(2..=4).contains(&n) {
            return Err(YmError::InvalidParameter(format!(
                "matrix size n = {n} outside 2..=4"
            )));
        }
        Ok(AlgebraSpec { kind, n })
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            AlgebraKind::SU => self.n * self.n - 1,
            AlgebraKind::SO => self.n * (self.n - 1) / 2,
        }
    }

    pub fn is_abelian(&self) -> bool {
        self.kind == AlgebraKind::SO && self.n == 2
    }
}

impl std::fmt::Display for AlgebraSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            AlgebraKind::SU => write!(f, "su({})", self.n),
            AlgebraKind::SO => write!(f, "so({})", self.n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieElement {
    pub coeffs: Vec<f64>,
}

impl LieElement {
    pub fn zero(dim: usize) -> Self {
        LieElement { coeffs: vec![0.0; dim] }
    }

    pub fn new(coeffs: Vec<f64>) -> Self {
        LieElement { coeffs }
    }

    /// The a-th basis element.
    pub fn basis(dim: usize, a: usize) -> Self {
        let mut e = Self::zero(dim);
        e.coeffs[a] = 1.0;
        e
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Frobenius norm of the reconstructed matrix (the basis is orthonormal).
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        LieElement { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        LieElement {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

/// f[a][b][c] = ⟨[E_a,E_b], E_c⟩, kept dense for lookup and as a sparse
/// list over a < b for the bracket kernel.
#[derive(Clone, Debug)]
pub struct StructureConstants {
    dim: usize,
    dense: Vec<f64>,
    sparse: Vec<(usize, usize, usize, f64)>,
}

impl StructureConstants {
    fn from_basis(basis: &[CMatrix]) -> Self {
        let dim = basis.len();
        let mut dense = vec![0.0; dim * dim * dim];
        let mut sparse = Vec::new();
        for a in 0..dim {
            for b in 0..dim {
                let comm = &basis[a] * &basis[b] - &basis[b] * &basis[a];
                for c in 0..dim {
                    let v = inner(&comm, &basis[c]);
                    let v = if v.abs() < 1e-14 { 0.0 } else { v };
                    dense[(a * dim + b) * dim + c] = v;
                    if a < b && v != 0.0 {
                        sparse.push((a, b, c, v));
                    }
                }
            }
        }
        StructureConstants { dim, dense, sparse }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.dense[(a * self.dim + b) * self.dim + c]
    }

    /// Nonzero entries (a, b, c, f_abc) with a < b.
    pub fn entries(&self) -> &[(usize, usize, usize, f64)] {
        &self.sparse
    }

    /// Largest Jacobi-identity residual over all basis quadruples.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for dd in 0..d {
                        let mut s = 0.0;
                        for e in 0..d {
                            s += self.get(a, b, e) * self.get(e, c, dd)
                                + self.get(b, c, e) * self.get(e, a, dd)
                                + self.get(c, a, e) * self.get(e, b, dd);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// out += [x, y] on coefficient vectors; works for real or complexified
    /// coefficients.
    #[inline]
    pub fn bracket_acc<T>(&self, x: &[T], y: &[T], out: &mut [T])
    where
        T: Copy + AddAssign + Sub<Output = T> + Mul<Output = T> + Mul<f64, Output = T>,
    {
        for &(a, b, c, f) in &self.sparse {
            out[c] += (x[a] * y[b] - x[b] * y[a]) * f;
        }
    }
}

/// An algebra with its basis matrices and structure constants. Immutable and
/// shared between fields through `Arc`.
#[derive(Clone, Debug)]
pub struct Algebra {
    spec: AlgebraSpec,
    basis: Vec<CMatrix>,
    structure: StructureConstants,
}

fn unit(n: usize, j: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(j, k)] = Complex64::new(1.0, 0.0);
    m
}

fn inner(x: &CMatrix, y: &CMatrix) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (a * b.conj()).re).sum()
}

fn build_basis(spec: AlgebraSpec) -> Vec<CMatrix> {
    let n = spec.n;
    let i = Complex64::new(0.0, 1.0);
    let r2 = std::f64::consts::SQRT_2;
    let mut basis = Vec::with_capacity(spec.dim());
    match spec.kind {
        AlgebraKind::SU => {
            for j in 0..n {
                for k in (j + 1)..n {
                    let sym = (unit(n, j, k) + unit(n, k, j)).unscale(r2);
                    let asym = (unit(n, j, k) - unit(n, k, j)) * (-i / r2);
                    basis.push(sym * (-i));
                    basis.push(asym * (-i));
                }
            }
            for l in 1..n {
                let norm = ((l * (l + 1)) as f64).sqrt();
                let mut h = CMatrix::zeros(n, n);
                for d in 0..l {
                    h[(d, d)] = Complex64::new(1.0 / norm, 0.0);
                }
                h[(l, l)] = Complex64::new(-(l as f64) / norm, 0.0);
                basis.push(h * (-i));
            }
        }
        AlgebraKind::SO => {
            for j in 0..n {
                for k in (j + 1)..n {
                    basis.push((unit(n, j, k) - unit(n, k, j)).unscale(r2));
                }
            }
        }
    }
    basis
}

impl Algebra {
    pub fn new(spec: AlgebraSpec) -> Self {
        let basis = build_basis(spec);
        let structure = StructureConstants::from_basis(&basis);
        Algebra { spec, basis, structure }
    }

    pub fn shared(spec: AlgebraSpec) -> Arc<Self> {
        Arc::new(Self::new(spec))
    }

    pub fn spec(&self) -> AlgebraSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn structure(&self) -> &StructureConstants {
        &self.structure
    }

    fn check(&self, x: &LieElement) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(YmError::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok(())
    }

    pub fn to_matrix(&self, x: &LieElement) -> CMatrix {
        let n = self.n();
        let mut m = CMatrix::zeros(n, n);
        for (c, e) in x.coeffs.iter().zip(&self.basis) {
            m += e * Complex64::new(*c, 0.0);
        }
        m
    }

    /// Σ c_a E_a for complexified coefficients.
    pub fn to_matrix_complex(&self, c: &[Complex64]) -> CMatrix {
        let n = self.n();
        let mut m = CMatrix::zeros(n, n);
        for (c, e) in c.iter().zip(&self.basis) {
            m += e * *c;
        }
        m
    }

    /// Orthogonal projection onto the algebra: c_a = Re tr(M E_a†).
    pub fn from_matrix(&self, m: &CMatrix) -> LieElement {
        LieElement { coeffs: self.basis.iter().map(|e| inner(m, e)).collect() }
    }

    /// Complex-linear projection c_a = tr(M E_a†) onto the complexified algebra.
    pub fn from_matrix_complex(&self, m: &CMatrix) -> Vec<Complex64> {
        self.basis
            .iter()
            .map(|e| m.iter().zip(e.iter()).map(|(a, b)| a * b.conj()).sum())
            .collect()
    }

    pub fn inner(&self, x: &LieElement, y: &LieElement) -> f64 {
        x.coeffs.iter().zip(&y.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn bracket(&self, x: &LieElement, y: &LieElement) -> Result<LieElement> {
        self.check(x)?;
        self.check(y)?;
        let mut out = vec![0.0; self.dim()];
        self.structure.bracket_acc(&x.coeffs, &y.coeffs, &mut out);
        Ok(LieElement { coeffs: out })
    }

    pub fn random_element(&self, seed: u64, scale: f64) -> LieElement {
        random_element(&self.spec, seed, scale)
    }

    /// Matrix exponential of the reconstructed matrix.
    pub fn group_exp(&self, x: &LieElement) -> Result<CMatrix> {
        self.check(x)?;
        Ok(self.to_matrix(x).exp())
    }
}

/// Coefficients i.i.d. uniform in [−scale, scale].
pub fn random_element(spec: &AlgebraSpec, seed: u64, scale: f64) -> LieElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LieElement {
        coeffs: (0..spec.dim()).map(|_| scale * rng.random_range(-1.0..=1.0)).collect(),
    }
}

/// max |U U† − I| and |det U − 1|.
pub fn unitarity_defect(u: &CMatrix) -> (f64, f64) {
    let n = u.nrows();
    let prod = u * u.adjoint();
    let id = CMatrix::identity(n, n);
    let d = (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let det = (u.determinant() - Complex64::new(1.0, 0.0)).norm();
    (d, det)
}
