//! Grid-only physics: constraints, energy, gauge transformations, Gauss-law
//! projection of data, and diagnostics records.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::assemble::{curvature, data_from_potential};
use crate::algebra::{unitarity_defect, CMatrix, LieElement};
use crate::error::{Result, YmError};
use crate::field::{Field, FieldState, SpacetimePair};
use crate::spectral::{GridField, SpectralContext};

pub type GridState = FieldState<GridField>;

/// Re-expresses every field of the state in context `ctx`.
pub fn rebase_state(s: &GridState, ctx: &Arc<SpectralContext>) -> Result<GridState> {
    let re = |p: &SpacetimePair<GridField>| -> Result<SpacetimePair<GridField>> {
        Ok(SpacetimePair {
            value: p.value.rebase(ctx)?,
            time_deriv: p.time_deriv.as_ref().map(|t| t.rebase(ctx)).transpose()?,
        })
    };
    Ok(FieldState {
        a: [re(&s.a[0])?, re(&s.a[1])?, re(&s.a[2])?],
        f: [re(&s.f[0])?, re(&s.f[1])?, re(&s.f[2])?],
    })
}

fn plain_state(s: &GridState) -> Result<GridState> {
    let ctx = s.a[0].value.context().plain();
    rebase_state(s, &ctx)
}

/// Constraint residuals in the discrete L² norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Constraints {
    pub lorenz: f64,
    pub gauss: f64,
    pub compat: f64,
}

/// −∂ⁱF_{0i} − [Aⁱ, F_{0i}], i.e. ∂ⁱF_{i0} + [Aⁱ, F_{i0}].
pub fn gauss_field<F: Field>(a: &[F; 3], f0: &[F; 2]) -> Result<F> {
    let mut g = f0[0].deriv(1).add(&f0[1].deriv(2));
    g = g.add(&a[1].bracket(&f0[0])?).add(&a[2].bracket(&f0[1])?);
    Ok(g.scale(-1.0))
}

/// Residuals evaluated without dealiasing, so products of band-limited
/// fields are exact.
pub fn constraint_residuals(s: &GridState) -> Result<Constraints> {
    let s = plain_state(s)?;
    let lorenz = s.a[0].dt("lorenz")?.sub(&s.a[1].value.deriv(1)).sub(&s.a[2].value.deriv(2)).l2_norm();
    let a = [s.a[0].value.clone(), s.a[1].value.clone(), s.a[2].value.clone()];
    let gauss = gauss_field(&a, &[s.f[0].value.clone(), s.f[1].value.clone()])?.l2_norm();
    let fa = curvature(&s.a)?;
    let compat = (0..3).map(|k| s.f[k].value.sub(&fa[k]).l2_norm()).fold(0.0, f64::max);
    Ok(Constraints { lorenz, gauss, compat })
}

/// Σ_{α,β} ∫|F_{αβ}|², each off-diagonal pair counted twice.
pub fn energy(s: &GridState) -> f64 {
    2.0 * s.f.iter().map(|p| p.value.l2_norm().powi(2)).sum::<f64>()
}

/// A pointwise group-valued field U with its spatial derivatives; U is
/// independent of time.
#[derive(Clone, Debug)]
pub struct GaugeField {
    ctx: Arc<SpectralContext>,
    u: Vec<CMatrix>,
    du: [Vec<CMatrix>; 2],
}

impl GaugeField {
    /// U = exp(X) pointwise.
    pub fn exp_of(x: &GridField) -> Result<Self> {
        let ctx = x.context().clone();
        let alg = ctx.algebra().clone();
        let np = ctx.grid().points();
        let dim = ctx.dim();
        let u: Vec<CMatrix> = (0..np)
            .into_par_iter()
            .map(|p| alg.group_exp(&LieElement::new((0..dim).map(|a| x.component(a)[p]).collect())))
            .collect::<Result<_>>()?;
        Self::from_matrices(ctx, u)
    }

    /// Derivatives are taken spectrally entry by entry.
    pub fn from_matrices(ctx: Arc<SpectralContext>, u: Vec<CMatrix>) -> Result<Self> {
        let np = ctx.grid().points();
        if u.len() != np {
            return Err(YmError::DimensionMismatch { expected: np, got: u.len() });
        }
        for m in &u {
            let (d, _) = unitarity_defect(m);
            if d > 1e-8 {
                return Err(YmError::NonUnitary { defect: d });
            }
        }
        let n = ctx.algebra().n();
        let mut du = [vec![CMatrix::zeros(n, n); np], vec![CMatrix::zeros(n, n); np]];
        for r in 0..n {
            for c in 0..n {
                let entry: Vec<Complex64> = u.iter().map(|m| m[(r, c)]).collect();
                for i in 1..=2 {
                    let d = ctx.derivative_complex(&entry, i);
                    for (p, z) in d.into_iter().enumerate() {
                        du[i - 1][p][(r, c)] = z;
                    }
                }
            }
        }
        Ok(GaugeField { ctx, u, du })
    }

    pub fn identity(ctx: Arc<SpectralContext>) -> Self {
        let n = ctx.algebra().n();
        let np = ctx.grid().points();
        let id = DMatrix::<Complex64>::identity(n, n);
        GaugeField { ctx, u: vec![id; np], du: [vec![CMatrix::zeros(n, n); np], vec![CMatrix::zeros(n, n); np]] }
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.u
    }

    /// Pointwise U X U^{-1} + shift·(∂U)U^{-1}, back in algebra coordinates.
    fn conjugate(&self, x: &GridField, shift: Option<(usize, f64)>) -> Result<GridField> {
        let alg = self.ctx.algebra().clone();
        let np = self.ctx.grid().points();
        let dim = self.ctx.dim();
        let per_point: Vec<Vec<f64>> = (0..np)
            .into_par_iter()
            .map(|p| {
                let xm = alg.to_matrix(&LieElement::new((0..dim).map(|a| x.component(a)[p]).collect()));
                let uinv = self.u[p].adjoint();
                let mut m = &self.u[p] * xm * &uinv;
                if let Some((i, c)) = shift {
                    m += &self.du[i - 1][p] * &uinv * Complex64::new(c, 0.0);
                }
                alg.from_matrix(&m).coeffs
            })
            .collect();
        let mut values = vec![0.0; dim * np];
        for (p, c) in per_point.into_iter().enumerate() {
            for a in 0..dim {
                values[a * np + p] = c[a];
            }
        }
        GridField::from_values(x.context().clone(), values)
    }
}

/// A'_α = UA_αU^{-1} − (∂_αU)U^{-1}, F' = UFU^{-1}, time derivatives
/// conjugated (U is static).
pub fn gauge_transform(u: &GaugeField, s: &GridState) -> Result<GridState> {
    let conj_pair = |p: &SpacetimePair<GridField>, shift: Option<(usize, f64)>| -> Result<SpacetimePair<GridField>> {
        Ok(SpacetimePair {
            value: u.conjugate(&p.value, shift)?,
            time_deriv: p.time_deriv.as_ref().map(|t| u.conjugate(t, None)).transpose()?,
        })
    };
    Ok(FieldState {
        a: [conj_pair(&s.a[0], None)?, conj_pair(&s.a[1], Some((1, -1.0)))?, conj_pair(&s.a[2], Some((2, -1.0)))?],
        f: [conj_pair(&s.f[0], None)?, conj_pair(&s.f[1], None)?, conj_pair(&s.f[2], None)?],
    })
}

/// Builds the full state from potential data (a, ȧ) via the data equations.
pub fn state_from_potential(a: [GridField; 3], adot: [GridField; 3]) -> Result<GridState> {
    let (f, fdot) = data_from_potential(&a, &adot)?;
    let p = |v: &GridField, d: &GridField| SpacetimePair::new(v.clone(), d.clone());
    Ok(FieldState {
        a: [p(&a[0], &adot[0]), p(&a[1], &adot[1]), p(&a[2], &adot[2])],
        f: [p(&f[0], &fdot[0]), p(&f[1], &fdot[1]), p(&f[2], &fdot[2])],
    })
}

/// Outcome of [`project_gauss_data`].
#[derive(Clone, Debug)]
pub struct Projection {
    pub state: GridState,
    pub iterations: usize,
    pub residual: f64,
}

/// Enforces the Gauss law on data: solves −D^jD_j y = G with G the Gauss
/// residual by preconditioned conjugate gradients (preconditioner: a shifted
/// inverse of −Δ on nonzero modes, the exact inverse of K on constants),
/// sets F_{0i} ← F_{0i} − D_i y, then rebuilds ȧᵢ from F_{0i} and ḟ from the
/// data equations so that compatibility and the Lorenz gauge are kept.
pub fn project_gauss_data(s: &GridState, tol: f64, max_iter: usize) -> Result<Projection> {
    let s = plain_state(s)?;
    let a = [s.a[0].value.clone(), s.a[1].value.clone(), s.a[2].value.clone()];
    let f0 = [s.f[0].value.clone(), s.f[1].value.clone()];
    let cov = |y: &GridField, i: usize| -> Result<GridField> { Ok(y.deriv(i).add(&a[i].bracket(y)?)) };
    // K y = −Σ_j D_j D_j y
    let apply_k = |y: &GridField| -> Result<GridField> {
        let mut acc = y.zero_like();
        for j in 1..=2 {
            acc = acc.sub(&cov(&cov(y, j)?, j)?);
        }
        Ok(acc)
    };
    // Constants are nearly in the kernel of K when A is small; K restricted
    // to them is the dim×dim matrix k0, inverted exactly in the preconditioner.
    let ctx = a[0].context().clone();
    let dim = ctx.dim();
    let area = ctx.grid().l.powi(2);
    let basis: Vec<GridField> =
        (0..dim).map(|b| GridField::from_fn(ctx.clone(), |c, _| if c == b { 1.0 } else { 0.0 })).collect();
    let mut k0 = DMatrix::<f64>::zeros(dim, dim);
    for b in 0..dim {
        let kb = apply_k(&basis[b])?;
        for c in 0..dim {
            k0[(c, b)] = basis[c].inner(&kb) / area;
        }
    }
    let k0_inv = k0.clone().try_inverse().unwrap_or_else(|| DMatrix::identity(dim, dim));
    // On Nyquist lines the spectral derivative vanishes and K acts like ad(a)²,
    // so the nonzero-mode symbol is 1/(|ξ̃|² + κ) with ξ̃ the derivative's symbol.
    let kappa = (k0.trace() / dim as f64).max(0.0);
    let grid = ctx.grid();
    let np = grid.points();
    let inv_symbol: Vec<f64> = (0..np)
        .map(|k| {
            let (j1, j2) = (k % grid.n, k / grid.n);
            if k == 0 {
                return 0.0;
            }
            let xi = ctx.xi(k);
            let t1 = if j1 == grid.n / 2 { 0.0 } else { xi[0] };
            let t2 = if j2 == grid.n / 2 { 0.0 } else { xi[1] };
            let d = t1 * t1 + t2 * t2 + kappa;
            if d > 0.0 { 1.0 / d } else { 0.0 }
        })
        .collect();
    let precond = |r: &GridField| -> Result<GridField> {
        let spec = r.spectrum();
        let mean = nalgebra::DVector::from_iterator(dim, (0..dim).map(|c| spec[c * np].re));
        let coarse = &k0_inv * mean;
        let out: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(i, z)| if i % np == 0 { Complex64::new(coarse[i / np], 0.0) } else { z * inv_symbol[i % np] })
            .collect();
        GridField::from_coefficients(ctx.clone(), out)
    };
    let g = gauss_field(&a, &f0)?;
    let mut y = g.zero_like();
    let mut r = g.clone();
    let mut res = r.l2_norm();
    let mut z = precond(&r)?;
    let mut p = z.clone();
    let mut rz = r.inner(&z);
    let mut it = 0;
    while res > tol {
        if it == max_iter {
            return Err(YmError::NonConvergence { iterations: it, residual: res });
        }
        let kp = apply_k(&p)?;
        let alpha = rz / p.inner(&kp);
        y = y.axpy(alpha, &p);
        r = r.axpy(-alpha, &kp);
        res = r.l2_norm();
        z = precond(&r)?;
        let rz_new = r.inner(&z);
        p = z.axpy(rz_new / rz, &p);
        rz = rz_new;
        it += 1;
    }
    let f01 = f0[0].sub(&cov(&y, 1)?);
    let f02 = f0[1].sub(&cov(&y, 2)?);
    // ȧᵢ = F_{0i} + ∂ᵢa₀ − [a₀, aᵢ]
    let adot1 = f01.add(&a[0].deriv(1)).sub(&a[0].bracket(&a[1])?);
    let adot2 = f02.add(&a[0].deriv(2)).sub(&a[0].bracket(&a[2])?);
    let adot0 = adot1.zero_like().add(&a[1].deriv(1)).add(&a[2].deriv(2));
    let mut out = state_from_potential(a.clone(), [adot0, adot1, adot2])?;
    let ctx = s.a[0].value.context().clone();
    out = rebase_state(&out, &ctx)?;
    let residual = constraint_residuals(&out)?.gauss;
    Ok(Projection { state: out, iterations: it, residual })
}

/// One row of the diagnostics time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub energy: f64,
    pub lorenz: f64,
    pub gauss: f64,
    pub compat: f64,
    /// Sup-norm difference between the two evolution paths, when run.
    pub twin_diff: Option<f64>,
    pub step_rejected: bool,
}

impl DiagnosticsRecord {
    pub fn measure(time: f64, s: &GridState) -> Result<Self> {
        let c = constraint_residuals(s)?;
        Ok(DiagnosticsRecord {
            time,
            energy: energy(s),
            lorenz: c.lorenz,
            gauss: c.gauss,
            compat: c.compat,
            twin_diff: None,
            step_rejected: false,
        })
    }

    pub const CSV_HEADER: &'static str = "t,energy,lorenz,gauss,compat,twinDiff";

    pub fn csv_row(&self) -> String {
        let twin = self.twin_diff.map_or_else(String::new, |d| format!("{d:.12e}"));
        format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            self.time, self.energy, self.lorenz, self.gauss, self.compat, twin
        )
    }

    pub fn is_finite(&self) -> bool {
        [self.time, self.energy, self.lorenz, self.gauss, self.compat].iter().all(|v| v.is_finite())
            && self.twin_diff.is_none_or(f64::is_finite)
    }
}
