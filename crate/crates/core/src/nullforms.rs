//! Null forms Q₀, Q₀ᵢ, Q₁₂, their D^{-1}-normalised versions, the combination
//! 𝒬 and Γ¹, generic over [`Field`].
//!
//! Index raising uses diag(−1, 1, 1): ∂⁰ = −∂ₜ and ∂ⁱ = ∂ᵢ. The ordinary
//! forms use the field's ordinary product, the commutator forms the bracket.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, YmError};
use crate::field::{japanese, Field, ProductKind, SpacetimePair, Symbol};

type Pair<F> = SpacetimePair<F>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NullFormKind {
    Q0,
    Q0i(usize),
    Q12,
    LowerQ0,
    LowerQ0i(usize),
    LowerQ12,
    CalligraphicQ,
    Gamma1,
}

impl NullFormKind {
    fn name(self) -> &'static str {
        match self {
            NullFormKind::Q0 => "Q0",
            NullFormKind::Q0i(_) => "Q0i",
            NullFormKind::Q12 => "Q12",
            NullFormKind::LowerQ0 => "q0",
            NullFormKind::LowerQ0i(_) => "q0i",
            NullFormKind::LowerQ12 => "q12",
            NullFormKind::CalligraphicQ => "CalligraphicQ",
            NullFormKind::Gamma1 => "Gamma1",
        }
    }
}

fn product_kind<F: Field>(commutator: bool) -> ProductKind {
    if commutator {
        ProductKind::Bracket
    } else {
        F::ORDINARY
    }
}

/// Q_{αβ} with product `p`: p(∂_αu, ∂_βv) − p(∂_βu, ∂_αv).
pub fn q_ab<F: Field>(alpha: usize, beta: usize, u: &Pair<F>, v: &Pair<F>, p: ProductKind) -> Result<F> {
    let who = if alpha == 0 || beta == 0 { "Q0i" } else { "Q12" };
    let t1 = u.partial(alpha, who)?.product(&v.partial(beta, who)?, p)?;
    let t2 = u.partial(beta, who)?.product(&v.partial(alpha, who)?, p)?;
    Ok(t1.sub(&t2))
}

/// Q₀ with product `p`: −p(∂ₜu, ∂ₜv) + Σᵢ p(∂ᵢu, ∂ᵢv).
pub fn q0<F: Field>(u: &Pair<F>, v: &Pair<F>, p: ProductKind) -> Result<F> {
    let mut acc = u.dt("Q0")?.product(v.dt("Q0")?, p)?.scale(-1.0);
    for i in 1..=2 {
        acc = acc.add(&u.value.deriv(i).product(&v.value.deriv(i), p)?);
    }
    Ok(acc)
}

/// Q₁₂ needs no time derivatives.
pub fn q12_values<F: Field>(u: &F, v: &F, p: ProductKind) -> Result<F> {
    let t1 = u.deriv(1).product(&v.deriv(2), p)?;
    let t2 = u.deriv(2).product(&v.deriv(1), p)?;
    Ok(t1.sub(&t2))
}

fn dinv<F: Field>(u: &Pair<F>) -> Pair<F> {
    u.apply(&Symbol::dpow(-1.0))
}

/// Null form of the given kind; `commutator` selects the bracketed version.
pub fn null_form<F: Field>(kind: NullFormKind, u: &Pair<F>, v: &Pair<F>, commutator: bool) -> Result<F> {
    let p = product_kind::<F>(commutator);
    match kind {
        NullFormKind::Q0 => q0(u, v, p),
        NullFormKind::Q0i(i) => q_ab(0, check_index(i)?, u, v, p),
        NullFormKind::Q12 => q12_values(&u.value, &v.value, p),
        NullFormKind::LowerQ0 => q0(&dinv(u), &dinv(v), p),
        NullFormKind::LowerQ0i(i) => q_ab(0, check_index(i)?, &dinv(u), &dinv(v), p),
        NullFormKind::LowerQ12 => q12_values(&dinv(u).value, &dinv(v).value, p),
        NullFormKind::Gamma1 => gamma1(u, v, p),
        NullFormKind::CalligraphicQ => Err(YmError::InvalidParameter(format!(
            "{} takes a triple, use calligraphic_q",
            kind.name()
        ))),
    }
}

fn check_index(i: usize) -> Result<usize> {
    if i == 1 || i == 2 {
        Ok(i)
    } else {
        Err(YmError::InvalidParameter(format!("spatial index {i} not in {{1, 2}}")))
    }
}

/// 𝒬[u, v] = Q₁₂[R₂u₁ − R₁u₂, v] − Σᵢ Q₀ᵢ[Rᵢu₀, v].
///
/// With this sign [A^α, ∂_αφ] = 𝒬[Λ^{-1}A, φ] + [Λ^{-2}A^α, ∂_αφ] holds
/// under the Lorenz gauge; the plane-wave identity suite checks it exactly.
pub fn calligraphic_q<F: Field>(u: &[Pair<F>; 3], v: &Pair<F>, p: ProductKind) -> Result<F> {
    let w = u[1].value.apply(&Symbol::riesz(2)).sub(&u[2].value.apply(&Symbol::riesz(1)));
    let mut acc = q12_values(&w, &v.value, p)?;
    for i in 1..=2 {
        let z = u[0].apply(&Symbol::riesz(i));
        acc = acc.sub(&q_ab(0, i, &z, v, p)?);
    }
    Ok(acc)
}

/// Γ¹(u, v) = −uv + Σ_j (Λ^{-1}R_j ∂ₜu)(Λ^{-1}R_j ∂ₜv), with product `p`.
pub fn gamma1<F: Field>(u: &Pair<F>, v: &Pair<F>, p: ProductKind) -> Result<F> {
    let mut acc = u.value.product(&v.value, p)?.scale(-1.0);
    let (ut, vt) = (u.dt("Gamma1")?, v.dt("Gamma1")?);
    for j in 1..=2 {
        let s = Symbol::lam(-1.0).with_riesz(j);
        acc = acc.add(&ut.apply(&s).product(&vt.apply(&s), p)?);
    }
    Ok(acc)
}

/// Scalar symbols for plane-wave inputs (τ, ξ) and (λ, η).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolKind {
    /// τλ − ξ·η
    Q0,
    /// ξᵢλ − τηᵢ
    Q0i(usize),
    /// −ξ₁η₂ + ξ₂η₁
    Q12,
    /// (τλ − ξ·η)/(|ξ||η|)
    LowerQ0,
    /// (ξᵢλ − τηᵢ)/(|ξ||η|)
    LowerQ0i(usize),
    /// (ξ₁η₂ − ξ₂η₁)/(|ξ||η|), the signed sine of the angle
    LowerQ12,
    /// −1 + (ξ·η)τλ/(⟨ξ⟩²⟨η⟩²)
    Gamma1,
    /// ⟨ξ⟩⟨η⟩ − ξ·η
    Angular0,
    /// −⟨ξ⟩ηᵢ + ξᵢ⟨η⟩
    Angular0i(usize),
    /// −ξ₁η₂ + ξ₂η₁
    Angular12,
}

pub fn symbol_eval(kind: SymbolKind, xi: [f64; 2], tau: f64, eta: [f64; 2], lambda: f64) -> Result<Complex64> {
    let dot = xi[0] * eta[0] + xi[1] * eta[1];
    let cross = xi[0] * eta[1] - xi[1] * eta[0];
    let comp = |v: [f64; 2], i: usize| -> Result<f64> { Ok(v[check_index(i)? - 1]) };
    let norms = || -> Result<f64> {
        let (a, b) = (xi[0].hypot(xi[1]), eta[0].hypot(eta[1]));
        if a == 0.0 || b == 0.0 {
            Err(YmError::InvalidParameter("q-symbols need nonzero ξ and η".into()))
        } else {
            Ok(a * b)
        }
    };
    let re = match kind {
        SymbolKind::Q0 => tau * lambda - dot,
        SymbolKind::Q0i(i) => comp(xi, i)? * lambda - tau * comp(eta, i)?,
        SymbolKind::Q12 | SymbolKind::Angular12 => -cross,
        SymbolKind::LowerQ0 => (tau * lambda - dot) / norms()?,
        SymbolKind::LowerQ0i(i) => (comp(xi, i)? * lambda - tau * comp(eta, i)?) / norms()?,
        SymbolKind::LowerQ12 => cross / norms()?,
        SymbolKind::Gamma1 => {
            let (jx, je) = (japanese(xi), japanese(eta));
            -1.0 + dot * tau * lambda / (jx * jx * je * je)
        }
        SymbolKind::Angular0 => japanese(xi) * japanese(eta) - dot,
        SymbolKind::Angular0i(i) => -japanese(xi) * comp(eta, i)? + comp(xi, i)? * japanese(eta),
    };
    Ok(Complex64::new(re, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Algebra, AlgebraSpec};
    use crate::planewave::{pw_random, pw_residual_norm, PlaneWaveField};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn su2() -> Arc<Algebra> {
        Algebra::shared(AlgebraSpec::SU2)
    }

    fn pair(seed: u64) -> Pair<PlaneWaveField> {
        pw_random(su2(), 4, seed).time_pair()
    }

    #[test]
    fn commutator_q12_is_sum_of_ordinary_forms() {
        for seed in 0..10 {
            let (u, v) = (pair(2 * seed), pair(2 * seed + 1));
            let c = null_form(NullFormKind::Q12, &u, &v, true).unwrap();
            let o = null_form(NullFormKind::Q12, &u, &v, false)
                .unwrap()
                .add(&null_form(NullFormKind::Q12, &v, &u, false).unwrap());
            assert!(pw_residual_norm(&c.to_matrix_space().sub(&o)) < 1e-12);
            let c0 = null_form(NullFormKind::Q0, &u, &v, true).unwrap();
            let o0 = null_form(NullFormKind::Q0, &u, &v, false)
                .unwrap()
                .sub(&null_form(NullFormKind::Q0, &v, &u, false).unwrap());
            assert!(pw_residual_norm(&c0.to_matrix_space().sub(&o0)) < 1e-12);
        }
    }

    #[test]
    fn abelian_scalar_q12_vanishes() {
        let u = pair(3);
        let q = q12_values(&u.value, &u.value, ProductKind::Componentwise).unwrap();
        assert!(pw_residual_norm(&q) < 1e-13);
    }

    #[test]
    fn q0_symbol_on_single_modes() {
        let alg = su2();
        let u = PlaneWaveField::single(alg.clone(), 1.5, [1.0, -2.0], &[1.0, 0.0, 0.0]).unwrap();
        let v = PlaneWaveField::single(alg, -0.5, [0.5, 3.0], &[1.0, 0.0, 0.0]).unwrap();
        let q = q0(&u.time_pair(), &v.time_pair(), ProductKind::Componentwise).unwrap();
        let want = symbol_eval(SymbolKind::Q0, [1.0, -2.0], 1.5, [0.5, 3.0], -0.5).unwrap();
        assert!((q.modes()[0].coeff[0] - want).norm() < 1e-14);
    }

    #[test]
    fn gamma1_matches_symbol() {
        let alg = su2();
        let (xi, tau, eta, lam) = ([1.0, 2.0], 0.75, [-1.5, 0.5], -2.0);
        let u = PlaneWaveField::single(alg.clone(), tau, xi, &[1.0, 0.0, 0.0]).unwrap();
        let v = PlaneWaveField::single(alg, lam, eta, &[1.0, 0.0, 0.0]).unwrap();
        let g = gamma1(&u.time_pair(), &v.time_pair(), ProductKind::Componentwise).unwrap();
        let want = symbol_eval(SymbolKind::Gamma1, xi, tau, eta, lam).unwrap();
        assert!((g.modes()[0].coeff[0] - want).norm() < 1e-14);
    }

    #[test]
    fn gamma1_static_and_zero() {
        let alg = su2();
        let u = PlaneWaveField::single(alg.clone(), 0.0, [1.0, 0.0], &[1.0, 0.5, 0.0]).unwrap();
        let v = PlaneWaveField::single(alg, 0.0, [0.0, 2.0], &[0.0, 0.5, 1.0]).unwrap();
        let g = gamma1(&u.time_pair(), &v.time_pair(), ProductKind::Bracket).unwrap();
        let want = u.bracket(&v).unwrap().scale(-1.0);
        assert!(pw_residual_norm(&g.sub(&want)) < 1e-14);
        let z = v.zero_like().time_pair();
        assert!(gamma1(&u.time_pair(), &z, ProductKind::Bracket).unwrap().is_empty());
    }

    #[test]
    fn calligraphic_q_trivial_cases() {
        let u = [pair(1), pair(2), pair(3)];
        let v = pair(4);
        let zero = [v.zero_like(), v.zero_like(), v.zero_like()];
        assert!(calligraphic_q(&zero, &v, ProductKind::Bracket).unwrap().is_empty());
        // abelian: brackets of scalar multiples of one basis vector vanish
        let alg = su2();
        let s = |tau, xi, c: f64| PlaneWaveField::single(alg.clone(), tau, xi, &[c, 0.0, 0.0]).unwrap().time_pair();
        let ua = [s(1.0, [1.0, 0.0], 0.3), s(0.5, [0.0, 1.0], 1.0), s(-1.0, [2.0, 1.0], 0.7)];
        let va = s(2.0, [1.0, 1.0], 1.0);
        assert!(pw_residual_norm(&calligraphic_q(&ua, &va, ProductKind::Bracket).unwrap()) < 1e-14);
        assert!(calligraphic_q(&u, &v, ProductKind::Bracket).is_ok());
    }

    #[test]
    fn missing_time_derivative_is_reported() {
        let u = Pair::value_only(pw_random(su2(), 2, 1));
        let v = pair(2);
        let err = null_form(NullFormKind::Q0, &u, &v, true).unwrap_err();
        assert_eq!(err, YmError::MissingTimeDerivative("Q0"));
        assert!(null_form(NullFormKind::Q12, &u, &v, true).is_ok());
    }

    #[test]
    fn symbol_examples() {
        let q = symbol_eval(SymbolKind::LowerQ12, [1.0, 0.0], 0.0, [0.0, 1.0], 0.0).unwrap();
        assert_eq!(q.re, 1.0);
        let q = symbol_eval(SymbolKind::LowerQ12, [2.0, 1.0], 0.0, [4.0, 2.0], 0.0).unwrap();
        assert_eq!(q.re, 0.0);
        let q = symbol_eval(SymbolKind::Angular0, [3.0, 4.0], 0.0, [3.0, 4.0], 0.0).unwrap();
        assert!((q.re - 1.0).abs() < 1e-12);
        assert!(symbol_eval(SymbolKind::LowerQ0, [0.0, 0.0], 1.0, [1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn sine_formula_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1_000_000 {
            let xi = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
            let eta = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
            let (a, b) = (f64::atan2(xi[1], xi[0]), f64::atan2(eta[1], eta[0]));
            let s = symbol_eval(SymbolKind::LowerQ12, xi, 0.0, eta, 0.0).unwrap().re;
            assert!((s.abs() - (b - a).sin().abs()).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn null_forms_are_bilinear(s in 0u64..5_000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let (u, w, v) = (pair(s), pair(s + 10_000), pair(s + 20_000));
            let combo = u.scale(a).add(&w.scale(b));
            for kind in [NullFormKind::Q0, NullFormKind::Q0i(1), NullFormKind::Q0i(2), NullFormKind::Q12,
                         NullFormKind::LowerQ12, NullFormKind::Gamma1] {
                let lhs = null_form(kind, &combo, &v, true).unwrap();
                let rhs = null_form(kind, &u, &v, true).unwrap().scale(a)
                    .add(&null_form(kind, &w, &v, true).unwrap().scale(b));
                prop_assert!(pw_residual_norm(&lhs.sub(&rhs)) < 1e-12);
            }
        }
    }
}
