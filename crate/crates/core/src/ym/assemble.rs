//! Right-hand sides of the wave system in Lorenz gauge: the null-form
//! assembly (M, N) and the direct expansions it must reproduce.
//!
//! Everything here is generic over [`Field`]. Derivatives that appear in
//! several terms are computed once per call through [`Jet`].

use crate::error::Result;
use crate::field::{eta, f_slot, Field, FieldState, ProductKind, SpacetimePair, Symbol};
use crate::nullforms::calligraphic_q;

type Pair<F> = SpacetimePair<F>;

/// A field with its time derivative and both spatial derivatives.
#[derive(Clone, Debug)]
pub struct Jet<F> {
    pub v: F,
    pub t: Option<F>,
    pub d: [F; 2],
}

impl<F: Field> Jet<F> {
    pub fn new(p: &Pair<F>) -> Self {
        Jet { d: [p.value.deriv(1), p.value.deriv(2)], v: p.value.clone(), t: p.time_deriv.clone() }
    }

    pub fn from_value(v: F) -> Self {
        Jet { d: [v.deriv(1), v.deriv(2)], v, t: None }
    }

    pub fn partial(&self, alpha: usize) -> Result<&F> {
        match alpha {
            0 => self.t.as_ref().ok_or(crate::error::YmError::MissingTimeDerivative("Jet")),
            i => Ok(&self.d[i - 1]),
        }
    }

    fn scaled(&self, c: f64) -> Self {
        Jet { v: self.v.scale(c), t: self.t.as_ref().map(|t| t.scale(c)), d: [self.d[0].scale(c), self.d[1].scale(c)] }
    }
}

fn br<F: Field>(a: &F, b: &F) -> Result<F> {
    a.bracket(b)
}

/// Sum of terms with coefficients; avoids a scale per term when c = ±1.
fn combine<F: Field>(terms: Vec<(f64, F)>) -> F {
    let mut it = terms.into_iter();
    let (c0, t0) = it.next().expect("non-empty");
    let mut acc = if c0 == 1.0 { t0 } else { t0.scale(c0) };
    for (c, t) in it {
        acc = if c == 1.0 {
            acc.add(&t)
        } else if c == -1.0 {
            acc.sub(&t)
        } else {
            acc.axpy(c, &t)
        };
    }
    acc
}

/// Q₁₂[u,v] on jets.
fn q12<F: Field>(u: &Jet<F>, v: &Jet<F>) -> Result<F> {
    Ok(br(&u.d[0], &v.d[1])?.sub(&br(&u.d[1], &v.d[0])?))
}

/// Q_{0i}[u,v] on jets.
fn q0i<F: Field>(i: usize, u: &Jet<F>, v: &Jet<F>) -> Result<F> {
    Ok(br(u.partial(0)?, &v.d[i - 1])?.sub(&br(&u.d[i - 1], v.partial(0)?)?))
}

/// Q₀[u,v] on jets.
fn q0<F: Field>(u: &Jet<F>, v: &Jet<F>) -> Result<F> {
    let mut acc = br(u.partial(0)?, v.partial(0)?)?.scale(-1.0);
    for i in 0..2 {
        acc = acc.add(&br(&u.d[i], &v.d[i])?);
    }
    Ok(acc)
}

/// Q_{βγ}[u,v] for a general index pair.
fn q_bg<F: Field>(beta: usize, gamma: usize, u: &Jet<F>, v: &Jet<F>) -> Result<F> {
    Ok(br(u.partial(beta)?, v.partial(gamma)?)?.sub(&br(u.partial(gamma)?, v.partial(beta)?)?))
}

/// The pieces of 𝒬[u,·] that depend only on the triple u:
/// w = R₂u₁ − R₁u₂ and zᵢ = Rᵢu₀.
struct CalQ<F> {
    w: Jet<F>,
    z: [Jet<F>; 2],
}

impl<F: Field> CalQ<F> {
    fn new(u: &[Pair<F>; 3]) -> Self {
        let w = u[1].value.apply(&Symbol::riesz(2)).sub(&u[2].value.apply(&Symbol::riesz(1)));
        CalQ {
            w: Jet::from_value(w),
            z: [Jet::new(&u[0].apply(&Symbol::riesz(1))), Jet::new(&u[0].apply(&Symbol::riesz(2)))],
        }
    }

    /// The same data for ∂ᵢu.
    fn spatial_derivative(&self, i: usize) -> Self {
        let dj = |j: &Jet<F>| Jet {
            v: j.d[i - 1].clone(),
            t: j.t.as_ref().map(|t| t.deriv(i)),
            d: [j.d[i - 1].deriv(1), j.d[i - 1].deriv(2)],
        };
        CalQ { w: dj(&self.w), z: [dj(&self.z[0]), dj(&self.z[1])] }
    }

    fn apply(&self, v: &Jet<F>) -> Result<F> {
        let mut acc = q12(&self.w, v)?;
        for i in 1..=2 {
            acc = acc.sub(&q0i(i, &self.z[i - 1], v)?);
        }
        Ok(acc)
    }
}

/// Curvature F_{01}, F_{02}, F_{12} of A (values only).
pub fn curvature<F: Field>(a: &[Pair<F>; 3]) -> Result<[F; 3]> {
    let mut out = Vec::with_capacity(3);
    for i in 1..=2 {
        let f = a[i].dt("curvature")?.sub(&a[0].value.deriv(i)).add(&a[0].value.bracket(&a[i].value)?);
        out.push(f);
    }
    out.push(a[2].value.deriv(1).sub(&a[1].value.deriv(2)).add(&a[1].value.bracket(&a[2].value)?));
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

/// F-data (f, ḟ) from potential data (a, ȧ), all four lines of the data
/// construction, with a⁰ = −a₀ in the last line.
pub fn data_from_potential<F: Field>(a: &[F; 3], adot: &[F; 3]) -> Result<([F; 3], [F; 3])> {
    let f01 = adot[1].sub(&a[0].deriv(1)).add(&a[0].bracket(&a[1])?);
    let f02 = adot[2].sub(&a[0].deriv(2)).add(&a[0].bracket(&a[2])?);
    let f12 = a[2].deriv(1).sub(&a[1].deriv(2)).add(&a[1].bracket(&a[2])?);
    let fd12 = adot[2]
        .deriv(1)
        .sub(&adot[1].deriv(2))
        .add(&adot[1].bracket(&a[2])?)
        .add(&a[1].bracket(&adot[2])?);
    let f = [f01, f02, f12];
    let get = |b: usize, g: usize| -> Option<F> {
        f_slot(b, g).map(|(k, s)| if s > 0.0 { f[k].clone() } else { f[k].scale(-1.0) })
    };
    let mut fdot0 = Vec::with_capacity(2);
    for i in 1..=2 {
        // ∂ʲf_{ji} + [a^α, f_{αi}]
        let mut acc = a[0].zero_like();
        for j in 1..=2 {
            if let Some(fji) = get(j, i) {
                acc = acc.add(&fji.deriv(j)).add(&a[j].bracket(&fji)?);
            }
        }
        let f0i = get(0, i).expect("off-diagonal");
        acc = acc.sub(&a[0].bracket(&f0i)?);
        fdot0.push(acc);
    }
    Ok((f.clone(), [fdot0[0].clone(), fdot0[1].clone(), fd12]))
}

/// Precomputed jets of a state.
struct StateJets<F> {
    a: [Jet<F>; 3],
    f: [Jet<F>; 3],
}

impl<F: Field> StateJets<F> {
    fn new(s: &FieldState<F>) -> Self {
        StateJets {
            a: [Jet::new(&s.a[0]), Jet::new(&s.a[1]), Jet::new(&s.a[2])],
            f: [Jet::new(&s.f[0]), Jet::new(&s.f[1]), Jet::new(&s.f[2])],
        }
    }

    fn f(&self, b: usize, g: usize) -> Option<Jet<F>> {
        f_slot(b, g).map(|(k, s)| if s > 0.0 { self.f[k].clone() } else { self.f[k].scaled(-1.0) })
    }
}

/// Right-hand side of the potential equation expanded directly:
/// −2[A^α,∂_αA_β] + [A^α,∂_βA_α] − [A^α,[A_α,A_β]].
pub fn ym4_rhs<F: Field>(a: &[Pair<F>; 3]) -> Result<[F; 3]> {
    let j = [Jet::new(&a[0]), Jet::new(&a[1]), Jet::new(&a[2])];
    let mut out = Vec::with_capacity(3);
    for beta in 0..3 {
        let mut terms = Vec::new();
        for al in 0..3 {
            let e = eta(al);
            terms.push((-2.0 * e, br(&j[al].v, j[beta].partial(al)?)?));
            terms.push((e, br(&j[al].v, j[al].partial(beta)?)?));
            terms.push((-e, br(&j[al].v, &br(&j[al].v, &j[beta].v)?)?));
        }
        out.push(combine(terms));
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

/// Right-hand side of the F equation expanded directly, for (β,γ) in
/// (01, 02, 12).
pub fn ymf2_rhs<F: Field>(s: &FieldState<F>) -> Result<[F; 3]> {
    let j = StateJets::new(s);
    let mut out = Vec::with_capacity(3);
    for &(beta, gamma) in &crate::field::F_INDICES {
        let fbg = j.f(beta, gamma).expect("off-diagonal");
        let aa = &j.a;
        let mut terms = Vec::new();
        for al in 0..3 {
            let e = eta(al);
            terms.push((-2.0 * e, br(&aa[al].v, fbg.partial(al)?)?));
            terms.push((2.0 * e, br(aa[al].partial(gamma)?, aa[beta].partial(al)?)?));
            terms.push((-2.0 * e, br(aa[al].partial(beta)?, aa[gamma].partial(al)?)?));
            terms.push((2.0 * e, br(aa[beta].partial(al)?, aa[gamma].partial(al)?)?));
            terms.push((2.0 * e, br(aa[al].partial(beta)?, aa[al].partial(gamma)?)?));
            terms.push((-e, br(&aa[al].v, &br(&aa[al].v, &fbg.v)?)?));
            if let Some(fab) = j.f(al, beta) {
                terms.push((2.0 * e, br(&fab.v, &br(&aa[al].v, &aa[gamma].v)?)?));
            }
            if let Some(fag) = j.f(al, gamma) {
                terms.push((-2.0 * e, br(&fag.v, &br(&aa[al].v, &aa[beta].v)?)?));
            }
            terms.push((-2.0 * e, br(&br(&aa[al].v, &aa[beta].v)?, &br(&aa[al].v, &aa[gamma].v)?)?));
        }
        out.push(combine(terms));
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

/// The four Γ^i_β of the decomposition of [A^α, ∂_βA_α], for β = 0, 1, 2.
/// The F₁₂ slot in Γ³ is read from `f12`.
pub fn gammas<F: Field>(a: &[Pair<F>; 3], f12: &Pair<F>) -> Result<[[F; 4]; 3]> {
    let j = [Jet::new(&a[0]), Jet::new(&a[1]), Jet::new(&a[2])];
    let shared = GammaShared::new(a, &j, f12)?;
    let mut out = Vec::with_capacity(3);
    for beta in 0..3 {
        out.push(shared.gamma(beta, a, &j)?);
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

struct GammaShared<F> {
    /// Λ^{-1}R_j ∂ₜA₀
    g1: [F; 2],
    /// Λ^{-2}∇·A and Λ^{-2}(∂₁A₂ − ∂₂A₁) as jets
    g: Jet<F>,
    w: Jet<F>,
    /// F₁₂ − [A₁,A₂] with its time derivative
    c: Pair<F>,
    /// Λ^{-2}∂_j c
    lc: [F; 2],
    /// Λ^{-2}A_j and (1 − Λ^{-2})A_j = A^df_j + A^cf_j
    la: [F; 2],
    pa: [F; 2],
}

impl<F: Field> GammaShared<F> {
    fn new(a: &[Pair<F>; 3], j: &[Jet<F>; 3], f12: &Pair<F>) -> Result<Self> {
        let a0t = a[0].dt("Gamma1")?;
        let lr = |i: usize| Symbol::lam(-1.0).with_riesz(i);
        let g1 = [a0t.apply(&lr(1)), a0t.apply(&lr(2))];
        let l2 = Symbol::lam(-2.0);
        let g = j[1].d[0].add(&j[2].d[1]).apply(&l2);
        let w = j[2].d[0].sub(&j[1].d[1]).apply(&l2);
        let c = f12.sub(&a[1].bracket(&a[2])?);
        let lc = [c.value.apply(&l2.clone().with_d(1)), c.value.apply(&l2.clone().with_d(2))];
        let la = [a[1].value.apply(&l2), a[2].value.apply(&l2)];
        let pa = [a[1].value.sub(&la[0]), a[2].value.sub(&la[1])];
        Ok(GammaShared { g1, g: Jet::from_value(g), w: Jet::from_value(w), c, lc, la, pa })
    }

    fn gamma(&self, beta: usize, a: &[Pair<F>; 3], j: &[Jet<F>; 3]) -> Result<[F; 4]> {
        let l2 = Symbol::lam(-2.0);
        let lr = |i: usize| Symbol::lam(-1.0).with_riesz(i);
        // Γ¹: u = A₀, v = ∂_βA₀ with ∂₀A₀ replaced by ∂ⁱAᵢ
        let (v, vt) = if beta == 0 {
            let vt = a[1].dt("Gamma1")?.deriv(1).add(&a[2].dt("Gamma1")?.deriv(2));
            (j[1].d[0].add(&j[2].d[1]), vt)
        } else {
            (j[0].d[beta - 1].clone(), a[0].dt("Gamma1")?.deriv(beta))
        };
        let mut g1 = br(&j[0].v, &v)?.scale(-1.0);
        for i in 1..=2 {
            g1 = g1.add(&br(&self.g1[i - 1], &vt.apply(&lr(i)))?);
        }

        // Γ²: with g = Λ^{-2}∇·A and w = Λ^{-2}(∂₁A₂ − ∂₂A₁),
        // Γ²_β = Q₁₂[w, ∂_βg] − Q₁₂[g, ∂_βw]
        let (gb, wb) = if beta == 0 {
            let (a1t, a2t) = (a[1].dt("Gamma2")?, a[2].dt("Gamma2")?);
            (a1t.deriv(1).add(&a2t.deriv(2)).apply(&l2), a2t.deriv(1).sub(&a1t.deriv(2)).apply(&l2))
        } else {
            (self.g.d[beta - 1].clone(), self.w.d[beta - 1].clone())
        };
        let g2 = q12(&self.w, &Jet::from_value(gb))?.sub(&q12(&self.g, &Jet::from_value(wb))?);

        // Γ³ = Σ_j [Λ^{-2}∂_j c, Λ^{-2}∂_β∂_j c] with c = F₁₂ − [A₁,A₂]
        let cb = if beta == 0 { self.c.dt("Gamma3")?.clone() } else { self.c.value.deriv(beta) };
        let mut g3 = br(&self.lc[0], &cb.apply(&l2.clone().with_d(1)))?;
        g3 = g3.add(&br(&self.lc[1], &cb.apply(&l2.clone().with_d(2)))?);

        // Γ⁴ = Σ_j [A^df_j + A^cf_j, Λ^{-2}∂_βA_j] + [Λ^{-2}A_j, ∂_βA_j]
        let mut g4: Option<F> = None;
        for jj in 1..=2 {
            let dba = j[jj].partial(beta)?;
            let t = br(&self.pa[jj - 1], &dba.apply(&l2))?.add(&br(&self.la[jj - 1], dba)?);
            g4 = Some(match g4 {
                None => t,
                Some(acc) => acc.add(&t),
            });
        }
        Ok([g1, g2, g3, g4.expect("two terms")])
    }
}

/// Right-hand sides (M_β, N_βγ) of the null-form system.
pub fn assemble_rhs<F: Field>(s: &FieldState<F>) -> Result<([F; 3], [F; 3])> {
    let j = StateJets::new(s);
    let a = &s.a;
    let l2 = Symbol::lam(-2.0);
    let lam_inv = Symbol::lam(-1.0);

    let la1 = [a[0].apply(&lam_inv), a[1].apply(&lam_inv), a[2].apply(&lam_inv)];
    let cq = CalQ::new(&la1);
    // Λ^{-2}A_α and its spatial derivatives
    let l2a: Vec<F> = (0..3).map(|al| j.a[al].v.apply(&l2)).collect();
    let l2da: Vec<[F; 2]> = (0..3).map(|al| [j.a[al].d[0].apply(&l2), j.a[al].d[1].apply(&l2)]).collect();
    // [A_α, A_β] for all pairs
    let mut aa = vec![vec![None; 3]; 3];
    for al in 0..3 {
        for be in (al + 1)..3 {
            let b = br(&j.a[al].v, &j.a[be].v)?;
            aa[be][al] = Some(b.scale(-1.0));
            aa[al][be] = Some(b);
        }
    }
    let comm = |x: usize, y: usize| -> Option<&F> { aa[x][y].as_ref() };

    let shared = GammaShared::new(a, &j.a, &s.f[2])?;
    let mut m = Vec::with_capacity(3);
    for beta in 0..3 {
        let mut terms = vec![(-2.0, cq.apply(&j.a[beta])?)];
        for g in shared.gamma(beta, a, &j.a)? {
            terms.push((1.0, g));
        }
        for al in 0..3 {
            let e = eta(al);
            terms.push((-2.0 * e, br(&l2a[al], j.a[beta].partial(al)?)?));
            if let Some(c) = comm(al, beta) {
                terms.push((-e, br(&j.a[al].v, c)?));
            }
        }
        m.push(combine(terms));
    }

    let mut n = Vec::with_capacity(3);
    for &(beta, gamma) in &crate::field::F_INDICES {
        let fbg = j.f(beta, gamma).expect("off-diagonal");
        let mut terms = vec![(-2.0, cq.apply(&fbg)?)];
        if beta == 0 {
            let i = gamma;
            terms.push((2.0, cq.spatial_derivative(i).apply(&j.a[0])?));
            for jj in 1..=2 {
                terms.push((-2.0, q0i(jj, &j.a[jj], &j.a[i])?));
            }
            terms.push((2.0, q0(&j.a[0], &j.a[i])?));
        } else {
            terms.push((2.0, cq.spatial_derivative(2).apply(&j.a[1])?));
            terms.push((-2.0, cq.spatial_derivative(1).apply(&j.a[2])?));
            terms.push((2.0, q0(&j.a[1], &j.a[2])?));
        }
        for al in 0..3 {
            let e = eta(al);
            terms.push((e, q_bg(beta, gamma, &j.a[al], &j.a[al])?));
            terms.push((-2.0 * e, br(&l2a[al], fbg.partial(al)?)?));
            if beta == 0 {
                terms.push((2.0 * e, br(&l2da[al][gamma - 1], j.a[0].partial(al)?)?));
            } else {
                terms.push((2.0 * e, br(&l2da[al][1], j.a[1].partial(al)?)?));
                terms.push((-2.0 * e, br(&l2da[al][0], j.a[2].partial(al)?)?));
            }
            terms.push((-e, br(&j.a[al].v, &br(&j.a[al].v, &fbg.v)?)?));
            if let (Some(fab), Some(c)) = (j.f(al, beta), comm(al, gamma)) {
                terms.push((2.0 * e, br(&fab.v, c)?));
            }
            if let (Some(fag), Some(c)) = (j.f(al, gamma), comm(al, beta)) {
                terms.push((-2.0 * e, br(&fag.v, c)?));
            }
            if let (Some(c1), Some(c2)) = (comm(al, beta), comm(al, gamma)) {
                terms.push((-2.0 * e, br(c1, c2)?));
            }
        }
        n.push(combine(terms));
    }
    Ok(([m[0].clone(), m[1].clone(), m[2].clone()], [n[0].clone(), n[1].clone(), n[2].clone()]))
}

/// 𝒬[Λ^{-1}A, φ] as a standalone operator.
pub fn calligraphic_q_lambda<F: Field>(a: &[Pair<F>; 3], phi: &Pair<F>) -> Result<F> {
    let lam_inv = Symbol::lam(-1.0);
    let la = [a[0].apply(&lam_inv), a[1].apply(&lam_inv), a[2].apply(&lam_inv)];
    calligraphic_q(&la, phi, ProductKind::Bracket)
}
