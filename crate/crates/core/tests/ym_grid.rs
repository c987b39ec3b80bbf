use std::sync::Arc;

use ym_core::algebra::AlgebraKind;
use ym_core::field::{Field, FieldState, SpacetimePair};
use ym_core::planewave::identities::pw_state_from_potential;
use ym_core::planewave::PlaneWaveField;
use ym_core::spectral::{GridField, SpectralContext, TorusGrid};
use ym_core::ym::*;
use ym_core::{Algebra, AlgebraSpec};

fn ctx(n: usize, spec: AlgebraSpec, dealias: bool) -> Arc<SpectralContext> {
    SpectralContext::new(TorusGrid::standard(n).unwrap(), Algebra::shared(spec), dealias)
}

fn zero_state(c: &Arc<SpectralContext>) -> GridState {
    let z = SpacetimePair::new(GridField::zeros(c.clone()), GridField::zeros(c.clone()));
    FieldState { a: [z.clone(), z.clone(), z.clone()], f: [z.clone(), z.clone(), z] }
}

/// X = 0.7 sin(x₁)E₁ + 0.5 cos(x₂ + x₁)E₂ − 0.4 sin(2x₂)E₃.
fn smooth_generator(c: &Arc<SpectralContext>) -> GridField {
    GridField::from_fn(c.clone(), |a, x| match a {
        0 => 0.7 * x[0].sin(),
        1 => 0.5 * (x[1] + x[0]).cos(),
        2 => -0.4 * (2.0 * x[1]).sin(),
        _ => 0.0,
    })
}

#[test]
fn pure_gauge_potential_is_flat() {
    for spec in [AlgebraSpec::SU2, AlgebraSpec::SO3] {
        let c = ctx(64, spec, false);
        let u = GaugeField::exp_of(&smooth_generator(&c)).unwrap();
        let s = gauge_transform(&u, &zero_state(&c)).unwrap();
        assert!(s.a[1].value.sup_norm() > 0.1);
        let f = curvature(&s.a).unwrap();
        for k in 0..3 {
            assert!(f[k].sup_norm() < 1e-8, "{spec}: F[{k}] = {:e}", f[k].sup_norm());
        }
    }
}

#[test]
fn curvature_equivariance_and_energy_invariance() {
    for spec in [AlgebraSpec::SU2, AlgebraSpec::SO3] {
        let c = ctx(64, spec, false);
        let s = random_lorenz_state(&c, 3, 0.3).unwrap();
        let u = GaugeField::exp_of(&smooth_generator(&c)).unwrap();
        let t = gauge_transform(&u, &s).unwrap();
        let f_new = curvature(&t.a).unwrap();
        for k in 0..3 {
            let r = f_new[k].sub(&t.f[k].value).sup_norm();
            assert!(r < 1e-8, "{spec}: equivariance {k}: {r:e}");
        }
        let (e0, e1) = (energy(&s), energy(&t));
        assert!(((e0 - e1) / e0).abs() < 1e-10);
    }
}

#[test]
fn identity_gauge_leaves_state() {
    let c = ctx(16, AlgebraSpec::SU2, false);
    let s = random_lorenz_state(&c, 1, 0.1).unwrap();
    let t = gauge_transform(&GaugeField::identity(c.clone()), &s).unwrap();
    for k in 0..3 {
        assert!(t.a[k].value.sub(&s.a[k].value).sup_norm() < 1e-14);
        assert!(t.f[k].dt("f").unwrap().sub(s.f[k].dt("f").unwrap()).sup_norm() < 1e-14);
    }
}

#[test]
fn non_unitary_gauge_is_rejected() {
    let c = ctx(8, AlgebraSpec::SU2, false);
    let m = nalgebra::DMatrix::from_element(2, 2, num_complex::Complex64::new(1.0, 0.0));
    let err = GaugeField::from_matrices(c, vec![m; 64]).unwrap_err();
    assert!(matches!(err, ym_core::YmError::NonUnitary { .. }));
}

#[test]
fn curvature_simple_cases() {
    let c = ctx(16, AlgebraSpec::SU2, false);
    let s = zero_state(&c);
    assert!(curvature(&s.a).unwrap().iter().all(|f| f.sup_norm() == 0.0));
    // constant commuting potential: all along E₁
    let k = GridField::from_fn(c.clone(), |a, _| if a == 0 { 0.3 } else { 0.0 });
    let p = SpacetimePair::new(k.clone(), k.zero_like());
    let f = curvature(&[p.clone(), p.clone(), p]).unwrap();
    assert!(f.iter().all(|f| f.sup_norm() < 1e-15));
}

#[test]
fn data_equations() {
    let c = ctx(16, AlgebraSpec::SO3, false);
    let z = GridField::zeros(c.clone());
    let zs = [z.clone(), z.clone(), z.clone()];
    let (f, fd) = data_from_potential(&zs, &zs).unwrap();
    assert!(f.iter().chain(fd.iter()).all(|u| u.sup_norm() == 0.0));

    let s = random_lorenz_state(&c, 5, 0.2).unwrap();
    let fa = curvature(&s.a).unwrap();
    for k in 0..3 {
        assert!(fa[k].sub(&s.f[k].value).sup_norm() < 1e-12);
    }

    // abelian: f₁₂ = ∂₁a₂ − ∂₂a₁
    let ab = ctx(16, AlgebraSpec::new(AlgebraKind::SO, 2).unwrap(), false);
    let a = [0, 1, 2].map(|k| random_smooth_field(&ab, 40 + k, 1.0, 3.0).unwrap());
    let (f, _) = data_from_potential(&a, &a).unwrap();
    assert!(f[2].sub(&a[2].deriv(1).sub(&a[1].deriv(2))).sup_norm() < 1e-13);
}

#[test]
fn constraint_residual_examples() {
    // Lorenz plane waves on lattice frequencies sampled onto the grid
    let alg = Algebra::shared(AlgebraSpec::SU2);
    let c = SpectralContext::new(TorusGrid::standard(32).unwrap(), alg.clone(), false);
    let pw = integer_lorenz_waves(&alg);
    let ps = pw_state_from_potential(&pw).unwrap();
    let s = sample_state(&c, &ps);
    let r = constraint_residuals(&s).unwrap();
    assert!(r.lorenz < 1e-10 && r.compat < 1e-10, "{r:?}");

    // A = 0, F random: compat = ‖F‖
    let mut s = zero_state(&c);
    let f = random_smooth_field(&c, 9, 1.0, 3.0).unwrap();
    s.f[1].value = f.clone();
    let r = constraint_residuals(&s).unwrap();
    assert!((r.compat - f.l2_norm()).abs() < 1e-12);

    // abelian F_{i0} = ∂ᵢφ has Gauss residual ‖Δφ‖ > 0
    let mut s = zero_state(&c);
    let phi = GridField::from_fn(c.clone(), |a, x| if a == 0 { (2.0 * x[0] + x[1]).sin() } else { 0.0 });
    s.f[0].value = phi.deriv(1).scale(-1.0);
    s.f[1].value = phi.deriv(2).scale(-1.0);
    let r = constraint_residuals(&s).unwrap();
    let lap = phi.deriv(1).deriv(1).add(&phi.deriv(2).deriv(2));
    assert!(r.gauss > 1.0 && (r.gauss - lap.l2_norm()).abs() < 1e-10);
}

/// Real Lorenz-compatible plane waves with integer spatial frequencies.
fn integer_lorenz_waves(alg: &Arc<Algebra>) -> [PlaneWaveField; 3] {
    use ym_core::planewave::{CoeffSpace, Mode};
    let c = |re: f64, im: f64| num_complex::Complex64::new(re, im);
    let waves = [(1.5, [1.0, -2.0]), (-0.75, [0.0, 3.0]), (2.0, [-2.0, -1.0])];
    let mut m = [Vec::new(), Vec::new(), Vec::new()];
    for (j, (tau, xi)) in waves.into_iter().enumerate() {
        let a1: Vec<_> = (0..3).map(|a| c(0.3 * (a + j) as f64 - 0.4, 0.2 * a as f64)).collect();
        let a2: Vec<_> = (0..3).map(|a| c(0.1 * j as f64, 0.5 - 0.3 * a as f64)).collect();
        let a0 = a1.iter().zip(&a2).map(|(x, y)| (x * xi[0] + y * xi[1]) / tau).collect();
        m[0].push(Mode { tau, xi, coeff: a0 });
        m[1].push(Mode { tau, xi, coeff: a1 });
        m[2].push(Mode { tau, xi, coeff: a2 });
    }
    m.map(|modes| PlaneWaveField::new(alg.clone(), CoeffSpace::Lie, modes).unwrap().real_part())
}

fn sample_state(c: &Arc<SpectralContext>, ps: &FieldState<PlaneWaveField>) -> GridState {
    let g = |p: &PlaneWaveField| GridField::from_plane_wave(c.clone(), p, 0.0).unwrap();
    let pair = |p: &SpacetimePair<PlaneWaveField>| SpacetimePair::new(g(&p.value), g(p.time_deriv.as_ref().unwrap()));
    FieldState { a: [pair(&ps.a[0]), pair(&ps.a[1]), pair(&ps.a[2])], f: [pair(&ps.f[0]), pair(&ps.f[1]), pair(&ps.f[2])] }
}

#[test]
fn energy_examples() {
    let c = ctx(16, AlgebraSpec::SU2, false);
    assert_eq!(energy(&zero_state(&c)), 0.0);
    let mut s = zero_state(&c);
    let cc = 0.7;
    s.f[2].value = GridField::from_fn(c.clone(), |a, _| if a == 0 { cc } else { 0.0 });
    let want = 2.0 * (2.0 * std::f64::consts::PI).powi(2) * cc * cc;
    assert!((energy(&s) - want).abs() < 1e-12 * want);
}

#[test]
fn assembly_trivial_cases() {
    let c = ctx(16, AlgebraSpec::SU2, true);
    let (m, n) = assemble_rhs(&zero_state(&c)).unwrap();
    assert!(m.iter().chain(n.iter()).all(|u| u.sup_norm() == 0.0));
    let ab = ctx(16, AlgebraSpec::new(AlgebraKind::SO, 2).unwrap(), true);
    let s = random_lorenz_state(&ab, 2, 0.5).unwrap();
    let (m, n) = assemble_rhs(&s).unwrap();
    assert!(m.iter().chain(n.iter()).all(|u| u.sup_norm() == 0.0));
}

#[test]
fn gauss_projection() {
    // abelian: one iteration
    let ab = ctx(32, AlgebraSpec::new(AlgebraKind::SO, 2).unwrap(), true);
    let s = random_lorenz_state(&ab, 4, 0.5).unwrap();
    assert!(constraint_residuals(&s).unwrap().gauss > 1e-3);
    let p = project_gauss_data(&s, 1e-10, 25).unwrap();
    assert_eq!(p.iterations, 1);
    assert!(p.residual < 1e-10);

    // small nonabelian data at N = 64
    for spec in [AlgebraSpec::SU2, AlgebraSpec::SO3] {
        let c = ctx(64, spec, true);
        let s = random_lorenz_state(&c, 8, 1e-2).unwrap();
        let p = project_gauss_data(&s, 1e-10, 25).unwrap();
        assert!(p.iterations <= 25 && p.residual <= 1e-10, "{spec}: {} its, {:e}", p.iterations, p.residual);
        let r = constraint_residuals(&p.state).unwrap();
        assert!(r.lorenz < 1e-12 && r.compat < 1e-12, "{r:?}");
        // already constrained: unchanged
        let q = project_gauss_data(&p.state, 1e-10, 25).unwrap();
        assert_eq!(q.iterations, 0);
        assert!(q.state.f[0].value.sub(&p.state.f[0].value).sup_norm() < 1e-10);
    }

    let c = ctx(32, AlgebraSpec::SU2, true);
    let s = random_lorenz_state(&c, 8, 1.0).unwrap();
    assert!(matches!(project_gauss_data(&s, 1e-14, 1), Err(ym_core::YmError::NonConvergence { .. })));
}

#[test]
fn diagnostics_csv() {
    let c = ctx(16, AlgebraSpec::SU2, true);
    let s = random_constrained_state(&c, 1, 1e-2).unwrap();
    let d = DiagnosticsRecord::measure(0.25, &s).unwrap();
    assert!(d.is_finite() && d.energy > 0.0);
    let row = d.csv_row();
    assert_eq!(row.split(',').count(), DiagnosticsRecord::CSV_HEADER.split(',').count());
    assert!(row.starts_with("2.5"));
}
