use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use ym_core::estimates::{
    check_angle_estimate, check_fk_symbol_bounds, check_gamma1_symbol, check_hyperbolic_leibniz,
    delta_integral_ellipse, elliptic_sweep, empirical_bilinear_constant, BilinearConfig, FkCase, SampleConfig,
};
use ym_core::evolve::convergence::{spatial_study, temporal_study};
use ym_core::evolve::{evolve_and_monitor, picard_iterate, EvolveConfig, PicardConfig, Stepper};
use ym_core::field::{Field, FieldState, SpacetimePair};
use ym_core::planewave::identities::run_identity_suite;
use ym_core::spectral::{GridField, SpectralContext, TorusGrid};
use ym_core::ym::*;
use ym_core::{Algebra, AlgebraSpec};

/// The criteria time themselves, so they run one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn report(id: u32, pass: bool, elapsed: Duration, detail: String) {
    println!("criterion {id}: {} ({:.1} s) {detail}", if pass { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn ctx(n: usize, spec: AlgebraSpec, dealias: bool) -> Arc<SpectralContext> {
    SpectralContext::new(TorusGrid::standard(n).unwrap(), Algebra::shared(spec), dealias)
}

fn constrained_data() -> GridState {
    let c = ctx(64, AlgebraSpec::SU2, true);
    let s = random_lorenz_state(&c, 1, 1e-2).unwrap();
    project_gauss_data(&s, 1e-10, 200).unwrap().state
}

#[test]
fn criterion_1_identity_suite() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut worst = (0.0, String::new());
    for spec in [AlgebraSpec::SU2, AlgebraSpec::SO3] {
        for seed in 0..20 {
            for c in run_identity_suite(spec, seed).unwrap() {
                if !(c.residual <= worst.0) {
                    worst = (c.residual, format!("{spec} seed {seed} {}", c.name));
                }
            }
        }
    }
    let el = t.elapsed();
    let pass = worst.0 <= 1e-10 && el.as_secs_f64() <= 60.0;
    report(1, pass, el, format!("max residual {:.3e} at {} (limit 1e-10, 60 s)", worst.0, worst.1));
    assert!(pass);
}

fn zero_state(c: &Arc<SpectralContext>) -> GridState {
    let z = SpacetimePair::new(GridField::zeros(c.clone()), GridField::zeros(c.clone()));
    FieldState { a: [z.clone(), z.clone(), z.clone()], f: [z.clone(), z.clone(), z] }
}

#[test]
fn criterion_2_curvature_and_gauge() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let (mut flat, mut equi, mut inv): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for spec in [AlgebraSpec::SU2, AlgebraSpec::SO3] {
        let c = ctx(64, spec, false);
        let x = GridField::from_fn(c.clone(), |a, x| match a {
            0 => 0.9 * x[0].sin() + 0.2 * x[1].cos(),
            1 => 0.6 * (x[1] - x[0]).cos(),
            2 => -0.5 * (2.0 * x[1]).sin(),
            _ => 0.1 * (x[0] + x[1]).sin(),
        });
        let u = GaugeField::exp_of(&x).unwrap();
        let pure = gauge_transform(&u, &zero_state(&c)).unwrap();
        for f in curvature(&pure.a).unwrap() {
            flat = flat.max(f.sup_norm());
        }
        let s = random_lorenz_state(&c, 5, 0.3).unwrap();
        let g = gauge_transform(&u, &s).unwrap();
        let fnew = curvature(&g.a).unwrap();
        let size = (0..3).map(|k| g.f[k].value.sup_norm()).fold(0.0, f64::max);
        for k in 0..3 {
            equi = equi.max(fnew[k].sub(&g.f[k].value).sup_norm() / size);
        }
        inv = inv.max(((energy(&g) - energy(&s)) / energy(&s)).abs());
    }
    let el = t.elapsed();
    let pass = flat <= 1e-8 && equi <= 1e-8 && inv <= 1e-8 && el.as_secs_f64() <= 60.0;
    report(2, pass, el, format!("pure gauge {flat:.3e}, equivariance {equi:.3e}, energy {inv:.3e} (limits 1e-8, 60 s)"));
    assert!(pass);
}

#[test]
fn criterion_3_constraint_propagation() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let s = constrained_data();
    let cfg = EvolveConfig { dt: 1e-3, t_end: 0.5, monitor_every: 10, twin: true, ..Default::default() };
    let out = evolve_and_monitor(&s, &cfg, &mut |_, _, _| Ok(())).unwrap();
    let e0 = out.records[0].energy;
    let (mut lor, mut gau, mut com, mut drift, mut twin): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in &out.records {
        lor = lor.max(r.lorenz);
        gau = gau.max(r.gauss);
        com = com.max(r.compat);
        drift = drift.max(((r.energy - e0) / e0).abs());
        twin = twin.max(r.twin_diff.unwrap());
    }
    let el = t.elapsed();
    let pass = lor <= 1e-6 && gau <= 1e-6 && com <= 1e-6 && drift <= 1e-6 && twin <= 1e-5 && el.as_secs_f64() <= 600.0;
    report(
        3,
        pass,
        el,
        format!(
            "lorenz {lor:.3e}, gauss {gau:.3e}, compat {com:.3e} (limit 1e-6), energy drift {drift:.3e} (1e-6), twin {twin:.3e} (1e-5), {} records",
            out.records.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_convergence() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let temporal = temporal_study(AlgebraSpec::SU2, 32, &[4e-3, 2e-3, 1e-3], 0.2, 1, 0.1).unwrap();
    let spatial = spatial_study(AlgebraSpec::SU2, &[32, 64, 128], 2e-3, 0.1, 1, 0.1).unwrap();
    let el = t.elapsed();
    let order = temporal.orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = spatial.ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = order >= 3.5 && ratio >= 10.0 && el.as_secs_f64() <= 600.0;
    report(
        4,
        pass,
        el,
        format!(
            "temporal order {order:.3} (≥ 3.5, differences {}), spatial ratio {ratio:.3e} (≥ 10, differences {})",
            sci(&temporal.differences),
            sci(&spatial.differences)
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_symbol_sampling() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let cfg = SampleConfig { count: 1_000_000, rng_seed: 1, ..Default::default() };
    let mut reports = vec![check_gamma1_symbol(&cfg).unwrap()];
    for case in FkCase::ALL {
        reports.push(check_fk_symbol_bounds(case, &cfg).unwrap());
    }
    reports.push(check_angle_estimate(&cfg, 0.5, 0.5, 0.5).unwrap());
    reports.push(check_hyperbolic_leibniz(&cfg).unwrap());
    let el = t.elapsed();
    let pass = reports.iter().all(|r| r.pass) && el.as_secs_f64() <= 300.0;
    let detail: Vec<String> =
        reports.iter().map(|r| format!("{} {:.4}/{} skipped {}", r.name, r.sup_ratio, r.threshold, r.skipped)).collect();
    report(5, pass, el, detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_6_delta_integrals() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let circle = (delta_integral_ellipse(2.0, [0.0, 0.0], (0.0, 0.0)).unwrap() - std::f64::consts::PI).abs();
    let sweep = elliptic_sweep(1.1, 100, 100, 4.0).unwrap();
    let el = t.elapsed();
    let pass = circle <= 1e-8 && sweep.pass && el.as_secs_f64() <= 300.0;
    report(
        6,
        pass,
        el,
        format!(
            "circle error {circle:.3e} (1e-8), sup I over {} points {:.4} (limit 4) at {:?}",
            sweep.samples, sweep.sup_ratio, sweep.argmax_point
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_picard_contraction() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let s = constrained_data();
    let r = picard_iterate(&s, &PicardConfig { iterations: 5, t_final: 0.25, ..Default::default() }).unwrap();
    let el = t.elapsed();
    let monotone = r.ratios.windows(2).all(|w| w[1] <= w[0]);
    let pass = r.ratios.len() >= 4 && monotone && r.ratios.iter().all(|&q| q <= 0.5) && el.as_secs_f64() <= 600.0;
    report(7, pass, el, format!("ratios {} (monotone, ≤ 0.5), differences {}", sci(&r.ratios), sci(&r.differences)));
    assert!(pass);
}

#[test]
fn criterion_8_half_wave_oracle() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let s = constrained_data();
    let every = 25;
    let run = |stepper: Stepper| {
        let cfg = EvolveConfig { dt: 1e-3, t_end: 0.5, stepper, twin: false, monitor_every: every, ..Default::default() };
        let mut kept = Vec::new();
        evolve_and_monitor(&s, &cfg, &mut |k, _, st| {
            if k % every == 0 {
                kept.push(st.components()?);
            }
            Ok(())
        })
        .unwrap();
        kept
    };
    let second = run(Stepper::Rk4);
    let half = run(Stepper::ExpRk2);
    let mut diff: f64 = 0.0;
    for (x, y) in second.iter().zip(half.iter()) {
        for (u, v) in x.iter().zip(y.iter()) {
            diff = diff.max(u.sub(v).sup_norm());
        }
    }
    let el = t.elapsed();
    let pass = second.len() == half.len() && second.len() > 1 && diff <= 1e-6 && el.as_secs_f64() <= 600.0;
    report(8, pass, el, format!("sup difference {diff:.3e} over {} instants in [0, 0.5] (limit 1e-6)", second.len()));
    assert!(pass);
}

#[test]
fn criterion_9_empirical_bilinear() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    let s11 = 3.0 / (2.0 * 1.1) + 0.01;
    for (r, s, l) in [(2.0, 0.8, -0.2), (1.1, s11, s11 - 1.0)] {
        let cfg = BilinearConfig { r, s, l, ..Default::default() };
        for id in [21, 24, 25, 35] {
            let rep = empirical_bilinear_constant(id, 32, &cfg).unwrap();
            pass &= rep.pass;
            lines.push(format!("{} r={r} growth {:.3}", rep.name, rep.sup_ratio));
        }
    }
    let el = t.elapsed();
    pass &= el.as_secs_f64() <= 900.0;
    report(9, pass, el, format!("{} (limit 2)", lines.join("; ")));
    assert!(pass);
}
