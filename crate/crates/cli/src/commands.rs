//! The six commands. Each writes its primary artifact and returns an outcome.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use ym_core::estimates::{
    check_angle_estimate, check_fk_symbol_bounds, check_gamma1_symbol, check_hyperbolic_leibniz, delta_integral_ellipse,
    elliptic_sweep, empirical_bilinear_constant, BilinearConfig, FkCase,
};
use ym_core::evolve::convergence::{spatial_study, temporal_study, SpatialStudy, TemporalStudy};
use ym_core::evolve::{evolve_and_monitor, picard_iterate};
use ym_core::planewave::identities::run_identity_suite;
use ym_core::spectral::write_snapshot;
use ym_core::ym::{project_gauss_data, random_lorenz_state, DiagnosticsRecord, GridState};
use ym_core::{Algebra, BoundReport, SpectralContext, TorusGrid, YmError};

use crate::config::{CommandName, EstimateSet, RunConfig};

/// What a finished command hands back to the manifest.
pub struct Outcome {
    pub pass: bool,
    pub artifacts: Vec<PathBuf>,
    /// Diagnostics of the last good state when a run aborts.
    pub last: Option<DiagnosticsRecord>,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical { error: YmError, last: Option<DiagnosticsRecord> },
    Io(String),
}

impl From<YmError> for Failure {
    fn from(e: YmError) -> Self {
        match e {
            YmError::InvalidParameter(m) => Failure::Config(m),
            YmError::UnknownEstimate(id) => Failure::Config(format!("unknown estimate id {id}")),
            e => Failure::Numerical { error: e, last: None },
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_jsonl(path: &Path, reports: &[BoundReport]) -> Result<(), Failure> {
    let mut w = create(path)?;
    for r in reports {
        writeln!(w, "{}", serde_json::to_string(r).map_err(|e| Failure::Io(e.to_string()))?)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, Failure> {
    match cfg.command {
        CommandName::Simulate => simulate(cfg),
        CommandName::CheckIdentities => check_identities(cfg),
        CommandName::CheckSymbols => check_symbols(cfg),
        CommandName::CheckEstimates => check_estimates(cfg),
        CommandName::Convergence => convergence(cfg),
        CommandName::Picard => picard(cfg),
    }
}

fn context(cfg: &RunConfig, dealias: bool) -> Result<std::sync::Arc<SpectralContext>, Failure> {
    let grid = TorusGrid::new(cfg.grid.n, cfg.grid.l)?;
    Ok(SpectralContext::new(grid, Algebra::shared(cfg.algebra), dealias))
}

/// Random Lorenz data projected onto the Gauss constraint.
fn initial_data(cfg: &RunConfig, scale: f64, dealias: bool) -> Result<GridState, Failure> {
    let ctx = context(cfg, dealias)?;
    let s = random_lorenz_state(&ctx, cfg.seed, scale)?;
    Ok(project_gauss_data(&s, cfg.simulate.projection_tol, cfg.simulate.projection_max_iter)?.state)
}

fn snapshot_path(out: &Path, step: usize) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}.step{step:07}.ymf2"))
}

fn simulate(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let out = cfg.out_path();
    let s0 = initial_data(cfg, cfg.simulate.scale, cfg.evolve.dealias)?;
    let every = cfg.simulate.snapshot_every;
    let mut artifacts = vec![out.clone()];
    let mut last: Option<(f64, GridState)> = None;
    let mut io_error = None;
    let result = evolve_and_monitor(&s0, &cfg.evolve, &mut |k, t, s| {
        if every > 0 && k % every == 0 {
            let path = snapshot_path(&out, k);
            match write_snapshot(&path, &s.components()?) {
                Ok(()) => artifacts.push(path),
                Err(e) => {
                    io_error = Some(format!("{}: {e}", path.display()));
                    return Err(YmError::Format(format!("snapshot write failed at step {k}")));
                }
            }
        }
        last = Some((t, s.clone()));
        Ok(())
    });
    if let Some(e) = io_error {
        return Err(Failure::Io(e));
    }
    let output = match result {
        Ok(o) => o,
        Err(error @ YmError::NumericalAbort { .. }) => {
            let last = last.and_then(|(t, s)| DiagnosticsRecord::measure(t, &s).ok());
            return Err(Failure::Numerical { error, last });
        }
        Err(e) => return Err(e.into()),
    };
    let mut w = create(&out)?;
    writeln!(w, "{}", DiagnosticsRecord::CSV_HEADER)?;
    for r in &output.records {
        writeln!(w, "{}", r.csv_row())?;
    }
    w.flush()?;
    let tol = cfg.simulate.constraint_tol;
    let pass = output.records.iter().all(|r| r.lorenz <= tol && r.gauss <= tol && r.compat <= tol);
    Ok(Outcome { pass, artifacts, last: output.records.last().copied() })
}

fn check_identities(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let out = cfg.out_path();
    let checks = run_identity_suite(cfg.algebra, cfg.seed)?;
    let mut w = create(&out)?;
    for c in &checks {
        writeln!(w, "{} {:.6e} {:.1e} {}", c.name, c.residual, c.tol, if c.pass() { "PASS" } else { "FAIL" })?;
    }
    w.flush()?;
    Ok(Outcome { pass: checks.iter().all(|c| c.pass()), artifacts: vec![out], last: None })
}

fn check_symbols(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let out = cfg.out_path();
    let mut sample = cfg.sample;
    sample.rng_seed = cfg.seed;
    let p = cfg.symbols;
    let mut reports = vec![check_gamma1_symbol(&sample)?];
    for case in FkCase::ALL {
        reports.push(check_fk_symbol_bounds(case, &sample)?);
    }
    reports.push(check_angle_estimate(&sample, p.alpha, p.beta, p.gamma)?);
    reports.push(check_hyperbolic_leibniz(&sample)?);
    write_jsonl(&out, &reports)?;
    Ok(Outcome { pass: reports.iter().all(|r| r.pass), artifacts: vec![out], last: None })
}

fn circle_report(tol: f64) -> Result<BoundReport, Failure> {
    let tau = 2.0;
    let err = (delta_integral_ellipse(tau, [0.0, 0.0], (0.0, 0.0))? - std::f64::consts::PI).abs();
    let point = [("tau".to_string(), tau), ("xi1".to_string(), 0.0), ("xi2".to_string(), 0.0)].into();
    Ok(BoundReport::new("deltaCircleClosedForm", 1, err, point, tol, 0))
}

fn check_estimates(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let out = cfg.out_path();
    let p = &cfg.estimates;
    let mut reports = Vec::new();
    if p.which != EstimateSet::Delta {
        let base = BilinearConfig { seed: cfg.seed, algebra: cfg.algebra, ..p.bilinear };
        let points = if p.points.is_empty() { vec![[base.r, base.s, base.l]] } else { p.points.clone() };
        for [r, s, l] in points {
            let b = BilinearConfig { r, s, l, ..base };
            for &id in &p.ids {
                reports.push(empirical_bilinear_constant(id, p.grid, &b)?);
            }
        }
    }
    if p.which != EstimateSet::Bilinear {
        reports.push(circle_report(p.circle_tol)?);
        reports.push(elliptic_sweep(p.sweep_r, p.sweep_tau, p.sweep_ratio, p.sweep_threshold)?);
    }
    write_jsonl(&out, &reports)?;
    Ok(Outcome { pass: reports.iter().all(|r| r.pass), artifacts: vec![out], last: None })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ConvergenceReport {
    temporal: TemporalStudy,
    spatial: SpatialStudy,
    min_order: f64,
    min_ratio: f64,
    pass: bool,
}

fn convergence(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let out = cfg.out_path();
    let c = &cfg.convergence;
    let temporal = temporal_study(cfg.algebra, c.temporal_grid, &c.dts, c.temporal_t_end, cfg.seed, c.scale)?;
    let spatial = spatial_study(cfg.algebra, &c.ns, c.spatial_dt, c.spatial_t_end, cfg.seed, c.scale)?;
    let pass = temporal.orders.iter().all(|&q| q >= c.min_order) && spatial.ratios.iter().all(|&q| q >= c.min_ratio);
    let report = ConvergenceReport { temporal, spatial, min_order: c.min_order, min_ratio: c.min_ratio, pass };
    write_json(&out, &report)?;
    Ok(Outcome { pass, artifacts: vec![out], last: None })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct PicardReport {
    times: Vec<f64>,
    differences: Vec<f64>,
    ratios: Vec<f64>,
    monotone: bool,
    max_ratio: f64,
    pass: bool,
}

fn picard(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let out = cfg.out_path();
    let p = &cfg.picard;
    let data = initial_data(cfg, p.scale, true)?;
    let report = match picard_iterate(&data, &p.iterate) {
        Ok(r) => {
            let monotone = r.ratios.windows(2).all(|w| w[1] <= w[0]);
            let pass = monotone && r.ratios.iter().all(|&q| q <= p.max_ratio);
            PicardReport { times: r.times, differences: r.differences, ratios: r.ratios, monotone, max_ratio: p.max_ratio, pass }
        }
        Err(YmError::Divergence { ratios }) => {
            PicardReport { times: vec![], differences: vec![], ratios, monotone: false, max_ratio: p.max_ratio, pass: false }
        }
        Err(e) => return Err(e.into()),
    };
    write_json(&out, &report)?;
    Ok(Outcome { pass: report.pass, artifacts: vec![out], last: None })
}
