//! Time evolution: the second-order method of lines, the half-wave reduction
//! with exponential integrators, Picard iteration, and monitored runs with a
//! reference evolution of the potential alone.
//!
//! Convention: □ = −∂ₜ² + Δ and □A = M, so ∂ₜ²u = Δu − M for u = A and
//! ∂ₜ²u = Δu − N for u = F.

pub mod convergence;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, YmError};
use crate::field::{Field, FieldState, Multiplier, SpacetimePair, Symbol, WaveKernel};
use crate::spectral::{discrete_norm, GridField, SpectralContext};
use crate::ym::{assemble_rhs, rebase_state, ym4_rhs, DiagnosticsRecord, GridState};

type Pair = SpacetimePair<GridField>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    #[serde(alias = "RK4")]
    Rk4,
    #[serde(alias = "ExpEuler")]
    ExpEuler,
    #[serde(alias = "ExpRK2", alias = "exp-rk2")]
    ExpRk2,
}

impl std::str::FromStr for Stepper {
    type Err = YmError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "rk4" => Ok(Stepper::Rk4),
            "exp-euler" | "expeuler" => Ok(Stepper::ExpEuler),
            "exp-rk2" | "exprk2" => Ok(Stepper::ExpRk2),
            other => Err(YmError::InvalidParameter(format!("unknown stepper {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub stepper: Stepper,
    pub dealias: bool,
    pub monitor_every: usize,
    /// Also run the reference evolution of A alone and record the difference.
    pub twin: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { dt: 1e-3, t_end: 0.5, stepper: Stepper::Rk4, dealias: true, monitor_every: 10, twin: true }
    }
}

impl EvolveConfig {
    /// dt = 0.5·L/N.
    pub fn default_dt(n: usize, l: f64) -> f64 {
        0.5 * l / n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(YmError::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(YmError::InvalidParameter(format!("tEnd = {} must be non-negative", self.t_end)));
        }
        if self.monitor_every == 0 {
            return Err(YmError::InvalidParameter("monitorEvery must be at least 1".into()));
        }
        Ok(())
    }

    /// Step sizes covering [0, tEnd]; the last step is shortened if needed.
    pub fn steps(&self) -> Vec<f64> {
        let n = (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize;
        (0..n).map(|k| if k + 1 < n { self.dt } else { self.t_end - (n - 1) as f64 * self.dt }).collect()
    }
}

fn check_finite(fields: &[GridField], time: f64) -> Result<()> {
    if fields.iter().all(GridField::is_finite) {
        Ok(())
    } else {
        Err(YmError::NumericalAbort { time })
    }
}

fn lincomb(terms: &[(f64, &[GridField])]) -> Vec<GridField> {
    let n = terms[0].1.len();
    (0..n)
        .map(|i| {
            let mut acc = terms[0].1[i].scale(terms[0].0);
            for (c, v) in &terms[1..] {
                acc = acc.axpy(*c, &v[i]);
            }
            acc
        })
        .collect()
}

/// Classical RK4 on a flat vector of fields.
fn rk4(y: &[GridField], dt: f64, f: impl Fn(&[GridField]) -> Result<Vec<GridField>>) -> Result<Vec<GridField>> {
    let k1 = f(y)?;
    let k2 = f(&lincomb(&[(1.0, y), (0.5 * dt, &k1)]))?;
    let k3 = f(&lincomb(&[(1.0, y), (0.5 * dt, &k2)]))?;
    let k4 = f(&lincomb(&[(1.0, y), (dt, &k3)]))?;
    Ok(lincomb(&[(1.0, y), (dt / 6.0, &k1), (dt / 3.0, &k2), (dt / 3.0, &k3), (dt / 6.0, &k4)]))
}

fn laplacian(u: &GridField) -> GridField {
    u.apply(&Symbol::dpow(2.0).times(-1.0))
}

/// ∂ₜ of the twelve components (A, ∂ₜA, F, ∂ₜF).
fn second_order_rhs(y: &[GridField]) -> Result<Vec<GridField>> {
    let s = FieldState::from_components(y.to_vec())?;
    let (m, n) = assemble_rhs(&s)?;
    let mut out = Vec::with_capacity(12);
    out.extend_from_slice(&y[3..6]);
    for b in 0..3 {
        out.push(laplacian(&y[b]).sub(&m[b].band_limit()));
    }
    out.extend_from_slice(&y[9..12]);
    for k in 0..3 {
        out.push(laplacian(&y[6 + k]).sub(&n[k].band_limit()));
    }
    Ok(out)
}

/// Truncates every field of the state to the dealias band.
pub fn band_limit_state(s: &GridState) -> GridState {
    s.map(|p| p.map(GridField::band_limit))
}

/// One RK4 step of ∂ₜ(u, u̇) = (u̇, Δu − RHS) with (M, N) from the null-form
/// assembly.
pub fn step_second_order(s: &GridState, dt: f64) -> Result<GridState> {
    let y = s.components()?;
    let out = rk4(&y, dt, second_order_rhs)?;
    check_finite(&out, dt)?;
    FieldState::from_components(out)
}

fn ym4_only_rhs(y: &[GridField]) -> Result<Vec<GridField>> {
    let a = [
        Pair::new(y[0].clone(), y[3].clone()),
        Pair::new(y[1].clone(), y[4].clone()),
        Pair::new(y[2].clone(), y[5].clone()),
    ];
    let m = ym4_rhs(&a)?;
    let mut out = Vec::with_capacity(6);
    out.extend_from_slice(&y[3..6]);
    for b in 0..3 {
        out.push(laplacian(&y[b]).sub(&m[b].band_limit()));
    }
    Ok(out)
}

/// Potential-only state (A_β, ∂ₜA_β) for the reference evolution.
#[derive(Clone, Debug)]
pub struct PotentialState {
    pub a: [Pair; 3],
}

impl PotentialState {
    pub fn of(s: &GridState) -> Self {
        PotentialState { a: s.a.clone() }
    }

    fn flat(&self) -> Result<Vec<GridField>> {
        let mut y: Vec<GridField> = self.a.iter().map(|p| p.value.clone()).collect();
        for p in &self.a {
            y.push(p.dt("PotentialState")?.clone());
        }
        Ok(y)
    }

    fn from_flat(y: Vec<GridField>) -> Self {
        let p = |v: usize| Pair::new(y[v].clone(), y[v + 3].clone());
        PotentialState { a: [p(0), p(1), p(2)] }
    }
}

/// One RK4 step of ∂ₜ²A = ΔA − M with M from the direct expansion in A.
pub fn step_ym4_reference(s: &PotentialState, dt: f64) -> Result<PotentialState> {
    let out = rk4(&s.flat()?, dt, ym4_only_rhs)?;
    check_finite(&out, dt)?;
    Ok(PotentialState::from_flat(out))
}

/// A complex field as a pair of real grid fields.
#[derive(Clone, Debug)]
pub struct ComplexField {
    pub re: GridField,
    pub im: GridField,
}

impl ComplexField {
    fn axpy(&self, c: f64, o: &Self) -> Self {
        ComplexField { re: self.re.axpy(c, &o.re), im: self.im.axpy(c, &o.im) }
    }

    /// Multiplication by the symbol a(ξ) + i b(ξ), a and b real and even.
    fn times(&self, a: &Symbol, b: &Symbol) -> Self {
        ComplexField {
            re: self.re.apply(a).sub(&self.im.apply(b)),
            im: self.re.apply(b).add(&self.im.apply(a)),
        }
    }

    pub fn conj(&self) -> Self {
        ComplexField { re: self.re.clone(), im: self.im.scale(-1.0) }
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// u₊ = ½(u + (iΛ)^{-1}∂ₜu) for the six unknowns A_β, F_βγ. For real fields
/// u₋ = conj(u₊), so only the + parts are stored.
#[derive(Clone, Debug)]
pub struct HalfWaveState {
    pub a: [ComplexField; 3],
    pub f: [ComplexField; 3],
}

impl HalfWaveState {
    pub fn plus(&self) -> Vec<&ComplexField> {
        self.a.iter().chain(self.f.iter()).collect()
    }

    pub fn minus(&self) -> Vec<ComplexField> {
        self.plus().into_iter().map(ComplexField::conj).collect()
    }

    fn from_vec(v: Vec<ComplexField>) -> Self {
        let mut it = v.into_iter();
        let mut next = || it.next().expect("six half-wave components");
        HalfWaveState { a: [next(), next(), next()], f: [next(), next(), next()] }
    }

    fn zip(&self, o: &Self, f: impl Fn(&ComplexField, &ComplexField) -> ComplexField) -> Self {
        Self::from_vec(self.plus().into_iter().zip(o.plus()).map(|(x, y)| f(x, y)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.plus().iter().all(|c| c.is_finite())
    }
}

fn split(p: &Pair) -> Result<ComplexField> {
    Ok(ComplexField { re: p.value.scale(0.5), im: p.dt("toHalfWave")?.apply(&Symbol::lam(-1.0).times(-0.5)) })
}

fn join(c: &ComplexField) -> Pair {
    Pair::new(c.re.scale(2.0), c.im.apply(&Symbol::lam(1.0).times(-2.0)))
}

pub fn to_half_wave(s: &GridState) -> Result<HalfWaveState> {
    Ok(HalfWaveState {
        a: [split(&s.a[0])?, split(&s.a[1])?, split(&s.a[2])?],
        f: [split(&s.f[0])?, split(&s.f[1])?, split(&s.f[2])?],
    })
}

/// u = u₊ + u₋ = 2 Re u₊, ∂ₜu = iΛ(u₊ − u₋) = −2Λ Im u₊.
pub fn from_half_wave(hw: &HalfWaveState) -> GridState {
    FieldState { a: [join(&hw.a[0]), join(&hw.a[1]), join(&hw.a[2])], f: [join(&hw.f[0]), join(&hw.f[1]), join(&hw.f[2])] }
}

/// The source of ∂ₜu₊ = iΛu₊ − i(2Λ)^{-1}(u − RHS), as a complex field.
fn half_wave_source(hw: &HalfWaveState) -> Result<HalfWaveState> {
    let s = from_half_wave(hw);
    let (m, n) = assemble_rhs(&s)?;
    let rhs: Vec<&GridField> = m.iter().chain(n.iter()).collect();
    let vals: Vec<&GridField> = s.a.iter().chain(s.f.iter()).map(|p| &p.value).collect();
    let out = vals
        .iter()
        .zip(rhs)
        .map(|(u, r)| {
            let im = u.sub(&r.band_limit()).apply(&Symbol::lam(-1.0).times(-0.5));
            ComplexField { re: im.zero_like(), im }
        })
        .collect();
    Ok(HalfWaveState::from_vec(out))
}

fn phase(t: f64, order: u8) -> (Symbol, Symbol) {
    (
        Symbol::of(Multiplier::Phase { t, order, imag: false }),
        Symbol::of(Multiplier::Phase { t, order, imag: true }),
    )
}

/// One exponential step: e^{iΛdt} on the linear part, φ-function quadrature
/// for the source.
pub fn step_half_wave(hw: &HalfWaveState, dt: f64, stepper: Stepper) -> Result<HalfWaveState> {
    let (e_re, e_im) = phase(dt, 0);
    let (p1_re, p1_im) = phase(dt, 1);
    let n0 = half_wave_source(hw)?;
    let euler = hw.zip(&n0, |u, n| u.times(&e_re, &e_im).axpy(dt, &n.times(&p1_re, &p1_im)));
    let out = match stepper {
        Stepper::ExpEuler => euler,
        Stepper::ExpRk2 => {
            let (p2_re, p2_im) = phase(dt, 2);
            let n1 = half_wave_source(&euler)?;
            let dn = n1.zip(&n0, |a, b| a.axpy(-1.0, b));
            euler.zip(&dn, |u, d| u.axpy(dt, &d.times(&p2_re, &p2_im)))
        }
        Stepper::Rk4 => {
            return Err(YmError::InvalidParameter("RK4 is not an exponential stepper".into()));
        }
    };
    if !out.is_finite() {
        return Err(YmError::NumericalAbort { time: dt });
    }
    Ok(out)
}

/// Either representation of the evolving state.
enum Evolving {
    Second(GridState),
    Half(HalfWaveState),
}

impl Evolving {
    fn state(&self) -> GridState {
        match self {
            Evolving::Second(s) => s.clone(),
            Evolving::Half(h) => from_half_wave(h),
        }
    }

    fn step(self, dt: f64, stepper: Stepper) -> Result<Self> {
        Ok(match (self, stepper) {
            (Evolving::Second(s), _) => Evolving::Second(step_second_order(&s, dt)?),
            (Evolving::Half(h), st) => Evolving::Half(step_half_wave(&h, dt, st)?),
        })
    }
}

/// A monitored run.
#[derive(Clone, Debug)]
pub struct EvolveOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: GridState,
    pub steps: usize,
}

/// max_β ‖A_β − B_β‖_∞
pub fn potential_difference(a: &[Pair; 3], b: &[Pair; 3]) -> f64 {
    (0..3).map(|k| a[k].value.sub(&b[k].value).sup_norm()).fold(0.0, f64::max)
}

/// Evolves with `cfg`, recording diagnostics at step 0, every `monitorEvery`
/// steps and at the end. With `cfg.twin` the reference evolution of A alone
/// runs alongside and each record carries the sup-norm difference of A.
/// `observer` sees every state, step 0 included.
pub fn evolve_and_monitor(
    state: &GridState,
    cfg: &EvolveConfig,
    observer: &mut dyn FnMut(usize, f64, &GridState) -> Result<()>,
) -> Result<EvolveOutput> {
    cfg.validate()?;
    let ctx: Arc<SpectralContext> = state.a[0].value.context().with_dealias(cfg.dealias);
    let s0 = band_limit_state(&rebase_state(state, &ctx)?);
    check_finite(&s0.components()?, 0.0)?;
    let mut cur = match cfg.stepper {
        Stepper::Rk4 => Evolving::Second(s0.clone()),
        _ => Evolving::Half(to_half_wave(&s0)?),
    };
    let mut reference = cfg.twin.then(|| PotentialState::of(&s0));
    let steps = cfg.steps();
    let mut records = Vec::new();
    let mut t = 0.0;
    let record = |t: f64, s: &GridState, r: &Option<PotentialState>| -> Result<DiagnosticsRecord> {
        let mut rec = DiagnosticsRecord::measure(t, s)?;
        rec.twin_diff = r.as_ref().map(|r| potential_difference(&s.a, &r.a));
        Ok(rec)
    };
    records.push(record(0.0, &s0, &reference)?);
    observer(0, 0.0, &s0)?;
    for (k, &h) in steps.iter().enumerate() {
        let (next, next_ref) = rayon::join(
            || cur.step(h, cfg.stepper),
            || reference.as_ref().map(|r| step_ym4_reference(r, h)).transpose(),
        );
        t += h;
        let abort = |e: YmError| match e {
            YmError::NumericalAbort { .. } => YmError::NumericalAbort { time: t },
            e => e,
        };
        cur = next.map_err(abort)?;
        reference = next_ref.map_err(abort)?;
        let s = cur.state();
        let step = k + 1;
        if step % cfg.monitor_every == 0 || step == steps.len() {
            let rec = record(t, &s, &reference)?;
            if !rec.is_finite() {
                return Err(YmError::NumericalAbort { time: t });
            }
            records.push(rec);
        }
        observer(step, t, &s)?;
    }
    Ok(EvolveOutput { records, final_state: cur.state(), steps: steps.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct PicardConfig {
    /// Number of iterates beyond the free evolution.
    pub iterations: usize,
    pub t_final: f64,
    /// Spacing of the time nodes.
    pub node_dt: f64,
    /// A is measured in Ĥ^{s,r}, F in Ĥ^{s−1,r}, time derivatives one lower.
    pub s: f64,
    pub r: f64,
    pub keep_trajectories: bool,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig { iterations: 5, t_final: 0.25, node_dt: 0.0125, s: 1.0, r: 2.0, keep_trajectories: false }
    }
}

#[derive(Clone, Debug)]
pub struct PicardResult {
    pub times: Vec<f64>,
    /// ‖u^{(k+1)} − u^{(k)}‖ for k = 0, 1, …
    pub differences: Vec<f64>,
    /// differences[k] / differences[k−1]; 0 when both vanish.
    pub ratios: Vec<f64>,
    /// Every iterate when requested, otherwise only the last one.
    pub trajectories: Vec<Vec<GridState>>,
}

fn wave(h: f64, kernel: WaveKernel) -> Symbol {
    Symbol::of(Multiplier::Wave { h, kernel })
}

/// Exact propagation of ∂ₜ²u = Δu + g over one node interval with g linear
/// in time between g0 and g1.
fn wave_step(u: &Pair, g0: &GridField, g1: &GridField, h: f64) -> Pair {
    let u0 = &u.value;
    let v0 = u.time_deriv.as_ref().expect("Picard states carry time derivatives");
    let slope = g1.sub(g0).scale(1.0 / h);
    let value = u0
        .apply(&wave(h, WaveKernel::Cos))
        .add(&v0.apply(&wave(h, WaveKernel::SinOverOmega)))
        .add(&g0.apply(&wave(h, WaveKernel::I0)))
        .add(&slope.apply(&wave(h, WaveKernel::I1)));
    let dt = u0
        .apply(&wave(h, WaveKernel::OmegaSin).times(-1.0))
        .add(&v0.apply(&wave(h, WaveKernel::Cos)))
        .add(&g0.apply(&wave(h, WaveKernel::J0)))
        .add(&slope.apply(&wave(h, WaveKernel::J1)));
    Pair::new(value, dt)
}

/// g = −RHS for the six unknowns.
fn picard_source(s: &GridState) -> Result<Vec<GridField>> {
    let (m, n) = assemble_rhs(s)?;
    Ok(m.iter().chain(n.iter()).map(|r| r.band_limit().scale(-1.0)).collect())
}

fn pairs(s: &GridState) -> Vec<&Pair> {
    s.a.iter().chain(s.f.iter()).collect()
}

fn state_from_pairs(p: Vec<Pair>) -> GridState {
    let mut it = p.into_iter();
    let mut next = || it.next().expect("six pairs");
    FieldState { a: [next(), next(), next()], f: [next(), next(), next()] }
}

fn trajectory(s0: &GridState, times: &[f64], sources: Option<&[Vec<GridField>]>) -> Vec<GridState> {
    let mut out = vec![s0.clone()];
    for j in 1..times.len() {
        let h = times[j] - times[j - 1];
        let prev = &out[j - 1];
        let next = pairs(prev)
            .into_iter()
            .enumerate()
            .map(|(c, u)| match sources {
                Some(g) => wave_step(u, &g[j - 1][c], &g[j][c], h),
                None => {
                    let z = u.value.zero_like();
                    wave_step(u, &z, &z, h)
                }
            })
            .collect();
        out.push(state_from_pairs(next));
    }
    out
}

fn picard_distance(x: &[GridState], y: &[GridState], s: f64, r: f64) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for (a, b) in x.iter().zip(y) {
        for (c, (p, q)) in pairs(a).into_iter().zip(pairs(b)).enumerate() {
            let sv = if c < 3 { s } else { s - 1.0 };
            sup = sup.max(discrete_norm(&p.value.sub(&q.value), sv, r)?);
            sup = sup.max(discrete_norm(&p.dt("picard")?.sub(q.dt("picard")?), sv - 1.0, r)?);
        }
    }
    Ok(sup)
}

/// u^{(0)} is the free evolution and u^{(k+1)} = free + Duhamel(−RHS(u^{(k)})),
/// evaluated at time nodes with the exact wave propagator and a source
/// linear between nodes.
pub fn picard_iterate(data: &GridState, cfg: &PicardConfig) -> Result<PicardResult> {
    if !(cfg.t_final > 0.0 && cfg.node_dt > 0.0) {
        return Err(YmError::InvalidParameter("Picard needs T > 0 and node spacing > 0".into()));
    }
    let nodes = (cfg.t_final / cfg.node_dt - 1e-9).ceil().max(1.0) as usize;
    let times: Vec<f64> = (0..=nodes).map(|j| cfg.t_final * j as f64 / nodes as f64).collect();
    let data = band_limit_state(data);
    let free = trajectory(&data, &times, None);
    let mut trajectories = vec![free.clone()];
    let mut prev = free.clone();
    let mut differences = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    for _ in 0..cfg.iterations {
        let g: Vec<Vec<GridField>> = prev.iter().map(picard_source).collect::<Result<_>>()?;
        let zero_data = data.zero_like();
        let duhamel = trajectory(&zero_data, &times, Some(&g));
        let next: Vec<GridState> = free
            .iter()
            .zip(&duhamel)
            .map(|(f, d)| state_from_pairs(pairs(f).into_iter().zip(pairs(d)).map(|(x, y)| x.add(y)).collect()))
            .collect();
        if next.iter().any(|s| s.components().map(|c| c.iter().any(|u| !u.is_finite())).unwrap_or(true)) {
            return Err(YmError::NumericalAbort { time: cfg.t_final });
        }
        let d = picard_distance(&next, &prev, cfg.s, cfg.r)?;
        if let Some(&last) = differences.last() {
            ratios.push(if last == 0.0 { if d == 0.0 { 0.0 } else { f64::INFINITY } } else { d / last });
        }
        differences.push(d);
        if ratios.len() >= 3 && ratios[ratios.len() - 3..].iter().all(|&q| q > 1.0) {
            return Err(YmError::Divergence { ratios });
        }
        if cfg.keep_trajectories {
            trajectories.push(next.clone());
        } else {
            trajectories = vec![next.clone()];
        }
        prev = next;
    }
    Ok(PicardResult { times, differences, ratios, trajectories })
}
