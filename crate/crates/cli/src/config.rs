//! Run configuration: TOML file, then flag overrides, then validation.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use ym_core::estimates::BilinearConfig;
use ym_core::{AlgebraKind, AlgebraSpec, EvolveConfig, PicardConfig, SampleConfig, Stepper, TorusGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Simulate,
    CheckIdentities,
    CheckSymbols,
    CheckEstimates,
    Convergence,
    Picard,
}

impl CommandName {
    pub fn default_out(self) -> &'static str {
        match self {
            CommandName::Simulate => "diagnostics.csv",
            CommandName::CheckIdentities => "identities.txt",
            CommandName::CheckSymbols => "symbols.jsonl",
            CommandName::CheckEstimates => "estimates.jsonl",
            CommandName::Convergence => "convergence.json",
            CommandName::Picard => "picard.json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct GridParams {
    pub n: usize,
    pub l: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { n: 64, l: 2.0 * std::f64::consts::PI }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SimulateParams {
    /// Sup norm of the random potential data.
    pub scale: f64,
    /// Snapshot every k steps; 0 disables.
    pub snapshot_every: usize,
    pub projection_tol: f64,
    pub projection_max_iter: usize,
    /// PASS requires every constraint residual at or below this.
    pub constraint_tol: f64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        SimulateParams { scale: 1e-2, snapshot_every: 0, projection_tol: 1e-10, projection_max_iter: 200, constraint_tol: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SymbolParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for SymbolParams {
    fn default() -> Self {
        SymbolParams { alpha: 0.5, beta: 0.5, gamma: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateSet {
    Bilinear,
    Delta,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct EstimateParams {
    pub which: EstimateSet,
    pub ids: Vec<u32>,
    /// Coarse grid of the N → 2N growth test.
    pub grid: usize,
    /// (r, s, l) points; empty means the single point of `bilinear`.
    pub points: Vec<[f64; 3]>,
    pub bilinear: BilinearConfig,
    pub sweep_r: f64,
    pub sweep_tau: usize,
    pub sweep_ratio: usize,
    pub sweep_threshold: f64,
    pub circle_tol: f64,
}

impl Default for EstimateParams {
    fn default() -> Self {
        let s = 3.0 / 2.2 + 0.01;
        EstimateParams {
            which: EstimateSet::All,
            ids: vec![21, 24, 25, 35],
            grid: 32,
            points: vec![[2.0, 0.8, -0.2], [1.1, s, s - 1.0]],
            bilinear: BilinearConfig::default(),
            sweep_r: 1.1,
            sweep_tau: 100,
            sweep_ratio: 100,
            sweep_threshold: 4.0,
            circle_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ConvergenceParams {
    pub temporal_grid: usize,
    pub dts: Vec<f64>,
    pub temporal_t_end: f64,
    pub ns: Vec<usize>,
    pub spatial_dt: f64,
    pub spatial_t_end: f64,
    pub scale: f64,
    pub min_order: f64,
    pub min_ratio: f64,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        ConvergenceParams {
            temporal_grid: 32,
            dts: vec![4e-3, 2e-3, 1e-3],
            temporal_t_end: 0.2,
            ns: vec![32, 64, 128],
            spatial_dt: 2e-3,
            spatial_t_end: 0.1,
            scale: 0.1,
            min_order: 3.5,
            min_ratio: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct PicardParams {
    #[serde(flatten)]
    pub iterate: PicardConfig,
    pub scale: f64,
    pub max_ratio: f64,
}

impl Default for PicardParams {
    fn default() -> Self {
        PicardParams { iterate: PicardConfig::default(), scale: 1e-2, max_ratio: 0.5 }
    }
}

/// The fully resolved configuration, echoed into every manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandName,
    #[serde(default = "default_algebra")]
    pub algebra: AlgebraSpec,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub sample: SampleConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out_path: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub simulate: SimulateParams,
    #[serde(default)]
    pub symbols: SymbolParams,
    #[serde(default)]
    pub estimates: EstimateParams,
    #[serde(default)]
    pub convergence: ConvergenceParams,
    #[serde(default)]
    pub picard: PicardParams,
}

fn default_algebra() -> AlgebraSpec {
    AlgebraSpec::SU2
}

fn default_seed() -> u64 {
    1
}

impl RunConfig {
    pub fn new(command: CommandName) -> Self {
        RunConfig {
            command,
            algebra: default_algebra(),
            grid: GridParams::default(),
            evolve: EvolveConfig::default(),
            sample: SampleConfig::default(),
            seed: default_seed(),
            out_path: None,
            threads: None,
            simulate: SimulateParams::default(),
            symbols: SymbolParams::default(),
            estimates: EstimateParams::default(),
            convergence: ConvergenceParams::default(),
            picard: PicardParams::default(),
        }
    }

    pub fn out_path(&self) -> PathBuf {
        self.out_path.clone().unwrap_or_else(|| PathBuf::from(self.command.default_out()))
    }

    pub fn manifest_path(&self) -> PathBuf {
        let mut p = self.out_path().into_os_string();
        p.push(".manifest.json");
        PathBuf::from(p)
    }

    pub fn validate(&self) -> Result<(), String> {
        let e = |x: ym_core::YmError| x.to_string();
        AlgebraSpec::new(self.algebra.kind, self.algebra.n).map_err(e)?;
        TorusGrid::new(self.grid.n, self.grid.l).map_err(e)?;
        self.evolve.validate().map_err(e)?;
        self.sample.validate().map_err(e)?;
        self.estimates.bilinear.validate().map_err(e)?;
        if self.threads == Some(0) {
            return Err("threads must be at least 1".into());
        }
        if !(self.simulate.scale >= 0.0 && self.simulate.scale.is_finite()) {
            return Err(format!("scale = {} must be finite and non-negative", self.simulate.scale));
        }
        if !(self.picard.scale >= 0.0 && self.picard.scale.is_finite()) {
            return Err(format!("picard scale = {} must be finite and non-negative", self.picard.scale));
        }
        if self.estimates.ids.iter().any(|id| !(21..=37).contains(id)) {
            return Err(format!("estimate ids {:?} must lie in 21..=37", self.estimates.ids));
        }
        for p in &self.estimates.points {
            BilinearConfig { r: p[0], s: p[1], l: p[2], ..self.estimates.bilinear }.validate().map_err(e)?;
        }
        let c = &self.convergence;
        if c.dts.len() < 3 || c.ns.len() < 3 {
            return Err("convergence needs at least three dts and three grids".into());
        }
        for &n in c.ns.iter().chain([c.temporal_grid, self.estimates.grid].iter()) {
            TorusGrid::standard(n).map_err(e)?;
        }
        Ok(())
    }
}

#[derive(Parser, Debug)]
#[command(name = "ym2d", version, about = "Lorenz-gauge Yang-Mills on the 2D torus: runs and checks")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonFlags,
    #[command(subcommand)]
    pub command: Option<CommandFlags>,
}

#[derive(Args, Debug, Default)]
pub struct CommonFlags {
    /// Primary artifact path; the manifest goes next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Lie algebra family.
    #[arg(long, global = true, value_parser = parse_kind)]
    pub algebra: Option<AlgebraKind>,
    /// Matrix size of the Lie algebra.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Grid points per axis.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Worker threads; fixes the reduction order for reproducible output.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

fn parse_kind(s: &str) -> Result<AlgebraKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "su" => Ok(AlgebraKind::SU),
        "so" => Ok(AlgebraKind::SO),
        _ => Err(format!("unknown algebra {s:?}, expected su or so")),
    }
}

#[derive(Subcommand, Debug)]
pub enum CommandFlags {
    /// Evolve random constrained data and write diagnostics.
    Simulate(SimulateFlags),
    /// Residuals of the exact identities on plane waves.
    CheckIdentities,
    /// Sampled pointwise symbol bounds.
    CheckSymbols(SymbolFlags),
    /// Empirical multilinear constants and delta-integral sweeps.
    CheckEstimates(EstimateFlags),
    /// Temporal and spatial self-convergence on analytic data.
    Convergence(ConvergenceFlags),
    /// Picard iteration contraction.
    Picard(PicardFlags),
}

impl CommandFlags {
    pub fn name(&self) -> CommandName {
        match self {
            CommandFlags::Simulate(_) => CommandName::Simulate,
            CommandFlags::CheckIdentities => CommandName::CheckIdentities,
            CommandFlags::CheckSymbols(_) => CommandName::CheckSymbols,
            CommandFlags::CheckEstimates(_) => CommandName::CheckEstimates,
            CommandFlags::Convergence(_) => CommandName::Convergence,
            CommandFlags::Picard(_) => CommandName::Picard,
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct SimulateFlags {
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    /// rk4, exp-euler or exp-rk2.
    #[arg(long, value_parser = parse_stepper)]
    pub stepper: Option<Stepper>,
    #[arg(long)]
    pub monitor_every: Option<usize>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Skip the reference evolution of A alone.
    #[arg(long)]
    pub no_twin: bool,
    #[arg(long)]
    pub no_dealias: bool,
}

fn parse_stepper(s: &str) -> Result<Stepper, String> {
    s.parse().map_err(|e: ym_core::YmError| e.to_string())
}

#[derive(Args, Debug, Default)]
pub struct SymbolFlags {
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct EstimateFlags {
    #[arg(long, value_enum)]
    pub which: Option<EstimateSet>,
    /// Comma-separated estimate ids.
    #[arg(long, value_delimiter = ',')]
    pub ids: Option<Vec<u32>>,
    /// With --s and --l, replaces the configured (r, s, l) points.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, requires = "r")]
    pub s: Option<f64>,
    #[arg(long, requires = "r")]
    pub l: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct ConvergenceFlags {
    #[arg(long, value_delimiter = ',')]
    pub dts: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct PicardFlags {
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub node_dt: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Defaults, then the file, then flags.
pub fn resolve(cli: Cli) -> Result<RunConfig, String> {
    let from_cli = cli.command.as_ref().map(CommandFlags::name);
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let cfg: RunConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            if let Some(c) = from_cli {
                if c != cfg.command {
                    return Err(format!("command {c:?} conflicts with {:?} in {}", cfg.command, path.display()));
                }
            }
            cfg
        }
        None => RunConfig::new(from_cli.ok_or("no command given and no --config")?),
    };
    let c = cli.common;
    if let Some(p) = c.out {
        cfg.out_path = Some(p);
    }
    set(&mut cfg.seed, c.seed);
    set(&mut cfg.algebra.kind, c.algebra);
    set(&mut cfg.algebra.n, c.n);
    set(&mut cfg.grid.n, c.grid);
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    match cli.command {
        Some(CommandFlags::Simulate(f)) => {
            set(&mut cfg.evolve.dt, f.dt);
            set(&mut cfg.evolve.t_end, f.t_end);
            set(&mut cfg.evolve.stepper, f.stepper);
            set(&mut cfg.evolve.monitor_every, f.monitor_every);
            set(&mut cfg.simulate.scale, f.scale);
            set(&mut cfg.simulate.snapshot_every, f.snapshot_every);
            if f.no_twin {
                cfg.evolve.twin = false;
            }
            if f.no_dealias {
                cfg.evolve.dealias = false;
            }
        }
        Some(CommandFlags::CheckSymbols(f)) => {
            set(&mut cfg.sample.count, f.count);
            set(&mut cfg.sample.radius_range[0], f.r_min);
            set(&mut cfg.sample.radius_range[1], f.r_max);
            set(&mut cfg.symbols.alpha, f.alpha);
            set(&mut cfg.symbols.beta, f.beta);
            set(&mut cfg.symbols.gamma, f.gamma);
        }
        Some(CommandFlags::CheckEstimates(f)) => {
            set(&mut cfg.estimates.which, f.which);
            set(&mut cfg.estimates.ids, f.ids);
            set(&mut cfg.estimates.bilinear.trials, f.trials);
            if let Some(r) = f.r {
                let b = cfg.estimates.bilinear;
                cfg.estimates.points = vec![[r, f.s.unwrap_or(b.s), f.l.unwrap_or(b.l)]];
            }
        }
        Some(CommandFlags::Convergence(f)) => {
            set(&mut cfg.convergence.dts, f.dts);
            set(&mut cfg.convergence.ns, f.ns);
            set(&mut cfg.convergence.scale, f.scale);
        }
        Some(CommandFlags::Picard(f)) => {
            set(&mut cfg.picard.iterate.iterations, f.iterations);
            set(&mut cfg.picard.iterate.t_final, f.t_final);
            set(&mut cfg.picard.iterate.node_dt, f.node_dt);
            set(&mut cfg.picard.scale, f.scale);
        }
        Some(CommandFlags::CheckIdentities) | None => {}
    }
    cfg.validate()?;
    Ok(cfg)
}
