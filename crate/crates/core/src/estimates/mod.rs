//! Numerical witnesses for the inequality layer: sampled symbol bounds,
//! delta-integral quadrature on conics, and empirical bilinear constants.

pub mod bilinear;
pub mod delta;
pub mod quadrature;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, YmError};
use crate::field::japanese;

pub use bilinear::{empirical_bilinear_constant, BilinearConfig, BilinearStudy, ProductMode};
pub use delta::{delta_integral_ellipse, delta_integral_hyperbola, elliptic_sweep, lemma_elliptic_i};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SampleConfig {
    pub count: usize,
    pub radius_range: [f64; 2],
    pub rng_seed: u64,
    /// The Lebesgue exponent r.
    pub r_exponent: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { count: 1_000_000, radius_range: [1e-3, 1e3], rng_seed: 0, r_exponent: 2.0 }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.radius_range;
        if self.count == 0 {
            return Err(YmError::InvalidParameter("sample count must be at least 1".into()));
        }
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(YmError::InvalidParameter(format!("radius range [{lo}, {hi}] needs 0 < rMin < rMax")));
        }
        if !(self.r_exponent > 1.0 && self.r_exponent <= 2.0) {
            return Err(YmError::InvalidParameter(format!("r = {} must lie in (1, 2]", self.r_exponent)));
        }
        Ok(())
    }
}

/// Outcome of a sampled or swept bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundReport {
    pub name: String,
    pub samples: usize,
    pub sup_ratio: f64,
    pub argmax_point: BTreeMap<String, f64>,
    pub pass: bool,
    pub threshold: f64,
    /// Degenerate samples excluded from the sup.
    pub skipped: usize,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, samples: usize, sup_ratio: f64, argmax_point: BTreeMap<String, f64>, threshold: f64, skipped: usize) -> Self {
        let pass = sup_ratio.is_finite() && sup_ratio >= 0.0 && sup_ratio <= threshold;
        BoundReport { name: name.into(), samples, sup_ratio, argmax_point, pass, threshold, skipped }
    }
}

/// The five null-form symbol bounds behind the bilinear estimates, written
/// for (η, ζ) with ξ = η + ζ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FkCase {
    EllipticQ12,
    HyperbolicQ12,
    EllipticQ0j,
    EllipticQ0,
    HyperbolicQ0,
}

impl FkCase {
    pub const ALL: [FkCase; 5] =
        [FkCase::EllipticQ12, FkCase::HyperbolicQ12, FkCase::EllipticQ0j, FkCase::EllipticQ0, FkCase::HyperbolicQ0];

    pub fn name(self) -> &'static str {
        match self {
            FkCase::EllipticQ12 => "ellipticQ12",
            FkCase::HyperbolicQ12 => "hyperbolicQ12",
            FkCase::EllipticQ0j => "ellipticQ0j",
            FkCase::EllipticQ0 => "ellipticQ0",
            FkCase::HyperbolicQ0 => "hyperbolicQ0",
        }
    }
}

/// A pointwise inequality lhs ≤ C·rhs sampled over its variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SymbolCheck {
    Gamma1,
    Fk(FkCase),
    Angle { alpha: f64, beta: f64, gamma: f64 },
    HyperbolicLeibniz,
}

const GAMMA1_LABELS: [&str; 6] = ["xi1", "xi2", "eta1", "eta2", "tau", "lambda"];
const FK_LABELS: [&str; 4] = ["eta1", "eta2", "zeta1", "zeta2"];
const ANGLE_LABELS: [&str; 8] = ["xi1", "xi2", "eta1", "eta2", "tau", "lambda", "sign1", "sign2"];
const HLR_LABELS: [&str; 6] = ["xi1", "xi2", "eta1", "eta2", "tau", "rho"];

/// Collinearity cutoff for the FK cases.
pub const DEGENERATE_SIN: f64 = 1e-12;

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = norm(v);
    [v[0] / n, v[1] / n]
}

fn cross(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

fn dot(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

/// ⟨x⟩ for a scalar.
fn jap1(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// b₊ = |η| + |ζ| − |η + ζ| without cancellation.
fn b_plus(eta: [f64; 2], zeta: [f64; 2]) -> f64 {
    let (a, b, c) = (norm(eta), norm(zeta), norm([eta[0] + zeta[0], eta[1] + zeta[1]]));
    let (u, v) = (unit(eta), unit(zeta));
    let d2 = (u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2);
    a * b * d2 / (a + b + c)
}

/// b₋ = |η + ζ| − ||η| − |ζ|| without cancellation.
fn b_minus(eta: [f64; 2], zeta: [f64; 2]) -> f64 {
    let (a, b, c) = (norm(eta), norm(zeta), norm([eta[0] + zeta[0], eta[1] + zeta[1]]));
    let (u, v) = (unit(eta), unit(zeta));
    let s2 = (u[0] + v[0]).powi(2) + (u[1] + v[1]).powi(2);
    a * b * s2 / (c + (a - b).abs())
}

fn quotient(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

impl SymbolCheck {
    pub fn name(&self) -> String {
        match self {
            SymbolCheck::Gamma1 => "gamma1Symbol".into(),
            SymbolCheck::Fk(c) => format!("fkSymbol.{}", c.name()),
            SymbolCheck::Angle { alpha, beta, gamma } => format!("angleEstimate({alpha},{beta},{gamma})"),
            SymbolCheck::HyperbolicLeibniz => "hyperbolicLeibniz".into(),
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            SymbolCheck::Gamma1 | SymbolCheck::Fk(_) => 4.0,
            SymbolCheck::Angle { .. } => 8.0,
            SymbolCheck::HyperbolicLeibniz => 2.0,
        }
    }

    pub fn labels(&self) -> &'static [&'static str] {
        match self {
            SymbolCheck::Gamma1 => &GAMMA1_LABELS,
            SymbolCheck::Fk(_) => &FK_LABELS,
            SymbolCheck::Angle { .. } => &ANGLE_LABELS,
            SymbolCheck::HyperbolicLeibniz => &HLR_LABELS,
        }
    }

    /// lhs/rhs at a point; `None` marks a degenerate point.
    pub fn ratio(&self, p: &[f64]) -> Option<f64> {
        match *self {
            SymbolCheck::Gamma1 => Some(gamma1_ratio(p)),
            SymbolCheck::Fk(case) => fk_ratio(case, p),
            SymbolCheck::Angle { alpha, beta, gamma } => angle_ratio(p, alpha, beta, gamma),
            SymbolCheck::HyperbolicLeibniz => hlr_ratio(p),
        }
    }

    /// Re-evaluates the ratio at a recorded argmax point.
    pub fn ratio_at(&self, point: &BTreeMap<String, f64>) -> Option<f64> {
        let p: Option<Vec<f64>> = self.labels().iter().map(|l| point.get(*l).copied()).collect();
        self.ratio(&p?)
    }

    fn sample(&self, rng: &mut ChaCha8Rng, cfg: &SampleConfig) -> Vec<f64> {
        let s = Sampler { range: cfg.radius_range };
        match self {
            SymbolCheck::Gamma1 => {
                let (xi, eta) = (s.vector(rng), s.vector(rng));
                let tau = s.sign(rng) * norm(xi) + s.modulation(rng);
                let lambda = s.sign(rng) * norm(eta) + s.modulation(rng);
                vec![xi[0], xi[1], eta[0], eta[1], tau, lambda]
            }
            SymbolCheck::Fk(_) => {
                let (eta, zeta) = s.pair(rng);
                vec![eta[0], eta[1], zeta[0], zeta[1]]
            }
            SymbolCheck::Angle { .. } => {
                let (xi, eta) = s.pair(rng);
                let (s1, s2) = (s.sign(rng), s.sign(rng));
                let tau = s1 * norm(xi) + s.modulation(rng);
                let lambda = s2 * norm(eta) + s.modulation(rng);
                vec![xi[0], xi[1], eta[0], eta[1], tau, lambda, s1, s2]
            }
            SymbolCheck::HyperbolicLeibniz => {
                let (eta, zeta) = s.pair(rng);
                let xi = [eta[0] + zeta[0], eta[1] + zeta[1]];
                let rho = s.sign(rng) * norm(eta) + s.modulation(rng);
                let tau = rho + s.sign(rng) * norm(zeta) + s.modulation(rng);
                vec![xi[0], xi[1], eta[0], eta[1], tau, rho]
            }
        }
    }
}

/// |p| against |sin∠(ξ,η)| + |τλ − ξ·η|/(⟨ξ⟩⟨η⟩) + ⟨ξ⟩^{-2} + ⟨η⟩^{-2}, with
/// p = −1 + (ξ·η)τλ/(⟨ξ⟩²⟨η⟩²) the symbol of Γ¹.
fn gamma1_ratio(p: &[f64]) -> f64 {
    let (xi, eta, tau, lambda) = ([p[0], p[1]], [p[2], p[3]], p[4], p[5]);
    let (jx, je) = (japanese(xi), japanese(eta));
    let symbol = -1.0 + dot(xi, eta) * tau * lambda / (jx * jx * je * je);
    let sin = if norm(xi) == 0.0 || norm(eta) == 0.0 { 0.0 } else { cross(unit(xi), unit(eta)).abs() };
    let bound = sin + (tau * lambda - dot(xi, eta)).abs() / (jx * je) + 1.0 / (jx * jx) + 1.0 / (je * je);
    quotient(symbol.abs(), bound)
}

fn fk_ratio(case: FkCase, p: &[f64]) -> Option<f64> {
    let (eta, zeta) = ([p[0], p[1]], [p[2], p[3]]);
    let (a, b) = (norm(eta), norm(zeta));
    let c = norm([eta[0] + zeta[0], eta[1] + zeta[1]]);
    if a == 0.0 || b == 0.0 {
        return None;
    }
    let (u, v) = (unit(eta), unit(zeta));
    let sin = cross(u, v).abs();
    if sin <= DEGENERATE_SIN {
        return None;
    }
    let (lhs, rhs) = match case {
        FkCase::EllipticQ12 => (sin, (c * b_plus(eta, zeta)).sqrt() / (a * b).sqrt()),
        FkCase::HyperbolicQ12 => (sin, (c * b_minus(eta, zeta)).sqrt() / (a * b).sqrt()),
        FkCase::EllipticQ0j => {
            let l = (v[0] - u[0]).abs().max((v[1] - u[1]).abs());
            (l, (b_plus(eta, zeta) / a.min(b)).sqrt())
        }
        FkCase::EllipticQ0 => {
            let l = 0.5 * ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2));
            (l, b_plus(eta, zeta) / a.min(b))
        }
        FkCase::HyperbolicQ0 => {
            let l = 0.5 * ((u[0] + v[0]).powi(2) + (u[1] + v[1]).powi(2));
            (l, c * b_minus(eta, zeta) / (a * b))
        }
    };
    Some(quotient(lhs, rhs))
}

/// ∠(±₁ξ, ±₂η) against the three-term modulation bound.
fn angle_ratio(p: &[f64], alpha: f64, beta: f64, gamma: f64) -> Option<f64> {
    let (xi, eta, tau, lambda, s1, s2) = ([p[0], p[1]], [p[2], p[3]], p[4], p[5], p[6], p[7]);
    if norm(xi) == 0.0 || norm(eta) == 0.0 {
        return None;
    }
    let (u, v) = ([s1 * xi[0], s1 * xi[1]], [s2 * eta[0], s2 * eta[1]]);
    let angle = cross(u, v).abs().atan2(dot(u, v));
    let m = japanese(xi).min(japanese(eta));
    let sum = [xi[0] + eta[0], xi[1] + eta[1]];
    let rhs = (jap1((tau + lambda).abs() - norm(sum)) / m).powf(alpha)
        + (jap1(-tau + s1 * norm(xi)) / m).powf(beta)
        + (jap1(-lambda + s2 * norm(eta)) / m).powf(gamma);
    Some(quotient(angle, rhs))
}

/// ||τ| − |ξ|| against ||ρ| − |η|| + ||τ − ρ| − |ξ − η|| + b_±(ξ, η), with b₊
/// when ρ and τ − ρ have the same sign and b₋ otherwise. Points where both
/// sides are below the rounding floor of |τ| − |ξ| are degenerate.
fn hlr_ratio(p: &[f64]) -> Option<f64> {
    let (xi, eta, tau, rho) = ([p[0], p[1]], [p[2], p[3]], p[4], p[5]);
    let zeta = [xi[0] - eta[0], xi[1] - eta[1]];
    let lhs = (tau.abs() - norm(xi)).abs();
    let b = if norm(eta) == 0.0 || norm(zeta) == 0.0 {
        0.0
    } else if rho * (tau - rho) >= 0.0 {
        b_plus(eta, zeta)
    } else {
        b_minus(eta, zeta)
    };
    let rhs = (rho.abs() - norm(eta)).abs() + ((tau - rho).abs() - norm(zeta)).abs() + b;
    let floor = 32.0 * f64::EPSILON * tau.abs().max(norm(xi));
    if lhs <= floor && rhs <= floor {
        return None;
    }
    Some(quotient(lhs, rhs))
}

struct Sampler {
    range: [f64; 2],
}

impl Sampler {
    fn radius(&self, rng: &mut ChaCha8Rng) -> f64 {
        let (lo, hi) = (self.range[0].ln(), self.range[1].ln());
        rng.random_range(lo..hi).exp()
    }

    fn direction(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.random_range(0.0..std::f64::consts::TAU)
    }

    fn vector(&self, rng: &mut ChaCha8Rng) -> [f64; 2] {
        let (r, t) = (self.radius(rng), self.direction(rng));
        [r * t.cos(), r * t.sin()]
    }

    fn sign(&self, rng: &mut ChaCha8Rng) -> f64 {
        if rng.random_bool(0.5) {
            1.0
        } else {
            -1.0
        }
    }

    /// Distance from the cone: zero a quarter of the time, otherwise
    /// log-uniform with a random sign.
    fn modulation(&self, rng: &mut ChaCha8Rng) -> f64 {
        if rng.random_bool(0.25) {
            0.0
        } else {
            self.sign(rng) * self.radius(rng)
        }
    }

    /// Two vectors, independent half the time and otherwise nearly parallel
    /// or antiparallel with a log-uniform angle.
    fn pair(&self, rng: &mut ChaCha8Rng) -> ([f64; 2], [f64; 2]) {
        let u = self.vector(rng);
        let mode = rng.random_range(0..4);
        if mode < 2 {
            return (u, self.vector(rng));
        }
        let r = self.radius(rng);
        let tilt = self.sign(rng) * rng.random_range((1e-9f64).ln()..0.0).exp();
        let base = u[1].atan2(u[0]) + tilt + if mode == 3 { std::f64::consts::PI } else { 0.0 };
        (u, [r * base.cos(), r * base.sin()])
    }
}

const CHUNK: usize = 4096;

/// Samples `cfg.count` points in parallel; chunk k uses ChaCha stream k, so
/// the result does not depend on the thread count.
pub fn run_symbol_check(check: SymbolCheck, cfg: &SampleConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let chunks = cfg.count.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(k as u64);
            let n = CHUNK.min(cfg.count - k * CHUNK);
            let mut best: (f64, Vec<f64>) = (-1.0, Vec::new());
            let mut skipped = 0usize;
            for _ in 0..n {
                let p = check.sample(&mut rng, cfg);
                match check.ratio(&p) {
                    None => skipped += 1,
                    Some(q) if q > best.0 || q.is_nan() => best = (if q.is_nan() { f64::INFINITY } else { q }, p),
                    Some(_) => {}
                }
            }
            (best, skipped)
        })
        .reduce(|| ((-1.0, Vec::new()), 0), |x, y| {
            let skipped = x.1 + y.1;
            // ties resolve to the earlier chunk, so the reduction order is irrelevant
            let pick = if y.0 .0 > x.0 .0 { y.0 } else { x.0 };
            (pick, skipped)
        });
    let ((sup, point), skipped) = best;
    let argmax = check.labels().iter().zip(point.iter()).map(|(l, v)| (l.to_string(), *v)).collect();
    Ok(BoundReport::new(check.name(), cfg.count, sup.max(0.0), argmax, check.threshold(), skipped))
}

pub fn check_gamma1_symbol(cfg: &SampleConfig) -> Result<BoundReport> {
    run_symbol_check(SymbolCheck::Gamma1, cfg)
}

pub fn check_fk_symbol_bounds(case: FkCase, cfg: &SampleConfig) -> Result<BoundReport> {
    run_symbol_check(SymbolCheck::Fk(case), cfg)
}

pub fn check_angle_estimate(cfg: &SampleConfig, alpha: f64, beta: f64, gamma: f64) -> Result<BoundReport> {
    for (n, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        if !(0.0..=0.5).contains(&v) {
            return Err(YmError::InvalidParameter(format!("{n} = {v} must lie in [0, 1/2]")));
        }
    }
    run_symbol_check(SymbolCheck::Angle { alpha, beta, gamma }, cfg)
}

pub fn check_hyperbolic_leibniz(cfg: &SampleConfig) -> Result<BoundReport> {
    run_symbol_check(SymbolCheck::HyperbolicLeibniz, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SampleConfig {
        SampleConfig { count: 20_000, rng_seed: 11, ..Default::default() }
    }

    #[test]
    fn gamma1_examples() {
        // ξ = η = 0, τλ = 0: |p| = 1 against 2
        assert_eq!(gamma1_ratio(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 0.5);
        // τ = ⟨ξ⟩, λ = ⟨η⟩, η = ξ
        let xi = [3.0, -4.0];
        let j = japanese(xi);
        let q = gamma1_ratio(&[xi[0], xi[1], xi[0], xi[1], j, j]);
        let p = (-1.0 + 25.0 / (j * j)).abs();
        assert!(q <= 1.0 && p > 0.0);
    }

    #[test]
    fn fk_examples() {
        // parallel η and ζ are degenerate
        assert_eq!(fk_ratio(FkCase::EllipticQ12, &[1.0, 0.0, 2.0, 0.0]), None);
        // the elliptic q12 ratio tends to √2 as η and ζ align
        let t: f64 = 1e-4;
        let q = fk_ratio(FkCase::EllipticQ12, &[1.0, 0.0, t.cos(), t.sin()]).unwrap();
        assert!((q - 2f64.sqrt()).abs() < 1e-6, "{q}");
    }

    #[test]
    fn angle_examples() {
        // ξ = η, equal signs, on the cone: angle 0
        assert_eq!(angle_ratio(&[2.0, 1.0, 2.0, 1.0, 5f64.sqrt(), 5f64.sqrt(), 1.0, 1.0], 0.5, 0.5, 0.5), Some(0.0));
        // opposite signs with ξ = η: angle π against a positive bound
        let q = angle_ratio(&[2.0, 1.0, 2.0, 1.0, 5f64.sqrt(), -(5f64.sqrt()), 1.0, -1.0], 0.5, 0.5, 0.5).unwrap();
        assert!(q > 0.0 && q < 8.0);
    }

    #[test]
    fn hlr_examples() {
        let (xi, eta) = ([3.0, 1.0], [1.0, 2.0]);
        let zeta = [xi[0] - eta[0], xi[1] - eta[1]];
        let rho = norm(eta);
        let tau = rho + norm(zeta);
        // the equality branch: lhs = b₊ exactly
        let q = hlr_ratio(&[xi[0], xi[1], eta[0], eta[1], tau, rho]).unwrap();
        assert!((q - 1.0).abs() < 1e-12, "{q}");
        assert_eq!(hlr_ratio(&[xi[0], xi[1], eta[0], eta[1], norm(xi), 0.3]), Some(0.0));
        // collinear η and ξ − η on the cone: both sides vanish up to rounding
        let p = [-50.297529404411634, 38.55134636128461, 0.004639591597261174, -0.0035560891990700314];
        let zeta = norm([p[0] - p[2], p[1] - p[3]]);
        let rho = norm([p[2], p[3]]);
        assert_eq!(hlr_ratio(&[p[0], p[1], p[2], p[3], rho - zeta, rho]), None);
    }

    #[test]
    fn sampled_checks_pass_and_are_thread_independent() {
        let cfg = small();
        for check in [
            SymbolCheck::Gamma1,
            SymbolCheck::Fk(FkCase::EllipticQ12),
            SymbolCheck::Fk(FkCase::HyperbolicQ12),
            SymbolCheck::Fk(FkCase::EllipticQ0j),
            SymbolCheck::Fk(FkCase::EllipticQ0),
            SymbolCheck::Fk(FkCase::HyperbolicQ0),
            SymbolCheck::Angle { alpha: 0.5, beta: 0.5, gamma: 0.5 },
            SymbolCheck::HyperbolicLeibniz,
        ] {
            let r = run_symbol_check(check, &cfg).unwrap();
            assert!(r.pass, "{r:?}");
            assert_eq!(check.ratio_at(&r.argmax_point), Some(r.sup_ratio), "{r:?}");
            let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            let again = single.install(|| run_symbol_check(check, &cfg).unwrap());
            assert_eq!(again, r);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(SampleConfig { count: 0, ..small() }.validate().is_err());
        assert!(SampleConfig { radius_range: [1.0, 1.0], ..small() }.validate().is_err());
        assert!(SampleConfig { r_exponent: 1.0, ..small() }.validate().is_err());
        assert!(check_angle_estimate(&small(), 0.6, 0.5, 0.5).is_err());
    }
}
