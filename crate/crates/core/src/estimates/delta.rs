//! ∫δ(τ − |η| ∓ |ξ−η|)|η|^{-a}|ξ−η|^{-b} dη on the conics with foci 0 and ξ.
//!
//! Both conics are level sets of elliptic coordinates
//! η = ξ/2 + (|ξ|/2)(cosh μ cos ν, sinh μ sin ν) in the frame of ξ, where
//! |η| = (|ξ|/2)(cosh μ + cos ν), |ξ−η| = (|ξ|/2)(cosh μ − cos ν) and
//! dη = (|ξ|²/4)(cosh²μ − cos²ν) dμ dν. The delta then removes μ (ellipse)
//! or ν (hyperbola) and leaves a one-dimensional integral.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::quadrature::integrate_breaks;
use super::BoundReport;
use crate::error::{Result, YmError};

pub const DEFAULT_REL_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 200_000;

fn check_inputs(tau: f64, xi: [f64; 2], a: f64, b: f64, rel: f64) -> Result<f64> {
    let c = xi[0].hypot(xi[1]);
    if !(tau.is_finite() && c.is_finite() && a.is_finite() && b.is_finite()) {
        return Err(YmError::InvalidParameter("non-finite delta-integral input".into()));
    }
    if !(rel > 0.0 && rel < 1.0) {
        return Err(YmError::InvalidParameter(format!("relative tolerance {rel} outside (0, 1)")));
    }
    Ok(c)
}

/// Breakpoints 0, s, 2s, 4s, ... below `top`, then `top`.
fn dyadic(s: f64, top: f64) -> Vec<f64> {
    let mut v = vec![0.0];
    let mut x = s;
    while x < top {
        v.push(x);
        x *= 2.0;
    }
    v.push(top);
    v
}

/// The ellipse {|η| + |ξ−η| = τ}, τ > |ξ|.
pub fn delta_integral_ellipse(tau: f64, xi: [f64; 2], exponents: (f64, f64)) -> Result<f64> {
    delta_integral_ellipse_tol(tau, xi, exponents, DEFAULT_REL_TOL)
}

pub fn delta_integral_ellipse_tol(tau: f64, xi: [f64; 2], (a, b): (f64, f64), rel: f64) -> Result<f64> {
    let c = check_inputs(tau, xi, a, b, rel)?;
    if tau <= c {
        return Err(YmError::InvalidParameter(format!("ellipse needs τ > |ξ| (τ = {tau}, |ξ| = {c})")));
    }
    let gap = tau - c;
    // √(1 − ε²) with ε = c/τ
    let root = (gap * (tau + c)).sqrt() / tau;
    let f = |nu: f64| {
        let (s, co) = nu.sin_cos();
        let weight = 0.5 * tau * (s * s + root * root * co * co) / root;
        let (h, hs) = ((0.5 * nu).cos(), (0.5 * nu).sin());
        let eta = 0.5 * (gap + 2.0 * c * h * h);
        let rest = 0.5 * (gap + 2.0 * c * hs * hs);
        weight * eta.powf(-a) * rest.powf(-b)
    };
    // the weights vary on the angular scale √(gap/τ) near both vertices
    let s = (gap / tau).sqrt().min(0.5);
    let half = std::f64::consts::FRAC_PI_2;
    let mut breaks = dyadic(s, half);
    let upper: Vec<f64> = breaks.iter().rev().skip(1).map(|x| std::f64::consts::PI - x).collect();
    breaks.extend(upper);
    Ok(integrate_breaks(f, &breaks, rel, 0.0, MAX_PANELS)?.value)
}

/// ln(cosh μ − 1 + d) for d ≥ 0 without overflow or cancellation.
fn ln_cosh_shift(mu: f64, d: f64) -> f64 {
    if mu < 40.0 {
        let sh = (0.5 * mu).sinh();
        (2.0 * sh * sh + d).ln()
    } else {
        let e = (-mu).exp();
        mu - std::f64::consts::LN_2 + (2.0 * (d - 1.0) * e + e * e).ln_1p()
    }
}

/// The hyperbola branch {|η| − |ξ−η| = τ}, |τ| < |ξ|; needs a + b > 2.
pub fn delta_integral_hyperbola(tau: f64, xi: [f64; 2], exponents: (f64, f64)) -> Result<f64> {
    delta_integral_hyperbola_tol(tau, xi, exponents, DEFAULT_REL_TOL)
}

pub fn delta_integral_hyperbola_tol(tau: f64, xi: [f64; 2], (a, b): (f64, f64), rel: f64) -> Result<f64> {
    let c = check_inputs(tau, xi, a, b, rel)?;
    if tau.abs() >= c {
        return Err(YmError::InvalidParameter(format!("hyperbola needs |τ| < |ξ| (τ = {tau}, |ξ| = {c})")));
    }
    let kappa = a + b - 2.0;
    if kappa <= 0.0 {
        return Err(YmError::InvalidParameter(format!("hyperbola integral diverges for a + b = {} ≤ 2", a + b)));
    }
    let y = tau / c;
    let ln_half_c = (0.5 * c).ln();
    let ln_root = 0.5 * ((1.0 - y) * (1.0 + y)).ln();
    // x = e^{−κμ} maps μ ∈ [0, ∞) to x ∈ (0, 1] and flattens the tail
    let f = |x: f64| {
        let mu = -x.ln() / kappa;
        let lp = ln_cosh_shift(mu, 1.0 + y);
        let lm = ln_cosh_shift(mu, 1.0 - y);
        let ln_g = ln_half_c + lp + lm - ln_root - a * (ln_half_c + lp) - b * (ln_half_c + lm);
        (ln_g + kappa * mu).exp() / kappa
    };
    let s = (1.0 - y.abs()).sqrt().min(0.5);
    let mut breaks: Vec<f64> = dyadic(s, 4.0).iter().map(|mu| (-kappa * mu).exp()).collect();
    breaks.push(0.0);
    breaks.reverse();
    breaks.dedup();
    Ok(integrate_breaks(f, &breaks, rel, 0.0, MAX_PANELS)?.value)
}

/// |ξ|^{1/2}(τ − |ξ|)^{1/2}(∫δ(τ − |η| − |ξ−η|)|η|^{-1-r/2}|ξ−η|^{-r/2}dη)^{1/r},
/// the elliptic quantity whose sup over (τ, ξ) controls the q₁₂ estimate.
pub fn lemma_elliptic_i(tau: f64, xi: [f64; 2], r: f64) -> Result<f64> {
    if !(r > 1.0 && r <= 2.0) {
        return Err(YmError::InvalidParameter(format!("r = {r} must lie in (1, 2]")));
    }
    let c = xi[0].hypot(xi[1]);
    let e = delta_integral_ellipse(tau, xi, (1.0 + 0.5 * r, 0.5 * r))?;
    Ok(c.sqrt() * (tau - c).sqrt() * e.powf(1.0 / r))
}

/// Sweep of [`lemma_elliptic_i`] over τ log-spaced in [1e-2, 1e2] and
/// |ξ|/τ = 1 − 10^{-6i/(m−1)}, with the direction of ξ rotating through the grid.
pub fn elliptic_sweep(r: f64, n_tau: usize, n_ratio: usize, threshold: f64) -> Result<BoundReport> {
    if n_tau < 2 || n_ratio < 2 {
        return Err(YmError::InvalidParameter("sweep needs at least two values per axis".into()));
    }
    let points: Vec<(f64, [f64; 2])> = (0..n_tau)
        .flat_map(|i| {
            let tau = 10f64.powf(-2.0 + 4.0 * i as f64 / (n_tau - 1) as f64);
            (0..n_ratio).map(move |j| {
                let ratio = 1.0 - 10f64.powf(-6.0 * j as f64 / (n_ratio - 1) as f64);
                let angle = 0.7 * (i * n_ratio + j) as f64;
                (tau, [tau * ratio * angle.cos(), tau * ratio * angle.sin()])
            })
        })
        .collect();
    let values: Vec<f64> = points.par_iter().map(|&(tau, xi)| lemma_elliptic_i(tau, xi, r)).collect::<Result<_>>()?;
    let (k, sup) = values.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best });
    let (tau, xi) = points[k];
    let argmax = BTreeMap::from([("tau".to_string(), tau), ("xi1".to_string(), xi[0]), ("xi2".to_string(), xi[1])]);
    Ok(BoundReport::new(format!("lemmaEllipticI(r={r})"), points.len(), sup, argmax, threshold, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Brute-force oracle: the level set traced as a polygon in η with
    /// weights f/|∇g| and arclength, independent of elliptic coordinates.
    fn polygon_oracle(tau: f64, xi: [f64; 2], a: f64, b: f64, hyperbola: bool) -> f64 {
        let c = xi[0].hypot(xi[1]);
        let (e1, e2) = ([xi[0] / c, xi[1] / c], [-xi[1] / c, xi[0] / c]);
        let m = 400_000;
        let point = |t: f64| -> [f64; 2] {
            // centre-axis parametrization of the ellipse, one branch of the hyperbola
            let (p, q) = if hyperbola {
                let mu = t;
                let y = tau / c;
                (0.5 * c * (1.0 + mu.cosh() * y), 0.5 * c * mu.sinh() * (1.0 - y * y).sqrt())
            } else {
                let (sa, sb) = (0.5 * tau, 0.5 * (tau * tau - c * c).sqrt());
                (0.5 * c + sa * t.cos(), sb * t.sin())
            };
            [p * e1[0] + q * e2[0], p * e1[1] + q * e2[1]]
        };
        let f = |eta: [f64; 2]| {
            let n1 = eta[0].hypot(eta[1]);
            let d = [xi[0] - eta[0], xi[1] - eta[1]];
            let n2 = d[0].hypot(d[1]);
            let s = if hyperbola { 1.0 } else { -1.0 };
            let grad = [eta[0] / n1 + s * d[0] / n2, eta[1] / n1 + s * d[1] / n2];
            n1.powf(-a) * n2.powf(-b) / grad[0].hypot(grad[1])
        };
        let (lo, hi) = if hyperbola { (-30.0, 30.0) } else { (0.0, 2.0 * PI) };
        let h = (hi - lo) / m as f64;
        let mut sum = 0.0;
        for k in 0..m {
            let (p0, p1) = (point(lo + k as f64 * h), point(lo + (k + 1) as f64 * h));
            let mid = [(p0[0] + p1[0]) / 2.0, (p0[1] + p1[1]) / 2.0];
            sum += f(mid) * (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
        }
        sum
    }

    #[test]
    fn circle_closed_form() {
        assert!((delta_integral_ellipse(2.0, [0.0, 0.0], (0.0, 0.0)).unwrap() - PI).abs() < 1e-12);
        for (tau, a, b) in [(0.3f64, 1.0, 0.5), (7.0, 1.55, 0.55), (1.0, -1.0, 2.0)] {
            let want = PI * (0.5 * tau).powf(1.0 - a - b);
            let got = delta_integral_ellipse(tau, [0.0, 0.0], (a, b)).unwrap();
            assert!((got / want - 1.0).abs() < 1e-10, "{got} {want}");
        }
    }

    #[test]
    fn homogeneity() {
        let base = delta_integral_ellipse(3.0, [1.0, 2.0], (0.0, 0.0)).unwrap();
        let scaled = delta_integral_ellipse(15.0, [5.0, 10.0], (0.0, 0.0)).unwrap();
        assert!((scaled / base - 5.0).abs() < 1e-9);
        let base = delta_integral_hyperbola(0.5, [1.0, 2.0], (1.6, 0.7)).unwrap();
        let scaled = delta_integral_hyperbola(1.0, [2.0, 4.0], (1.6, 0.7)).unwrap();
        assert!((scaled / base - 2f64.powf(1.0 - 2.3)).abs() < 1e-9);
    }

    #[test]
    fn agrees_with_polygon_oracle() {
        for (tau, xi, a, b) in [(3.0, [1.0, 2.0], 1.2, 0.3), (1.01, [0.6, -0.8], 0.5, 0.5)] {
            let got = delta_integral_ellipse(tau, xi, (a, b)).unwrap();
            let want = polygon_oracle(tau, xi, a, b, false);
            assert!((got / want - 1.0).abs() < 1e-6, "{got} {want}");
        }
        for (tau, xi, a, b) in [(0.5, [1.0, 2.0], 2.6, 1.4), (-1.2, [0.0, 2.0], 2.0, 1.5)] {
            let got = delta_integral_hyperbola(tau, xi, (a, b)).unwrap();
            let want = polygon_oracle(tau, xi, a, b, true);
            assert!((got / want - 1.0).abs() < 1e-6, "{got} {want}");
        }
    }

    #[test]
    fn halving_the_tolerance_is_stable() {
        for (tau, c) in [(1.0, 0.5), (1.0, 1.0 - 1e-6), (50.0, 1e-3)] {
            let xi = [c * tau, 0.0];
            let x = delta_integral_ellipse_tol(tau, xi, (1.55, 0.55), 1e-8).unwrap();
            let y = delta_integral_ellipse_tol(tau, xi, (1.55, 0.55), 5e-9).unwrap();
            assert!((x / y - 1.0).abs() <= 1e-7, "{x} {y}");
        }
    }

    #[test]
    fn lemma_quantity_is_scale_invariant() {
        let x = lemma_elliptic_i(1.0, [0.9, 0.0], 1.1).unwrap();
        let y = lemma_elliptic_i(40.0, [0.0, 36.0], 1.1).unwrap();
        assert!((x / y - 1.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_inputs() {
        assert!(delta_integral_ellipse(1.0, [1.0, 0.0], (0.0, 0.0)).is_err());
        assert!(delta_integral_hyperbola(1.0, [1.0, 0.0], (2.0, 1.0)).is_err());
        assert!(delta_integral_hyperbola(0.1, [1.0, 0.0], (1.0, 1.0)).is_err());
        assert!(lemma_elliptic_i(2.0, [1.0, 0.0], 1.0).is_err());
    }
}
