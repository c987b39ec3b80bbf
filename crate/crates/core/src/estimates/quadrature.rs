//! Globally adaptive Gauss–Kronrod (7, 15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, YmError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error).then(o.a.total_cmp(&self.a))
    }
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let (x1, x2) = (c - h * XGK[j], c + h * XGK[j]);
        let s = f(x1) + f(x2);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates f over [a, b] until the summed error estimate is below
/// max(rel·|I|, abs). Panels are split at the one with the largest error.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel: f64, abs: f64, max_panels: usize) -> Result<Quadrature> {
    integrate_breaks(f, &[a, b], rel, abs, max_panels)
}

/// As [`integrate`], starting from the panels between consecutive breakpoints.
pub fn integrate_breaks(f: impl Fn(f64) -> f64, breaks: &[f64], rel: f64, abs: f64, max_panels: usize) -> Result<Quadrature> {
    if breaks.len() < 2 || breaks.iter().any(|x| !x.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(YmError::InvalidParameter(format!("bad breakpoints {breaks:?}")));
    }
    let (a, b) = (breaks[0], breaks[breaks.len() - 1]);
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in breaks.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1]);
        total += value;
        err += error;
        heap.push(Panel { a: w[0], b: w[1], value, error });
    }
    let mut evaluations = 15 * heap.len();
    loop {
        if !total.is_finite() {
            return Err(YmError::InvalidParameter(format!("integrand not finite on [{a}, {b}]")));
        }
        if err <= (rel * total.abs()).max(abs) {
            break;
        }
        if heap.len() >= max_panels {
            return Err(YmError::NonConvergence { iterations: heap.len(), residual: err / total.abs() });
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        evaluations += 30;
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, error: e2 });
    }
    // resum to shed the drift of the running totals
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Quadrature { value, error, evaluations })
}
