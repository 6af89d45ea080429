//! Adaptive Gauss–Kronrod quadrature.
//!
//! A 10-point Gauss rule embedded in a 21-point Kronrod rule is applied on
//! panels; the panel with the largest error estimate is bisected until the
//! global estimate meets `max(abs_tol, rel_tol * |value|)`. Callers pass the
//! points where the integrand is known to jump (tax-rule breakpoints mapped
//! into the integration variable) as mandatory panel boundaries.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)] // published table digits, kept verbatim
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)] // published table digits, kept verbatim
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_497_060,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)] // published table digits, kept verbatim
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_146,
];

/// Tolerances and work limit for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_panels: 2000,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions {
            abs_tol: tol,
            rel_tol: tol,
            ..Default::default()
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Value and error estimate of a definite integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// One application of the 21-point Kronrod rule on `[a, b]`.
///
/// Returns the Kronrod value and `|K21 - G10|` as the error estimate.
pub fn gk21<F>(f: &mut F, a: f64, b: f64) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx)? + f(center + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    if !value.is_finite() {
        return Err(Error::Accuracy {
            what: "quadrature",
            requested: 0.0,
            achieved: f64::NAN,
        });
    }
    Ok(Integral { value, error })
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    est: Integral,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Adaptive integration of a fallible integrand over `[a, b]`.
///
/// `breaks` may contain points outside `(a, b)`; they are ignored. An
/// [`Error::Accuracy`] carrying the achieved bound is returned when the panel
/// budget runs out.
pub fn try_integrate<F>(mut f: F, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    if a > b {
        let r = try_integrate(f, b, a, breaks, opts)?;
        return Ok(Integral {
            value: -r.value,
            error: r.error,
        });
    }

    let mut edges = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(b);

    let mut heap = BinaryHeap::new();
    // Panels that cannot be split further in floating point.
    let mut frozen = Integral { value: 0.0, error: 0.0 };
    for w in edges.windows(2) {
        let est = gk21(&mut f, w[0], w[1])?;
        heap.push(Panel { a: w[0], b: w[1], est });
    }

    loop {
        let (value, error) = heap.iter().fold((frozen.value, frozen.error), |(v, e), p| {
            (v + p.est.value, e + p.est.error)
        });
        if error <= opts.target(value) {
            return Ok(Integral { value, error });
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::Accuracy {
                what: "adaptive quadrature",
                requested: opts.target(value),
                achieved: error,
            });
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::Accuracy {
                what: "adaptive quadrature",
                requested: opts.target(value),
                achieved: error,
            });
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            frozen.value += worst.est.value;
            frozen.error += worst.est.error;
            continue;
        }
        let left = gk21(&mut f, worst.a, mid)?;
        let right = gk21(&mut f, mid, worst.b)?;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            est: right,
        });
    }
}

/// Infallible convenience wrapper around [`try_integrate`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), a, b, breaks, opts)
}
