//! Globally adaptive Gauss–Kronrod (10/21) integration with mandatory
//! breakpoints, plus a monotone map for integrals over `[0, ∞)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, QuadratureDiagnostics, Result};

#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Outcome of a converged integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
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
        // Largest error first; ties broken by position so the order is total and deterministic.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod21<F>(f: &mut F, evaluations: &mut usize, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    *evaluations += 21;
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    if !fc.is_finite() {
        return Err(Error::NonFiniteIntegrand { at: center });
    }
    let mut result_k = fc * WGK[10];
    let mut result_abs = result_k.abs();
    let mut result_g = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        if !f1.is_finite() {
            return Err(Error::NonFiniteIntegrand { at: center - dx });
        }
        if !f2.is_finite() {
            return Err(Error::NonFiniteIntegrand { at: center + dx });
        }
        fv1[j] = f1;
        fv2[j] = f2;
        result_k += WGK[j] * (f1 + f2);
        result_abs += WGK[j] * (f1.abs() + f2.abs());
        // Gauss nodes are the odd-indexed Kronrod nodes.
        if j % 2 == 1 {
            result_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = result_k * 0.5;
    let mut result_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        result_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = result_k * half;
    let result_abs = result_abs * half.abs();
    let result_asc = result_asc * half.abs();
    let mut error = ((result_k - result_g) * half).abs();
    if result_asc != 0.0 && error != 0.0 {
        error = result_asc * (200.0 * error / result_asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * result_abs;
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(roundoff);
    }
    Ok(Panel { a, b, value, error })
}

/// Integrates `f` over `[a, b]`, always splitting at the interior `breaks`.
///
/// Panels are refined largest-error first until the summed error estimate
/// drops below `max(abs, rel·|value|)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, breaks: &[f64], tol: Tolerance) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut edges: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut evaluations = 0usize;
    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        heap.push(kronrod21(&mut f, &mut evaluations, w[0], w[1])?);
    }

    loop {
        let (value, error) = sum_panels(&heap);
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(Integral {
                value,
                error_estimate: error,
                evaluations,
                subdivisions: heap.len(),
            });
        }
        if heap.len() >= tol.max_subdivisions {
            return Err(Error::QuadratureNonConvergence(QuadratureDiagnostics {
                estimate: value,
                error_estimate: error,
                evaluations,
                subdivisions: heap.len(),
            }));
        }
        let worst = *heap.peek().expect("heap holds at least one panel");
        if !splittable(&worst) {
            // Worst panel is too narrow to bisect in floating point.
            return Err(Error::QuadratureNonConvergence(QuadratureDiagnostics {
                estimate: value,
                error_estimate: error,
                evaluations,
                subdivisions: heap.len(),
            }));
        }
        heap.pop();
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(kronrod21(&mut f, &mut evaluations, worst.a, mid)?);
        heap.push(kronrod21(&mut f, &mut evaluations, mid, worst.b)?);
    }
}

fn splittable(p: &Panel) -> bool {
    let mid = 0.5 * (p.a + p.b);
    mid > p.a && mid < p.b
}

/// Sums panel values in position order so the total does not depend on heap layout.
fn sum_panels(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = crate::stats::neumaier_sum(panels.iter().map(|p| p.value));
    let error = crate::stats::neumaier_sum(panels.iter().map(|p| p.error));
    (value, error)
}

/// Map from `t ∈ [0, 1)` to `x = scale·t/(1 − t) ∈ [0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfLineMap {
    pub scale: f64,
}

impl HalfLineMap {
    pub fn to_x(&self, t: f64) -> f64 {
        self.scale * t / (1.0 - t)
    }

    pub fn to_t(&self, x: f64) -> f64 {
        x / (x + self.scale)
    }

    pub fn jacobian(&self, t: f64) -> f64 {
        self.scale / ((1.0 - t) * (1.0 - t))
    }
}

/// Integrates `f` over `[0, ∞)` through [`HalfLineMap`]; `breaks` are given in `x`.
pub fn integrate_half_line<F>(mut f: F, scale: f64, breaks: &[f64], tol: Tolerance) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    let map = HalfLineMap { scale };
    let t_breaks: Vec<f64> = breaks
        .iter()
        .filter(|&&x| x > 0.0 && x.is_finite())
        .map(|&x| map.to_t(x))
        .collect();
    integrate(
        |t| {
            let x = map.to_x(t);
            Ok(f(x)? * map.jacobian(t))
        },
        0.0,
        1.0,
        &t_breaks,
        tol,
    )
}
