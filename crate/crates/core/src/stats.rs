//! Small numerical helpers: compensated sums and sample moments.

/// Neumaier-compensated sum; order-stable to well below test tolerances.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean, unbiased standard deviation, skewness and excess kurtosis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn moments(samples: &[f64]) -> Moments {
    let n = samples.len();
    if n == 0 {
        return Moments {
            n,
            mean: f64::NAN,
            std_dev: f64::NAN,
            skewness: f64::NAN,
            excess_kurtosis: f64::NAN,
        };
    }
    let nf = n as f64;
    let mean = neumaier_sum(samples.iter().copied()) / nf;
    let m2 = neumaier_sum(samples.iter().map(|x| (x - mean).powi(2))) / nf;
    let m3 = neumaier_sum(samples.iter().map(|x| (x - mean).powi(3))) / nf;
    let m4 = neumaier_sum(samples.iter().map(|x| (x - mean).powi(4))) / nf;
    let std_dev = if n > 1 { (m2 * nf / (nf - 1.0)).sqrt() } else { 0.0 };
    Moments {
        n,
        mean,
        std_dev,
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
    }
}
