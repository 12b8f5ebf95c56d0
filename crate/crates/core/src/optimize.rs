//! Golden-section minimization of expensive, noisy-free scalar objectives.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimizes `f` on `[lo, hi]` by golden-section search until the bracket is
/// narrower than `x_tol`. The objective is assumed unimodal on the bracket
/// (flat stretches are fine).
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, x_tol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evaluations = 2;
    while (b - a).abs() > x_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok(Minimum {
        x,
        value,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_vertex() {
        let m = golden_section(|x| Ok((x - 1.3).powi(2) + 2.0), -5.0, 7.0, 1e-9).unwrap();
        assert!((m.x - 1.3).abs() < 1e-7);
        assert!((m.value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_minimum() {
        let m = golden_section(Ok, 0.0, 1.0, 1e-8).unwrap();
        assert!(m.x < 1e-7);
    }

    #[test]
    fn reversed_bracket() {
        let m = golden_section(|x| Ok((x + 2.0).abs()), 3.0, -4.0, 1e-9).unwrap();
        assert!((m.x + 2.0).abs() < 1e-8);
    }
}
