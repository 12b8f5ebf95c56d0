//! Susceptibilities and input-to-output transfer functions.
//!
//! Sign convention: the mechanical susceptibility carries `+iγν` in its
//! denominator for both readouts. Only the sign of `Im χ_m` (and therefore of
//! θ*) depends on this choice; every PSD magnitude is unaffected.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{normalize_angle, MechanicalOscillator, Readout, SensorConfig};
use crate::spectra::{quadrature_terms, InputNoise};

/// `χ_m(ν) = 1 / [m (ω_m² − ν² + iγν)]`
pub fn mechanical_susceptibility(osc: &MechanicalOscillator, nu: f64) -> Result<Complex64> {
    let re = osc.omega_m() * osc.omega_m() - nu * nu;
    let im = osc.gamma() * nu;
    if re == 0.0 && im == 0.0 {
        return Err(Error::SingularResponse { nu });
    }
    Ok(Complex64::new(re, im).inv() / osc.mass())
}

/// `χ_c(ν) = 1 / (iν − κ/2)`
pub fn cavity_susceptibility(kappa: f64, nu: f64) -> Complex64 {
    Complex64::new(-kappa / 2.0, nu).inv()
}

/// Output-phase response to input phase (`yy`), input amplitude (`yx`) and
/// force (`yf`) at one angular frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferTriple {
    pub yy: Complex64,
    pub yx: Complex64,
    pub yf: Complex64,
}

impl TransferTriple {
    pub fn slab(g: f64, chi_m: Complex64) -> Self {
        Self {
            yy: Complex64::new(1.0, 0.0),
            yx: -2.0 * g * g * chi_m,
            yf: std::f64::consts::SQRT_2 * g * chi_m,
        }
    }

    pub fn cavity(kappa: f64, g_c: f64, chi_c: Complex64, chi_m: Complex64) -> Self {
        Self {
            yy: 1.0 + kappa * chi_c,
            yx: -2.0 * kappa * g_c * g_c * chi_c * chi_c * chi_m,
            yf: -(2.0 * kappa * g_c * g_c).sqrt() * chi_c * chi_m,
        }
    }

    /// `χ_YX χ_YY*`, whose real part sets the shot/back-action correlation.
    pub fn correlation(&self) -> Complex64 {
        self.yx * self.yy.conj()
    }
}

pub fn transfer_functions(config: &SensorConfig, nu: f64) -> Result<TransferTriple> {
    let chi_m = mechanical_susceptibility(config.oscillator(), nu)?;
    Ok(match *config.readout() {
        Readout::Slab { g, .. } => TransferTriple::slab(g, chi_m),
        Readout::Cavity { kappa, g_c } => {
            TransferTriple::cavity(kappa, g_c, cavity_susceptibility(kappa, nu), chi_m)
        }
    })
}

/// Squeezing angle minimizing the force PSD at `nu`.
///
/// The stationarity condition `tan θ = 2 Re[χ_YX χ_YY*] / (|χ_YX|² − |χ_YY|²)`
/// has two solutions a half-turn apart; both are evaluated and the one giving
/// the smaller PSD is returned. The answer does not depend on `r` or `η`.
pub fn optimal_angle(config: &SensorConfig, nu: f64) -> Result<f64> {
    if config.coupling() == 0.0 {
        return Err(Error::UndefinedAngle);
    }
    let t = transfer_functions(config, nu)?;
    Ok(optimal_angle_for(&t))
}

pub(crate) fn optimal_angle_for(t: &TransferTriple) -> f64 {
    let num = 2.0 * t.correlation().re;
    let den = t.yx.norm_sqr() - t.yy.norm_sqr();
    let first = normalize_angle(num.atan2(den));
    let second = normalize_angle(first + PI);
    // Any r > 0 ranks the candidates identically; r = 1 keeps the gap well resolved.
    let cost = |theta: f64| {
        let (shot, backaction, cross) = quadrature_terms(t, &InputNoise::squeezed(1.0, theta));
        shot + backaction + cross
    };
    if cost(second) < cost(first) {
        second
    } else {
        first
    }
}

/// Removes 2π jumps from a sequence of angles for plotting.
pub fn unwrap_angles(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &a in angles {
        if let Some(p) = prev {
            let d = a - p;
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        out.push(a + offset);
        prev = Some(a);
    }
    out
}
