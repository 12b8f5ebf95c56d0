//! Input quadrature spectra and the force-referred noise PSD.
//!
//! PSDs are two-sided in angular frequency with
//! `2π δ(ν + ν') S(ν) = ⟨O(ν) O(ν')⟩`, so vacuum quadratures have `S = 1/2`.
//! Environmental (thermal) force noise is not modelled.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{g_star, SensorConfig, SqueezingPolicy};
use crate::response::{optimal_angle_for, transfer_functions, TransferTriple};

/// PSD of the vacuum mode that enters through photodetection loss.
pub const LOSS_VACUUM_PSD: f64 = 0.5;

/// Quadrature PSDs of the (squeezed) input light at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InputNoise {
    pub s_xx: f64,
    pub s_yy: f64,
    pub s_xy: f64,
}

impl InputNoise {
    pub fn vacuum() -> Self {
        Self {
            s_xx: 0.5,
            s_yy: 0.5,
            s_xy: 0.0,
        }
    }

    /// Squeezed vacuum with strength `r` along angle `theta`.
    ///
    /// `S_XX = ½(cosh 2r − cos θ sinh 2r)`, evaluated as
    /// `½[e^{-2r} cos²(θ/2) + e^{2r} sin²(θ/2)]` to avoid cancellation.
    pub fn squeezed(r: f64, theta: f64) -> Self {
        if r == 0.0 {
            return Self::vacuum();
        }
        let (lo, hi) = ((-2.0 * r).exp(), (2.0 * r).exp());
        let (sh, ch) = (0.5 * theta).sin_cos();
        let (c2, s2) = (ch * ch, sh * sh);
        Self {
            s_xx: 0.5 * (lo * c2 + hi * s2),
            s_yy: 0.5 * (hi * c2 + lo * s2),
            s_xy: -0.5 * theta.sin() * (2.0 * r).sinh(),
        }
    }

    /// `S_XX S_YY − S_XY²`, equal to 1/4 for any pure squeezed vacuum.
    pub fn uncertainty_product(&self) -> f64 {
        self.s_xx * self.s_yy - self.s_xy * self.s_xy
    }
}

/// Input noise for `policy` once the angle at this frequency is known.
pub fn input_noise(policy: &SqueezingPolicy, theta_resolved: f64) -> InputNoise {
    match *policy {
        SqueezingPolicy::NoSqueezing => InputNoise::vacuum(),
        SqueezingPolicy::FixedAngle { r, .. } | SqueezingPolicy::OptimalAngle { r } => {
            InputNoise::squeezed(r, theta_resolved)
        }
    }
}

/// Force-referred PSD terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdBreakdown {
    pub shot: f64,
    pub backaction: f64,
    pub cross: f64,
    pub loss: f64,
}

impl PsdBreakdown {
    pub fn total(&self) -> f64 {
        self.shot + self.backaction + self.cross + self.loss
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForcePsdPoint {
    pub nu: f64,
    pub s_ff: f64,
    /// Squeezing angle used at this frequency (0 without squeezing).
    pub theta: f64,
    pub breakdown: PsdBreakdown,
}

/// Shot, back-action and cross terms, each already divided by `|χ_YF|²`.
pub(crate) fn quadrature_terms(t: &TransferTriple, noise: &InputNoise) -> (f64, f64, f64) {
    let yf2 = t.yf.norm_sqr();
    let shot = t.yy.norm_sqr() * noise.s_yy / yf2;
    let backaction = t.yx.norm_sqr() * noise.s_xx / yf2;
    let cross = 2.0 * t.correlation().re * noise.s_xy / yf2;
    (shot, backaction, cross)
}

/// `min_θ (shot + backaction + cross) = (e^{-2r}μ₊ + e^{2r}μ₋) / (2|χ_YF|²)`,
/// with `μ±` the eigenvalues of `[[|χ_YX|², Re c], [Re c, |χ_YY|²]]` and
/// `μ₊μ₋ = (Im c)²`, `c = χ_YX χ_YY*`.
fn optimal_quadrature_total(t: &TransferTriple, r: f64) -> f64 {
    let c = t.correlation();
    let half_trace = 0.5 * (t.yx.norm_sqr() + t.yy.norm_sqr());
    let det = c.im * c.im;
    let mu_plus = half_trace + (half_trace * half_trace - det).max(0.0).sqrt();
    let mu_minus = if mu_plus > 0.0 { det / mu_plus } else { 0.0 };
    ((-2.0 * r).exp() * mu_plus + (2.0 * r).exp() * mu_minus) / (2.0 * t.yf.norm_sqr())
}

fn resolve_angle(policy: &SqueezingPolicy, t: &TransferTriple) -> f64 {
    match *policy {
        SqueezingPolicy::NoSqueezing => 0.0,
        SqueezingPolicy::FixedAngle { theta, .. } => theta,
        SqueezingPolicy::OptimalAngle { .. } => optimal_angle_for(t),
    }
}

pub fn force_psd(config: &SensorConfig, nu: f64) -> Result<ForcePsdPoint> {
    if config.coupling() == 0.0 {
        return Err(Error::InfinitePsd);
    }
    let t = transfer_functions(config, nu)?;
    let theta = resolve_angle(config.squeezing(), &t);
    let noise = input_noise(config.squeezing(), theta);
    let (shot, backaction, mut cross) = quadrature_terms(&t, &noise);
    // The three terms cancel to O(e^{-4r}) of their size under the optimal
    // angle; the total comes from the closed-form minimum instead.
    let quadratures = match *config.squeezing() {
        SqueezingPolicy::OptimalAngle { r } => {
            let total = optimal_quadrature_total(&t, r);
            cross = total - shot - backaction;
            total
        }
        _ => shot + backaction + cross,
    };
    let eta = config.detection().eta();
    let loss = (1.0 - eta) / (eta * t.yf.norm_sqr()) * LOSS_VACUUM_PSD;
    let breakdown = PsdBreakdown {
        shot,
        backaction,
        cross,
        loss,
    };
    Ok(ForcePsdPoint {
        nu,
        s_ff: quadratures + loss,
        theta,
        breakdown,
    })
}

/// Total force PSD only; the hot path of the threshold integral.
pub fn force_psd_value(config: &SensorConfig, nu: f64) -> Result<f64> {
    force_psd(config, nu).map(|p| p.s_ff)
}

/// Large-coupling expansion of the optimally squeezed PSD:
///
/// `e^{-2r} m ω_m² g̃²/(2Q) + e^{-2r} m [e^{4r} ν² + Q² (ν² − ω_m²)²/ω_m²] / (2Q g̃²)`
///
/// with `g̃ = g / g_*(ω_m)`. Cavity readouts use the slab-equivalent coupling.
pub fn asymptotic_psd(config: &SensorConfig, nu: f64) -> Result<f64> {
    let osc = config.oscillator();
    let (m, w, q) = (osc.mass(), osc.omega_m(), osc.quality_factor());
    let r = config.squeezing().r();
    let gt = config.readout().effective_slab_coupling() / g_star(osc)?;
    let e2r = (-2.0 * r).exp();
    let detune = nu * nu - w * w;
    let lead = e2r * m * w * w * gt * gt / (2.0 * q);
    let tail = e2r * m * ((4.0 * r).exp() * nu * nu + q * q * detune * detune / (w * w))
        / (2.0 * q * gt * gt);
    Ok(lead + tail)
}

/// Both sides of `S_FF(ν; η, g) = η^{-1/2} S_FF(ν; 1, η^{1/4} g)` for an
/// unsqueezed readout. The lossy optimum therefore sits at `η^{-1/4}` times
/// the lossless optimal coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescalingCheck {
    /// PSD of the lossy configuration as given.
    pub lossy: ForcePsdPoint,
    /// PSD of the lossless configuration with the coupling scaled by `η^{1/4}`.
    pub rescaled: ForcePsdPoint,
    pub eta: f64,
}

impl RescalingCheck {
    pub fn lhs(&self) -> f64 {
        self.lossy.s_ff
    }

    pub fn rhs(&self) -> f64 {
        self.rescaled.s_ff / self.eta.sqrt()
    }
}

pub fn lossy_coherent_rescaling_check(config: &SensorConfig, nu: f64) -> Result<RescalingCheck> {
    if !matches!(config.squeezing(), SqueezingPolicy::NoSqueezing) {
        return Err(Error::InvalidParameter {
            name: "squeezing",
            value: config.squeezing().r(),
            reason: "the loss rescaling identity holds for unsqueezed light only",
        });
    }
    let eta = config.detection().eta();
    let lossless = config
        .with_detection(crate::model::DetectionChain::lossless())?
        .with_coupling(config.coupling() * eta.powf(0.25))?;
    Ok(RescalingCheck {
        lossy: force_psd(config, nu)?,
        rescaled: force_psd(&lossless, nu)?,
        eta,
    })
}

/// Closed forms used as independent references in tests and reports.
pub mod analytic {
    use crate::model::MechanicalOscillator;
    use crate::response::TransferTriple;

    /// Unsqueezed lossless slab: `m²[(ν² − ω_m²)² + γ²ν²]/(4g²) + g²`.
    pub fn coherent_slab_psd(osc: &MechanicalOscillator, g: f64, nu: f64) -> f64 {
        let (m, w, gam) = (osc.mass(), osc.omega_m(), osc.gamma());
        let d = nu * nu - w * w;
        m * m * (d * d + gam * gam * nu * nu) / (4.0 * g * g) + g * g
    }

    /// Lossless PSD at the optimal angle:
    /// `[(|χ_YX|² + |χ_YY|²) cosh 2r − |χ_YX² + χ_YY²| sinh 2r] / (2|χ_YF|²)`.
    pub fn optimal_squeezed_psd(t: &TransferTriple, r: f64) -> f64 {
        let a = t.yx.norm_sqr() + t.yy.norm_sqr();
        let b = (t.yx * t.yx + t.yy * t.yy).norm();
        (a * (2.0 * r).cosh() - b * (2.0 * r).sinh()) / (2.0 * t.yf.norm_sqr())
    }

    /// Small-efficiency form with the sub-leading shot noise dropped:
    /// `η^{-1/2} e^{-r} [1/(e^{-r}η^{1/2}) + e^{-r}η^{1/2}|χ_YX|²] / (2|χ_YF|²)`.
    pub fn small_efficiency_psd(t: &TransferTriple, r: f64, eta: f64) -> f64 {
        let k = (-r).exp() * eta.sqrt();
        (1.0 / k + k * t.yx.norm_sqr()) / (2.0 * t.yf.norm_sqr()) / eta.sqrt() * (-r).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DetectionChain, MechanicalOscillator, Readout};
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn vacuum_limits() {
        for theta in [0.0, 0.3, -2.0, PI] {
            let n = InputNoise::squeezed(0.0, theta);
            assert_eq!(n.s_xx, 0.5);
            assert_eq!(n.s_yy, 0.5);
            assert_eq!(n.s_xy.abs(), 0.0);
        }
        let n = input_noise(&SqueezingPolicy::NoSqueezing, 1.2);
        assert_eq!(n, InputNoise::vacuum());
    }

    #[test]
    fn amplitude_squeezed_axis() {
        let n = InputNoise::squeezed(1.0, 0.0);
        assert!(rel(n.s_xx, 0.5 * (-2.0f64).exp()) < 1e-14);
        assert!(rel(n.s_yy, 0.5 * 2.0f64.exp()) < 1e-14);
        assert_eq!(n.s_xy, 0.0);
    }

    #[test]
    fn quarter_turn_fixture() {
        let n = InputNoise::squeezed(1.0, PI / 2.0);
        assert!(rel(n.s_xx, 0.5 * 2.0f64.cosh()) < 1e-15);
        assert!(rel(n.s_yy, 0.5 * 2.0f64.cosh()) < 1e-15);
        assert!(rel(n.s_xy, -0.5 * 2.0f64.sinh()) < 1e-15);
        assert!((n.uncertainty_product() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn no_squeezing_equals_zero_strength_fixed_angle() {
        let osc = MechanicalOscillator::table1();
        let g = 2e-5;
        let base = SensorConfig::coherent_slab(osc, g).unwrap();
        let fixed = base.with_squeezing(SqueezingPolicy::fixed(0.0, 1.234).unwrap()).unwrap();
        let opt = base.with_squeezing(SqueezingPolicy::optimal(0.0).unwrap()).unwrap();
        for nu in [1e3, 6e5, 6.3e5, 1e7] {
            let a = force_psd_value(&base, nu).unwrap();
            assert!(rel(force_psd_value(&fixed, nu).unwrap(), a) < 1e-14);
            assert!(rel(force_psd_value(&opt, nu).unwrap(), a) < 1e-14);
        }
    }

    #[test]
    fn breakdown_sums_to_total() {
        let osc = MechanicalOscillator::table1();
        let cfg = SensorConfig::new(
            osc,
            Readout::slab(5e-5).unwrap(),
            SqueezingPolicy::fixed(0.8, -PI / 2.0).unwrap(),
            DetectionChain::new(0.6).unwrap(),
        )
        .unwrap();
        for nu in [1e2, 5e5, osc.omega_m(), 2e6] {
            let p = force_psd(&cfg, nu).unwrap();
            assert!(rel(p.breakdown.total(), p.s_ff) < 1e-12);
            assert!(p.breakdown.loss > 0.0);
        }
    }

    #[test]
    fn zero_coupling_is_an_error() {
        let cfg = SensorConfig::coherent_slab(MechanicalOscillator::table1(), 0.0).unwrap();
        assert!(matches!(force_psd(&cfg, 1.0), Err(Error::InfinitePsd)));
    }

    #[test]
    fn g_star_balances_shot_and_backaction_on_resonance() {
        let osc = MechanicalOscillator::table1();
        let gs = g_star(&osc).unwrap();
        let p = force_psd(&SensorConfig::coherent_slab(osc, gs).unwrap(), osc.omega_m()).unwrap();
        assert!(rel(p.breakdown.shot, p.breakdown.backaction) < 1e-12);
        assert!(rel(p.s_ff, osc.mass() * osc.gamma() * osc.omega_m()) < 1e-12);
    }

    #[test]
    fn g_star_is_stationary() {
        // central finite difference of S_FF(ω_m) in g
        let osc = MechanicalOscillator::table1();
        let gs = g_star(&osc).unwrap();
        let s = |g: f64| {
            force_psd_value(&SensorConfig::coherent_slab(osc, g).unwrap(), osc.omega_m()).unwrap()
        };
        let h = gs * 1e-4;
        let deriv = (s(gs + h) - s(gs - h)) / (2.0 * h);
        let scale = s(gs) / gs;
        assert!((deriv / scale).abs() < 1e-6, "residual {}", deriv / scale);
    }

    #[test]
    fn rescaling_check_requires_coherent_light() {
        let cfg = SensorConfig::coherent_slab(MechanicalOscillator::table1(), 1e-5)
            .unwrap()
            .with_squeezing(SqueezingPolicy::optimal(1.0).unwrap())
            .unwrap();
        assert!(lossy_coherent_rescaling_check(&cfg, 1e5).is_err());
    }

    #[test]
    fn lossless_rescaling_is_trivial() {
        let cfg = SensorConfig::coherent_slab(MechanicalOscillator::table1(), 1e-5).unwrap();
        let c = lossy_coherent_rescaling_check(&cfg, 3e5).unwrap();
        assert_eq!(c.lhs(), c.rhs());
    }

    #[test]
    fn loss_only_rescales_shot_noise() {
        let osc = MechanicalOscillator::table1();
        let cfg = SensorConfig::coherent_slab(osc, 4e-5)
            .unwrap()
            .with_detection(DetectionChain::new(0.25).unwrap())
            .unwrap();
        for nu in [1e4, 6e5, 3e6] {
            let c = lossy_coherent_rescaling_check(&cfg, nu).unwrap();
            let lossy = c.lossy.breakdown;
            let scaled = c.rescaled.breakdown;
            assert!(rel(lossy.shot + lossy.loss, scaled.shot / c.eta.sqrt()) < 1e-12);
            assert!(rel(lossy.backaction, scaled.backaction / c.eta.sqrt()) < 1e-12);
        }
    }

    #[test]
    fn asymptotic_form_reduces_to_coherent_psd() {
        // r = 0, large g̃, ν = 0: relative gap is O(1/g̃²)
        let osc = MechanicalOscillator::table1();
        let gs = g_star(&osc).unwrap();
        for gt in [30.0, 100.0] {
            let cfg = SensorConfig::coherent_slab(osc, gt * gs)
                .unwrap()
                .with_squeezing(SqueezingPolicy::optimal(0.0).unwrap())
                .unwrap();
            let approx = asymptotic_psd(&cfg, 0.0).unwrap();
            let exact = analytic::coherent_slab_psd(&osc, gt * gs, 0.0);
            assert!(rel(approx, exact) < 1.0 / (gt * gt));
        }
    }

    #[test]
    fn closed_form_minimum_matches_term_sum() {
        let osc = MechanicalOscillator::table1();
        let cfg = SensorConfig::new(
            osc,
            Readout::slab(3.0 * g_star(&osc).unwrap()).unwrap(),
            SqueezingPolicy::optimal(0.7).unwrap(),
            DetectionChain::lossless(),
        )
        .unwrap();
        for f in [0.3, 0.999, 1.0, 1.0001, 4.0] {
            let p = force_psd(&cfg, f * osc.omega_m()).unwrap();
            let t = transfer_functions(&cfg, p.nu).unwrap();
            let (a, b, c) = quadrature_terms(&t, &InputNoise::squeezed(0.7, p.theta));
            assert!(rel(p.s_ff, a + b + c) < 1e-11, "f={f}");
        }
    }

    #[test]
    fn strong_squeezing_respects_damping_floor() {
        // min over r of the optimal-angle PSD is |Im c|/|χ_YF|² = mγ|ν|.
        let osc = MechanicalOscillator::table1().with_q(1e3).unwrap();
        for r in [4.0, 6.0, 8.0] {
            let cfg = SensorConfig::new(
                osc,
                Readout::slab(50.0 * g_star(&osc).unwrap()).unwrap(),
                SqueezingPolicy::optimal(r).unwrap(),
                DetectionChain::lossless(),
            )
            .unwrap();
            for f in [0.5, 0.99, 1.0, 1.02, 2.0] {
                let nu = f * osc.omega_m();
                let s = force_psd_value(&cfg, nu).unwrap();
                let floor = osc.mass() * osc.gamma() * nu;
                assert!(s >= floor * (1.0 - 1e-12), "r={r} f={f}: {s} < {floor}");
            }
        }
    }
}
