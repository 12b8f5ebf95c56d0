//! Quantum-noise force spectra and impulse detection thresholds for
//! optomechanical sensors (Fabry–Pérot cavity or suspended dielectric slab)
//! read out with coherent or squeezed light through a lossy detector.
//!
//! Internal units set `ħ = 1`: masses in kg, rates in rad/s, forces in
//! √kg·s^-3/2 and momenta in √kg·s^-1/2. Use [`to_si_momentum`] and
//! [`to_si_force_psd`] to convert results.

pub mod error;
pub mod model;
pub mod optimize;
pub mod quadrature;
pub mod response;
pub mod sim;
pub mod spectra;
pub mod stats;
pub mod threshold;

pub use error::{Error, QuadratureDiagnostics, Result};
pub use model::{
    coupling_from_power, db_to_squeezing, g_star, g_star_for, g_star_squeezed, normalize_angle,
    omega_from_wavelength, power_for_coupling, sql_threshold, sql_threshold_si, squeezing_to_db,
    to_si_force_psd, to_si_momentum, CouplingEstimate, CouplingForm, DetectionChain,
    MechanicalOscillator, PrecisionWarning, Readout, SensorConfig, SlabProvenance,
    SqueezingPolicy, HBAR, SPEED_OF_LIGHT,
};
pub use response::{
    cavity_susceptibility, mechanical_susceptibility, optimal_angle, transfer_functions,
    unwrap_angles, TransferTriple,
};
pub use spectra::{
    asymptotic_psd, force_psd, force_psd_value, input_noise, lossy_coherent_rescaling_check,
    ForcePsdPoint, InputNoise, PsdBreakdown, RescalingCheck,
};
pub use threshold::{
    band_integral, default_coupling_bounds, frequency_integral, momentum_threshold,
    optimize_coupling, scaling_report, snr_optimal, CheckStatus, CouplingOptimum,
    QuadratureSpec, RegimeFlag, ScalingLaw, ScalingPoint, ScalingReport, ThresholdResult,
};
pub use sim::{matched_filter_snr, synthesize_noise, KickTimePolicy, SimSpec, SimSummary, TrialOutcome};
