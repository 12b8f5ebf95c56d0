//! Subcommand implementations. Each returns the rendered output plus notes
//! for stderr and a verdict that decides the exit code.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use impulse_core::stats::moments;
use impulse_core::{
    band_integral, default_coupling_bounds, force_psd, g_star, matched_filter_snr,
    momentum_threshold, optimal_angle, optimize_coupling, scaling_report, to_si_force_psd,
    to_si_momentum, unwrap_angles, CheckStatus, MechanicalOscillator, QuadratureSpec, ScalingLaw,
    ScalingReport, SensorConfig, SimSpec, ThresholdResult, HBAR,
};

use crate::error::CliError;
use crate::output::{col, Cell, Format, Table};
use crate::scenario::{
    CouplingUnit, Kick, Parsed, Scenario, SimSettings, SweepVariable, SystemKind, DB_NOTE,
    DEFAULT_SIM_Q, DEFAULT_SIM_TRIALS,
};

/// Squeezing grid used by `verify` when the scenario gives none.
pub const DEFAULT_VERIFY_R: [f64; 4] = [0.0, 0.5, 1.0, 1.5];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    /// A check failed; exit code 1.
    Failed(String),
    /// Some points could not be computed; exit code 3.
    Numerical(String),
}

#[derive(Debug, Clone)]
pub struct Report {
    pub output: Vec<u8>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        match self.verdict {
            Verdict::Ok => 0,
            Verdict::Failed(_) => 1,
            Verdict::Numerical(_) => 3,
        }
    }
}

fn render(table: &Table, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            table
                .write_csv(&mut buf)
                .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
            Ok(buf)
        }
        Format::Json => json_bytes(&table.to_json()),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.into()))?;
    buf.push(b'\n');
    Ok(buf)
}

fn initial_notes(parsed: &Parsed) -> Vec<String> {
    if parsed.db_supplied {
        vec![DB_NOTE.to_string()]
    } else {
        Vec::new()
    }
}

fn nu_grid(sc: &Scenario, command: &str) -> Result<Vec<f64>, CliError> {
    match &sc.sweep {
        Some(s) if s.variable == SweepVariable::Nu => Ok(s.values()),
        Some(s) => Err(CliError::config(
            "sweep.variable",
            format!("`{command}` needs a frequency sweep (variable = \"nu\"), got `{}`", s.variable.name()),
        )),
        None => Err(CliError::config(
            "sweep",
            format!("`{command}` needs a [sweep] section with variable = \"nu\""),
        )),
    }
}

fn hz(nu: f64) -> f64 {
    nu / (2.0 * std::f64::consts::PI)
}

pub fn psd(parsed: &Parsed, format: Format) -> Result<Report, CliError> {
    let sc = &parsed.scenario;
    let grid = nu_grid(sc, "psd")?;
    let cfg = sc.sensor_config()?;
    let points = grid
        .par_iter()
        .map(|&nu| force_psd(&cfg, nu))
        .collect::<Result<Vec<_>, _>>()?;
    let unit = "N^2/Hz";
    let mut t = Table::new(vec![
        col("frequency", "Hz"),
        col("S_FF", unit),
        col("shot", unit),
        col("backaction", unit),
        col("cross", unit),
        col("loss", unit),
    ]);
    for p in &points {
        let b = &p.breakdown;
        t.push(
            [hz(p.nu), p.s_ff, b.shot, b.backaction, b.cross, b.loss]
                .iter()
                .enumerate()
                .map(|(i, &v)| Cell::Num(if i == 0 { v } else { to_si_force_psd(v) }))
                .collect(),
        );
    }
    Ok(Report {
        output: render(&t, format)?,
        notes: initial_notes(parsed),
        verdict: Verdict::Ok,
    })
}

pub fn optimal_angle_grid(parsed: &Parsed, format: Format) -> Result<Report, CliError> {
    let sc = &parsed.scenario;
    let grid = nu_grid(sc, "optimal-angle")?;
    let cfg = sc.sensor_config()?;
    let theta = grid
        .par_iter()
        .map(|&nu| optimal_angle(&cfg, nu))
        .collect::<Result<Vec<_>, _>>()?;
    let unwrapped = unwrap_angles(&theta);
    let mut t = Table::new(vec![
        col("frequency", "Hz"),
        col("theta", "rad"),
        col("theta_unwrapped", "rad"),
    ]);
    for ((nu, th), uw) in grid.iter().zip(&theta).zip(&unwrapped) {
        t.push(vec![Cell::Num(hz(*nu)), Cell::Num(*th), Cell::Num(*uw)]);
    }
    Ok(Report {
        output: render(&t, format)?,
        notes: initial_notes(parsed),
        verdict: Verdict::Ok,
    })
}

fn coupling_ratio(cfg: &SensorConfig) -> Result<f64, CliError> {
    Ok(cfg.readout().effective_slab_coupling() / g_star(cfg.oscillator())?)
}

fn threshold_point(sc: &Scenario, optimize: bool) -> Result<(f64, ThresholdResult), CliError> {
    let cfg = sc.sensor_config()?;
    let quad = QuadratureSpec::default();
    if optimize {
        let opt = optimize_coupling(&cfg, default_coupling_bounds(&cfg)?, &quad)?;
        let best = cfg.with_coupling(opt.coupling)?;
        Ok((coupling_ratio(&best)?, opt.result))
    } else {
        Ok((coupling_ratio(&cfg)?, momentum_threshold(&cfg, &quad)?))
    }
}

pub fn threshold(parsed: &Parsed, optimize: bool, format: Format) -> Result<Report, CliError> {
    let sc = &parsed.scenario;
    let (first, points): (_, Vec<(Cell, Scenario)>) = match &sc.sweep {
        None => (col("point", "-"), vec![(Cell::Int(0), sc.clone())]),
        Some(sw) => {
            let unit = match sw.variable {
                SweepVariable::Nu => {
                    return Err(CliError::config(
                        "sweep.variable",
                        "`threshold` sweeps power, g, r or eta; a frequency sweep is for `psd`",
                    ))
                }
                SweepVariable::G(_) | SweepVariable::Power if optimize => {
                    return Err(CliError::config(
                        "sweep.variable",
                        "--optimize chooses the coupling itself and cannot be combined with a g or power sweep",
                    ))
                }
                SweepVariable::G(CouplingUnit::GStar) => "g*",
                SweepVariable::G(CouplingUnit::Native) => match sc.system.kind {
                    SystemKind::Slab => "kg^1/2/s",
                    SystemKind::Cavity => "kg^1/2/s^3/2",
                },
                SweepVariable::Power => "W",
                SweepVariable::R | SweepVariable::Eta => "1",
            };
            (
                col(sw.variable.name(), unit),
                sw.values()
                    .into_iter()
                    .map(|v| (Cell::Num(v), sc.at(sw.variable, v)))
                    .collect(),
            )
        }
    };
    let results: Vec<_> = points
        .par_iter()
        .map(|(_, s)| threshold_point(s, optimize))
        .collect();

    let mut t = Table::new(vec![
        first,
        col("coupling", "g*"),
        col("delta_p", "kg*m/s"),
        col("ratio_to_sql", "1"),
        col("regime_flags", "-"),
        col("error", "-"),
    ]);
    let mut failed = 0;
    for ((label, _), res) in points.iter().zip(results) {
        match res {
            Ok((ratio, r)) => {
                let flags: Vec<&str> = r.regime_flags.iter().map(|f| f.as_str()).collect();
                t.push(vec![
                    label.clone(),
                    Cell::Num(ratio),
                    Cell::Num(r.delta_p_si()),
                    Cell::Num(r.ratio_to_sql),
                    Cell::Text(flags.join(";")),
                    Cell::Empty,
                ]);
            }
            Err(e) => {
                failed += 1;
                t.push(vec![
                    label.clone(),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Text(e.to_string()),
                ]);
            }
        }
    }
    let verdict = if failed == 0 {
        Verdict::Ok
    } else {
        Verdict::Numerical(format!("{failed} of {} points failed", t.rows.len()))
    };
    Ok(Report {
        output: render(&t, format)?,
        notes: initial_notes(parsed),
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LawSummary {
    pub law: &'static str,
    pub status: CheckStatus,
    pub points: usize,
    pub worst_deviation: Option<f64>,
    pub tolerance: f64,
}

/// Rolls per-point checks up into one status per law: SKIP when no grid
/// point falls in the law's regime, EXEMPT when all of them are exempt,
/// ERROR when some could not be computed and none failed.
pub fn summarize_laws(report: &ScalingReport) -> Vec<LawSummary> {
    ScalingLaw::ALL
        .iter()
        .map(|&law| {
            let pts: Vec<_> = report.points.iter().filter(|p| p.law == Some(law)).collect();
            let status = if pts.is_empty() {
                CheckStatus::Skip
            } else if pts.iter().any(|p| p.status == CheckStatus::Fail) {
                CheckStatus::Fail
            } else if pts.iter().any(|p| p.status == CheckStatus::Error) {
                CheckStatus::Error
            } else if pts.iter().any(|p| p.status == CheckStatus::Pass) {
                CheckStatus::Pass
            } else {
                CheckStatus::Exempt
            };
            let worst_deviation = pts
                .iter()
                .filter(|p| p.status != CheckStatus::Exempt)
                .filter_map(|p| p.rel_deviation)
                .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));
            LawSummary {
                law: law.name(),
                status,
                points: pts.len(),
                worst_deviation,
                tolerance: law.tolerance(),
            }
        })
        .collect()
}

pub fn verify(parsed: &Parsed, format: Format) -> Result<Report, CliError> {
    let sc = &parsed.scenario;
    let osc = sc.system.oscillator()?;
    let r = sc.verify.r.clone().unwrap_or_else(|| DEFAULT_VERIFY_R.to_vec());
    let eta = sc.verify.eta.clone().unwrap_or_else(|| vec![sc.eta]);
    let report = scaling_report(&osc, &r, &eta, &QuadratureSpec::default())?;
    let laws = summarize_laws(&report);

    let mut notes = initial_notes(parsed);
    notes.push(format!(
        "scaling-law verification at Q = {:.4e} over {} points",
        report.quality_factor,
        report.points.len()
    ));
    for l in &laws {
        let detail = match (l.status, l.worst_deviation) {
            (CheckStatus::Skip, _) => "no grid point in this regime".to_string(),
            (CheckStatus::Exempt, _) => "low_Q: large-Q regime does not exist".to_string(),
            (CheckStatus::Error, _) => "grid points could not be computed".to_string(),
            (_, Some(d)) => format!(
                "worst deviation {:.2}% vs tolerance {:.0}% ({} points)",
                100.0 * d,
                100.0 * l.tolerance,
                l.points
            ),
            (_, None) => format!("{} points, no deviation available", l.points),
        };
        notes.push(format!("{:<6} {:<17} {detail}", l.status.to_string(), l.law));
    }

    let failing: Vec<&str> = laws
        .iter()
        .filter(|l| l.status == CheckStatus::Fail)
        .map(|l| l.law)
        .collect();
    let errors = report
        .points
        .iter()
        .filter(|p| p.status == CheckStatus::Error)
        .count();
    let verdict = if !failing.is_empty() {
        Verdict::Failed(format!("failing laws: {}", failing.join(", ")))
    } else if errors > 0 {
        Verdict::Numerical(format!("{errors} grid points could not be computed"))
    } else {
        Verdict::Ok
    };

    let output = match format {
        Format::Json => json_bytes(&json!({
            "quality_factor": report.quality_factor,
            "all_pass": verdict == Verdict::Ok,
            "laws": laws,
            "points": report.points,
        }))?,
        Format::Csv => {
            let mut t = Table::new(vec![
                col("r", "1"),
                col("eta", "1"),
                col("coupling", "g*"),
                col("ratio_to_sql", "1"),
                col("law", "-"),
                col("predicted", "1"),
                col("deviation", "1"),
                col("tolerance", "1"),
                col("status", "-"),
                col("regime_flags", "-"),
                col("error", "-"),
            ]);
            let opt = |v: Option<f64>| v.filter(|x| x.is_finite()).map_or(Cell::Empty, Cell::Num);
            for p in &report.points {
                let flags: Vec<&str> = p.regime_flags.iter().map(|f| f.as_str()).collect();
                t.push(vec![
                    Cell::Num(p.r),
                    Cell::Num(p.eta),
                    opt(Some(p.coupling_ratio)),
                    opt(Some(p.ratio_to_sql)),
                    p.law.map_or(Cell::Empty, |l| Cell::Text(l.name().into())),
                    opt(p.predicted),
                    opt(p.rel_deviation),
                    opt(p.tolerance),
                    Cell::Text(p.status.to_string()),
                    Cell::Text(flags.join(";")),
                    p.error.clone().map_or(Cell::Empty, Cell::Text),
                ]);
            }
            render(&t, format)?
        }
    };
    Ok(Report {
        output,
        notes,
        verdict,
    })
}

/// Scenario settings with command-line values taking precedence.
pub fn merge_sim(base: &SimSettings, over: &SimSettings) -> SimSettings {
    SimSettings {
        q: over.q.or(base.q),
        seed: over.seed.or(base.seed),
        trials: over.trials.or(base.trials),
        sample_rate: over.sample_rate.or(base.sample_rate),
        duration: over.duration.or(base.duration),
        kick: over.kick.or(base.kick),
        kick_time: over.kick_time.or(base.kick_time),
    }
}

pub fn simulate(parsed: &Parsed, overrides: &SimSettings, format: Format) -> Result<Report, CliError> {
    let sc = &parsed.scenario;
    let sim = merge_sim(&sc.simulate, overrides);
    let osc = MechanicalOscillator::with_quality_factor(
        sc.system.mass,
        sc.system.omega_m,
        sim.q.unwrap_or(DEFAULT_SIM_Q),
    )
    .map_err(CliError::from_invalid)?;
    let cfg = sc.sensor_config_for(osc)?;

    let mut spec = SimSpec::for_oscillator(
        &osc,
        sim.seed.unwrap_or(0),
        sim.trials.unwrap_or(DEFAULT_SIM_TRIALS),
    );
    if let Some(v) = sim.sample_rate {
        spec.sample_rate = v;
    }
    if let Some(v) = sim.duration {
        spec.duration = v;
    }
    if let Some(v) = sim.kick_time {
        spec.kick_time = v;
    }
    spec.validate(&osc).map_err(CliError::from_invalid)?;
    let kick = match sim.kick.unwrap_or(Kick::Threshold(1.0)) {
        Kick::Threshold(x) => {
            let (lo, hi) = spec.band();
            x / band_integral(&cfg, lo, hi, &QuadratureSpec::default())?.value.sqrt()
        }
        Kick::Momentum(p) => p / HBAR.sqrt(),
    };
    let spec = spec.with_kick(kick);
    let s = matched_filter_snr(&cfg, &spec)?;

    let sigma = moments(&s.noise_only_samples()).std_dev;
    let dt = spec.dt();
    let mut t = Table::new(vec![
        col("trial", "-"),
        col("kick_index", "-"),
        col("kick_time", "s"),
        col("peak", "estimator"),
        col("snr", "1"),
        col("noise_only_snr", "1"),
    ]);
    for tr in &s.trials {
        t.push(vec![
            Cell::Int(tr.trial as u64),
            Cell::Int(tr.kick_index as u64),
            Cell::Num(tr.kick_index as f64 * dt),
            Cell::Num(tr.estimator_peak),
            Cell::Num(tr.estimator_peak / sigma),
            Cell::Num(tr.noise_only / sigma),
        ]);
    }

    let z = s.z_score();
    let pass = z.abs() < 3.0;
    let verdict_line = format!(
        "verdict: {} empirical SNR {:.4} +/- {:.4} vs analytic {:.4} (z = {:.2})",
        if pass { "PASS" } else { "FAIL" },
        s.empirical_snr,
        s.standard_error,
        s.analytic_snr_band,
        z
    );
    let mut notes = initial_notes(parsed);
    notes.extend(s.warnings.iter().map(|w| format!("warning: {w}")));
    notes.push(verdict_line.clone());

    let output = match format {
        Format::Csv => render(&t, format)?,
        Format::Json => {
            let alternatives: Vec<_> = s
                .alternatives
                .iter()
                .map(|a| {
                    json!({
                        "filter": a.filter.label(),
                        "empirical_snr": a.empirical_snr,
                        "standard_error": a.standard_error,
                        "expected_snr": a.expected_snr,
                    })
                })
                .collect();
            json_bytes(&json!({
                "quality_factor": osc.quality_factor(),
                "seed": spec.seed,
                "trials": spec.n_trials,
                "sample_rate_hz": spec.sample_rate,
                "duration_s": spec.duration,
                "n_samples": s.n_samples,
                "band_rad_s": [s.band.0, s.band.1],
                "kick_kg_m_s": to_si_momentum(spec.kick),
                "band_limited_threshold_kg_m_s": to_si_momentum(s.band_limited_threshold),
                "empirical_snr": s.empirical_snr,
                "standard_error": s.standard_error,
                "analytic_snr_band": s.analytic_snr_band,
                "analytic_snr_full": s.analytic_snr_full,
                "discrete_snr": s.discrete_snr,
                "z_score": z,
                "verdict": if pass { "PASS" } else { "FAIL" },
                "warnings": s.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
                "alternatives": alternatives,
                "per_trial": t.to_json(),
            }))?
        }
    };
    Ok(Report {
        output,
        notes,
        verdict: if pass {
            Verdict::Ok
        } else {
            Verdict::Failed(verdict_line)
        },
    })
}

pub fn normalize(parsed: &Parsed) -> Report {
    Report {
        output: parsed.scenario.to_toml().into_bytes(),
        notes: initial_notes(parsed),
        verdict: Verdict::Ok,
    }
}
