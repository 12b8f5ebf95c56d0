//! Scenario files: parsing, validation, normalization and conversion into
//! sensor configurations.

use std::path::Path;

use impulse_core::{
    db_to_squeezing, g_star, omega_from_wavelength, CouplingForm, DetectionChain, KickTimePolicy,
    MechanicalOscillator, Readout, SensorConfig, SqueezingPolicy,
};
use toml::{Table, Value};

use crate::error::CliError;
use crate::units::{format_quantity, parse_quantity, split_quantity, Dimension};

/// Built-in scenario with the reference parameter set.
pub const TABLE1: &str = r#"[system]
kind = "slab"
mass = "1e-18 kg"
omega_m = "100 kHz"
gamma = "10 Hz"
chi_e = 3.5
ell = "24 nm"
wavelength = "1500 nm"

[drive]
g = "1 g*"

[squeezing]
mode = "none"

[detection]
eta = 1.0

[sweep]
variable = "nu"
scale = "log"
from = "1 kHz"
to = "10 MHz"
points = 401

[verify]
r = [0.0, 0.5, 1.0, 1.5, 5.0]
eta = [1.0, 0.95, 0.9, 0.5, 0.1, 0.01]
"#;

const SLAB_COUPLING_UNIT: &str = "kg^1/2/s";
const CAVITY_COUPLING_UNIT: &str = "kg^1/2/s^3/2";

/// Quality factor used by `simulate` unless the scenario sets one.
pub const DEFAULT_SIM_Q: f64 = 100.0;
pub const DEFAULT_SIM_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Slab,
    Cavity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping {
    /// rad/s
    Gamma(f64),
    Q(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub kind: SystemKind,
    pub mass: f64,
    pub omega_m: f64,
    pub damping: Damping,
    pub kappa: Option<f64>,
    pub chi_e: Option<f64>,
    pub ell: Option<f64>,
    pub wavelength: Option<f64>,
}

impl System {
    pub fn oscillator(&self) -> Result<MechanicalOscillator, CliError> {
        let osc = match self.damping {
            Damping::Gamma(g) => MechanicalOscillator::new(self.mass, self.omega_m, g),
            Damping::Q(q) => MechanicalOscillator::with_quality_factor(self.mass, self.omega_m, q),
        };
        osc.map_err(CliError::from_invalid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingUnit {
    /// Multiples of the optimal coherent coupling.
    GStar,
    /// Absolute, in the readout's own parametrization.
    Native,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub value: f64,
    pub unit: CouplingUnit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    Coupling(Coupling),
    /// W
    Power(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqueezeMode {
    None,
    Fixed,
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squeezing {
    pub mode: SqueezeMode,
    pub r: f64,
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Nu,
    G(CouplingUnit),
    Power,
    R,
    Eta,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::Nu => "nu",
            SweepVariable::G(_) => "g",
            SweepVariable::Power => "power",
            SweepVariable::R => "r",
            SweepVariable::Eta => "eta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub scale: Scale,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.from];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i == self.points - 1 {
                    return self.to;
                }
                let t = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.from + (self.to - self.from) * t,
                    Scale::Log => self.from * (self.to / self.from).powf(t),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyGrid {
    pub r: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kick {
    /// Multiple of the band-limited threshold.
    Threshold(f64),
    /// kg·m/s
    Momentum(f64),
}

impl Kick {
    pub fn parse(text: &str) -> Result<Self, String> {
        let (v, unit) = split_quantity(text)?;
        if v < 0.0 {
            return Err(format!("kick `{text}` must be >= 0"));
        }
        match unit {
            "" | "threshold" => Ok(Kick::Threshold(v)),
            "kg m/s" | "kg*m/s" => Ok(Kick::Momentum(v)),
            other => Err(format!(
                "unknown kick unit `{other}`; expected `threshold` or `kg m/s`"
            )),
        }
    }

    fn render(&self) -> String {
        match self {
            Kick::Threshold(v) => format!("{v:e} threshold"),
            Kick::Momentum(v) => format!("{v:e} kg m/s"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimSettings {
    pub q: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    /// Hz
    pub sample_rate: Option<f64>,
    /// s
    pub duration: Option<f64>,
    pub kick: Option<Kick>,
    pub kick_time: Option<KickTimePolicy>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: System,
    pub drive: Drive,
    pub squeezing: Squeezing,
    pub eta: f64,
    pub sweep: Option<Sweep>,
    pub verify: VerifyGrid,
    pub simulate: SimSettings,
}

/// A parsed scenario and facts about how it was written.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub scenario: Scenario,
    /// Some squeezing value was given in dB.
    pub db_supplied: bool,
}

pub const DB_NOTE: &str =
    "note: squeezing given in dB was converted with dB = 10*log10(exp(2r)), i.e. r = dB*ln(10)/20";

/// Loads `table1` or a scenario file.
pub fn load(source: &str) -> Result<Parsed, CliError> {
    if source == "table1" {
        return parse(TABLE1);
    }
    let text = std::fs::read_to_string(Path::new(source))
        .map_err(|e| CliError::config("config", format!("cannot read `{source}`: {e}")))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Parsed, CliError> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config("config", e.message().to_string()))?;
    let mut db = false;
    check_keys(
        &root,
        "",
        &["system", "drive", "squeezing", "detection", "sweep", "verify", "simulate"],
    )?;

    let system = parse_system(required_table(&root, "system")?)?;
    let drive = parse_drive(required_table(&root, "drive")?, &system)?;
    let squeezing = match optional_table(&root, "squeezing")? {
        Some(t) => parse_squeezing(t, &mut db)?,
        None => Squeezing {
            mode: SqueezeMode::None,
            r: 0.0,
            theta: None,
        },
    };
    let eta = match optional_table(&root, "detection")? {
        Some(t) => {
            check_keys(t, "detection", &["eta"])?;
            let eta = number(t, "detection", "eta")?.unwrap_or(1.0);
            check_eta("detection.eta", eta)?;
            eta
        }
        None => 1.0,
    };
    let sweep = optional_table(&root, "sweep")?
        .map(|t| parse_sweep(t, &system, &squeezing, &mut db))
        .transpose()?;
    let verify = optional_table(&root, "verify")?
        .map(|t| parse_verify(t, &mut db))
        .transpose()?
        .unwrap_or_default();
    let simulate = optional_table(&root, "simulate")?
        .map(parse_simulate)
        .transpose()?
        .unwrap_or_default();

    Ok(Parsed {
        scenario: Scenario {
            system,
            drive,
            squeezing,
            eta,
            sweep,
            verify,
            simulate,
        },
        db_supplied: db,
    })
}

fn join(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn check_keys(t: &Table, section: &str, allowed: &[&str]) -> Result<(), CliError> {
    for k in t.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(CliError::config(
                join(section, k),
                format!("unknown key; expected one of: {}", allowed.join(", ")),
            ));
        }
    }
    Ok(())
}

fn optional_table<'a>(t: &'a Table, key: &str) -> Result<Option<&'a Table>, CliError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Table(inner)) => Ok(Some(inner)),
        Some(_) => Err(CliError::config(key, "expected a section")),
    }
}

fn required_table<'a>(t: &'a Table, key: &str) -> Result<&'a Table, CliError> {
    optional_table(t, key)?.ok_or_else(|| CliError::config(key, "missing section"))
}

fn string<'a>(t: &'a Table, section: &str, key: &str) -> Result<Option<&'a str>, CliError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(CliError::config(join(section, key), "expected a string")),
    }
}

fn number(t: &Table, section: &str, key: &str) -> Result<Option<f64>, CliError> {
    match t.get(key) {
        None => Ok(None),
        Some(v) => as_number(v)
            .map(Some)
            .ok_or_else(|| CliError::config(join(section, key), "expected a number")),
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) if f.is_finite() => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn integer(t: &Table, section: &str, key: &str) -> Result<Option<i64>, CliError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Integer(i)) => Ok(Some(*i)),
        Some(_) => Err(CliError::config(join(section, key), "expected an integer")),
    }
}

fn quantity(t: &Table, section: &str, key: &str, dim: Dimension) -> Result<Option<f64>, CliError> {
    let path = join(section, key);
    match t.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => parse_quantity(s, dim)
            .map(Some)
            .map_err(|m| CliError::config(path, m)),
        Some(_) => Err(CliError::config(
            path,
            format!("expected a string with a unit, e.g. \"1 {}\"", dim.canonical_unit()),
        )),
    }
}

fn require<T>(v: Option<T>, path: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::config(path, "missing required key"))
}

fn positive(path: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(path, format!("must be > 0, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<f64, CliError> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(path, format!("must be >= 0, got {v}")))
    }
}

fn check_eta(path: &str, eta: f64) -> Result<(), CliError> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(CliError::config(path, format!("efficiency must lie in (0, 1], got {eta}")))
    }
}

fn parse_system(t: &Table) -> Result<System, CliError> {
    let s = "system";
    check_keys(
        t,
        s,
        &["kind", "mass", "omega_m", "gamma", "Q", "kappa", "chi_e", "ell", "wavelength"],
    )?;
    let kind = match require(string(t, s, "kind")?, "system.kind")? {
        "slab" => SystemKind::Slab,
        "cavity" => SystemKind::Cavity,
        other => {
            return Err(CliError::config(
                "system.kind",
                format!("unknown kind `{other}`; expected `slab` or `cavity`"),
            ))
        }
    };
    let mass = positive(
        "system.mass",
        require(quantity(t, s, "mass", Dimension::Mass)?, "system.mass")?,
    )?;
    let omega_m = positive(
        "system.omega_m",
        require(quantity(t, s, "omega_m", Dimension::Frequency)?, "system.omega_m")?,
    )?;
    let damping = match (quantity(t, s, "gamma", Dimension::Frequency)?, number(t, s, "Q")?) {
        (Some(g), None) => Damping::Gamma(positive("system.gamma", g)?),
        (None, Some(q)) => Damping::Q(positive("system.Q", q)?),
        (Some(_), Some(_)) => {
            return Err(CliError::config("system.gamma", "give exactly one of `gamma` and `Q`, not both"))
        }
        (None, None) => {
            return Err(CliError::config("system.gamma", "give exactly one of `gamma` and `Q`"))
        }
    };
    let kappa = quantity(t, s, "kappa", Dimension::Frequency)?;
    let chi_e = number(t, s, "chi_e")?;
    let ell = quantity(t, s, "ell", Dimension::Length)?;
    let wavelength = quantity(t, s, "wavelength", Dimension::Length)?;
    match kind {
        SystemKind::Cavity => {
            positive("system.kappa", require(kappa, "system.kappa")?)?;
            for (key, v) in [("chi_e", chi_e), ("ell", ell), ("wavelength", wavelength)] {
                if v.is_some() {
                    return Err(CliError::config(
                        format!("system.{key}"),
                        "only valid for a slab readout",
                    ));
                }
            }
        }
        SystemKind::Slab => {
            if kappa.is_some() {
                return Err(CliError::config("system.kappa", "only valid for a cavity readout"));
            }
            for (key, v) in [("chi_e", chi_e), ("ell", ell), ("wavelength", wavelength)] {
                if let Some(v) = v {
                    positive(&format!("system.{key}"), v)?;
                }
            }
        }
    }
    Ok(System {
        kind,
        mass,
        omega_m,
        damping,
        kappa,
        chi_e,
        ell,
        wavelength,
    })
}

fn parse_coupling(text: &str, kind: SystemKind, path: &str) -> Result<Coupling, CliError> {
    let (value, unit) = split_quantity(text).map_err(|m| CliError::config(path, m))?;
    non_negative(path, value)?;
    let native = match kind {
        SystemKind::Slab => SLAB_COUPLING_UNIT,
        SystemKind::Cavity => CAVITY_COUPLING_UNIT,
    };
    let unit = if unit == "g*" {
        CouplingUnit::GStar
    } else if unit == native {
        CouplingUnit::Native
    } else {
        return Err(CliError::config(
            path,
            format!("coupling needs a unit: `g*` or `{native}`"),
        ));
    };
    Ok(Coupling { value, unit })
}

fn parse_drive(t: &Table, system: &System) -> Result<Drive, CliError> {
    check_keys(t, "drive", &["g", "power"])?;
    let g = string(t, "drive", "g")?;
    let power = quantity(t, "drive", "power", Dimension::Power)?;
    match (g, power) {
        (Some(g), None) => Ok(Drive::Coupling(parse_coupling(g, system.kind, "drive.g")?)),
        (None, Some(p)) => {
            if system.kind != SystemKind::Slab {
                return Err(CliError::config("drive.power", "laser power drive is only supported for a slab readout; give `g`"));
            }
            require_power_fields(system, "drive.power")?;
            Ok(Drive::Power(non_negative("drive.power", p)?))
        }
        (Some(_), Some(_)) => Err(CliError::config("drive.g", "give exactly one of `g` and `power`, not both")),
        (None, None) => Err(CliError::config("drive.g", "give exactly one of `g` and `power`")),
    }
}

fn require_power_fields(system: &System, path: &str) -> Result<(), CliError> {
    for (key, v) in [
        ("chi_e", system.chi_e),
        ("ell", system.ell),
        ("wavelength", system.wavelength),
    ] {
        if v.is_none() {
            return Err(CliError::config(
                path,
                format!("a power drive needs `system.{key}`"),
            ));
        }
    }
    Ok(())
}

/// Squeezing strength from a number (`r`) or a `"<x> dB"` string.
fn squeezing_value(v: &Value, path: &str, db: &mut bool) -> Result<f64, CliError> {
    if let Some(r) = as_number(v) {
        return non_negative(path, r);
    }
    if let Value::String(s) = v {
        let (x, unit) = split_quantity(s).map_err(|m| CliError::config(path, m))?;
        if unit == "dB" {
            *db = true;
            return db_to_squeezing(x).map_err(|e| CliError::config(path, e.to_string()));
        }
    }
    Err(CliError::config(path, "expected a number (r) or a string like \"10 dB\""))
}

fn parse_squeezing(t: &Table, db: &mut bool) -> Result<Squeezing, CliError> {
    let s = "squeezing";
    check_keys(t, s, &["mode", "r", "dB", "theta"])?;
    let mode = match string(t, s, "mode")?.unwrap_or("none") {
        "none" => SqueezeMode::None,
        "fixed" => SqueezeMode::Fixed,
        "optimal" => SqueezeMode::Optimal,
        other => {
            return Err(CliError::config(
                "squeezing.mode",
                format!("unknown mode `{other}`; expected none, fixed or optimal"),
            ))
        }
    };
    let r = match (t.get("r"), t.get("dB")) {
        (Some(v), None) => Some(squeezing_value(v, "squeezing.r", db)?),
        (None, Some(v)) => {
            let x = as_number(v).ok_or_else(|| CliError::config("squeezing.dB", "expected a number"))?;
            *db = true;
            Some(db_to_squeezing(x).map_err(|e| CliError::config("squeezing.dB", e.to_string()))?)
        }
        (Some(_), Some(_)) => {
            return Err(CliError::config("squeezing.r", "give exactly one of `r` and `dB`, not both"))
        }
        (None, None) => None,
    };
    let theta = quantity(t, s, "theta", Dimension::Angle)?;
    match mode {
        SqueezeMode::None => {
            if r.is_some() || theta.is_some() {
                return Err(CliError::config("squeezing.mode", "mode `none` takes no `r`, `dB` or `theta`"));
            }
            Ok(Squeezing { mode, r: 0.0, theta: None })
        }
        SqueezeMode::Fixed => Ok(Squeezing {
            mode,
            r: require(r, "squeezing.r")?,
            theta: Some(require(theta, "squeezing.theta")?),
        }),
        SqueezeMode::Optimal => {
            if theta.is_some() {
                return Err(CliError::config("squeezing.theta", "mode `optimal` chooses the angle itself"));
            }
            Ok(Squeezing { mode, r: require(r, "squeezing.r")?, theta: None })
        }
    }
}

fn parse_sweep(t: &Table, system: &System, sq: &Squeezing, db: &mut bool) -> Result<Sweep, CliError> {
    let s = "sweep";
    check_keys(t, s, &["variable", "scale", "from", "to", "points"])?;
    let name = require(string(t, s, "variable")?, "sweep.variable")?;
    let scale = match string(t, s, "scale")?.unwrap_or("linear") {
        "linear" => Scale::Linear,
        "log" => Scale::Log,
        other => {
            return Err(CliError::config(
                "sweep.scale",
                format!("unknown scale `{other}`; expected linear or log"),
            ))
        }
    };
    let points = require(integer(t, s, "points")?, "sweep.points")?;
    if points < 1 {
        return Err(CliError::config("sweep.points", "must be >= 1"));
    }
    let from_v = require(t.get("from"), "sweep.from")?;
    let to_v = require(t.get("to"), "sweep.to")?;

    let text = |v: &Value, path: &str| -> Result<String, CliError> {
        match v {
            Value::String(s) => Ok(s.clone()),
            _ => Err(CliError::config(path, "expected a string with a unit")),
        }
    };
    let (variable, from, to) = match name {
        "nu" => {
            let f = parse_quantity(&text(from_v, "sweep.from")?, Dimension::Frequency)
                .map_err(|m| CliError::config("sweep.from", m))?;
            let t = parse_quantity(&text(to_v, "sweep.to")?, Dimension::Frequency)
                .map_err(|m| CliError::config("sweep.to", m))?;
            (SweepVariable::Nu, non_negative("sweep.from", f)?, non_negative("sweep.to", t)?)
        }
        "power" => {
            if system.kind != SystemKind::Slab {
                return Err(CliError::config("sweep.variable", "power sweeps need a slab readout"));
            }
            require_power_fields(system, "sweep.variable")?;
            let f = parse_quantity(&text(from_v, "sweep.from")?, Dimension::Power)
                .map_err(|m| CliError::config("sweep.from", m))?;
            let t = parse_quantity(&text(to_v, "sweep.to")?, Dimension::Power)
                .map_err(|m| CliError::config("sweep.to", m))?;
            (SweepVariable::Power, non_negative("sweep.from", f)?, non_negative("sweep.to", t)?)
        }
        "g" => {
            let f = parse_coupling(&text(from_v, "sweep.from")?, system.kind, "sweep.from")?;
            let t = parse_coupling(&text(to_v, "sweep.to")?, system.kind, "sweep.to")?;
            if f.unit != t.unit {
                return Err(CliError::config("sweep.to", "`from` and `to` must use the same coupling unit"));
            }
            (SweepVariable::G(f.unit), f.value, t.value)
        }
        "r" => {
            if sq.mode == SqueezeMode::None {
                return Err(CliError::config("sweep.variable", "an r sweep needs squeezing mode `fixed` or `optimal`"));
            }
            (
                SweepVariable::R,
                squeezing_value(from_v, "sweep.from", db)?,
                squeezing_value(to_v, "sweep.to", db)?,
            )
        }
        "eta" => {
            let f = as_number(from_v).ok_or_else(|| CliError::config("sweep.from", "expected a number"))?;
            let t = as_number(to_v).ok_or_else(|| CliError::config("sweep.to", "expected a number"))?;
            check_eta("sweep.from", f)?;
            check_eta("sweep.to", t)?;
            (SweepVariable::Eta, f, t)
        }
        other => {
            return Err(CliError::config(
                "sweep.variable",
                format!("unknown variable `{other}`; expected nu, g, power, r or eta"),
            ))
        }
    };
    if scale == Scale::Log && (from <= 0.0 || to <= 0.0) {
        return Err(CliError::config("sweep.from", "a log sweep needs positive endpoints"));
    }
    Ok(Sweep {
        variable,
        scale,
        from,
        to,
        points: points as usize,
    })
}

fn parse_verify(t: &Table, db: &mut bool) -> Result<VerifyGrid, CliError> {
    check_keys(t, "verify", &["r", "eta"])?;
    let list = |key: &str| -> Result<Option<&Vec<Value>>, CliError> {
        match t.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) if !a.is_empty() => Ok(Some(a)),
            Some(_) => Err(CliError::config(format!("verify.{key}"), "expected a non-empty array")),
        }
    };
    let r = list("r")?
        .map(|a| {
            a.iter()
                .enumerate()
                .map(|(i, v)| squeezing_value(v, &format!("verify.r[{i}]"), db))
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    let eta = list("eta")?
        .map(|a| {
            a.iter()
                .enumerate()
                .map(|(i, v)| {
                    let path = format!("verify.eta[{i}]");
                    let e = as_number(v).ok_or_else(|| CliError::config(&path, "expected a number"))?;
                    check_eta(&path, e)?;
                    Ok(e)
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .transpose()?;
    Ok(VerifyGrid { r, eta })
}

fn parse_simulate(t: &Table) -> Result<SimSettings, CliError> {
    let s = "simulate";
    check_keys(
        t,
        s,
        &["Q", "seed", "trials", "sample_rate", "duration", "kick", "kick_time"],
    )?;
    let q = number(t, s, "Q")?.map(|q| positive("simulate.Q", q)).transpose()?;
    let seed = match t.get("seed") {
        None => None,
        Some(Value::Integer(v)) => Some(
            u64::try_from(*v).map_err(|_| CliError::config("simulate.seed", "must be >= 0"))?,
        ),
        Some(Value::String(v)) => Some(v.trim().parse::<u64>().map_err(|_| {
            CliError::config("simulate.seed", "expected an integer in [0, 2^64)")
        })?),
        Some(_) => return Err(CliError::config("simulate.seed", "expected an integer")),
    };
    let trials = integer(t, s, "trials")?
        .map(|v| usize::try_from(v).map_err(|_| CliError::config("simulate.trials", "must be >= 0")))
        .transpose()?;
    let sample_rate = quantity(t, s, "sample_rate", Dimension::Rate)?
        .map(|v| positive("simulate.sample_rate", v))
        .transpose()?;
    let duration = quantity(t, s, "duration", Dimension::Time)?
        .map(|v| positive("simulate.duration", v))
        .transpose()?;
    let kick = string(t, s, "kick")?
        .map(|k| Kick::parse(k).map_err(|m| CliError::config("simulate.kick", m)))
        .transpose()?;
    let kick_time = match t.get("kick_time") {
        None => None,
        Some(Value::String(v)) if v == "random" => Some(KickTimePolicy::UniformRandom),
        Some(v) => match as_number(v) {
            Some(f) if (0.0..1.0).contains(&f) => Some(KickTimePolicy::Fixed(f)),
            _ => {
                return Err(CliError::config(
                    "simulate.kick_time",
                    "expected a record fraction in [0, 1) or \"random\"",
                ))
            }
        },
    };
    Ok(SimSettings {
        q,
        seed,
        trials,
        sample_rate,
        duration,
        kick,
        kick_time,
    })
}

fn coupling_string(c: Coupling, kind: SystemKind) -> String {
    let unit = match (c.unit, kind) {
        (CouplingUnit::GStar, _) => "g*",
        (CouplingUnit::Native, SystemKind::Slab) => SLAB_COUPLING_UNIT,
        (CouplingUnit::Native, SystemKind::Cavity) => CAVITY_COUPLING_UNIT,
    };
    format!("{:e} {unit}", c.value)
}

impl Scenario {
    /// Writes the scenario in canonical units. Parsing the result gives back
    /// an equal scenario.
    pub fn to_toml(&self) -> String {
        let q = |v: f64, d: Dimension| Value::String(format_quantity(v, d));
        let sys = &self.system;
        let mut system = Table::new();
        system.insert(
            "kind".into(),
            Value::String(
                match sys.kind {
                    SystemKind::Slab => "slab",
                    SystemKind::Cavity => "cavity",
                }
                .into(),
            ),
        );
        system.insert("mass".into(), q(sys.mass, Dimension::Mass));
        system.insert("omega_m".into(), q(sys.omega_m, Dimension::Frequency));
        match sys.damping {
            Damping::Gamma(g) => system.insert("gamma".into(), q(g, Dimension::Frequency)),
            Damping::Q(v) => system.insert("Q".into(), Value::Float(v)),
        };
        if let Some(k) = sys.kappa {
            system.insert("kappa".into(), q(k, Dimension::Frequency));
        }
        if let Some(c) = sys.chi_e {
            system.insert("chi_e".into(), Value::Float(c));
        }
        if let Some(l) = sys.ell {
            system.insert("ell".into(), q(l, Dimension::Length));
        }
        if let Some(l) = sys.wavelength {
            system.insert("wavelength".into(), q(l, Dimension::Length));
        }

        let mut drive = Table::new();
        match self.drive {
            Drive::Coupling(c) => drive.insert("g".into(), Value::String(coupling_string(c, sys.kind))),
            Drive::Power(p) => drive.insert("power".into(), q(p, Dimension::Power)),
        };

        let mut squeezing = Table::new();
        let mode = match self.squeezing.mode {
            SqueezeMode::None => "none",
            SqueezeMode::Fixed => "fixed",
            SqueezeMode::Optimal => "optimal",
        };
        squeezing.insert("mode".into(), Value::String(mode.into()));
        if self.squeezing.mode != SqueezeMode::None {
            squeezing.insert("r".into(), Value::Float(self.squeezing.r));
        }
        if let Some(th) = self.squeezing.theta {
            squeezing.insert("theta".into(), q(th, Dimension::Angle));
        }

        let mut detection = Table::new();
        detection.insert("eta".into(), Value::Float(self.eta));

        let mut root = Table::new();
        root.insert("system".into(), Value::Table(system));
        root.insert("drive".into(), Value::Table(drive));
        root.insert("squeezing".into(), Value::Table(squeezing));
        root.insert("detection".into(), Value::Table(detection));

        if let Some(sw) = &self.sweep {
            let mut t = Table::new();
            t.insert("variable".into(), Value::String(sw.variable.name().into()));
            t.insert(
                "scale".into(),
                Value::String(
                    match sw.scale {
                        Scale::Linear => "linear",
                        Scale::Log => "log",
                    }
                    .into(),
                ),
            );
            let end = |v: f64| match sw.variable {
                SweepVariable::Nu => q(v, Dimension::Frequency),
                SweepVariable::Power => q(v, Dimension::Power),
                SweepVariable::G(unit) => Value::String(coupling_string(Coupling { value: v, unit }, sys.kind)),
                SweepVariable::R | SweepVariable::Eta => Value::Float(v),
            };
            t.insert("from".into(), end(sw.from));
            t.insert("to".into(), end(sw.to));
            t.insert("points".into(), Value::Integer(sw.points as i64));
            root.insert("sweep".into(), Value::Table(t));
        }

        let floats = |v: &[f64]| Value::Array(v.iter().map(|&x| Value::Float(x)).collect());
        let mut verify = Table::new();
        if let Some(r) = &self.verify.r {
            verify.insert("r".into(), floats(r));
        }
        if let Some(e) = &self.verify.eta {
            verify.insert("eta".into(), floats(e));
        }
        if !verify.is_empty() {
            root.insert("verify".into(), Value::Table(verify));
        }

        let sim = &self.simulate;
        let mut simulate = Table::new();
        if let Some(v) = sim.q {
            simulate.insert("Q".into(), Value::Float(v));
        }
        if let Some(v) = sim.seed {
            let seed = i64::try_from(v).map_or_else(|_| Value::String(v.to_string()), Value::Integer);
            simulate.insert("seed".into(), seed);
        }
        if let Some(v) = sim.trials {
            simulate.insert("trials".into(), Value::Integer(v as i64));
        }
        if let Some(v) = sim.sample_rate {
            simulate.insert("sample_rate".into(), q(v, Dimension::Rate));
        }
        if let Some(v) = sim.duration {
            simulate.insert("duration".into(), q(v, Dimension::Time));
        }
        if let Some(k) = sim.kick {
            simulate.insert("kick".into(), Value::String(k.render()));
        }
        match sim.kick_time {
            Some(KickTimePolicy::Fixed(f)) => {
                simulate.insert("kick_time".into(), Value::Float(f));
            }
            Some(KickTimePolicy::UniformRandom) => {
                simulate.insert("kick_time".into(), Value::String("random".into()));
            }
            None => {}
        }
        if !simulate.is_empty() {
            root.insert("simulate".into(), Value::Table(simulate));
        }

        toml::to_string(&root).expect("scenario tables always serialize")
    }

    /// Sensor configuration for the scenario's own oscillator.
    pub fn sensor_config(&self) -> Result<SensorConfig, CliError> {
        self.sensor_config_for(self.system.oscillator()?)
    }

    /// Sensor configuration with `osc` replacing the scenario's oscillator.
    /// Couplings given in units of `g*` follow the new oscillator.
    pub fn sensor_config_for(&self, osc: MechanicalOscillator) -> Result<SensorConfig, CliError> {
        let sys = &self.system;
        let readout = match (sys.kind, self.drive) {
            (SystemKind::Slab, Drive::Coupling(c)) => {
                let g = match c.unit {
                    CouplingUnit::GStar => c.value * g_star(&osc)?,
                    CouplingUnit::Native => c.value,
                };
                Readout::slab(g)
            }
            (SystemKind::Slab, Drive::Power(p)) => {
                let omega_0 = omega_from_wavelength(sys.wavelength.unwrap_or(f64::NAN))
                    .map_err(CliError::from_invalid)?;
                Readout::slab_from_power(
                    p,
                    sys.chi_e.unwrap_or(f64::NAN),
                    sys.ell.unwrap_or(f64::NAN),
                    omega_0,
                    CouplingForm::Full,
                )
                .map(|(r, _)| r)
            }
            (SystemKind::Cavity, Drive::Coupling(c)) => {
                let kappa = sys.kappa.unwrap_or(f64::NAN);
                let g_c = match c.unit {
                    CouplingUnit::GStar => c.value * g_star(&osc)? * kappa.sqrt() / 2.0,
                    CouplingUnit::Native => c.value,
                };
                Readout::cavity(kappa, g_c)
            }
            (SystemKind::Cavity, Drive::Power(_)) => {
                return Err(CliError::config("drive.power", "laser power drive is only supported for a slab readout"))
            }
        }
        .map_err(CliError::from_invalid)?;
        let squeezing = match self.squeezing.mode {
            SqueezeMode::None => Ok(SqueezingPolicy::NoSqueezing),
            SqueezeMode::Fixed => SqueezingPolicy::fixed(self.squeezing.r, self.squeezing.theta.unwrap_or(0.0)),
            SqueezeMode::Optimal => SqueezingPolicy::optimal(self.squeezing.r),
        }
        .map_err(CliError::from_invalid)?;
        let detection = DetectionChain::new(self.eta).map_err(CliError::from_invalid)?;
        SensorConfig::new(osc, readout, squeezing, detection).map_err(CliError::from_invalid)
    }

    /// Copy of the scenario with the swept variable set to `value`.
    pub fn at(&self, variable: SweepVariable, value: f64) -> Scenario {
        let mut s = self.clone();
        match variable {
            SweepVariable::Nu => {}
            SweepVariable::G(unit) => s.drive = Drive::Coupling(Coupling { value, unit }),
            SweepVariable::Power => s.drive = Drive::Power(value),
            SweepVariable::R => s.squeezing.r = value,
            SweepVariable::Eta => s.eta = value,
        }
        s
    }
}
