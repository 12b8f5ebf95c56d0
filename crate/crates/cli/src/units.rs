//! Quantities with explicit unit suffixes, e.g. `"100 kHz"` or `"1e-18 kg"`.

use std::f64::consts::PI;

/// Physical dimension a field expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Angular frequency; `Hz` suffixes mean ω/2π.
    Frequency,
    Mass,
    Power,
    Length,
    Angle,
    Time,
    /// Sampling rate in samples per second; only `Hz` suffixes.
    Rate,
}

impl Dimension {
    fn scale(self, unit: &str) -> Option<f64> {
        let two_pi = 2.0 * PI;
        let s = match (self, unit) {
            (Dimension::Frequency, "Hz") => two_pi,
            (Dimension::Frequency, "kHz") => two_pi * 1e3,
            (Dimension::Frequency, "MHz") => two_pi * 1e6,
            (Dimension::Frequency, "GHz") => two_pi * 1e9,
            (Dimension::Frequency, "THz") => two_pi * 1e12,
            (Dimension::Frequency, "rad/s") => 1.0,
            (Dimension::Frequency, "krad/s") => 1e3,
            (Dimension::Frequency, "Mrad/s") => 1e6,
            (Dimension::Mass, "kg") => 1.0,
            (Dimension::Mass, "g") => 1e-3,
            (Dimension::Mass, "mg") => 1e-6,
            (Dimension::Mass, "ug") => 1e-9,
            (Dimension::Mass, "ng") => 1e-12,
            (Dimension::Mass, "pg") => 1e-15,
            (Dimension::Mass, "fg") => 1e-18,
            (Dimension::Mass, "ag") => 1e-21,
            (Dimension::Power, "W") => 1.0,
            (Dimension::Power, "mW") => 1e-3,
            (Dimension::Power, "uW") => 1e-6,
            (Dimension::Power, "nW") => 1e-9,
            (Dimension::Power, "pW") => 1e-12,
            (Dimension::Length, "m") => 1.0,
            (Dimension::Length, "mm") => 1e-3,
            (Dimension::Length, "um") => 1e-6,
            (Dimension::Length, "nm") => 1e-9,
            (Dimension::Length, "pm") => 1e-12,
            (Dimension::Angle, "rad") => 1.0,
            (Dimension::Angle, "deg") => PI / 180.0,
            (Dimension::Rate, "Hz") => 1.0,
            (Dimension::Rate, "kHz") => 1e3,
            (Dimension::Rate, "MHz") => 1e6,
            (Dimension::Rate, "GHz") => 1e9,
            (Dimension::Time, "s") => 1.0,
            (Dimension::Time, "ms") => 1e-3,
            (Dimension::Time, "us") => 1e-6,
            (Dimension::Time, "ns") => 1e-9,
            _ => return None,
        };
        Some(s)
    }

    /// Unit used when writing normalized values.
    pub fn canonical_unit(self) -> &'static str {
        match self {
            Dimension::Frequency => "rad/s",
            Dimension::Mass => "kg",
            Dimension::Power => "W",
            Dimension::Length => "m",
            Dimension::Angle => "rad",
            Dimension::Time => "s",
            Dimension::Rate => "Hz",
        }
    }

    fn accepted(self) -> &'static str {
        match self {
            Dimension::Frequency => "Hz, kHz, MHz, GHz, THz, rad/s, krad/s, Mrad/s",
            Dimension::Mass => "kg, g, mg, ug, ng, pg, fg, ag",
            Dimension::Power => "W, mW, uW, nW, pW",
            Dimension::Length => "m, mm, um, nm, pm",
            Dimension::Angle => "rad, deg",
            Dimension::Time => "s, ms, us, ns",
            Dimension::Rate => "Hz, kHz, MHz, GHz",
        }
    }
}

/// Splits `"<number> <unit>"` into its parts. The unit may be absent.
pub fn split_quantity(text: &str) -> Result<(f64, &str), String> {
    let text = text.trim();
    let (num, unit) = match text.find(char::is_whitespace) {
        Some(i) => (&text[..i], text[i..].trim()),
        None => (text, ""),
    };
    let value: f64 = num
        .parse()
        .map_err(|_| format!("`{text}` does not start with a number"))?;
    if !value.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok((value, unit))
}

/// Parses a quantity and converts it to SI (rad/s for frequencies).
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, String> {
    let (value, unit) = split_quantity(text)?;
    if unit.is_empty() {
        return Err(format!(
            "`{text}` has no unit; expected one of {}",
            dim.accepted()
        ));
    }
    let scale = dim
        .scale(unit)
        .ok_or_else(|| format!("unknown unit `{unit}`; expected one of {}", dim.accepted()))?;
    Ok(value * scale)
}

/// Writes a normalized quantity in its canonical unit.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    format!("{value:e} {}", dim.canonical_unit())
}
