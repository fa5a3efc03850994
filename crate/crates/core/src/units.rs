//! Unit-suffixed scalars as they appear in config files.
//!
//! Rates and frequencies are stored in SI angular units. A bare number is
//! taken as already being in SI units. Suffixes:
//!
//! | written            | stored value           |
//! |--------------------|------------------------|
//! | `"65 MHz"`         | `65e6` (1/s)           |
//! | `"2pi*1.42 GHz"`   | `2π · 1.42e9` (rad/s)  |
//! | `"172 ns"`         | `172e-9` (s)           |

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    /// Rates and angular frequencies.
    Rate,
    Time,
}

const RATE_UNITS: [(&str, f64); 5] = [("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9), ("THz", 1e12)];
const TIME_UNITS: [(&str, f64); 5] = [("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9), ("ps", 1e-12)];

/// Parse `"<number> <unit>"` or `"2pi*<number> <unit>"`.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let bad = |why: &str| Error::Parse(format!("`{text}`: {why}"));
    let mut body = text.trim();
    let mut factor = 1.0;
    for prefix in ["2pi*", "2π*", "2pi ", "2π×", "2pi×"] {
        if let Some(rest) = body.strip_prefix(prefix) {
            if dim != Dimension::Rate {
                return Err(bad("a 2pi factor only applies to frequencies"));
            }
            factor = std::f64::consts::TAU;
            body = rest.trim_start();
            break;
        }
    }
    let split = body
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .or_else(|| {
            // "1e9 Hz" style: the exponent marker is followed by a digit or sign
            body.find(' ')
        })
        .unwrap_or(body.len());
    let (num, unit) = body.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| bad("expected a number followed by an optional unit"))?;
    let unit = unit.trim();
    let scale = if unit.is_empty() {
        1.0
    } else {
        let table: &[(&str, f64)] = match dim {
            Dimension::Rate => &RATE_UNITS,
            Dimension::Time => &TIME_UNITS,
        };
        table
            .iter()
            .find(|(name, _)| *name == unit || (*name == "us" && unit == "μs"))
            .map(|&(_, s)| s)
            .ok_or_else(|| bad("unknown unit"))?
    };
    if !value.is_finite() {
        return Err(bad("value is not finite"));
    }
    Ok(factor * value * scale)
}

/// A config scalar: either a plain number or a unit-suffixed string.
pub fn quantity_from_toml(value: &toml::Value, dim: Dimension, field: &str) -> Result<f64> {
    match value {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::String(s) => parse_quantity(s, dim).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{field}: {msg}")),
            other => other,
        }),
        other => Err(Error::Parse(format!(
            "{field}: expected a number or a quantity string, found {other}"
        ))),
    }
}
