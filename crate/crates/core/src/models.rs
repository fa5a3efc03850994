//! NV-center level schemes and the parameter set shared by every backend.
//!
//! Within one emitter the levels are ordered `g1, g2, e1, e2, m`, with absent
//! levels dropped: the three-level scheme is `g1, e1, m` and the two-level
//! scheme is `g1, e1`. All frequencies are detunings from the cavity frame
//! (rad/s) and all rates are in 1/s.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::{quantity_from_toml, Dimension};

/// Ground-state zero-field splitting.
pub const D_GS: f64 = TAU * 2.87e9;
/// Excited-state zero-field splitting.
pub const D_ES: f64 = TAU * 1.42e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    FiveLevel,
    ThreeLevel,
    TwoLevel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    G1,
    G2,
    E1,
    E2,
    M,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::G1, Level::G2, Level::E1, Level::E2, Level::M];

    pub fn name(self) -> &'static str {
        match self {
            Level::G1 => "g1",
            Level::G2 => "g2",
            Level::E1 => "e1",
            Level::E2 => "e2",
            Level::M => "m",
        }
    }

    pub fn parse(name: &str) -> Option<Level> {
        Level::ALL.into_iter().find(|l| l.name() == name)
    }

    /// Optical excitation carried by the level (conserved together with the
    /// photon number by the coherent part of the dynamics).
    pub fn excitation(self) -> i32 {
        matches!(self, Level::E1 | Level::E2) as i32
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Scheme {
    pub fn levels(self) -> &'static [Level] {
        match self {
            Scheme::FiveLevel => &Level::ALL,
            Scheme::ThreeLevel => &[Level::G1, Level::E1, Level::M],
            Scheme::TwoLevel => &[Level::G1, Level::E1],
        }
    }

    pub fn n_levels(self) -> usize {
        self.levels().len()
    }

    pub fn index(self, level: Level) -> Option<usize> {
        self.levels().iter().position(|&l| l == level)
    }

    pub fn has(self, level: Level) -> bool {
        self.index(level).is_some()
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::FiveLevel => "five-level",
            Scheme::ThreeLevel => "three-level",
            Scheme::TwoLevel => "two-level",
        }
    }
}

/// Which optical branch the cavity is tuned to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Ms0,
    Ms1,
}

impl Branch {
    /// Default detunings `(omega_e1g1, omega_e2g2)` from the cavity.
    ///
    /// The m_s = ±1 line sits `D_es - D_gs` away from the m_s = 0 line.
    pub fn detunings(self) -> (f64, f64) {
        let split = D_ES - D_GS;
        match self {
            Branch::Ms0 => (0.0, split),
            Branch::Ms1 => (-split, 0.0),
        }
    }
}

/// Every parameter of the master equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub scheme: Scheme,
    pub n_emitters: usize,
    pub n_max: usize,
    pub resonant_branch: Branch,
    pub omega_c: f64,
    pub omega_e1g1: f64,
    pub omega_e2g2: f64,
    pub g: f64,
    pub kappa: f64,
    pub gamma_e1g1: f64,
    pub gamma_e2g2: f64,
    pub gamma_g1e1: f64,
    pub gamma_g2e2: f64,
    pub chi_e1g1: f64,
    pub chi_e2g2: f64,
    pub gamma_e1m: f64,
    pub gamma_e2m: f64,
    pub gamma_mg1: f64,
    pub gamma_mg2: f64,
    /// Extra per-emitter detuning added to both optical transitions
    /// (exact backend only). Empty means identical emitters.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detuning_offsets: Vec<f64>,
}

/// Names of the rate fields, in declaration order.
pub const RATE_FIELDS: [&str; 12] = [
    "kappa",
    "gamma_e1g1",
    "gamma_e2g2",
    "gamma_g1e1",
    "gamma_g2e2",
    "chi_e1g1",
    "chi_e2g2",
    "gamma_e1m",
    "gamma_e2m",
    "gamma_mg1",
    "gamma_mg2",
    "g",
];

/// Names of the frequency fields.
pub const FREQUENCY_FIELDS: [&str; 3] = ["omega_c", "omega_e1g1", "omega_e2g2"];

impl ModelSpec {
    /// A bare two-level model with the given coupling and loss, everything
    /// else zero.
    pub fn two_level(n_emitters: usize, n_max: usize, g: f64, kappa: f64) -> Self {
        Self {
            scheme: Scheme::TwoLevel,
            n_emitters,
            n_max,
            resonant_branch: Branch::Ms0,
            omega_c: 0.0,
            omega_e1g1: 0.0,
            omega_e2g2: 0.0,
            g,
            kappa,
            gamma_e1g1: 0.0,
            gamma_e2g2: 0.0,
            gamma_g1e1: 0.0,
            gamma_g2e2: 0.0,
            chi_e1g1: 0.0,
            chi_e2g2: 0.0,
            gamma_e1m: 0.0,
            gamma_e2m: 0.0,
            gamma_mg1: 0.0,
            gamma_mg2: 0.0,
            detuning_offsets: Vec::new(),
        }
    }

    pub fn field(&self, name: &str) -> Option<f64> {
        Some(match name {
            "omega_c" => self.omega_c,
            "omega_e1g1" => self.omega_e1g1,
            "omega_e2g2" => self.omega_e2g2,
            "g" => self.g,
            "kappa" => self.kappa,
            "gamma_e1g1" => self.gamma_e1g1,
            "gamma_e2g2" => self.gamma_e2g2,
            "gamma_g1e1" => self.gamma_g1e1,
            "gamma_g2e2" => self.gamma_g2e2,
            "chi_e1g1" => self.chi_e1g1,
            "chi_e2g2" => self.chi_e2g2,
            "gamma_e1m" => self.gamma_e1m,
            "gamma_e2m" => self.gamma_e2m,
            "gamma_mg1" => self.gamma_mg1,
            "gamma_mg2" => self.gamma_mg2,
            _ => return None,
        })
    }

    pub fn field_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "omega_c" => &mut self.omega_c,
            "omega_e1g1" => &mut self.omega_e1g1,
            "omega_e2g2" => &mut self.omega_e2g2,
            "g" => &mut self.g,
            "kappa" => &mut self.kappa,
            "gamma_e1g1" => &mut self.gamma_e1g1,
            "gamma_e2g2" => &mut self.gamma_e2g2,
            "gamma_g1e1" => &mut self.gamma_g1e1,
            "gamma_g2e2" => &mut self.gamma_g2e2,
            "chi_e1g1" => &mut self.chi_e1g1,
            "chi_e2g2" => &mut self.chi_e2g2,
            "gamma_e1m" => &mut self.gamma_e1m,
            "gamma_e2m" => &mut self.gamma_e2m,
            "gamma_mg1" => &mut self.gamma_mg1,
            "gamma_mg2" => &mut self.gamma_mg2,
            _ => return None,
        })
    }

    /// Set the optical pump on every branch the scheme has.
    pub fn set_pump(&mut self, rate: f64) {
        self.gamma_g1e1 = rate;
        if self.scheme == Scheme::FiveLevel {
            self.gamma_g2e2 = rate;
        }
    }

    /// Cavity-mediated single-emitter decay rate `4 g² / κ`.
    pub fn purcell_rate(&self) -> f64 {
        4.0 * self.g * self.g / self.kappa
    }

    /// `1 / (γ_mg1 + γ_mg2)`, infinite when the singlet never decays.
    pub fn metastable_lifetime(&self) -> f64 {
        1.0 / (self.gamma_mg1 + self.gamma_mg2)
    }

    /// Total detuning of emitter `i` on each branch.
    pub fn emitter_detunings(&self, i: usize) -> (f64, f64) {
        let offset = self.detuning_offsets.get(i).copied().unwrap_or(0.0);
        (self.omega_e1g1 + offset, self.omega_e2g2 + offset)
    }

    /// Check every invariant and return the normalized spec.
    ///
    /// Rates that belong to a level the scheme does not have must be zero;
    /// the e2 detuning of schemes without e2 is cleared.
    pub fn validate(&self) -> Result<Self> {
        let mut out = self.clone();
        if out.n_emitters < 1 {
            return Err(invalid("n_emitters", "at least one emitter is required"));
        }
        if out.n_max < 1 {
            return Err(invalid("n_max", "the photon truncation must be at least 1"));
        }
        for name in RATE_FIELDS.iter().chain(&FREQUENCY_FIELDS) {
            let v = out.field(name).unwrap();
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        for name in RATE_FIELDS {
            let v = out.field(name).unwrap();
            if v < 0.0 {
                return Err(invalid(name, format!("rates must be non-negative, got {v}")));
            }
        }
        if !(out.g >= 0.0) {
            return Err(invalid("g", "coupling must be non-negative"));
        }
        if out.kappa <= 0.0 {
            return Err(invalid("kappa", "cavity loss must be positive"));
        }
        let absent: &[&str] = match out.scheme {
            Scheme::FiveLevel => &[],
            Scheme::ThreeLevel => &["gamma_e2g2", "gamma_g2e2", "chi_e2g2", "gamma_e2m", "gamma_mg2"],
            Scheme::TwoLevel => &[
                "gamma_e2g2",
                "gamma_g2e2",
                "chi_e2g2",
                "gamma_e2m",
                "gamma_mg2",
                "gamma_e1m",
                "gamma_mg1",
            ],
        };
        for &name in absent {
            if out.field(name).unwrap() != 0.0 {
                return Err(invalid(
                    name,
                    format!("the {} scheme has no level for this channel", out.scheme.name()),
                ));
            }
        }
        if !out.scheme.has(Level::E2) {
            out.omega_e2g2 = 0.0;
        }
        if !out.detuning_offsets.is_empty() {
            if out.detuning_offsets.len() != out.n_emitters {
                return Err(invalid(
                    "detuning_offsets",
                    format!("{} offsets for {} emitters", out.detuning_offsets.len(), out.n_emitters),
                ));
            }
            if out.detuning_offsets.iter().any(|x| !x.is_finite()) {
                return Err(invalid("detuning_offsets", "offsets must be finite"));
            }
            if out.detuning_offsets.iter().all(|&x| x == 0.0) {
                out.detuning_offsets.clear();
            }
        }
        Ok(out)
    }
}

/// Lifetimes and branching ratios of the decaying levels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RatePreset {
    /// Lifetime (s) of each source level.
    pub lifetimes: BTreeMap<Level, f64>,
    /// Branching ratio per `(source, target)`.
    pub branching: BTreeMap<Level, BTreeMap<Level, f64>>,
}

/// Rates derived from a [`RatePreset`], keyed by `ModelSpec` field name.
pub type RateTable = BTreeMap<&'static str, f64>;

fn decay_field(source: Level, target: Level) -> Option<&'static str> {
    use Level::*;
    Some(match (source, target) {
        (E1, G1) => "gamma_e1g1",
        (E2, G2) => "gamma_e2g2",
        (E1, M) => "gamma_e1m",
        (E2, M) => "gamma_e2m",
        (M, G1) => "gamma_mg1",
        (M, G2) => "gamma_mg2",
        _ => return None,
    })
}

/// Convert lifetimes and branching ratios into rates `ratio / lifetime`.
pub fn rates_from_preset(preset: &RatePreset) -> Result<RateTable> {
    let mut out = RateTable::new();
    for (&source, targets) in &preset.branching {
        let lifetime = *preset
            .lifetimes
            .get(&source)
            .ok_or_else(|| invalid(&format!("lifetime.{source}"), "branching given without a lifetime"))?;
        if !(lifetime > 0.0 && lifetime.is_finite()) {
            return Err(invalid(&format!("lifetime.{source}"), "lifetime must be positive"));
        }
        let total: f64 = targets.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(
                &format!("branching.{source}"),
                format!("ratios from level {source} sum to {total}, not 1"),
            ));
        }
        for (&target, &ratio) in targets {
            if !(0.0..=1.0).contains(&ratio) {
                return Err(invalid(&format!("branching.{source}.{target}"), "ratio outside [0, 1]"));
            }
            let field = decay_field(source, target)
                .ok_or_else(|| invalid(&format!("branching.{source}.{target}"), "no such decay channel"))?;
            out.insert(field, ratio / lifetime);
        }
    }
    for &source in preset.lifetimes.keys() {
        if !preset.branching.contains_key(&source) {
            return Err(invalid(
                &format!("branching.{source}"),
                "lifetime given without branching ratios",
            ));
        }
    }
    Ok(out)
}

/// A model file: scheme, cavity, emitter rates and optional lifetime tables.
///
/// ```toml
/// scheme = "five-level"
/// n_emitters = 2
/// [cavity]
/// kappa = "2pi*1 GHz"
/// purcell_rate = "0.74 GHz"
/// [rates]
/// pump = "1 MHz"
/// [lifetimes]
/// m = "172 ns"
/// [branching.m]
/// g1 = 0.57
/// g2 = 0.43
/// ```
pub fn spec_from_toml(root: &toml::Value) -> Result<ModelSpec> {
    let table = root
        .as_table()
        .ok_or_else(|| Error::Parse("model must be a table".into()))?;
    let known = [
        "name",
        "description",
        "scheme",
        "n_emitters",
        "n_max",
        "resonant_branch",
        "cavity",
        "emitter",
        "rates",
        "lifetimes",
        "branching",
    ];
    for key in table.keys() {
        if !known.contains(&key.as_str()) {
            return Err(Error::Parse(format!("unknown model key `{key}`")));
        }
    }
    let scheme: Scheme = match table.get("scheme") {
        Some(v) => v
            .clone()
            .try_into()
            .map_err(|_| Error::Parse(format!("scheme: unknown scheme {v}")))?,
        None => return Err(Error::Parse("missing `scheme`".into())),
    };
    let int = |key: &str, default: usize| -> Result<usize> {
        match table.get(key) {
            None => Ok(default),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(v) => Err(Error::Parse(format!(
                "{key}: expected a non-negative integer, found {v}"
            ))),
        }
    };
    let n_emitters = int("n_emitters", 1)?;
    let n_max = int("n_max", 5)?;
    let branch: Branch = match table.get("resonant_branch") {
        Some(v) => v
            .clone()
            .try_into()
            .map_err(|_| Error::Parse(format!("resonant_branch: expected ms0 or ms1, found {v}")))?,
        None => Branch::Ms0,
    };

    let mut spec = ModelSpec::two_level(n_emitters, n_max, 0.0, 0.0);
    spec.scheme = scheme;
    spec.resonant_branch = branch;
    let (d1, d2) = branch.detunings();
    spec.omega_e1g1 = d1;
    spec.omega_e2g2 = d2;

    let section = |name: &str| -> Result<Option<&toml::value::Table>> {
        match table.get(name) {
            None => Ok(None),
            Some(toml::Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(Error::Parse(format!("`{name}` must be a table"))),
        }
    };

    if let Some(t) = section("lifetimes")? {
        let mut preset = RatePreset::default();
        for (k, v) in t {
            let level = Level::parse(k).ok_or_else(|| Error::Parse(format!("lifetimes: unknown level `{k}`")))?;
            preset.lifetimes.insert(
                level,
                quantity_from_toml(v, Dimension::Time, &format!("lifetimes.{k}"))?,
            );
        }
        if let Some(b) = section("branching")? {
            for (k, v) in b {
                let source = Level::parse(k).ok_or_else(|| Error::Parse(format!("branching: unknown level `{k}`")))?;
                let inner = v
                    .as_table()
                    .ok_or_else(|| Error::Parse(format!("branching.{k} must be a table")))?;
                let mut row = BTreeMap::new();
                for (tk, tv) in inner {
                    let target =
                        Level::parse(tk).ok_or_else(|| Error::Parse(format!("branching.{k}: unknown level `{tk}`")))?;
                    let ratio = tv
                        .as_float()
                        .or_else(|| tv.as_integer().map(|i| i as f64))
                        .ok_or_else(|| Error::Parse(format!("branching.{k}.{tk}: expected a number")))?;
                    row.insert(target, ratio);
                }
                preset.branching.insert(source, row);
            }
        }
        for (field, rate) in rates_from_preset(&preset)? {
            *spec.field_mut(field).unwrap() = rate;
        }
    } else if section("branching")?.is_some() {
        return Err(Error::Parse("branching ratios given without lifetimes".into()));
    }

    if let Some(t) = section("cavity")? {
        for (k, v) in t {
            let x = quantity_from_toml(v, Dimension::Rate, &format!("cavity.{k}"))?;
            match k.as_str() {
                "kappa" => spec.kappa = x,
                "g" => spec.g = x,
                "detuning" | "omega_c" => spec.omega_c = x,
                "purcell_rate" => {}
                _ => return Err(Error::Parse(format!("cavity: unknown key `{k}`"))),
            }
        }
        if let Some(v) = t.get("purcell_rate") {
            if t.contains_key("g") {
                return Err(Error::Parse(
                    "cavity: give either `g` or `purcell_rate`, not both".into(),
                ));
            }
            let gamma_c = quantity_from_toml(v, Dimension::Rate, "cavity.purcell_rate")?;
            spec.g = (gamma_c * spec.kappa).sqrt() / 2.0;
        }
    }

    if let Some(t) = section("emitter")? {
        for (k, v) in t {
            match k.as_str() {
                "omega_e1g1" | "omega_e2g2" => {
                    *spec.field_mut(k).unwrap() = quantity_from_toml(v, Dimension::Rate, &format!("emitter.{k}"))?
                }
                "detuning_offsets" => {
                    let arr = v
                        .as_array()
                        .ok_or_else(|| Error::Parse("emitter.detuning_offsets must be an array".into()))?;
                    spec.detuning_offsets = arr
                        .iter()
                        .map(|x| quantity_from_toml(x, Dimension::Rate, "emitter.detuning_offsets"))
                        .collect::<Result<_>>()?;
                }
                _ => return Err(Error::Parse(format!("emitter: unknown key `{k}`"))),
            }
        }
    }

    if let Some(t) = section("rates")? {
        if let Some(v) = t.get("pump") {
            spec.set_pump(quantity_from_toml(v, Dimension::Rate, "rates.pump")?);
        }
        if let Some(v) = t.get("dephasing") {
            let x = quantity_from_toml(v, Dimension::Rate, "rates.dephasing")?;
            spec.chi_e1g1 = x;
            if scheme == Scheme::FiveLevel {
                spec.chi_e2g2 = x;
            }
        }
        for (k, v) in t {
            if k == "pump" || k == "dephasing" {
                continue;
            }
            if !RATE_FIELDS.contains(&k.as_str()) || k == "kappa" || k == "g" {
                return Err(Error::Parse(format!("rates: unknown rate `{k}`")));
            }
            *spec.field_mut(k).unwrap() = quantity_from_toml(v, Dimension::Rate, &format!("rates.{k}"))?;
        }
    }
    Ok(spec)
}

/// Apply `a.b.c = value` to a TOML tree, creating intermediate tables.
/// The value is parsed as a TOML literal when possible and kept as a string
/// otherwise, so both `n_emitters=4` and `rates.pump=1 MHz` work.
pub fn apply_override(root: &mut toml::Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override `{assignment}` is not key=value")))?;
    let path = path.trim();
    let raw = raw.trim();
    if path.is_empty() {
        return Err(Error::Parse(format!("override `{assignment}` has an empty key")));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("override `{path}`: `{part}` is not a table")))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    node.as_table_mut()
        .ok_or_else(|| Error::Parse(format!("override `{path}`: parent is not a table")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Recursively overlay `top` onto `base`.
pub fn merge_toml(base: &mut toml::Value, top: &toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(k) {
                    Some(slot) => merge_toml(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

/// Shipped model files.
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 5] = [
        "paper-default-5lvl",
        "paper-default-3lvl",
        "paper-default-2lvl",
        "paper-sweep-5lvl",
        "paper-pulse-2lvl",
    ];

    pub fn source(name: &str) -> Option<&'static str> {
        match name {
            "paper-default-5lvl" => Some(include_str!("../presets/paper-default-5lvl.toml")),
            "paper-default-3lvl" => Some(include_str!("../presets/paper-default-3lvl.toml")),
            "paper-default-2lvl" => Some(include_str!("../presets/paper-default-2lvl.toml")),
            "paper-sweep-5lvl" => Some(include_str!("../presets/paper-sweep-5lvl.toml")),
            "paper-pulse-2lvl" => Some(include_str!("../presets/paper-pulse-2lvl.toml")),
            _ => None,
        }
    }

    pub fn value(name: &str) -> Result<toml::Value> {
        let text = source(name).ok_or_else(|| invalid("preset", format!("no preset named `{name}`")))?;
        text.parse::<toml::Table>()
            .map(toml::Value::Table)
            .map_err(|e| Error::Parse(format!("preset {name}: {e}")))
    }

    pub fn load(name: &str) -> Result<ModelSpec> {
        spec_from_toml(&value(name)?)?.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_channel_rate_is_inverse_lifetime() {
        let mut p = RatePreset::default();
        p.lifetimes.insert(Level::E1, 12e-9);
        p.branching.insert(Level::E1, BTreeMap::from([(Level::G1, 1.0)]));
        let r = rates_from_preset(&p).unwrap();
        assert!((r["gamma_e1g1"] - 1.0 / 12e-9).abs() < 1e-3);
    }

    #[test]
    fn metastable_split_keeps_lifetime() {
        let mut p = RatePreset::default();
        p.lifetimes.insert(Level::M, 172e-9);
        p.branching
            .insert(Level::M, BTreeMap::from([(Level::G1, 0.3), (Level::G2, 0.7)]));
        let r = rates_from_preset(&p).unwrap();
        let total = r["gamma_mg1"] + r["gamma_mg2"];
        assert!((1.0 / total - 172e-9).abs() < 1e-21);
    }

    #[test]
    fn bad_branching_names_the_level() {
        let mut p = RatePreset::default();
        p.lifetimes.insert(Level::E2, 8e-9);
        p.branching
            .insert(Level::E2, BTreeMap::from([(Level::G2, 0.5), (Level::M, 0.4)]));
        match rates_from_preset(&p) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "branching.e2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validate_rejects_absent_channels() {
        let mut s = ModelSpec::two_level(2, 3, 1e8, 1e9);
        s.gamma_e1m = 1e6;
        match s.validate() {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "gamma_e1m"),
            other => panic!("{other:?}"),
        }
        let mut s = ModelSpec::two_level(2, 3, 1e8, 1e9);
        s.kappa = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn valid_spec_round_trips() {
        let s = presets::load("paper-default-5lvl").unwrap();
        assert_eq!(s.validate().unwrap(), s);
        assert!((s.purcell_rate() - 0.74e9).abs() < 1.0);
        assert!((s.metastable_lifetime() - 172e-9).abs() < 1e-15);
    }

    #[test]
    fn presets_load() {
        for name in presets::NAMES {
            presets::load(name).unwrap();
        }
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let mut v = presets::value("paper-default-5lvl").unwrap();
        apply_override(&mut v, "rates.pump=2e8").unwrap();
        apply_override(&mut v, "n_emitters = 3").unwrap();
        apply_override(&mut v, "cavity.kappa=2pi*2 GHz").unwrap();
        let s = spec_from_toml(&v).unwrap();
        assert_eq!(s.gamma_g1e1, 2e8);
        assert_eq!(s.gamma_g2e2, 2e8);
        assert_eq!(s.n_emitters, 3);
        assert!((s.kappa - TAU * 2e9).abs() < 1e-3);
    }
}
