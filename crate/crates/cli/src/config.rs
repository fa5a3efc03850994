//! Run configurations: a model (preset plus overrides), a backend, an
//! optional parameter sweep and per-command options.
//!
//! The resolved configuration is what gets echoed into every output file,
//! so it carries the full model tree and the explicit sweep grid.

use serde::{Deserialize, Serialize};
use superrad::models::{
    apply_override, merge_toml, presets, spec_from_toml, ModelSpec, Scheme, FREQUENCY_FIELDS, RATE_FIELDS,
};
use superrad::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SteadySweep,
    G2,
    Pulse,
    Spectrum,
    DickeMap,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SteadySweep => "steady-sweep",
            Command::G2 => "g2",
            Command::Pulse => "pulse",
            Command::Spectrum => "spectrum",
            Command::DickeMap => "dicke-map",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Dicke,
    Meanfield,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Log,
    Linear,
}

/// A parameter grid, either listed or generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
}

impl Sweep {
    pub fn grid(&self) -> Result<Vec<f64>> {
        let values = match &self.values {
            Some(v) => v.clone(),
            None => {
                let (Some(a), Some(b), Some(n)) = (self.start, self.stop, self.points) else {
                    return Err(bad("sweep", "give `values` or `start`, `stop` and `points`"));
                };
                if n == 0 {
                    return Err(bad("sweep.points", "must be positive"));
                }
                let frac = |k: usize| if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
                match self.scale.unwrap_or_default() {
                    Scale::Log => {
                        if !(a > 0.0 && b > 0.0) {
                            return Err(bad("sweep", "log grid needs positive bounds"));
                        }
                        let (la, lb) = (a.log10(), b.log10());
                        (0..n).map(|k| 10f64.powf(la + (lb - la) * frac(k))).collect()
                    }
                    Scale::Linear => (0..n).map(|k| a + (b - a) * frac(k)).collect(),
                }
            }
        };
        if values.is_empty() {
            return Err(bad("sweep", "grid is empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad("sweep", "grid has non-finite values"));
        }
        let up = values.windows(2).all(|w| w[1] > w[0]);
        let down = values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(bad("sweep", "grid must be strictly monotone"));
        }
        Ok(values)
    }

    /// Column name with unit.
    pub fn column(&self) -> String {
        match self.parameter.as_str() {
            "pump" => "pump[1/s]".into(),
            "n_emitters" | "n_max" => self.parameter.clone(),
            p if FREQUENCY_FIELDS.contains(&p) || RATE_FIELDS.contains(&p) => {
                let unit = if FREQUENCY_FIELDS.contains(&p) || p == "g" {
                    "rad/s"
                } else {
                    "1/s"
                };
                format!("{p}[{unit}]")
            }
            p => p.to_string(),
        }
    }

    pub fn apply(&self, spec: &mut ModelSpec, value: f64) -> Result<()> {
        match self.parameter.as_str() {
            "pump" => spec.set_pump(value),
            "n_emitters" | "n_max" => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(bad("sweep", format!("{} must be a positive integer", self.parameter)));
                }
                if self.parameter == "n_emitters" {
                    spec.n_emitters = value as usize;
                } else {
                    spec.n_max = value as usize;
                }
            }
            p => match spec.field_mut(p) {
                Some(slot) => *slot = value,
                None => return Err(bad("sweep.parameter", format!("unknown parameter `{p}`"))),
            },
        }
        Ok(())
    }
}

/// Per-command numerical options. Every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Mean-field steady-state horizon (s).
    pub t_end: f64,
    /// g² delay grid: zero plus log-spaced points in [tau_min, tau_max] (s).
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_points: usize,
    /// Spectrum correlation grid: `points` samples spaced `dt` (s).
    pub dt: f64,
    pub points: usize,
    pub max_peaks: usize,
    /// Pulse: pump used to prepare the state, released at t = 0.
    pub prepare_pump: f64,
    pub t_max: f64,
    pub time_points: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            t_end: 1e-2,
            tau_min: 1e-11,
            tau_max: 2e-6,
            tau_points: 240,
            dt: 2e-12,
            points: 4096,
            max_peaks: 4,
            prepare_pump: 2e8,
            t_max: 6e-7,
            time_points: 301,
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    command: Command,
    backend: Backend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<String>,
}

/// On-disk shape of a configuration file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<toml::Table>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<Sweep>,
    #[serde(default)]
    options: Options,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub backend: Backend,
    pub preset: Option<String>,
    /// The model tree after merging the preset and every override.
    pub model: toml::Table,
    pub sweep: Option<Sweep>,
    pub options: Options,
}

fn bad(field: &str, reason: impl Into<String>) -> Error {
    Error::Validation {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn parse_table(text: &str, what: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>()
        .map_err(|e| Error::Parse(format!("{what}: {e}")))
}

impl RunConfig {
    /// Built-in scenario for each command.
    pub fn default_for(command: Command) -> Self {
        let (preset, backend, overrides, sweep): (&str, Backend, &[&str], Option<Sweep>) = match command {
            Command::SteadySweep => (
                "paper-sweep-5lvl",
                Backend::Meanfield,
                &[],
                Some(Sweep {
                    parameter: "pump".into(),
                    values: None,
                    start: Some(1e5),
                    stop: Some(1e9),
                    points: Some(25),
                    scale: Some(Scale::Log),
                }),
            ),
            Command::G2 => (
                "paper-default-5lvl",
                Backend::Exact,
                &[],
                Some(list("pump", &[1e6, 1e8, 1e9])),
            ),
            Command::Pulse => ("paper-pulse-2lvl", Backend::Dicke, &[], None),
            Command::Spectrum => (
                "paper-default-3lvl",
                Backend::Meanfield,
                &["n_emitters=80"],
                Some(list("pump", &[1e5, 1e7, 1e8, 3e8])),
            ),
            Command::DickeMap => (
                "paper-default-2lvl",
                Backend::Dicke,
                &["n_emitters=16"],
                Some(list("pump", &[1e5, 1e7, 1e8])),
            ),
        };
        let mut model = presets::value(preset).expect("shipped preset parses");
        for o in overrides {
            apply_override(&mut model, o).expect("built-in override");
        }
        RunConfig {
            command,
            backend,
            preset: Some(preset.into()),
            model: model.as_table().cloned().unwrap_or_default(),
            sweep,
            options: Options::default(),
        }
    }

    /// Read a configuration file. A CSV written by this tool is accepted
    /// too; its header is the configuration that produced it.
    pub fn from_text(text: &str) -> Result<Self> {
        let body = if text.trim_start().starts_with('#') {
            superrad::io::CsvTable::parse(text)?.0
        } else {
            text.to_string()
        };
        let table = parse_table(&body, "config")?;
        let file: ConfigFile = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(format!("config: {}", e.message())))?;
        let mut model = match &file.run.preset {
            Some(name) => presets::value(name)?,
            None => toml::Value::Table(Default::default()),
        };
        if let Some(m) = &file.model {
            merge_toml(&mut model, &toml::Value::Table(m.clone()));
        }
        Ok(RunConfig {
            command: file.run.command,
            backend: file.run.backend,
            preset: file.run.preset,
            model: model.as_table().cloned().unwrap_or_default(),
            sweep: file.sweep,
            options: file.options,
        })
    }

    /// `key=value`; keys starting with `run.`, `sweep.`, `options.` or
    /// `model.` address that section, anything else the model.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let key = assignment.split('=').next().unwrap_or("").trim();
        let head = key.split('.').next().unwrap_or("");
        if matches!(head, "run" | "sweep" | "options") {
            let mut tree = self.to_value(false);
            apply_override(&mut tree, assignment)?;
            let text = toml::to_string(&tree).map_err(|e| Error::Parse(e.to_string()))?;
            let mut next = Self::from_text(&text)?;
            // the model was already resolved; a preset change is not re-applied
            next.model = self.model.clone();
            *self = next;
            return Ok(());
        }
        let path = if head == "model" {
            assignment[key.find('.').map_or(0, |i| i + 1)..].to_string()
        } else {
            assignment.to_string()
        };
        let mut tree = toml::Value::Table(std::mem::take(&mut self.model));
        let result = apply_override(&mut tree, &path);
        self.model = tree.as_table().cloned().unwrap_or_default();
        result
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        spec_from_toml(&toml::Value::Table(self.model.clone()))?.validate()
    }

    pub fn grid(&self) -> Result<Vec<Option<f64>>> {
        match &self.sweep {
            Some(s) => Ok(s.grid()?.into_iter().map(Some).collect()),
            None => Ok(vec![None]),
        }
    }

    /// The model of one sweep point.
    pub fn spec_at(&self, value: Option<f64>) -> Result<ModelSpec> {
        let mut spec = self.spec()?;
        if let (Some(s), Some(v)) = (&self.sweep, value) {
            s.apply(&mut spec, v)?;
        }
        spec.validate()
    }

    /// Check everything that can be checked without solving.
    pub fn check(&self) -> Result<()> {
        let spec = self.spec()?;
        for v in self.grid()? {
            self.spec_at(v)?;
        }
        if self.backend == Backend::Dicke && spec.scheme != Scheme::TwoLevel {
            return Err(Error::Scheme(format!(
                "the dicke backend needs the two-level scheme, model is {}",
                spec.scheme.name()
            )));
        }
        match (self.command, self.backend) {
            (Command::G2 | Command::Pulse, Backend::Meanfield) => Err(bad(
                "run.backend",
                format!(
                    "{} needs a density-matrix backend (exact or dicke)",
                    self.command.name()
                ),
            )),
            (Command::DickeMap, b) if b != Backend::Dicke => {
                Err(bad("run.backend", "dicke-map needs the dicke backend"))
            }
            _ => Ok(()),
        }
    }

    fn to_value(&self, resolved: bool) -> toml::Value {
        let mut sweep = self.sweep.clone();
        if resolved {
            if let Some(s) = &mut sweep {
                if let Ok(values) = s.grid() {
                    *s = Sweep {
                        parameter: s.parameter.clone(),
                        values: Some(values),
                        start: None,
                        stop: None,
                        points: None,
                        scale: None,
                    };
                }
            }
        }
        let file = ConfigFile {
            run: RunSection {
                command: self.command,
                backend: self.backend,
                preset: if resolved { None } else { self.preset.clone() },
                version: resolved.then(|| env!("CARGO_PKG_VERSION").to_string()),
            },
            model: Some(self.model.clone()),
            sweep,
            options: self.options.clone(),
        };
        toml::Value::try_from(file).expect("config serializes")
    }

    /// Self-contained TOML: the full model tree, the explicit grid and the
    /// version of this tool. Reading it back reproduces the run.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(&self.to_value(true)).expect("config serializes")
    }
}

fn list(parameter: &str, values: &[f64]) -> Sweep {
    Sweep {
        parameter: parameter.into(),
        values: Some(values.to_vec()),
        start: None,
        stop: None,
        points: None,
        scale: None,
    }
}
