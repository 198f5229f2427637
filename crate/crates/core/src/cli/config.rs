//! Flat `key = value` configuration with per-command schemas.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{QlgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Command {
    Coherence,
    Evolve,
    Kernels,
    Phase,
    Decohere,
    Entangle,
    Constrain,
    Figures,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Coherence,
        Command::Evolve,
        Command::Kernels,
        Command::Phase,
        Command::Decohere,
        Command::Entangle,
        Command::Constrain,
        Command::Figures,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Coherence => "coherence",
            Command::Evolve => "evolve",
            Command::Kernels => "kernels",
            Command::Phase => "phase",
            Command::Decohere => "decohere",
            Command::Entangle => "entangle",
            Command::Constrain => "constrain",
            Command::Figures => "figures",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Command::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                QlgError::Config(format!(
                    "unknown command '{s}' (expected one of: {})",
                    Command::ALL.map(|c| c.name()).join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(QlgError::Config(format!("unknown format '{s}' (expected csv or json)"))),
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Kind {
    Real,
    Positive,
    Count { min: usize },
    Choice(&'static [&'static str]),
    Bool,
    PositiveList,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    /// None marks a required key.
    pub default: Option<&'static str>,
}

const fn k(key: &'static str, kind: Kind, default: &'static str) -> KeySpec {
    KeySpec {
        key,
        kind,
        default: Some(default),
    }
}

const FILTERS: &[&str] = &["gaussian-position", "lorentzian-momentum"];
const CONVENTIONS: &[&str] = &["paper-si", "compton"];
const HBAR_MASS: &str = "1.054571817e-34";

const COHERENCE: &[KeySpec] = &[
    k("x_min", Kind::Real, "-2"),
    k("x_max", Kind::Real, "2"),
    k("n_points", Kind::Count { min: 16 }, "512"),
    k("width", Kind::Positive, "0.05"),
    k("separation", Kind::Positive, "1"),
    k("center", Kind::Real, "0"),
    k("cutoff_length", Kind::Positive, "0.2"),
    k("filter", Kind::Choice(FILTERS), "gaussian-position"),
    k("mass", Kind::Positive, HBAR_MASS),
    k("boost", Kind::Real, "0"),
];

const EVOLVE: &[KeySpec] = &[
    k("model", Kind::Choice(&["free-packet", "two-level"]), "free-packet"),
    k("x_min", Kind::Real, "-5"),
    k("x_max", Kind::Real, "5"),
    k("n_points", Kind::Count { min: 16 }, "512"),
    k("width", Kind::Positive, "0.25"),
    k("center", Kind::Real, "0"),
    k("momentum", Kind::Real, "0"),
    k("mass", Kind::Positive, HBAR_MASS),
    k("duration", Kind::Positive, "1"),
    k("n_snapshots", Kind::Count { min: 2 }, "11"),
    k("gamma", Kind::Positive, "1"),
    k("lambda", Kind::Positive, "1"),
    k("branch_mass", Kind::Positive, "1"),
    k("dt", Kind::Positive, "0.001"),
];

const KERNELS: &[KeySpec] = &[
    k("cutoff_length", Kind::Positive, "1"),
    k("x_max", Kind::Positive, "10"),
    k("n_points", Kind::Count { min: 2 }, "40"),
    k("filter", Kind::Choice(FILTERS), "lorentzian-momentum"),
    k("k_max_ratio", Kind::Positive, "10"),
    k("n_nodes", Kind::Count { min: 64 }, "256"),
    k("regulator", Kind::Positive, "0.05"),
    k("momentum_kernel", Kind::Bool, "false"),
];

const PHASE: &[KeySpec] = &[
    k("mass", Kind::Positive, "1.4e-25"),
    k("time", Kind::Positive, "1"),
    k("geometry_factor", Kind::Real, "1"),
    k("convention", Kind::Choice(CONVENTIONS), "paper-si"),
    k("couplings", Kind::PositiveList, "1e-7,3e-7,1e-6"),
    k("n_visibility", Kind::Count { min: 2 }, "11"),
];

const DECOHERE: &[KeySpec] = &[
    k("sweep", Kind::Choice(&["delta-x", "mass"]), "delta-x"),
    k("coupling", Kind::Positive, "1e-6"),
    k("mass", Kind::Positive, "1e-17"),
    k("gamma0", Kind::Positive, "1e40"),
    k("cutoff_length", Kind::Positive, "1e-7"),
    k("delta_x", Kind::Positive, "1e-6"),
    k("dx_min", Kind::Positive, "1e-9"),
    k("dx_max", Kind::Positive, "1e-5"),
    k("mass_min", Kind::Positive, "1e-18"),
    k("mass_max", Kind::Positive, "1e-15"),
    k("n_points", Kind::Count { min: 2 }, "41"),
    k("lindblad_steps", Kind::Count { min: 1 }, "200"),
];

const ENTANGLE: &[KeySpec] = &[
    k("family", Kind::Choice(&["dephased", "werner", "classical", "all"]), "all"),
    k("n_points", Kind::Count { min: 2 }, "21"),
    k("coupling", Kind::Positive, "1e-6"),
    k("m1", Kind::Positive, "1e-14"),
    k("m2", Kind::Positive, "1e-14"),
    k("separation", Kind::Positive, "1e-4"),
    k("cutoff_length", Kind::Positive, "1e-4"),
];

const CONSTRAIN: &[KeySpec] = &[
    k("lc_min", Kind::Positive, "1e-9"),
    k("lc_max", Kind::Positive, "10"),
    k("n_points", Kind::Count { min: 2 }, "41"),
    k("atom_mass", Kind::Positive, "1.4e-25"),
    k("atom_time", Kind::Positive, "1"),
    k("kappa_max", Kind::Positive, "3e-3"),
    k("convention", Kind::Choice(CONVENTIONS), "paper-si"),
    k("atom_separation", Kind::Real, "0.1"),
    k("geometry_factor", Kind::Real, "1"),
    k("sphere_mass", Kind::Positive, "1e-17"),
    k("delta_x", Kind::Positive, "1e-7"),
    k("gamma_max", Kind::Positive, "1e-2"),
    k("gamma0", Kind::Positive, "1e40"),
    k("m1", Kind::Positive, "1e-14"),
    k("m2", Kind::Positive, "1e-14"),
    k("separation", Kind::Positive, "1e-4"),
    k("energy_sensitivity", Kind::Positive, "1e-30"),
    k("bound_coupling", Kind::Positive, "3e-7"),
];

const FIGURES: &[KeySpec] = &[KeySpec {
    key: "figure",
    kind: Kind::Choice(&["fig2", "fig3a", "fig3b", "fig4", "fig5", "all"]),
    default: None,
}];

pub(crate) fn schema(command: Command) -> &'static [KeySpec] {
    match command {
        Command::Coherence => COHERENCE,
        Command::Evolve => EVOLVE,
        Command::Kernels => KERNELS,
        Command::Phase => PHASE,
        Command::Decohere => DECOHERE,
        Command::Entangle => ENTANGLE,
        Command::Constrain => CONSTRAIN,
        Command::Figures => FIGURES,
    }
}

/// A typed configuration value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Count(usize),
    Text(String),
    Bool(bool),
    List(Vec<f64>),
}

/// Shortest round-trip decimal, switching to exponent form outside
/// [1e-4, 1e15).
pub fn format_float(v: f64) -> String {
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => f.write_str(&format_float(*v)),
            Value::Count(n) => write!(f, "{n}"),
            Value::Text(s) => f.write_str(s),
            Value::Bool(b) => write!(f, "{b}"),
            Value::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| format_float(*x)).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

fn parse_finite(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn parse_value(spec: &KeySpec, raw: &str) -> std::result::Result<Value, String> {
    let raw = raw.trim();
    match spec.kind {
        Kind::Real => parse_finite(raw).map(Value::Num),
        Kind::Positive => {
            let v = parse_finite(raw)?;
            if v > 0.0 {
                Ok(Value::Num(v))
            } else {
                Err(format!("'{raw}' must be positive"))
            }
        }
        Kind::Count { min } => {
            let n: usize = raw.parse().map_err(|_| format!("'{raw}' is not a nonnegative integer"))?;
            if n >= min {
                Ok(Value::Count(n))
            } else {
                Err(format!("{n} is below the minimum {min}"))
            }
        }
        Kind::Choice(options) => {
            if options.contains(&raw) {
                Ok(Value::Text(raw.to_string()))
            } else {
                Err(format!("'{raw}' is not one of {}", options.join(", ")))
            }
        }
        Kind::Bool => match raw {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("'{raw}' is not true or false")),
        },
        Kind::PositiveList => {
            let v = raw
                .split(',')
                .map(parse_finite)
                .collect::<std::result::Result<Vec<f64>, String>>()?;
            if v.iter().all(|x| *x > 0.0) {
                Ok(Value::List(v))
            } else {
                Err(format!("'{raw}' must contain positive numbers only"))
            }
        }
    }
}

/// Fully resolved, validated configuration for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, Value>,
    /// Where each value came from: `default`, `<source>:<line>` or `--set`.
    pub provenance: BTreeMap<String, String>,
}

impl RunConfig {
    fn get(&self, key: &str) -> &Value {
        self.params
            .get(key)
            .unwrap_or_else(|| panic!("key '{key}' is not in the {} schema", self.command.name()))
    }

    pub fn num(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Num(v) => *v,
            other => panic!("key '{key}' holds {other:?}, not a number"),
        }
    }

    pub fn count(&self, key: &str) -> usize {
        match self.get(key) {
            Value::Count(n) => *n,
            other => panic!("key '{key}' holds {other:?}, not a count"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Text(s) => s,
            other => panic!("key '{key}' holds {other:?}, not text"),
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        match self.get(key) {
            Value::Bool(b) => *b,
            other => panic!("key '{key}' holds {other:?}, not a boolean"),
        }
    }

    pub fn list(&self, key: &str) -> &[f64] {
        match self.get(key) {
            Value::List(v) => v,
            other => panic!("key '{key}' holds {other:?}, not a list"),
        }
    }

    /// Canonical `key = value` text; parsing it yields the same params.
    pub fn to_config_text(&self) -> String {
        let mut out = format!("# {}\n", self.command.name());
        for (k, v) in &self.params {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// A copy with different values for some keys, validated against the schema.
    pub fn with(&self, overrides: &[(&str, &str)]) -> Result<RunConfig> {
        let sets: Vec<String> = overrides.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let base = self.to_config_text();
        parse_config(self.command.name(), &base, "base", &sets)
    }
}

fn split_line(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    Some((k.trim(), v.trim()))
}

/// Parses file contents and `--set key=value` overrides for `command`.
///
/// Unknown keys, malformed lines, unparseable values, duplicate keys in the
/// file (both lines are named) and conflicting duplicate overrides are errors.
/// Overrides win over file values; keys absent from both take the schema
/// default, and a key without a default must be supplied.
pub fn parse_config(command: &str, contents: &str, source: &str, overrides: &[String]) -> Result<RunConfig> {
    let command = Command::parse(command)?;
    let schema = schema(command);
    let lookup = |key: &str, origin: &str| -> Result<&KeySpec> {
        schema.iter().find(|s| s.key == key).ok_or_else(|| {
            QlgError::Config(format!(
                "{origin}: unknown key '{key}' for command '{}' (known keys: {})",
                command.name(),
                schema.iter().map(|s| s.key).collect::<Vec<_>>().join(", ")
            ))
        })
    };

    let mut raw: BTreeMap<String, (String, String)> = BTreeMap::new();
    for (n, line) in contents.lines().enumerate() {
        let origin = format!("{source}:{}", n + 1);
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let (key, value) = split_line(text)
            .ok_or_else(|| QlgError::Config(format!("{origin}: expected 'key = value', got '{text}'")))?;
        lookup(key, &origin)?;
        if let Some((_, first)) = raw.get(key) {
            return Err(QlgError::Config(format!(
                "duplicate key '{key}' at {first} and {origin}"
            )));
        }
        raw.insert(key.to_string(), (value.to_string(), origin));
    }

    let mut flagged: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (i, item) in overrides.iter().enumerate() {
        let origin = format!("--set #{}", i + 1);
        let (key, value) = split_line(item)
            .ok_or_else(|| QlgError::Config(format!("{origin}: expected key=value, got '{item}'")))?;
        lookup(key, &origin)?;
        if let Some((prev, j)) = flagged.get(key) {
            if prev != value {
                return Err(QlgError::Config(format!(
                    "conflicting overrides for '{key}' at --set #{j} and {origin}"
                )));
            }
        }
        flagged.insert(key.to_string(), (value.to_string(), i + 1));
    }
    for (key, (value, _)) in flagged {
        raw.insert(key.clone(), (value, format!("--set {key}")));
    }

    let mut params = BTreeMap::new();
    let mut provenance = BTreeMap::new();
    for spec in schema {
        let (value, origin) = match raw.remove(spec.key) {
            Some(v) => v,
            None => match spec.default {
                Some(d) => (d.to_string(), "default".to_string()),
                None => {
                    return Err(QlgError::Config(format!(
                        "missing required key '{}' for command '{}'",
                        spec.key,
                        command.name()
                    )))
                }
            },
        };
        let parsed = parse_value(spec, &value)
            .map_err(|e| QlgError::Config(format!("{origin}: key '{}': {e}", spec.key)))?;
        params.insert(spec.key.to_string(), parsed);
        provenance.insert(spec.key.to_string(), origin);
    }
    Ok(RunConfig {
        command,
        params,
        provenance,
    })
}
