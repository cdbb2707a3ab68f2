//! Scenario configuration: per-scenario defaults, TOML files, and
//! `dotted.key=value` overrides.
//!
//! Resolution order: built-in defaults for the scenario, then the file, then
//! overrides in command-line order. A bare key that names a protocol knob
//! (`omega_p=9999`) is shorthand for `protocol.omega_p=9999`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::fit::{FitForm, FitWindow};
use crate::error::{Error, Result};
use crate::lindblad::Method;
use crate::models::{ProtocolKnobs, SystemParams};
use crate::par::ExecPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    Fig3,
    Fig4Sweep,
    Fig6Compare,
    Saturation,
    SelectRate,
    SymRate,
    Custom,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 7] = [
        ScenarioId::Fig3,
        ScenarioId::Fig4Sweep,
        ScenarioId::Fig6Compare,
        ScenarioId::Saturation,
        ScenarioId::SelectRate,
        ScenarioId::SymRate,
        ScenarioId::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Fig3 => "fig3",
            ScenarioId::Fig4Sweep => "fig4_sweep",
            ScenarioId::Fig6Compare => "fig6_compare",
            ScenarioId::Saturation => "saturation",
            ScenarioId::SelectRate => "select_rate",
            ScenarioId::SymRate => "sym_rate",
            ScenarioId::Custom => "custom",
        }
    }

    /// Figure or quantity that the scenario reproduces.
    pub fn anchor(self) -> &'static str {
        match self {
            ScenarioId::Fig3 => "Fig. 3: single-qubit correction, full vs reduced model",
            ScenarioId::Fig4Sweep => "Fig. 4: three-resonator protocol over a pump-rate sweep",
            ScenarioId::Fig6Compare => {
                "Fig. 6: single-resonator vs three-resonator vs uncorrected"
            }
            ScenarioId::Saturation => "Fig. 4: saturation of the correction rate near kappa",
            ScenarioId::SelectRate => "selectivity dephasing rate Gamma_select",
            ScenarioId::SymRate => "asymmetry dephasing rate Gamma_sym",
            ScenarioId::Custom => "user-defined model and initial state",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = ScenarioId::ALL.iter().map(|i| i.name()).collect();
                Error::Config(format!("unknown scenario '{s}' (known: {})", known.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SingleQubitFull,
    SingleQubitReduced,
    ThreeQubitReduced,
    ThreeResonator,
    SingleResonator,
    BitflipOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialState {
    /// `(|000> - i|111>)/sqrt(2)`, resonators in vacuum.
    #[serde(rename = "logical")]
    Logical,
    /// `sigma_x^1` applied to the logical state.
    #[serde(rename = "corrupted_1")]
    Corrupted1,
    #[serde(rename = "corrupted_2")]
    Corrupted2,
    #[serde(rename = "corrupted_3")]
    Corrupted3,
    /// Equal mixture of the three corrupted states.
    #[serde(rename = "corrupted_mixture")]
    CorruptedMixture,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensation {
    /// Phase taken from a matched run with all flip rates set to zero.
    Reference,
    /// Per-time maximum over the phase; an upper bound.
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    /// Simulated time, in units of `1/gamma_x` (of `1/kappa` for fig3).
    pub horizon: f64,
    /// Output rows are written every `horizon / steps`.
    pub steps: usize,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internal_dt: Option<f64>,
    #[serde(default)]
    pub exec: ExecPolicy,
    pub model: ModelKind,
    pub initial_state: InitialState,
    pub compensation: Compensation,
    #[serde(default)]
    pub protocol: ProtocolKnobs,
    /// Full parameter set; replaces `protocol` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SystemParams>,
    /// Resonator truncation for single-resonator runs.
    pub n_levels_single: usize,
    /// Config key swept by the sweep scenarios.
    pub sweep_key: String,
    pub sweep_values: Vec<f64>,
    /// Horizon of the recovery runs used for rate fits; a rule based on the
    /// predicted correction rate applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery_horizon: Option<f64>,
    pub recovery_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_form: Option<FitForm>,
    #[serde(default)]
    pub fit_window: FitWindow,
    #[serde(default)]
    pub allow_invalid_params: bool,
}

/// Default pump-rate sweep. The published figure does not list its values;
/// this grid spans the pre-saturation and saturation regimes around kappa.
pub const DEFAULT_SWEEP: [f64; 6] = [50.0, 100.0, 200.0, 300.0, 400.0, 500.0];

impl ScenarioConfig {
    pub fn defaults(id: ScenarioId) -> Self {
        let mut cfg = Self {
            scenario: id,
            horizon: 3.0,
            steps: 600,
            method: Method::ExpmStep,
            internal_dt: None,
            exec: ExecPolicy::default(),
            model: ModelKind::ThreeResonator,
            initial_state: InitialState::Logical,
            compensation: Compensation::Reference,
            protocol: ProtocolKnobs::default(),
            params: None,
            n_levels_single: 3,
            sweep_key: "protocol.omega_p".into(),
            sweep_values: DEFAULT_SWEEP.to_vec(),
            recovery_horizon: None,
            recovery_steps: 400,
            fit_form: None,
            fit_window: FitWindow::default(),
            allow_invalid_params: false,
        };
        match id {
            ScenarioId::Fig3 => {
                cfg.horizon = 60.0;
                cfg.steps = 400;
                cfg.model = ModelKind::SingleQubitFull;
                cfg.initial_state = InitialState::Corrupted1;
                cfg.protocol = ProtocolKnobs {
                    kappa: 1.0,
                    gamma_x: 0.0,
                    omega_p: 0.3,
                    chi_row: Some([-20.0, 10.0, 10.0]),
                    n_levels: 3,
                    ..ProtocolKnobs::default()
                };
                cfg.fit_form = Some(FitForm::Rise);
            }
            ScenarioId::Fig4Sweep | ScenarioId::Saturation => {
                cfg.fit_form = Some(FitForm::Rise);
            }
            ScenarioId::Fig6Compare => {
                cfg.model = ModelKind::SingleResonator;
                cfg.recovery_horizon = Some(0.3);
                cfg.recovery_steps = 600;
                cfg.fit_form = Some(FitForm::Rise);
            }
            ScenarioId::SelectRate => {
                cfg.protocol.gamma_x = 0.0;
                cfg.fit_form = Some(FitForm::Decay);
            }
            ScenarioId::SymRate => {
                cfg.protocol.asymmetry = 5.0;
                cfg.fit_form = Some(FitForm::Decay);
            }
            ScenarioId::Custom => {}
        }
        cfg
    }

    /// Parameters in effect: `params` if given, else generated from `protocol`.
    pub fn system_params(&self) -> SystemParams {
        self.params.clone().unwrap_or_else(|| self.protocol.to_params())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Config(format!("horizon = {} must be positive", self.horizon)));
        }
        if self.steps == 0 || self.recovery_steps == 0 {
            return Err(Error::Config("steps and recovery_steps must be positive".into()));
        }
        if let Some(h) = self.recovery_horizon {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::Config(format!("recovery_horizon = {h} must be positive")));
            }
        }
        if self.n_levels_single < 2 {
            return Err(Error::Config("n_levels_single must be at least 2".into()));
        }
        if !(self.fit_window.lo < self.fit_window.hi) {
            return Err(Error::Config("fit_window.lo must be below fit_window.hi".into()));
        }
        let sweeps = matches!(self.scenario, ScenarioId::Fig4Sweep | ScenarioId::Saturation);
        if sweeps && self.sweep_values.is_empty() {
            return Err(Error::Config("sweep_values must not be empty".into()));
        }
        self.system_params()
            .check()
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// A copy with one dotted key replaced.
    pub fn with_override(&self, key: &str, value: Value) -> Result<Self> {
        let mut table = to_table(self)?;
        set_path(&mut table, &resolve_key(key), value)?;
        from_table(table)
    }
}

const PROTOCOL_KEYS: [&str; 10] = [
    "kappa",
    "gamma_x",
    "omega_p",
    "chi_ratio",
    "chi_row",
    "kerr_ratio",
    "asymmetry",
    "n_levels",
    "g12",
    "g23",
];

fn resolve_key(key: &str) -> Vec<String> {
    let parts: Vec<String> = key.split('.').map(|s| s.trim().to_string()).collect();
    if parts.len() == 1 && PROTOCOL_KEYS.contains(&parts[0].as_str()) {
        return vec!["protocol".into(), parts[0].clone()];
    }
    parts
}

fn to_table(cfg: &ScenarioConfig) -> Result<Table> {
    match Value::try_from(cfg) {
        Ok(Value::Table(t)) => Ok(t),
        Ok(_) => Err(Error::Config("configuration did not serialize to a table".into())),
        Err(e) => Err(Error::Config(e.to_string())),
    }
}

fn from_table(table: Table) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn set_path(table: &mut Table, path: &[String], value: Value) -> Result<()> {
    let (last, parents) = path
        .split_last()
        .ok_or_else(|| Error::Config("empty override key".into()))?;
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed key '{}'", path.join("."))));
    }
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.clone())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| {
            Error::Config(format!("'{p}' in '{}' is not a table", path.join(".")))
        })?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses `key=value`; the value is read as a TOML literal, falling back to
/// a plain string.
pub fn parse_override(raw: &str) -> Result<(String, Value)> {
    let (key, rhs) = raw
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{raw}' is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override '{raw}' has an empty key")));
    }
    let rhs = rhs.trim();
    let value = match format!("v = {rhs}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(rhs.to_string()),
    };
    Ok((key.to_string(), value))
}

/// Resolves a configuration from defaults, an optional file and overrides.
/// The scenario comes from `scenario`, else an override, else the file,
/// else `custom`.
pub fn load_config(
    scenario: Option<ScenarioId>,
    path: Option<&Path>,
    overrides: &[String],
) -> Result<ScenarioConfig> {
    let file_table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            text.parse::<Table>()
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => Table::new(),
    };
    let parsed: Vec<(String, Value)> = overrides
        .iter()
        .map(|o| parse_override(o))
        .collect::<Result<_>>()?;

    let from_value = |v: &Value| -> Result<ScenarioId> {
        v.as_str()
            .ok_or_else(|| Error::Config("scenario must be a string".into()))?
            .parse()
    };
    let id = match scenario {
        Some(id) => id,
        None => match parsed.iter().rev().find(|(k, _)| k == "scenario") {
            Some((_, v)) => from_value(v)?,
            None => match file_table.get("scenario") {
                Some(v) => from_value(v)?,
                None => ScenarioId::Custom,
            },
        },
    };

    let mut table = to_table(&ScenarioConfig::defaults(id))?;
    merge(&mut table, file_table);
    for (key, value) in parsed {
        set_path(&mut table, &resolve_key(&key), value)?;
    }
    table.insert("scenario".into(), Value::String(id.name().into()));
    from_table(table)
}
