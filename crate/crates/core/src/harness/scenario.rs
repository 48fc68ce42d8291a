use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actors::{DeviceBehavior, RelayBehavior};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("no builtin scenario named {0:?}")]
    UnknownBuiltin(String),
}

/// Everything a run depends on. Same scenario and seed, same transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub seed: u64,
    #[serde(default)]
    pub actors: ActorsConfig,
    #[serde(default)]
    pub traffic: TrafficConfig,
    #[serde(default)]
    pub economics: EconomicsConfig,
    #[serde(default)]
    pub timing: TimingConfig,
    #[serde(default)]
    pub gas: GasConfig,
    #[serde(default)]
    pub expect: Expect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActorsConfig {
    pub relay: String,
    pub device: String,
    /// `command_grammar` or `accept_all`.
    pub predicate: String,
    /// Covered packets the device holds while waiting for cover keys.
    pub window: usize,
}

impl Default for ActorsConfig {
    fn default() -> Self {
        ActorsConfig {
            relay: "honest".into(),
            device: "honest".into(),
            predicate: "command_grammar".into(),
            window: 4,
        }
    }
}

impl ActorsConfig {
    pub fn relay_behavior(&self) -> Result<RelayBehavior, ScenarioError> {
        self.relay.parse().map_err(|e| ScenarioError::Invalid(format!("{e}")))
    }

    pub fn device_behavior(&self) -> Result<DeviceBehavior, ScenarioError> {
        self.device.parse().map_err(|e| ScenarioError::Invalid(format!("{e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Stop after both registrations.
    Registration,
    /// Stop after the service is confirmed.
    Commission,
    /// Traffic, settlement, arbitration and teardown.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadClass {
    /// `CMD ` followed by printable ASCII.
    Command,
    /// Uniform random bytes.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficConfig {
    pub packets: u64,
    pub min_size: usize,
    pub max_size: usize,
    pub payload: PayloadClass,
    pub commitment_len: usize,
    /// Relay cashes out after every this many packets; 0 means only at the end.
    pub settle_every: u64,
    pub stop_after: Phase,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            packets: 100,
            min_size: 40,
            max_size: 200,
            payload: PayloadClass::Command,
            commitment_len: 32,
            settle_every: 0,
            stop_after: Phase::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EconomicsConfig {
    pub price: u64,
    pub deposit: u64,
    pub min_deposit: u64,
    pub prepaid: u64,
    pub fund_device: u64,
    pub fund_controller: u64,
    pub fund_relay: u64,
}

impl Default for EconomicsConfig {
    fn default() -> Self {
        EconomicsConfig {
            price: 2,
            deposit: 1_000_000,
            min_deposit: 1_000_000,
            prepaid: 50_000,
            fund_device: 100_000,
            fund_controller: 1_000,
            fund_relay: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    pub grace_period: u64,
    pub billing_window: u64,
    /// Blocks mined between consecutive packets.
    pub blocks_per_packet: u64,
    /// Whether the device decommissions after traffic ends.
    pub decommission: bool,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            grace_period: 10,
            billing_window: 10,
            blocks_per_packet: 1,
            decommission: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GasConfig {
    /// TOML gas table; relative paths resolve against the scenario file.
    pub table: Option<PathBuf>,
}

/// Expected end state. Unset fields are not checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Expect {
    pub relay_revenue: Option<u64>,
    pub device_refund: Option<u64>,
    pub penalty: Option<u64>,
    pub server_registered: Option<bool>,
    pub reselect_blocked: Option<bool>,
    pub reports_filed: Option<u64>,
    pub rebutted: Option<u64>,
    pub delivered: Option<u64>,
    pub min_withheld: Option<u64>,
    pub total_gas: Option<u64>,
    pub commit_gas: Option<u64>,
    pub relay_balance_delta: Option<i64>,
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(s).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Loads a file, resolving a relative gas table path against its directory.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut scenario = Scenario::from_toml_str(&text)?;
        if let (Some(table), Some(dir)) = (&scenario.gas.table, path.parent()) {
            if table.is_relative() {
                scenario.gas.table = Some(dir.join(table));
            }
        }
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        self.actors.relay_behavior()?;
        self.actors.device_behavior()?;
        if !matches!(self.actors.predicate.as_str(), "command_grammar" | "accept_all") {
            return bad("predicate must be command_grammar or accept_all");
        }
        if self.actors.window == 0 {
            return bad("window must be at least 1");
        }
        let t = &self.traffic;
        if t.min_size == 0 || t.min_size > t.max_size {
            return bad("packet sizes must satisfy 1 <= min_size <= max_size");
        }
        if t.payload == PayloadClass::Command && t.min_size <= crate::actors::COMMAND_PREFIX.len() {
            return bad("command payloads need min_size above the prefix length");
        }
        if t.commitment_len == 0 {
            return bad("commitment_len must be at least 1");
        }
        if self.economics.price == 0 {
            return bad("price must be positive");
        }
        Ok(())
    }
}

const BUILTIN_SOURCES: &[(&str, &str)] = &[
    ("honest", include_str!("../../scenarios/honest.toml")),
    ("registration_only", include_str!("../../scenarios/registration_only.toml")),
    ("commit_cycle", include_str!("../../scenarios/commit_cycle.toml")),
    ("malicious_relay_inject", include_str!("../../scenarios/malicious_relay_inject.toml")),
    ("malicious_reporting", include_str!("../../scenarios/malicious_reporting.toml")),
    ("cheat_user", include_str!("../../scenarios/cheat_user.toml")),
    ("tamper", include_str!("../../scenarios/tamper.toml")),
    ("withhold_pn", include_str!("../../scenarios/withhold_pn.toml")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN_SOURCES.iter().map(|(n, _)| *n)
}

pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    let (_, src) = BUILTIN_SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| ScenarioError::UnknownBuiltin(name.to_string()))?;
    Scenario::from_toml_str(src)
}

pub fn builtins() -> Vec<Scenario> {
    builtin_names().map(|n| builtin(n).expect("builtin scenarios parse")).collect()
}
