//! Experiment configs: strict JSON, defaults filled, validated with a field
//! path on error.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qmem::bounds::SearchRanges;
use qmem::clock::MIN_CLOCK_BITS;

use crate::CliError;

pub const DEFAULT_TRIALS: u64 = 100_000;

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}
fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Gnuplot-ready data file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ClockVerify(ClockVerifyConfig),
    DecodeTable(DecodeTableConfig),
    BpCurve(BpCurveConfig),
    MemorySim(MemorySimConfig),
    LifetimeScan(LifetimeScanConfig),
    Ledger(LedgerConfig),
    OracleCheck(OracleCheckConfig),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ClockVerify(_) => "clock-verify",
            Self::DecodeTable(_) => "decode-table",
            Self::BpCurve(_) => "bp-curve",
            Self::MemorySim(_) => "memory-sim",
            Self::LifetimeScan(_) => "lifetime-scan",
            Self::Ledger(_) => "ledger",
            Self::OracleCheck(_) => "oracle-check",
        }
    }

    /// Config of subcommand `name` with every field at its default.
    pub fn default_for(name: &str) -> Option<Self> {
        let empty = serde_json::json!({});
        let v = serde_json::json!({ name: empty });
        serde_json::from_value(v).ok()
    }

    pub fn trials_mut(&mut self) -> Option<&mut u64> {
        match self {
            Self::ClockVerify(c) => Some(&mut c.trials),
            Self::DecodeTable(_) | Self::Ledger(_) => None,
            Self::BpCurve(c) => Some(&mut c.trials),
            Self::MemorySim(c) => Some(&mut c.trials),
            Self::LifetimeScan(c) => Some(&mut c.trials),
            Self::OracleCheck(c) => Some(&mut c.trials),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockVerifyConfig {
    #[serde(default = "ClockVerifyConfig::default_k")]
    pub k_bits: u64,
    #[serde(default = "ClockVerifyConfig::default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub rate: f64,
    #[serde(default = "ClockVerifyConfig::default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Checkpoint spacing; exact sampling when absent and affordable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

impl ClockVerifyConfig {
    fn default_k() -> u64 {
        4096
    }
    fn default_epsilon() -> f64 {
        0.4
    }
    fn default_t_max() -> f64 {
        2.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeTableConfig {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BpCurveConfig {
    #[serde(default = "BpCurveConfig::default_points")]
    pub p: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
}

impl BpCurveConfig {
    fn default_points() -> Vec<f64> {
        (1..=20).map(|i| 0.01 * f64::from(i)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    Unprotected,
    Circuit,
    Clock,
    ClockDeterministic,
}

/// Protocol constants shared by `memory-sim` and `lifetime-scan`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default = "one")]
    pub rate: f64,
    #[serde(default = "ProtocolConfig::default_p_star")]
    pub p_star: f64,
    #[serde(default = "ProtocolConfig::default_c_prot")]
    pub c_prot: f64,
    #[serde(default = "ProtocolConfig::default_c_dec")]
    pub c_dec: f64,
    #[serde(default = "ProtocolConfig::default_c_delta")]
    pub c_delta: f64,
    #[serde(default = "ProtocolConfig::default_epsilon")]
    pub epsilon: f64,
    /// Clock size; sized for `δ/2` accuracy when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_bits: Option<u64>,
}

impl ProtocolConfig {
    fn default_p_star() -> f64 {
        0.01
    }
    fn default_c_prot() -> f64 {
        0.5
    }
    fn default_c_dec() -> f64 {
        0.25
    }
    fn default_c_delta() -> f64 {
        0.05
    }
    fn default_epsilon() -> f64 {
        1.0 / 6.0
    }
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemorySimConfig {
    #[serde(default = "MemorySimConfig::default_strategy")]
    pub strategy: StrategyName,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default = "MemorySimConfig::default_levels")]
    pub levels: u32,
    /// Storage time of the unprotected strategy; the protocols run for
    /// their own schedule length.
    #[serde(default = "one")]
    pub t_max: f64,
    /// Qubits of the unprotected strategy.
    #[serde(default = "MemorySimConfig::default_n")]
    pub n_qubits: usize,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_floor: Option<f64>,
}

impl MemorySimConfig {
    fn default_strategy() -> StrategyName {
        StrategyName::Circuit
    }
    fn default_levels() -> u32 {
        2
    }
    fn default_n() -> usize {
        1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeScanConfig {
    #[serde(default = "MemorySimConfig::default_strategy")]
    pub strategy: StrategyName,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    /// Concatenation levels; the unprotected strategy uses `N = 5^l`.
    #[serde(default = "LifetimeScanConfig::default_levels")]
    pub levels: Vec<u32>,
    #[serde(default = "LifetimeScanConfig::default_floor")]
    pub fidelity_floor: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
}

impl LifetimeScanConfig {
    fn default_levels() -> Vec<u32> {
        vec![1, 2, 3]
    }
    fn default_floor() -> f64 {
        0.99
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerConfig {
    #[serde(default = "one")]
    pub rate: f64,
    #[serde(default = "LedgerConfig::default_p_star")]
    pub p_star: f64,
    #[serde(default = "LedgerConfig::default_d")]
    pub d: u32,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default)]
    pub search: bool,
    #[serde(default = "SearchRanges::default")]
    pub ranges: SearchRanges,
}

impl LedgerConfig {
    fn default_p_star() -> f64 {
        1.0 / 40.0
    }
    fn default_d() -> u32 {
        5
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheckConfig {
    #[serde(default = "one")]
    pub rate: f64,
    #[serde(default = "OracleCheckConfig::default_qubits")]
    pub qubits: Vec<usize>,
    #[serde(default = "OracleCheckConfig::default_times")]
    pub times: Vec<f64>,
    #[serde(default = "OracleCheckConfig::default_trials")]
    pub trials: u64,
    #[serde(default = "OracleCheckConfig::default_dt")]
    pub dt: f64,
    #[serde(default = "OracleCheckConfig::default_tolerance")]
    pub tolerance: f64,
}

impl OracleCheckConfig {
    fn default_qubits() -> Vec<usize> {
        vec![1, 2, 3]
    }
    fn default_times() -> Vec<f64> {
        vec![0.5, 1.0, 2.0]
    }
    /// Enough to resolve the default tolerance over 6^3 probe states.
    fn default_trials() -> u64 {
        1_000_000
    }
    fn default_dt() -> f64 {
        0.01
    }
    fn default_tolerance() -> f64 {
        5e-3
    }
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and non-negative, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and positive, got {v}")))
    }
}

fn trials_at_least_one(field: &str, n: u64) -> Result<(), CliError> {
    if n == 0 {
        Err(invalid(field, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn clock_bits(field: &str, k: u64) -> Result<(), CliError> {
    if k < MIN_CLOCK_BITS {
        Err(invalid(
            field,
            format!("the good-trajectory theorem needs K >= {MIN_CLOCK_BITS}, got {k}"),
        ))
    } else {
        Ok(())
    }
}

impl ProtocolConfig {
    fn validate(&self, path: &str) -> Result<(), CliError> {
        non_negative(&format!("{path}.rate"), self.rate)?;
        for (name, v) in [
            ("p_star", self.p_star),
            ("c_prot", self.c_prot),
            ("c_dec", self.c_dec),
            ("c_delta", self.c_delta),
        ] {
            positive(&format!("{path}.{name}"), v)?;
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(invalid(format!("{path}.epsilon"), "must lie in (0, 1/2)"));
        }
        if let Some(k) = self.k_bits {
            clock_bits(&format!("{path}.k_bits"), k)?;
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let c: Self = serde_json::from_str(text).map_err(CliError::Parse)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let name = self.experiment.name();
        let field = |f: &str| format!("experiment.{name}.{f}");
        match &self.experiment {
            Experiment::ClockVerify(c) => {
                clock_bits(&field("k_bits"), c.k_bits)?;
                if !(c.epsilon > 0.0 && c.epsilon < 0.5) {
                    return Err(invalid(field("epsilon"), "must lie in (0, 1/2)"));
                }
                non_negative(&field("rate"), c.rate)?;
                positive(&field("t_max"), c.t_max)?;
                trials_at_least_one(&field("trials"), c.trials)?;
                if let Some(s) = c.spacing {
                    positive(&field("spacing"), s)?;
                }
            }
            Experiment::DecodeTable(_) => {}
            Experiment::BpCurve(c) => {
                if c.p.is_empty() {
                    return Err(invalid(field("p"), "needs at least one point"));
                }
                for (i, &p) in c.p.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(invalid(field(&format!("p[{i}]")), format!("must lie in [0, 1], got {p}")));
                    }
                }
                trials_at_least_one(&field("trials"), c.trials)?;
            }
            Experiment::MemorySim(c) => {
                c.protocol.validate(&field("protocol"))?;
                if c.levels == 0 {
                    return Err(invalid(field("levels"), "must be at least 1"));
                }
                non_negative(&field("t_max"), c.t_max)?;
                if c.n_qubits == 0 {
                    return Err(invalid(field("n_qubits"), "must be at least 1"));
                }
                trials_at_least_one(&field("trials"), c.trials)?;
                if let Some(f) = c.fidelity_floor {
                    if !(f > 0.5 && f < 1.0) {
                        return Err(invalid(field("fidelity_floor"), "must lie in (1/2, 1)"));
                    }
                }
            }
            Experiment::LifetimeScan(c) => {
                c.protocol.validate(&field("protocol"))?;
                if c.levels.is_empty() || c.levels.contains(&0) {
                    return Err(invalid(field("levels"), "needs levels >= 1"));
                }
                if !(c.fidelity_floor > 0.5 && c.fidelity_floor < 1.0) {
                    return Err(invalid(field("fidelity_floor"), "must lie in (1/2, 1)"));
                }
                trials_at_least_one(&field("trials"), c.trials)?;
            }
            Experiment::Ledger(c) => {
                non_negative(&field("rate"), c.rate)?;
                positive(&field("p_star"), c.p_star)?;
                positive(&field("tau"), c.tau)?;
                if c.d < 2 {
                    return Err(invalid(field("d"), "must be at least 2"));
                }
            }
            Experiment::OracleCheck(c) => {
                non_negative(&field("rate"), c.rate)?;
                for (i, &n) in c.qubits.iter().enumerate() {
                    if !(1..=qmem::oracle::MAX_QUBITS).contains(&n) {
                        return Err(invalid(field(&format!("qubits[{i}]")), format!("must lie in 1..=3, got {n}")));
                    }
                }
                for (i, &t) in c.times.iter().enumerate() {
                    non_negative(&field(&format!("times[{i}]")), t)?;
                }
                positive(&field("dt"), c.dt)?;
                positive(&field("tolerance"), c.tolerance)?;
                trials_at_least_one(&field("trials"), c.trials)?;
            }
        }
        Ok(())
    }
}


#[cfg(test)]
mod round_trip {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn parse_inverts_serialize(
            seed in any::<u64>(),
            trials in 1u64..10_000_000,
            rate in 0.0f64..10.0,
            levels in 1u32..6,
            floor in 0.51f64..0.99,
            k in proptest::option::of(16u64..u64::MAX),
            json in any::<bool>(),
        ) {
            let c = ExperimentConfig {
                experiment: Experiment::MemorySim(MemorySimConfig {
                    strategy: StrategyName::ClockDeterministic,
                    protocol: ProtocolConfig { rate, k_bits: k, ..ProtocolConfig::default() },
                    levels,
                    t_max: rate / 3.0,
                    n_qubits: 5,
                    trials,
                    fidelity_floor: Some(floor),
                }),
                master_seed: seed,
                out: Some("x.csv".into()),
                format: if json { Format::Json } else { Format::Csv },
                plot: None,
            };
            prop_assert_eq!(ExperimentConfig::parse(&c.to_json()).unwrap(), c);
        }
    }
}
