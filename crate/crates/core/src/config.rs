//! Experiment configuration: one JSON document, optionally patched by dotted
//! `key=value` overrides before it is typed.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::concavify::GridSpec;
use crate::cost_dist::CostDistribution;
use crate::epic::Branch;
use crate::error::{Error, Result};
use crate::mc::SimConfig;
use crate::model::{Belief, ModelParams, State};
use crate::statics::{Design, FamilyPath, Instruments, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    #[default]
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(default)]
    pub kind: ProtocolKind,
    #[serde(default)]
    pub branch: Branch,
    /// Protocol B only; picked automatically when absent.
    #[serde(default)]
    pub delta0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub n: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: usize,
    pub mu: Belief,
    /// With a state, estimate verification at `(mu, state)`; without, the
    /// sender value at `mu`.
    #[serde(default)]
    pub state: Option<State>,
}

fn one() -> usize {
    1
}

impl SimSection {
    pub fn sim_config(&self) -> Result<SimConfig> {
        SimConfig::new(self.n, self.seed, self.replications)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    #[default]
    Silence,
    Design,
    Usage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub path: FamilyPath,
    #[serde(default)]
    pub kind: SweepKind,
    #[serde(default)]
    pub design: Design,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    /// Rows of the `eval` and `instruments` tables.
    #[serde(default = "default_mu_points")]
    pub mu_points: usize,
}

fn default_mu_points() -> usize {
    101
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            mu_points: default_mu_points(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelParams,
    #[serde(default)]
    pub distribution: Option<CostDistribution>,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub instruments: Option<Instruments>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl Config {
    pub fn from_str_with(text: &str, overrides: &[(String, Value)]) -> Result<Self> {
        let mut doc: Value = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        for (key, value) in overrides {
            set_path(&mut doc, key, value.clone())?;
        }
        serde_path_to_error::deserialize(doc).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path, overrides: &[(String, Value)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_str_with(&text, overrides)
    }

    pub fn distribution(&self) -> Result<&CostDistribution> {
        self.distribution
            .as_ref()
            .ok_or_else(|| Error::config("distribution", "missing section"))
    }

    pub fn sim(&self) -> Result<&SimSection> {
        self.sim.as_ref().ok_or_else(|| Error::config("sim", "missing section"))
    }

    pub fn instruments(&self) -> Result<&Instruments> {
        self.instruments
            .as_ref()
            .ok_or_else(|| Error::config("instruments", "missing section"))
    }

    pub fn sweep_spec(&self) -> Result<(SweepSpec, SweepKind)> {
        let s = self.sweep.as_ref().ok_or_else(|| Error::config("sweep", "missing section"))?;
        let spec = SweepSpec {
            family: s.path.clone(),
            model: self.model,
            design: s.design,
            instruments: self.instruments.clone(),
            grid: self.grid,
            branch: self.protocol.branch,
        };
        Ok((spec, s.kind))
    }
}

/// Splits `a.b.c=value`; the value is JSON when it parses, a string otherwise.
pub fn parse_override(raw: &str) -> Result<(String, Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| Error::config(raw, "override must look like key=value"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::config(raw, "empty path segment"));
    }
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((key.to_string(), value))
}

/// Writes `value` at a dotted path, creating objects on the way.
pub fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = doc;
    for seg in key.split('.') {
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        let Value::Object(map) = node else {
            return Err(Error::config(key, format!("`{seg}` is inside a non-object")));
        };
        node = map.entry(seg.to_string()).or_insert(Value::Null);
    }
    *node = value;
    Ok(())
}
