use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{
    BlockDiagram, BlockTemplate, Bus, Channel, EEArchitecture, HardwareTemplate, LabelSpec, Path,
    Redundancy, Scenario, ScenarioError, Task, TaskSpec,
};
use crate::dft::{RateExpr, RawLabelExpr};

/// A rate given as a number or as an expression over parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rate {
    Number(f64),
    Expr(String),
}

impl Rate {
    fn to_expr(&self) -> Result<RateExpr, ScenarioError> {
        match self {
            Rate::Number(v) => Ok(RateExpr::constant(*v)),
            Rate::Expr(s) => Ok(RateExpr::parse(s)?),
        }
    }
}

impl From<f64> for Rate {
    fn from(v: f64) -> Self {
        Rate::Number(v)
    }
}

impl From<&str> for Rate {
    fn from(s: &str) -> Self {
        Rate::Expr(s.to_string())
    }
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

fn default_top() -> String {
    "system".into()
}

/// The human-editable scenario file (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    #[serde(default = "default_top")]
    pub top: String,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub parameters: IndexMap<String, f64>,
    /// `name = "predicate"`, e.g. `degraded = "failed(planning.n-path)"`.
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub labels: IndexMap<String, String>,
    pub blocks: IndexMap<String, BlockEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub channels: Vec<ChannelEntry>,
    pub tasks: Vec<TaskEntry>,
    pub architecture: ArchitectureEntry,
    pub assignment: AssignmentEntry,
    #[serde(default)]
    pub hardware: IndexMap<String, HardwareEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateName {
    #[default]
    Standard,
    Voter,
    Switch,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    #[serde(default, skip_serializing_if = "is_default")]
    pub template: TemplateName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intern: Option<Rate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switching: Option<Rate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragment: Option<String>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub inputs: IndexMap<String, String>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub outputs: IndexMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardware: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    /// Defaults to `<from>-<to>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "is_default")]
    pub mode: Redundancy,
    pub paths: Vec<PathEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathEntry {
    pub name: String,
    pub blocks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureEntry {
    pub platforms: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buses: Vec<BusEntry>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusEntry {
    pub name: String,
    /// Platforms that can all talk to each other.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub connects: Vec<String>,
    /// Additional directed (from, to) pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentEntry {
    pub blocks: IndexMap<String, String>,
    /// Channel → bus, for channels the buses do not determine uniquely.
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub channels: IndexMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HardwareKind {
    Infallible,
    Basic,
    Covered,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareEntry {
    pub kind: HardwareKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<Rate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dormancy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient: Option<Rate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permanent: Option<Rate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient_coverage: Option<Rate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permanent_coverage: Option<Rate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_mechanism: Option<Rate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragment: Option<String>,
}

impl HardwareEntry {
    pub fn infallible() -> Self {
        Self::of_kind(HardwareKind::Infallible)
    }

    pub fn basic(rate: impl Into<Rate>) -> Self {
        HardwareEntry {
            rate: Some(rate.into()),
            ..Self::of_kind(HardwareKind::Basic)
        }
    }

    /// Same coverage for both fault classes.
    pub fn covered(transient: f64, permanent: f64, coverage: f64, safety_mechanism: f64) -> Self {
        HardwareEntry {
            transient: Some(transient.into()),
            permanent: Some(permanent.into()),
            transient_coverage: Some(coverage.into()),
            permanent_coverage: Some(coverage.into()),
            safety_mechanism: Some(safety_mechanism.into()),
            ..Self::of_kind(HardwareKind::Covered)
        }
    }

    pub fn with_dormancy(mut self, dormancy: f64) -> Self {
        self.dormancy = Some(dormancy);
        self
    }

    fn of_kind(kind: HardwareKind) -> Self {
        HardwareEntry {
            kind,
            rate: None,
            dormancy: None,
            transient: None,
            permanent: None,
            transient_coverage: None,
            permanent_coverage: None,
            safety_mechanism: None,
            fragment: None,
        }
    }

    fn to_template(&self, id: &str) -> Result<HardwareTemplate, ScenarioError> {
        let need = |field: &Option<Rate>, name: &str| -> Result<RateExpr, ScenarioError> {
            field
                .as_ref()
                .ok_or_else(|| ScenarioError::Document(format!("hardware `{id}` needs `{name}`")))?
                .to_expr()
        };
        let dormancy = self.dormancy.unwrap_or(1.0);
        Ok(match self.kind {
            HardwareKind::Infallible => HardwareTemplate::Infallible,
            HardwareKind::Basic => HardwareTemplate::Basic {
                rate: need(&self.rate, "rate")?,
                dormancy,
            },
            HardwareKind::Covered => HardwareTemplate::Covered {
                transient: need(&self.transient, "transient")?,
                permanent: need(&self.permanent, "permanent")?,
                transient_coverage: need(&self.transient_coverage, "transient_coverage")?,
                permanent_coverage: need(&self.permanent_coverage, "permanent_coverage")?,
                safety_mechanism: need(&self.safety_mechanism, "safety_mechanism")?,
                dormancy,
            },
            HardwareKind::Custom => HardwareTemplate::Custom {
                fragment: self.fragment.clone().ok_or_else(|| {
                    ScenarioError::Document(format!("hardware `{id}` needs `fragment`"))
                })?,
            },
        })
    }
}

fn coverage_check(name: &str, t: &HardwareTemplate) -> Result<(), ScenarioError> {
    if let HardwareTemplate::Covered {
        transient_coverage,
        permanent_coverage,
        ..
    } = t
    {
        for c in [transient_coverage, permanent_coverage] {
            if let Some(v) = c.as_constant() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(ScenarioError::Document(format!(
                        "hardware `{name}`: coverage {v} outside [0, 1]"
                    )));
                }
            }
        }
    }
    Ok(())
}

impl BlockEntry {
    fn to_template(&self, name: &str) -> Result<BlockTemplate, ScenarioError> {
        let rate = |r: &Option<Rate>| r.as_ref().map_or(Ok(RateExpr::zero()), Rate::to_expr);
        let intern = rate(&self.intern)?;
        let unexpected = |field: &str| {
            Err(ScenarioError::Document(format!(
                "block `{name}`: `{field}` does not apply to its template"
            )))
        };
        let custom_fields = self.fragment.is_some()
            || !self.inputs.is_empty()
            || !self.outputs.is_empty()
            || self.hardware.is_some();
        if self.template != TemplateName::Custom && custom_fields {
            return unexpected("fragment");
        }
        if self.template != TemplateName::Voter && self.threshold.is_some() {
            return unexpected("threshold");
        }
        if self.template != TemplateName::Switch && (self.switching.is_some() || self.primary.is_some()) {
            return unexpected("switching");
        }
        Ok(match self.template {
            TemplateName::Standard => BlockTemplate::Standard { intern },
            TemplateName::Voter => BlockTemplate::Voter {
                intern,
                threshold: self.threshold,
            },
            TemplateName::Switch => BlockTemplate::Switch {
                intern,
                switching: rate(&self.switching)?,
                primary: self.primary.clone(),
            },
            TemplateName::Custom => {
                if self.intern.is_some() {
                    return unexpected("intern");
                }
                BlockTemplate::Custom {
                    fragment: self.fragment.clone().ok_or_else(|| {
                        ScenarioError::Document(format!("block `{name}` needs `fragment`"))
                    })?,
                    inputs: self.inputs.clone(),
                    outputs: self.outputs.clone(),
                    hardware: self.hardware.clone().ok_or_else(|| {
                        ScenarioError::Document(format!("block `{name}` needs `hardware`"))
                    })?,
                }
            }
        })
    }
}

impl ScenarioDocument {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Document(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario documents always serialize")
    }

    /// Resolves templates, rates and label predicates.
    pub fn to_scenario(&self) -> Result<Scenario, ScenarioError> {
        let mut blocks = IndexMap::new();
        for (name, entry) in &self.blocks {
            blocks.insert(name.clone(), entry.to_template(name)?);
        }
        let mut channels: Vec<Channel> = Vec::new();
        for c in &self.channels {
            let name = c.name.clone().unwrap_or_else(|| format!("{}-{}", c.from, c.to));
            if channels.iter().any(|x| x.name == name) {
                return Err(ScenarioError::Document(format!("channel `{name}` is declared twice")));
            }
            channels.push(Channel {
                name,
                source: c.from.clone(),
                target: c.to.clone(),
            });
        }
        let tasks = TaskSpec {
            top: self.top.clone(),
            tasks: self
                .tasks
                .iter()
                .map(|t| Task {
                    name: t.name.clone(),
                    redundancy: t.mode,
                    paths: t
                        .paths
                        .iter()
                        .map(|p| Path {
                            name: p.name.clone(),
                            blocks: p.blocks.clone(),
                        })
                        .collect(),
                })
                .collect(),
        };
        let buses = self
            .architecture
            .buses
            .iter()
            .map(|b| {
                let mut bus = Bus::complete(&b.name, &b.connects);
                bus.relation.extend(b.pairs.iter().cloned());
                bus
            })
            .collect();
        let mut hardware = IndexMap::new();
        for (name, entry) in &self.hardware {
            let t = entry.to_template(name)?;
            coverage_check(name, &t)?;
            hardware.insert(name.clone(), t);
        }
        let mut labels = Vec::new();
        for (name, text) in &self.labels {
            let expr = RawLabelExpr::parse(text).map_err(|(at, message)| ScenarioError::Label {
                name: name.clone(),
                message: format!("at offset {at}: {message}"),
            })?;
            labels.push(LabelSpec {
                name: name.clone(),
                expr,
            });
        }
        Ok(Scenario {
            diagram: BlockDiagram { blocks, channels },
            tasks,
            architecture: EEArchitecture {
                platforms: self.architecture.platforms.clone(),
                buses,
            },
            block_map: self.assignment.blocks.clone(),
            channel_map: self.assignment.channels.clone(),
            hardware,
            labels,
            parameters: self.parameters.clone(),
        })
    }
}

/// Parses a TOML scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    ScenarioDocument::from_toml(text)?.to_scenario()
}
