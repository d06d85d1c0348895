//! Synthesis of complete DFTs from a functional block diagram, a task
//! structure, an E/E architecture and a hardware assignment.
//!
//! The result has three layers: the system layer (tasks and redundant
//! paths), the block layer (one block fault tree per block, connected along
//! channels by FDEPs) and the hardware layer (platform and bus fault trees,
//! wired to blocks and channels by FDEPs and to block modules by ADEPs).
//!
//! Naming: block `B` has root `B`, hardware fault `B.hw`, internal fault
//! `B.intern` and one input fault `B.in.<channel>` per incoming channel.
//! Platform and bus fault trees are rooted at the platform or bus name.

mod assemble;
mod document;
pub mod families;
mod templates;

use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dft::{BuildError, DftBuilder, Diagnostic, RateError, RateExpr, RawLabelExpr};
use crate::io::galileo::ParseError;

pub use assemble::{
    assemble_complete, build_system_layer, connect_blocks, derive_channel_assignment, synthesize,
};
pub use document::{
    parse_scenario, ArchitectureEntry, AssignmentEntry, BlockEntry, BusEntry, ChannelEntry,
    HardwareEntry, HardwareKind, PathEntry, Rate, ScenarioDocument, TaskEntry, TemplateName,
};
pub use templates::{block_fault_tree, instantiate_hardware_ft};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("scenario document: {0}")]
    Document(String),
    #[error("block `{0}` has no block fault tree")]
    MissingBlockFT(String),
    #[error("channel `{channel}` does not match the fault tree of block `{block}`")]
    ChannelMismatch { channel: String, block: String },
    #[error("{context} refers to unknown block `{block}`")]
    UnknownBlockReference { context: String, block: String },
    #[error("{context} refers to unknown platform `{platform}`")]
    UnknownPlatform { context: String, platform: String },
    #[error("block `{block}` appears in a standby path of task `{task}` and elsewhere")]
    SpareModuleOverlap { task: String, block: String },
    #[error("bus `{0}` is not a transitive relation")]
    NonTransitiveBus(String),
    #[error("no bus connects `{from}` and `{to}` for channel `{channel}`")]
    NoConnectingBus {
        channel: String,
        from: String,
        to: String,
    },
    #[error("channel `{channel}` can use any of the buses {buses:?}; assign one explicitly")]
    AmbiguousBus { channel: String, buses: Vec<String> },
    #[error("channel `{channel}` is assigned to `{bus}`, which does not connect its platforms")]
    InconsistentAssignment { channel: String, bus: String },
    #[error("`{0}` has no hardware fault tree")]
    MissingHardwareFT(String),
    #[error("block `{block}`: {message}")]
    Template { block: String, message: String },
    #[error("label `{name}`: {message}")]
    Label { name: String, message: String },
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("embedded fault tree: {0}")]
    Fragment(#[from] ParseError),
    #[error("synthesized tree is not well-formed: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub source: String,
    pub target: String,
}

/// Blocks and directed channels; cycles are allowed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockDiagram {
    pub blocks: IndexMap<String, BlockTemplate>,
    pub channels: Vec<Channel>,
}

impl BlockDiagram {
    pub fn inputs<'a>(&'a self, block: &'a str) -> impl Iterator<Item = &'a Channel> + 'a {
        self.channels.iter().filter(move |c| c.target == block)
    }

    pub fn outputs<'a>(&'a self, block: &'a str) -> impl Iterator<Item = &'a Channel> + 'a {
        self.channels.iter().filter(move |c| c.source == block)
    }
}

/// How a block's fault tree is built.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockTemplate {
    /// Fails on a hardware fault, an internal fault or any faulty input.
    Standard { intern: RateExpr },
    /// Like standard, but fails once `threshold` inputs are faulty (majority
    /// by default).
    Voter {
        intern: RateExpr,
        threshold: Option<u32>,
    },
    /// Fails if the switching mechanism fails before the primary input, or
    /// if all inputs are faulty.
    Switch {
        intern: RateExpr,
        switching: RateExpr,
        primary: Option<String>,
    },
    /// A user-supplied fragment in the text format; its top-level element is
    /// the block root. Names are local and get prefixed with the block name.
    Custom {
        fragment: String,
        /// Input channel → local basic event.
        inputs: IndexMap<String, String>,
        /// Output channel → local element; unmapped outputs use the root.
        outputs: IndexMap<String, String>,
        /// Local basic event standing for the hardware fault.
        hardware: String,
    },
}

impl Default for BlockTemplate {
    fn default() -> Self {
        BlockTemplate::Standard {
            intern: RateExpr::zero(),
        }
    }
}

/// A block fault tree with its interface annotations (global names).
#[derive(Debug, Clone)]
pub struct BlockFaultTree {
    pub fragment: DftBuilder,
    pub root: String,
    pub inputs: IndexMap<String, String>,
    pub outputs: IndexMap<String, String>,
    pub hardware: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Redundancy {
    /// The task fails once every path has failed.
    #[default]
    All,
    /// Paths are used one after another (SPARE); later paths stay dormant.
    Standby,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub name: String,
    pub blocks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub name: String,
    pub redundancy: Redundancy,
    pub paths: Vec<Path>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub top: String,
    pub tasks: Vec<Task>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub name: String,
    pub relation: BTreeSet<(String, String)>,
}

impl Bus {
    /// A bus connecting every member with every other (and itself).
    pub fn complete(name: &str, members: &[String]) -> Self {
        let relation = members
            .iter()
            .flat_map(|a| members.iter().map(move |b| (a.clone(), b.clone())))
            .collect();
        Bus {
            name: name.to_string(),
            relation,
        }
    }

    pub fn connects(&self, a: &str, b: &str) -> bool {
        self.relation.contains(&(a.to_string(), b.to_string()))
    }

    pub fn is_transitive(&self) -> bool {
        self.relation.iter().all(|(a, b)| {
            self.relation
                .iter()
                .filter(|(c, _)| c == b)
                .all(|(_, d)| self.relation.contains(&(a.clone(), d.clone())))
        })
    }
}

/// Platforms and buses; every platform implicitly has an internal bus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EEArchitecture {
    pub platforms: Vec<String>,
    pub buses: Vec<Bus>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Route {
    Internal(String),
    Bus(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardwareAssignment {
    pub blocks: IndexMap<String, String>,
    pub channels: IndexMap<String, Route>,
}

/// Fault tree of a platform or bus.
#[derive(Debug, Clone, PartialEq)]
pub enum HardwareTemplate {
    Infallible,
    Basic {
        rate: RateExpr,
        dormancy: f64,
    },
    /// Transient and permanent faults, each split into an uncovered part and
    /// a part covered by a fallible safety mechanism.
    Covered {
        transient: RateExpr,
        permanent: RateExpr,
        transient_coverage: RateExpr,
        permanent_coverage: RateExpr,
        safety_mechanism: RateExpr,
        dormancy: f64,
    },
    /// A fragment in the text format; its top-level element is the root.
    Custom { fragment: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelSpec {
    pub name: String,
    pub expr: RawLabelExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub diagram: BlockDiagram,
    pub tasks: TaskSpec,
    pub architecture: EEArchitecture,
    pub block_map: IndexMap<String, String>,
    /// Explicit channel → bus choices; others are derived.
    pub channel_map: IndexMap<String, String>,
    /// Fault trees by platform or bus name.
    pub hardware: IndexMap<String, HardwareTemplate>,
    pub labels: Vec<LabelSpec>,
    pub parameters: IndexMap<String, f64>,
}
