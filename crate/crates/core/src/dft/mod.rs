//! Dynamic fault trees: element types, construction and semantics.

mod label;
mod rate;
pub mod semantics;
mod validate;

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

pub use label::{LabelExpr, RawLabelExpr};
pub use rate::{BinOp, RateError, RateExpr, Valuation};
pub use semantics::{
    enabled_failures, evaluate_marking, Marking, Scratch, SemanticsError, StateKey, Structure,
};
pub use validate::{validate, Diagnostic, Rule};

/// Dense index of an element inside one [`Dft`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementId(pub u32);

impl ElementId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Name of the predefined label that marks top-level failure.
pub const FAILED_LABEL: &str = "failed";
/// Name of the label the degradation measures look for.
pub const DEGRADED_LABEL: &str = "degraded";

#[derive(Debug, Clone, PartialEq)]
pub struct BasicEvent {
    pub rate: RateExpr,
    /// Factor applied to the rate while the event is not activated.
    pub dormancy: f64,
    pub transient: bool,
    /// Never fails by itself; can still be failed by a functional dependency.
    pub dummy: bool,
}

impl BasicEvent {
    pub fn new(rate: RateExpr) -> Self {
        BasicEvent {
            rate,
            dormancy: 1.0,
            transient: false,
            dummy: false,
        }
    }

    pub fn with_rate(rate: f64) -> Self {
        Self::new(RateExpr::Const(rate))
    }

    pub fn dummy() -> Self {
        BasicEvent {
            rate: RateExpr::zero(),
            dormancy: 1.0,
            transient: false,
            dummy: true,
        }
    }

    pub fn dormancy(mut self, dormancy: f64) -> Self {
        self.dormancy = dormancy;
        self
    }

    pub fn transient(mut self) -> Self {
        self.transient = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    And,
    Or,
    /// Fails once at least `k` children have failed.
    Vot(u32),
    Pand,
    Seq,
    Spare,
}

impl GateKind {
    pub fn is_static(self) -> bool {
        matches!(self, GateKind::And | GateKind::Or | GateKind::Vot(_))
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::And => write!(f, "AND"),
            GateKind::Or => write!(f, "OR"),
            GateKind::Vot(k) => write!(f, "VOT({k})"),
            GateKind::Pand => write!(f, "PAND"),
            GateKind::Seq => write!(f, "SEQ"),
            GateKind::Spare => write!(f, "SPARE"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub children: Vec<ElementId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DependencyKind {
    /// Failure of the trigger fails the dependent basic events.
    Functional,
    /// Activation of the source activates the destinations.
    Activation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dependency {
    pub kind: DependencyKind,
    pub trigger: ElementId,
    pub targets: Vec<ElementId>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Basic(BasicEvent),
    Gate(Gate),
    Dependency(Dependency),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
}

impl Element {
    pub fn as_basic(&self) -> Option<&BasicEvent> {
        match &self.kind {
            ElementKind::Basic(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_gate(&self) -> Option<&Gate> {
        match &self.kind {
            ElementKind::Gate(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_dependency(&self) -> Option<&Dependency> {
        match &self.kind {
            ElementKind::Dependency(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_basic(&self) -> bool {
        matches!(self.kind, ElementKind::Basic(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub name: String,
    pub expr: LabelExpr,
}

/// A dynamic fault tree with resolved references.
///
/// Construct through [`DftBuilder`]; structural rules beyond reference
/// resolution are checked by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dft {
    elements: Vec<Element>,
    index: HashMap<String, ElementId>,
    top: ElementId,
    parameters: IndexMap<String, f64>,
    labels: Vec<Label>,
}

impl Dft {
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn top(&self) -> ElementId {
        self.top
    }

    pub fn element(&self, id: ElementId) -> &Element {
        &self.elements[id.index()]
    }

    pub fn name(&self, id: ElementId) -> &str {
        &self.elements[id.index()].name
    }

    pub fn id(&self, name: &str) -> Option<ElementId> {
        self.index.get(name).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = ElementId> + '_ {
        (0..self.elements.len() as u32).map(ElementId)
    }

    pub fn basic_events(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.ids().filter(|&id| self.element(id).is_basic())
    }

    pub fn parameters(&self) -> &IndexMap<String, f64> {
        &self.parameters
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<&Label> {
        self.labels.iter().find(|l| l.name == name)
    }

    /// Declared parameter defaults, overridden by `overrides`.
    pub fn valuation(&self, overrides: &Valuation) -> Valuation {
        let mut v: Valuation = self
            .parameters
            .iter()
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        for (k, x) in overrides {
            v.insert(k.clone(), *x);
        }
        v
    }

    pub fn count_basic(&self) -> usize {
        self.elements.iter().filter(|e| e.is_basic()).count()
    }

    /// Number of dynamic gates and dependencies (PAND, SEQ, SPARE, FDEP, ADEP).
    pub fn count_dynamic(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| match &e.kind {
                ElementKind::Gate(g) => !g.kind.is_static(),
                ElementKind::Dependency(_) => true,
                ElementKind::Basic(_) => false,
            })
            .count()
    }

    /// Rebuilds a builder holding the same content; handy for edits.
    pub fn to_builder(&self) -> DftBuilder {
        let mut b = DftBuilder::new();
        for (k, v) in &self.parameters {
            b.param(k, *v);
        }
        for e in &self.elements {
            let names = |ids: &[ElementId]| ids.iter().map(|&c| self.name(c).to_string()).collect();
            let raw = match &e.kind {
                ElementKind::Basic(be) => RawKind::Basic(be.clone()),
                ElementKind::Gate(g) => RawKind::Gate(g.kind, names(&g.children)),
                ElementKind::Dependency(d) => {
                    RawKind::Dependency(d.kind, self.name(d.trigger).to_string(), names(&d.targets))
                }
            };
            b.push_raw(&e.name, raw);
        }
        for l in &self.labels {
            let raw = unresolve(&l.expr, self);
            b.label(&l.name, raw);
        }
        b.top(self.name(self.top));
        b
    }
}

pub(crate) fn unresolve(e: &LabelExpr, dft: &Dft) -> RawLabelExpr {
    match e {
        LabelExpr::Const(b) => RawLabelExpr::Const(*b),
        LabelExpr::Failed(id) => RawLabelExpr::Failed(dft.name(*id).to_string()),
        LabelExpr::Not(x) => RawLabelExpr::Not(Box::new(unresolve(x, dft))),
        LabelExpr::And(xs) => RawLabelExpr::And(xs.iter().map(|x| unresolve(x, dft)).collect()),
        LabelExpr::Or(xs) => RawLabelExpr::Or(xs.iter().map(|x| unresolve(x, dft)).collect()),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("element `{0}` is declared twice")]
    Duplicate(String),
    #[error("element `{referrer}` references unknown element `{name}`")]
    UnknownReference { referrer: String, name: String },
    #[error("no top-level event declared")]
    MissingTop,
    #[error("label `{0}` is declared twice")]
    DuplicateLabel(String),
    #[error("label name `failed` is reserved for top-level failure")]
    ReservedLabel,
}

#[derive(Debug, Clone, PartialEq)]
enum RawKind {
    Basic(BasicEvent),
    Gate(GateKind, Vec<String>),
    Dependency(DependencyKind, String, Vec<String>),
}

/// Name-based DFT under construction. Also serves as the "fragment" type
/// when assembling trees piecewise, since it may lack a top-level event.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DftBuilder {
    elements: IndexMap<String, RawKind>,
    duplicates: Vec<String>,
    top: Option<String>,
    parameters: IndexMap<String, f64>,
    labels: Vec<(String, RawLabelExpr)>,
}

impl DftBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push_raw(&mut self, name: &str, raw: RawKind) -> &mut Self {
        if self.elements.insert(name.to_string(), raw).is_some() {
            self.duplicates.push(name.to_string());
        }
        self
    }

    pub fn basic(&mut self, name: &str, be: BasicEvent) -> &mut Self {
        self.push_raw(name, RawKind::Basic(be))
    }

    pub fn gate<S: AsRef<str>>(&mut self, name: &str, kind: GateKind, children: &[S]) -> &mut Self {
        let children = children.iter().map(|c| c.as_ref().to_string()).collect();
        self.push_raw(name, RawKind::Gate(kind, children))
    }

    pub fn fdep<S: AsRef<str>>(&mut self, name: &str, trigger: &str, targets: &[S]) -> &mut Self {
        let targets = targets.iter().map(|c| c.as_ref().to_string()).collect();
        self.push_raw(
            name,
            RawKind::Dependency(DependencyKind::Functional, trigger.to_string(), targets),
        )
    }

    pub fn adep<S: AsRef<str>>(&mut self, name: &str, source: &str, targets: &[S]) -> &mut Self {
        let targets = targets.iter().map(|c| c.as_ref().to_string()).collect();
        self.push_raw(
            name,
            RawKind::Dependency(DependencyKind::Activation, source.to_string(), targets),
        )
    }

    pub fn top(&mut self, name: &str) -> &mut Self {
        self.top = Some(name.to_string());
        self
    }

    pub fn param(&mut self, name: &str, value: f64) -> &mut Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn label(&mut self, name: &str, expr: RawLabelExpr) -> &mut Self {
        self.labels.push((name.to_string(), expr));
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.elements.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.elements.keys().map(|s| s.as_str())
    }

    pub fn top_name(&self) -> Option<&str> {
        self.top.as_deref()
    }

    /// Number of FDEP and ADEP elements.
    pub fn count_dependencies(&self, kind: DependencyKind) -> usize {
        self.elements
            .values()
            .filter(|r| matches!(r, RawKind::Dependency(k, _, _) if *k == kind))
            .count()
    }

    /// Children of a gate, by name.
    pub fn gate_children(&self, name: &str) -> Option<(GateKind, &[String])> {
        match self.elements.get(name)? {
            RawKind::Gate(k, c) => Some((*k, c.as_slice())),
            _ => None,
        }
    }

    /// Trigger and targets of a dependency, by name.
    pub fn dependency(&self, name: &str) -> Option<(DependencyKind, &str, &[String])> {
        match self.elements.get(name)? {
            RawKind::Dependency(k, t, d) => Some((*k, t.as_str(), d.as_slice())),
            _ => None,
        }
    }

    pub fn basic_event(&self, name: &str) -> Option<&BasicEvent> {
        match self.elements.get(name)? {
            RawKind::Basic(b) => Some(b),
            _ => None,
        }
    }

    /// Disjoint union; elements already present are reported as duplicates.
    pub fn extend(&mut self, other: DftBuilder) -> &mut Self {
        for (name, raw) in other.elements {
            self.push_raw(&name, raw);
        }
        self.duplicates.extend(other.duplicates);
        for (k, v) in other.parameters {
            self.parameters.insert(k, v);
        }
        self.labels.extend(other.labels);
        if self.top.is_none() {
            self.top = other.top;
        }
        self
    }

    pub fn build(&self) -> Result<Dft, BuildError> {
        if let Some(d) = self.duplicates.first() {
            return Err(BuildError::Duplicate(d.clone()));
        }
        let index: HashMap<String, ElementId> = self
            .elements
            .keys()
            .enumerate()
            .map(|(i, n)| (n.clone(), ElementId(i as u32)))
            .collect();
        let resolve = |referrer: &str, name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| BuildError::UnknownReference {
                    referrer: referrer.to_string(),
                    name: name.to_string(),
                })
        };
        let mut elements = Vec::with_capacity(self.elements.len());
        for (name, raw) in &self.elements {
            let kind = match raw {
                RawKind::Basic(b) => ElementKind::Basic(b.clone()),
                RawKind::Gate(k, children) => ElementKind::Gate(Gate {
                    kind: *k,
                    children: children
                        .iter()
                        .map(|c| resolve(name, c))
                        .collect::<Result<_, _>>()?,
                }),
                RawKind::Dependency(k, trigger, targets) => ElementKind::Dependency(Dependency {
                    kind: *k,
                    trigger: resolve(name, trigger)?,
                    targets: targets
                        .iter()
                        .map(|c| resolve(name, c))
                        .collect::<Result<_, _>>()?,
                }),
            };
            elements.push(Element {
                name: name.clone(),
                kind,
            });
        }
        let top_name = self.top.as_ref().ok_or(BuildError::MissingTop)?;
        let top = resolve("toplevel", top_name)?;
        let mut labels: Vec<Label> = Vec::new();
        for (name, raw) in &self.labels {
            if name == FAILED_LABEL {
                return Err(BuildError::ReservedLabel);
            }
            if labels.iter().any(|l| &l.name == name) {
                return Err(BuildError::DuplicateLabel(name.clone()));
            }
            let expr = raw.resolve(&|n: &str| resolve(&format!("label {name}"), n))?;
            labels.push(Label {
                name: name.clone(),
                expr,
            });
        }
        Ok(Dft {
            elements,
            index,
            top,
            parameters: self.parameters.clone(),
            labels,
        })
    }
}

/// Quotes an identifier for the text format.
pub fn quote(name: &str) -> String {
    let mut s = String::with_capacity(name.len() + 2);
    s.push('"');
    for c in name.chars() {
        if c == '"' || c == '\\' {
            s.push('\\');
        }
        s.push(c);
    }
    s.push('"');
    s
}

/// Small canonical trees used throughout the tests and documentation.
pub mod fixtures {
    use super::*;

    fn build(b: &mut DftBuilder) -> Dft {
        b.build().expect("fixture builds")
    }

    /// `OR(A λ=1e-3, B λ=2e-3)`
    pub fn f_or() -> Dft {
        build(
            DftBuilder::new()
                .top("T")
                .gate("T", GateKind::Or, &["A", "B"])
                .basic("A", BasicEvent::with_rate(1e-3))
                .basic("B", BasicEvent::with_rate(2e-3)),
        )
    }

    /// `AND(A λ=1, B λ=2)`
    pub fn f_and() -> Dft {
        build(
            DftBuilder::new()
                .top("T")
                .gate("T", GateKind::And, &["A", "B"])
                .basic("A", BasicEvent::with_rate(1.0))
                .basic("B", BasicEvent::with_rate(2.0)),
        )
    }

    /// `PAND(A λ=1, B λ=1)`
    pub fn f_pand() -> Dft {
        build(
            DftBuilder::new()
                .top("T")
                .gate("T", GateKind::Pand, &["A", "B"])
                .basic("A", BasicEvent::with_rate(1.0))
                .basic("B", BasicEvent::with_rate(1.0)),
        )
    }

    /// `SPARE(P λ=1, S λ=1)` with spare dormancy `dorm`.
    pub fn f_spare(dorm: f64) -> Dft {
        build(
            DftBuilder::new()
                .top("T")
                .gate("T", GateKind::Spare, &["P", "S"])
                .basic("P", BasicEvent::with_rate(1.0).dormancy(dorm))
                .basic("S", BasicEvent::with_rate(1.0).dormancy(dorm)),
        )
    }

    /// Cold spare.
    pub fn f_csp() -> Dft {
        f_spare(0.0)
    }

    /// Warm spare with dormancy 0.5.
    pub fn f_wsp() -> Dft {
        f_spare(0.5)
    }

    /// `VOT(2; A, B, C)`, all λ=1.
    pub fn f_vot() -> Dft {
        build(
            DftBuilder::new()
                .top("T")
                .gate("T", GateKind::Vot(2), &["A", "B", "C"])
                .basic("A", BasicEvent::with_rate(1.0))
                .basic("B", BasicEvent::with_rate(1.0))
                .basic("C", BasicEvent::with_rate(1.0)),
        )
    }

    /// `AND(P λ=1, T λ=1 transient)`
    pub fn f_trans() -> Dft {
        build(
            DftBuilder::new()
                .top("Top")
                .gate("Top", GateKind::And, &["P", "T"])
                .basic("P", BasicEvent::with_rate(1.0))
                .basic("T", BasicEvent::with_rate(1.0).transient()),
        )
    }

    /// [`f_and`] with `degraded := failed(A) | failed(B)`.
    pub fn d_and() -> Dft {
        let mut b = f_and().to_builder();
        b.label(
            DEGRADED_LABEL,
            RawLabelExpr::Or(vec![
                RawLabelExpr::Failed("A".into()),
                RawLabelExpr::Failed("B".into()),
            ]),
        );
        build(&mut b)
    }

    /// [`f_wsp`] with `degraded := failed(P)`.
    pub fn d_wsp() -> Dft {
        let mut b = f_wsp().to_builder();
        b.label(DEGRADED_LABEL, RawLabelExpr::Failed("P".into()));
        build(&mut b)
    }

    /// [`f_or`] with an always-false degraded label.
    pub fn d_or() -> Dft {
        let mut b = f_or().to_builder();
        b.label(DEGRADED_LABEL, RawLabelExpr::Const(false));
        build(&mut b)
    }

    /// Single basic event with rate `lambda` as top-level event.
    pub fn single(lambda: f64) -> Dft {
        build(
            DftBuilder::new()
                .top("A")
                .basic("A", BasicEvent::with_rate(lambda)),
        )
    }
}
