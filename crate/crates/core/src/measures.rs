//! Safety measures evaluated on a labelled CTMC.

use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::dft::{Dft, Valuation};
use crate::engine::{self, EngineError, Tolerances};
use crate::statespace::{build_ctmc, BuildOptions, Ctmc, StateSpaceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    Reliability,
    Unreliability,
    Afh,
    Mttf,
    Ffa,
    Fwd,
    Mtdf,
    Mdr,
    Flod,
    Silfo,
}

impl Measure {
    pub const ALL: [Measure; 10] = [
        Measure::Reliability,
        Measure::Unreliability,
        Measure::Afh,
        Measure::Mttf,
        Measure::Ffa,
        Measure::Fwd,
        Measure::Mtdf,
        Measure::Mdr,
        Measure::Flod,
        Measure::Silfo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Reliability => "reliability",
            Measure::Unreliability => "unreliability",
            Measure::Afh => "afh",
            Measure::Mttf => "mttf",
            Measure::Ffa => "ffa",
            Measure::Fwd => "fwd",
            Measure::Mtdf => "mtdf",
            Measure::Mdr => "mdr",
            Measure::Flod => "flod",
            Measure::Silfo => "silfo",
        }
    }

    /// Whether the value is a probability (and thus has a complement).
    pub fn is_probability(self) -> bool {
        !matches!(self, Measure::Mttf | Measure::Mtdf | Measure::Afh)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| MeasureError::UnknownMeasure(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureParams {
    /// Horizon of time-bounded measures, in hours.
    pub t: f64,
    pub lifetime: f64,
    pub drivecycle: f64,
}

impl Default for MeasureParams {
    fn default() -> Self {
        MeasureParams {
            t: 10_000.0,
            lifetime: 10_000.0,
            drivecycle: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureResult {
    pub name: String,
    /// Time horizon the value refers to, if any.
    pub time: Option<f64>,
    pub value: f64,
    pub complement: Option<f64>,
    /// Minimising state for MDR.
    pub witness: Option<String>,
    pub notice: Option<String>,
    /// Constituent values, e.g. FWD and FLOD for SILFO.
    pub components: Vec<(String, f64)>,
}

impl MeasureResult {
    fn new(measure: Measure, time: Option<f64>, value: f64) -> Self {
        MeasureResult {
            name: measure.name().to_string(),
            time,
            value,
            complement: measure.is_probability().then_some(1.0 - value),
            witness: None,
            notice: None,
            components: Vec::new(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("{measure} is undefined: state `{witness}` does not fail with probability one")]
    Undefined { measure: String, witness: String },
    #[error("no degraded state is reachable")]
    NoDegradedStates,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
}

/// Measure evaluation on one CTMC.
#[derive(Debug, Clone, Copy)]
pub struct Analyzer<'a> {
    pub ctmc: &'a Ctmc,
    pub tol: Tolerances,
}

impl<'a> Analyzer<'a> {
    pub fn new(ctmc: &'a Ctmc) -> Self {
        Analyzer {
            ctmc,
            tol: Tolerances::default(),
        }
    }

    fn empty(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.ctmc.len())
    }

    fn check_time(t: f64, what: &str) -> Result<(), MeasureError> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(MeasureError::InvalidParameter(format!(
                "{what} must be finite and >= 0, got {t}"
            )));
        }
        Ok(())
    }

    /// `P^s(◊≤t failed)` for every state.
    pub fn failure_probabilities(&self, t: f64) -> Vec<f64> {
        engine::bounded_reach_backward(
            &self.ctmc.chain,
            &self.empty(),
            &self.ctmc.failed,
            t,
            self.tol.eps_u,
        )
    }

    fn degraded_from(&self, from: usize) -> Vec<usize> {
        let c = self.ctmc;
        let reach = engine::reachable_from(&c.chain, &[from], &self.empty());
        c.degraded.ones().filter(|&s| reach.contains(s)).collect()
    }

    pub fn unreliability(&self, from: usize, t: f64) -> Result<MeasureResult, MeasureError> {
        Self::check_time(t, "time")?;
        let v = self.failure_probabilities(t)[from];
        Ok(MeasureResult::new(Measure::Unreliability, Some(t), v))
    }

    pub fn reliability(&self, from: usize, t: f64) -> Result<MeasureResult, MeasureError> {
        Self::check_time(t, "time")?;
        let v = 1.0 - self.failure_probabilities(t)[from];
        Ok(MeasureResult::new(Measure::Reliability, Some(t), v))
    }

    pub fn afh(&self, from: usize, lifetime: f64) -> Result<MeasureResult, MeasureError> {
        Self::check_time(lifetime, "lifetime")?;
        if lifetime == 0.0 {
            return Err(MeasureError::InvalidParameter(
                "lifetime must be positive".into(),
            ));
        }
        let v = self.failure_probabilities(lifetime)[from] / lifetime;
        Ok(MeasureResult::new(Measure::Afh, Some(lifetime), v))
    }

    pub fn mttf(&self, from: usize) -> Result<MeasureResult, MeasureError> {
        let c = self.ctmc;
        let x = engine::expected_time(&c.chain, &c.failed, &[from], &self.tol)
            .map_err(|e| self.undefined(Measure::Mttf, e))?;
        Ok(MeasureResult::new(Measure::Mttf, None, x[from]))
    }

    fn undefined(&self, m: Measure, e: EngineError) -> MeasureError {
        match e {
            EngineError::Undefined { witness } => MeasureError::Undefined {
                measure: m.name().to_string(),
                witness: self.ctmc.describe(witness),
            },
            other => MeasureError::Engine(other),
        }
    }

    pub fn ffa(&self, from: usize, t: f64) -> Result<MeasureResult, MeasureError> {
        Self::check_time(t, "time")?;
        let c = self.ctmc;
        let mut target = c.failed.clone();
        target.union_with(&c.degraded);
        let v = 1.0
            - engine::bounded_reach_backward(&c.chain, &self.empty(), &target, t, self.tol.eps_u)
                [from];
        Ok(MeasureResult::new(Measure::Ffa, Some(t), v))
    }

    pub fn fwd(&self, from: usize, t: f64) -> Result<MeasureResult, MeasureError> {
        Self::check_time(t, "time")?;
        let c = self.ctmc;
        let mut target = c.failed.clone();
        target.difference_with(&c.degraded);
        let v =
            engine::bounded_reach_backward(&c.chain, &c.degraded, &target, t, self.tol.eps_u)[from];
        Ok(MeasureResult::new(Measure::Fwd, Some(t), v))
    }

    /// Probability that each degraded state is the first degraded (or
    /// failed) state reached; one forward pass for all of them.
    pub fn first_degraded(&self, from: usize) -> Result<Vec<f64>, MeasureError> {
        let c = self.ctmc;
        let mut absorbing = c.degraded.clone();
        absorbing.union_with(&c.failed);
        Ok(engine::absorption_forward(
            &c.chain,
            &absorbing,
            &c.initial_distribution(from),
            &self.tol,
        )?)
    }

    pub fn mtdf(&self, from: usize) -> Result<MeasureResult, MeasureError> {
        let c = self.ctmc;
        let p = self.first_degraded(from)?;
        let entered: Vec<usize> = c.degraded.ones().filter(|&s| p[s] > 0.0).collect();
        let mut r = MeasureResult::new(Measure::Mtdf, None, 0.0);
        if entered.is_empty() {
            r.notice = Some("no degraded states".to_string());
            return Ok(r);
        }
        let et = engine::expected_time(&c.chain, &c.failed, &entered, &self.tol)
            .map_err(|e| self.undefined(Measure::Mtdf, e))?;
        r.value = entered.iter().map(|&s| p[s] * et[s]).sum();
        Ok(r)
    }

    pub fn mdr(&self, from: usize, t: f64) -> Result<MeasureResult, MeasureError> {
        Self::check_time(t, "time")?;
        let degraded = self.degraded_from(from);
        if degraded.is_empty() {
            return Err(MeasureError::NoDegradedStates);
        }
        let fail = self.failure_probabilities(t);
        let (w, v) = degraded
            .iter()
            .map(|&s| (s, 1.0 - fail[s]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let mut r = MeasureResult::new(Measure::Mdr, Some(t), v);
        r.witness = Some(self.ctmc.describe(w));
        Ok(r)
    }

    /// Bounded first-passage probabilities onto degraded states within `t`.
    pub fn first_degraded_within(&self, from: usize, t: f64) -> Vec<f64> {
        let c = self.ctmc;
        let mut absorbing = c.degraded.clone();
        absorbing.union_with(&c.failed);
        let mut p = engine::bounded_first_passage_forward(
            &c.chain,
            &absorbing,
            &c.initial_distribution(from),
            t,
            self.tol.eps_u,
        );
        for s in c.failed.ones() {
            p[s] = 0.0;
        }
        p
    }

    pub fn flod(
        &self,
        from: usize,
        t: f64,
        drivecycle: f64,
    ) -> Result<MeasureResult, MeasureError> {
        Self::check_time(t, "time")?;
        Self::check_time(drivecycle, "drive cycle")?;
        let first = self.first_degraded_within(from, t);
        let fail = self.failure_probabilities(drivecycle);
        let v: f64 = self.ctmc.degraded.ones().map(|s| first[s] * fail[s]).sum();
        Ok(MeasureResult::new(
            Measure::Flod,
            Some(t),
            v.clamp(0.0, 1.0),
        ))
    }

    pub fn silfo(
        &self,
        from: usize,
        t: f64,
        drivecycle: f64,
    ) -> Result<MeasureResult, MeasureError> {
        let fwd = self.fwd(from, t)?.value;
        let flod = self.flod(from, t, drivecycle)?.value;
        let mut r = MeasureResult::new(
            Measure::Silfo,
            Some(t),
            (1.0 - (fwd + flod)).clamp(0.0, 1.0),
        );
        r.components = vec![("fwd".into(), fwd), ("flod".into(), flod)];
        Ok(r)
    }

    pub fn compute(
        &self,
        m: Measure,
        from: usize,
        p: &MeasureParams,
    ) -> Result<MeasureResult, MeasureError> {
        match m {
            Measure::Reliability => self.reliability(from, p.t),
            Measure::Unreliability => self.unreliability(from, p.t),
            Measure::Afh => self.afh(from, p.lifetime),
            Measure::Mttf => self.mttf(from),
            Measure::Ffa => self.ffa(from, p.t),
            Measure::Fwd => self.fwd(from, p.t),
            Measure::Mtdf => self.mtdf(from),
            Measure::Mdr => self.mdr(from, p.t),
            Measure::Flod => self.flod(from, p.t, p.drivecycle),
            Measure::Silfo => self.silfo(from, p.t, p.drivecycle),
        }
    }
}

/// Evaluates `measures` from every entry state of a CTMC built with
/// `evidence`. Without evidence there is one row per measure named after the
/// measure; otherwise rows are named `<measure>#entry<k>`.
pub fn with_evidence(
    dft: &Dft,
    overrides: &Valuation,
    evidence: &[String],
    measures: &[Measure],
    params: &MeasureParams,
    options: &BuildOptions,
) -> Result<Vec<MeasureResult>, MeasureError> {
    let opts = BuildOptions {
        evidence: evidence.to_vec(),
        ..options.clone()
    };
    let ctmc = build_ctmc(dft, overrides, &opts)?;
    evaluate_entries(&ctmc, measures, params)
}

/// Evaluates `measures` from each entry state of `ctmc`.
pub fn evaluate_entries(
    ctmc: &Ctmc,
    measures: &[Measure],
    params: &MeasureParams,
) -> Result<Vec<MeasureResult>, MeasureError> {
    let a = Analyzer::new(ctmc);
    let tagged = ctmc.entries.len() > 1 || ctmc.entries[0] != ctmc.initial;
    let mut out = Vec::new();
    for &m in measures {
        for (k, &e) in ctmc.entries.iter().enumerate() {
            let mut r = a.compute(m, e, params)?;
            if tagged {
                r.name = format!("{}#entry{k}", r.name);
                r.notice = Some(ctmc.describe(e));
            }
            out.push(r);
        }
    }
    Ok(out)
}

/// One row per valuation; the CTMC is rebuilt for each.
pub fn sensitivity_sweep(
    dft: &Dft,
    valuations: &[Valuation],
    measure: Measure,
    params: &MeasureParams,
    options: &BuildOptions,
) -> Result<Vec<(Valuation, MeasureResult)>, MeasureError> {
    let mut rows = Vec::new();
    for v in valuations {
        if let Some(k) = v.keys().find(|k| !dft.parameters().contains_key(*k)) {
            return Err(MeasureError::MissingParameter(k.clone()));
        }
        let ctmc = build_ctmc(dft, v, options)?;
        let r = Analyzer::new(&ctmc).compute(measure, ctmc.initial, params)?;
        rows.push((v.clone(), r));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::fixtures;

    fn ctmc(d: &Dft) -> Ctmc {
        build_ctmc(d, &Valuation::new(), &BuildOptions::default()).unwrap()
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-300), "{a} vs {b}");
    }

    #[test]
    fn and_gate_measures() {
        let c = ctmc(&fixtures::f_and());
        let a = Analyzer::new(&c);
        close(a.mttf(c.initial).unwrap().value, 7.0 / 6.0);
        let e1 = (-1f64).exp();
        let e2 = (-2f64).exp();
        close(
            a.unreliability(c.initial, 1.0).unwrap().value,
            (1.0 - e1) * (1.0 - e2),
        );
    }

    #[test]
    fn degradation_on_and() {
        let c = ctmc(&fixtures::d_and());
        let a = Analyzer::new(&c);
        let i = c.initial;
        close(a.ffa(i, 1.0).unwrap().value, (-3f64).exp());
        assert_eq!(a.fwd(i, 1.0).unwrap().value, 0.0);
        close(a.mtdf(i).unwrap().value, 5.0 / 6.0);
        let mdr = a.mdr(i, 1.0).unwrap();
        close(mdr.value, (-2f64).exp());
        assert_eq!(mdr.witness.as_deref(), Some("failed={A}"));
        let race = 1.0 - (-3f64).exp();
        let flod = race * ((1.0 - (-2f64).exp()) / 3.0 + 2.0 * (1.0 - (-1f64).exp()) / 3.0);
        close(a.flod(i, 1.0, 1.0).unwrap().value, flod);
        close(a.silfo(i, 1.0, 1.0).unwrap().value, 1.0 - flod);
        assert_eq!(a.flod(i, 1.0, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn no_degraded_states() {
        let c = ctmc(&fixtures::d_or());
        let a = Analyzer::new(&c);
        let r = a.mtdf(c.initial).unwrap();
        assert_eq!((r.value, r.notice.is_some()), (0.0, true));
        assert_eq!(a.mdr(c.initial, 1.0), Err(MeasureError::NoDegradedStates));
        let u = a.unreliability(c.initial, 100.0).unwrap().value;
        close(a.fwd(c.initial, 100.0).unwrap().value, u);
    }

    #[test]
    fn pand_mttf_undefined() {
        let c = ctmc(&fixtures::f_pand());
        assert!(matches!(
            Analyzer::new(&c).mttf(c.initial),
            Err(MeasureError::Undefined { .. })
        ));
    }

    #[test]
    fn evidence_rows() {
        let rows = with_evidence(
            &fixtures::f_and(),
            &Valuation::new(),
            &["A".to_string()],
            &[Measure::Mttf],
            &MeasureParams::default(),
            &BuildOptions::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].name, "mttf#entry0");
        close(rows[0].value, 0.5);
    }

    #[test]
    fn parse_names() {
        assert_eq!("MTTF".parse::<Measure>().unwrap(), Measure::Mttf);
        assert!("nope".parse::<Measure>().is_err());
    }
}
