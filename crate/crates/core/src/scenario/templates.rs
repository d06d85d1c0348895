use indexmap::IndexMap;

use super::{BlockDiagram, BlockFaultTree, BlockTemplate, HardwareTemplate, ScenarioError};
use crate::dft::{BasicEvent, Dft, DftBuilder, ElementKind, GateKind, RateExpr};
use crate::io::galileo;

fn basic(rate: &RateExpr, dormancy: f64, transient: bool) -> BasicEvent {
    if rate.is_zero_literal() {
        return BasicEvent::dummy();
    }
    let mut be = BasicEvent::new(rate.clone());
    if dormancy != 1.0 {
        be = be.dormancy(dormancy);
    }
    if transient {
        be = be.transient();
    }
    be
}

/// `c·r` or `(1−c)·r`, folded when both are constants.
fn share(coverage: &RateExpr, rate: &RateExpr, covered: bool) -> RateExpr {
    if let (Some(c), Some(r)) = (coverage.as_constant(), rate.as_constant()) {
        let f = if covered { c } else { 1.0 - c };
        return RateExpr::constant(f * r);
    }
    let f = if covered {
        coverage.clone()
    } else {
        RateExpr::constant(1.0).sub(coverage.clone())
    };
    f.mul(rate.clone())
}

/// Copies `dft` with `top` renamed to `root` and every other element `x`
/// renamed to `prefix.x`.
fn prefixed(dft: &Dft, root: &str, prefix: &str) -> Result<DftBuilder, String> {
    if !dft.labels().is_empty() {
        return Err("embedded fragments may not declare labels".into());
    }
    let top = dft.top();
    let rename = |id: crate::dft::ElementId| {
        if id == top {
            root.to_string()
        } else {
            format!("{prefix}.{}", dft.name(id))
        }
    };
    let mut b = DftBuilder::new();
    for (k, v) in dft.parameters() {
        b.param(k, *v);
    }
    for id in dft.ids() {
        let name = rename(id);
        match &dft.element(id).kind {
            ElementKind::Basic(be) => b.basic(&name, be.clone()),
            ElementKind::Gate(g) => {
                let c: Vec<String> = g.children.iter().map(|&c| rename(c)).collect();
                b.gate(&name, g.kind, &c)
            }
            ElementKind::Dependency(d) => {
                let t: Vec<String> = d.targets.iter().map(|&c| rename(c)).collect();
                match d.kind {
                    crate::dft::DependencyKind::Functional => b.fdep(&name, &rename(d.trigger), &t),
                    crate::dft::DependencyKind::Activation => b.adep(&name, &rename(d.trigger), &t),
                }
            }
        };
    }
    Ok(b)
}

/// Instantiates the fault tree of block `name` for its channels in `diagram`.
pub fn block_fault_tree(
    name: &str,
    template: &BlockTemplate,
    diagram: &BlockDiagram,
) -> Result<BlockFaultTree, ScenarioError> {
    let err = |message: String| ScenarioError::Template {
        block: name.to_string(),
        message,
    };
    let ins: Vec<&str> = diagram.inputs(name).map(|c| c.name.as_str()).collect();
    let outs: Vec<&str> = diagram.outputs(name).map(|c| c.name.as_str()).collect();
    let hw = format!("{name}.hw");
    let intern_name = format!("{name}.intern");
    let input = format!("{name}.input");
    let in_be = |c: &str| format!("{name}.in.{c}");

    let mut b = DftBuilder::new();
    let mut inputs: IndexMap<String, String> = ins.iter().map(|c| (c.to_string(), in_be(c))).collect();
    let mut outputs: IndexMap<String, String> =
        outs.iter().map(|c| (c.to_string(), name.to_string())).collect();
    let mut hardware = hw.clone();

    match template {
        BlockTemplate::Standard { intern } | BlockTemplate::Voter { intern, .. } => {
            let mut children = vec![hw.clone(), intern_name.clone()];
            if !ins.is_empty() {
                let kind = match template {
                    BlockTemplate::Voter { threshold, .. } => {
                        let n = ins.len() as u32;
                        let k = threshold.unwrap_or(n / 2 + 1);
                        if k == 0 || k > n {
                            return Err(err(format!("voting threshold {k} for {n} inputs")));
                        }
                        GateKind::Vot(k)
                    }
                    _ => GateKind::Or,
                };
                let leaves: Vec<String> = ins.iter().map(|c| in_be(c)).collect();
                b.gate(&input, kind, &leaves);
                children.push(input.clone());
            }
            b.gate(name, GateKind::Or, &children);
            b.basic(&hw, BasicEvent::dummy());
            b.basic(&intern_name, basic(intern, 1.0, false));
            for c in &ins {
                b.basic(&in_be(c), BasicEvent::dummy());
            }
        }
        BlockTemplate::Switch {
            intern,
            switching,
            primary,
        } => {
            let primary = match primary {
                Some(p) if ins.contains(&p.as_str()) => p.as_str(),
                Some(p) => return Err(err(format!("primary input `{p}` is not an input channel"))),
                None => *ins.first().ok_or_else(|| err("a switch needs inputs".into()))?,
            };
            let switch_be = format!("{name}.switching");
            let wrong = format!("{name}.wrong_path");
            let all = format!("{name}.all_input");
            b.gate(name, GateKind::Or, &[&hw, &intern_name, &wrong, &all]);
            b.basic(&hw, BasicEvent::dummy());
            b.basic(&intern_name, basic(intern, 1.0, false));
            b.gate(&wrong, GateKind::Pand, &[switch_be.clone(), in_be(primary)]);
            b.basic(&switch_be, basic(switching, 1.0, false));
            let leaves: Vec<String> = ins.iter().map(|c| in_be(c)).collect();
            b.gate(&all, GateKind::And, &leaves);
            for c in &ins {
                b.basic(&in_be(c), BasicEvent::dummy());
            }
        }
        BlockTemplate::Custom {
            fragment,
            inputs: local_in,
            outputs: local_out,
            hardware: local_hw,
        } => {
            let dft = galileo::parse(fragment)?;
            let global = |local: &str| -> Result<String, ScenarioError> {
                let id = dft
                    .id(local)
                    .ok_or_else(|| err(format!("unknown element `{local}`")))?;
                Ok(if id == dft.top() {
                    name.to_string()
                } else {
                    format!("{name}.{local}")
                })
            };
            let is_basic = |local: &str| dft.id(local).is_some_and(|id| dft.element(id).is_basic());
            b = prefixed(&dft, name, name).map_err(err)?;
            if !is_basic(local_hw) {
                return Err(err(format!("hardware fault `{local_hw}` is not a basic event")));
            }
            hardware = global(local_hw)?;
            for c in &ins {
                let local = local_in.get(*c).ok_or_else(|| ScenarioError::ChannelMismatch {
                    channel: c.to_string(),
                    block: name.to_string(),
                })?;
                if !is_basic(local) {
                    return Err(err(format!("input fault `{local}` is not a basic event")));
                }
                inputs.insert(c.to_string(), global(local)?);
            }
            for c in local_in.keys().chain(local_out.keys()) {
                if !ins.contains(&c.as_str()) && !outs.contains(&c.as_str()) {
                    return Err(ScenarioError::ChannelMismatch {
                        channel: c.clone(),
                        block: name.to_string(),
                    });
                }
            }
            for c in &outs {
                if let Some(local) = local_out.get(*c) {
                    outputs.insert(c.to_string(), global(local)?);
                }
            }
        }
    }
    Ok(BlockFaultTree {
        fragment: b,
        root: name.to_string(),
        inputs,
        outputs,
        hardware,
    })
}

/// Fault tree for platform or bus `id`, rooted at `id`.
pub fn instantiate_hardware_ft(
    template: &HardwareTemplate,
    id: &str,
) -> Result<DftBuilder, ScenarioError> {
    let mut b = DftBuilder::new();
    match template {
        HardwareTemplate::Infallible => {
            b.basic(id, BasicEvent::dummy());
        }
        HardwareTemplate::Basic { rate, dormancy } => {
            b.basic(id, basic(rate, *dormancy, false));
        }
        HardwareTemplate::Covered {
            transient,
            permanent,
            transient_coverage,
            permanent_coverage,
            safety_mechanism,
            dormancy,
        } => {
            let classes = [
                ("transient", transient, transient_coverage, true),
                ("permanent", permanent, permanent_coverage, false),
            ];
            let roots: Vec<String> = classes.iter().map(|c| format!("{id}.{}", c.0)).collect();
            b.gate(id, GateKind::Or, &roots);
            for (class, rate, coverage, is_transient) in classes {
                let p = format!("{id}.{class}");
                let uncovered = format!("{p}.uncovered");
                let covered = format!("{p}.covered");
                let sm = format!("{p}.safety");
                let fault = format!("{p}.fault");
                b.gate(&p, GateKind::Or, &[&uncovered, &covered]);
                b.basic(&uncovered, basic(&share(coverage, rate, false), *dormancy, is_transient));
                b.gate(&covered, GateKind::And, &[&sm, &fault]);
                b.basic(&sm, basic(safety_mechanism, *dormancy, false));
                b.basic(&fault, basic(&share(coverage, rate, true), *dormancy, is_transient));
                b.gate(&format!("{p}.order"), GateKind::Seq, &[&sm, &fault]);
            }
        }
        HardwareTemplate::Custom { fragment } => {
            let dft = galileo::parse(fragment)?;
            b = prefixed(&dft, id, id).map_err(|message| ScenarioError::Template {
                block: id.to_string(),
                message,
            })?;
        }
    }
    Ok(b)
}
