use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use super::templates::{block_fault_tree, instantiate_hardware_ft};
use super::{
    BlockDiagram, BlockFaultTree, EEArchitecture, HardwareAssignment, HardwareTemplate,
    Redundancy, Route, Scenario, ScenarioError, TaskSpec,
};
use crate::dft::{validate, Dft, DftBuilder, ElementId, GateKind};

/// Disjoint union of the block fault trees plus one FDEP per channel,
/// `fdep.<channel>`, from the source's output failure to the target's input
/// fault.
pub fn connect_blocks(
    diagram: &BlockDiagram,
    fts: &IndexMap<String, BlockFaultTree>,
) -> Result<DftBuilder, ScenarioError> {
    let mut b = DftBuilder::new();
    for block in diagram.blocks.keys() {
        let ft = fts
            .get(block)
            .ok_or_else(|| ScenarioError::MissingBlockFT(block.clone()))?;
        b.extend(ft.fragment.clone());
    }
    for c in &diagram.channels {
        let mismatch = |block: &str| ScenarioError::ChannelMismatch {
            channel: c.name.clone(),
            block: block.to_string(),
        };
        let src = fts.get(&c.source).ok_or_else(|| ScenarioError::MissingBlockFT(c.source.clone()))?;
        let dst = fts.get(&c.target).ok_or_else(|| ScenarioError::MissingBlockFT(c.target.clone()))?;
        let out = src.outputs.get(&c.name).ok_or_else(|| mismatch(&c.source))?;
        let inp = dst.inputs.get(&c.name).ok_or_else(|| mismatch(&c.target))?;
        b.fdep(&format!("fdep.{}", c.name), out, &[inp]);
    }
    Ok(b)
}

/// Adds the task layer on top of `connected`: the top is an OR over tasks,
/// a task is an AND (or a SPARE for standby) over its paths, and a path
/// `<task>.<path>` is an OR over its blocks.
pub fn build_system_layer(
    tasks: &TaskSpec,
    mut connected: DftBuilder,
) -> Result<DftBuilder, ScenarioError> {
    let mut uses: HashMap<&str, usize> = HashMap::new();
    for t in &tasks.tasks {
        for p in &t.paths {
            for blk in p.blocks.iter().collect::<HashSet<_>>() {
                *uses.entry(blk.as_str()).or_default() += 1;
            }
        }
    }
    let names: Vec<&str> = tasks.tasks.iter().map(|t| t.name.as_str()).collect();
    connected.gate(&tasks.top, GateKind::Or, &names);
    connected.top(&tasks.top);
    for t in &tasks.tasks {
        let paths: Vec<String> = t.paths.iter().map(|p| format!("{}.{}", t.name, p.name)).collect();
        let kind = match t.redundancy {
            Redundancy::All => GateKind::And,
            Redundancy::Standby => GateKind::Spare,
        };
        connected.gate(&t.name, kind, &paths);
        for (p, gate) in t.paths.iter().zip(&paths) {
            for blk in &p.blocks {
                if connected.gate_children(blk).is_none() && connected.basic_event(blk).is_none() {
                    return Err(ScenarioError::UnknownBlockReference {
                        context: format!("path `{gate}`"),
                        block: blk.clone(),
                    });
                }
                if t.redundancy == Redundancy::Standby && uses[blk.as_str()] > 1 {
                    return Err(ScenarioError::SpareModuleOverlap {
                        task: t.name.clone(),
                        block: blk.clone(),
                    });
                }
            }
            connected.gate(gate, GateKind::Or, &p.blocks);
        }
    }
    Ok(connected)
}

fn check_platform(arch: &EEArchitecture, context: String, p: &str) -> Result<(), ScenarioError> {
    if arch.platforms.iter().any(|x| x == p) {
        Ok(())
    } else {
        Err(ScenarioError::UnknownPlatform {
            context,
            platform: p.to_string(),
        })
    }
}

/// Maps each channel to the internal bus of its platform or to the unique
/// bus connecting its endpoints; `explicit` pins channels to named buses.
pub fn derive_channel_assignment(
    diagram: &BlockDiagram,
    arch: &EEArchitecture,
    blocks: &IndexMap<String, String>,
    explicit: &IndexMap<String, String>,
) -> Result<HardwareAssignment, ScenarioError> {
    for bus in &arch.buses {
        for (a, b) in &bus.relation {
            check_platform(arch, format!("bus `{}`", bus.name), a)?;
            check_platform(arch, format!("bus `{}`", bus.name), b)?;
        }
        if !bus.is_transitive() {
            return Err(ScenarioError::NonTransitiveBus(bus.name.clone()));
        }
    }
    for (blk, p) in blocks {
        if !diagram.blocks.contains_key(blk) {
            return Err(ScenarioError::UnknownBlockReference {
                context: "the hardware assignment".into(),
                block: blk.clone(),
            });
        }
        check_platform(arch, format!("block `{blk}`"), p)?;
    }
    for ch in explicit.keys() {
        if !diagram.channels.iter().any(|c| &c.name == ch) {
            return Err(ScenarioError::Document(format!(
                "the channel assignment names unknown channel `{ch}`"
            )));
        }
    }
    let platform = |blk: &str| {
        blocks.get(blk).ok_or_else(|| ScenarioError::UnknownPlatform {
            context: format!("block `{blk}`"),
            platform: String::new(),
        })
    };
    let mut channels = IndexMap::new();
    for c in &diagram.channels {
        let from = platform(&c.source)?;
        let to = platform(&c.target)?;
        let route = if let Some(bus) = explicit.get(&c.name) {
            let inconsistent = || ScenarioError::InconsistentAssignment {
                channel: c.name.clone(),
                bus: bus.clone(),
            };
            if from == to && bus == from {
                Route::Internal(from.clone())
            } else {
                let b = arch.buses.iter().find(|b| &b.name == bus).ok_or_else(inconsistent)?;
                if !b.connects(from, to) {
                    return Err(inconsistent());
                }
                Route::Bus(bus.clone())
            }
        } else if from == to {
            Route::Internal(from.clone())
        } else {
            let candidates: Vec<String> = arch
                .buses
                .iter()
                .filter(|b| b.connects(from, to))
                .map(|b| b.name.clone())
                .collect();
            match candidates.len() {
                0 => {
                    return Err(ScenarioError::NoConnectingBus {
                        channel: c.name.clone(),
                        from: from.clone(),
                        to: to.clone(),
                    })
                }
                1 => Route::Bus(candidates[0].clone()),
                _ => {
                    return Err(ScenarioError::AmbiguousBus {
                        channel: c.name.clone(),
                        buses: candidates,
                    })
                }
            }
        };
        channels.insert(c.name.clone(), route);
    }
    Ok(HardwareAssignment {
        blocks: blocks.clone(),
        channels,
    })
}

/// Joins the system/block layer with the hardware fault trees.
///
/// Per block `B` on platform `p`: `fdep.hw.B` (p → hardware fault of B) and
/// `adep.hw.B` (B → p). Per channel routed over a bus with a fault tree:
/// `fdep.bus.<channel>` (bus → input fault). Buses without an entry in
/// `hardware` are infallible and get neither a tree nor FDEPs.
pub fn assemble_complete(
    system: DftBuilder,
    fts: &IndexMap<String, BlockFaultTree>,
    diagram: &BlockDiagram,
    hardware: &IndexMap<String, DftBuilder>,
    assignment: &HardwareAssignment,
) -> Result<DftBuilder, ScenarioError> {
    let mut b = system;
    let mut added: HashSet<&str> = HashSet::new();
    let mut add = |b: &mut DftBuilder, id: &'_ str| -> Result<(), ScenarioError> {
        let ft = hardware
            .get_key_value(id)
            .ok_or_else(|| ScenarioError::MissingHardwareFT(id.to_string()))?;
        if added.insert(ft.0.as_str()) {
            b.extend(ft.1.clone());
        }
        Ok(())
    };
    for (blk, p) in &assignment.blocks {
        add(&mut b, p)?;
        let ft = fts
            .get(blk)
            .ok_or_else(|| ScenarioError::MissingBlockFT(blk.clone()))?;
        b.fdep(&format!("fdep.hw.{blk}"), p, &[&ft.hardware]);
        b.adep(&format!("adep.hw.{blk}"), &ft.root, &[p]);
    }
    for c in &diagram.channels {
        let route = assignment.channels.get(&c.name).ok_or_else(|| {
            ScenarioError::InconsistentAssignment {
                channel: c.name.clone(),
                bus: String::new(),
            }
        })?;
        let Route::Bus(bus) = route else { continue };
        if !hardware.contains_key(bus) {
            continue;
        }
        add(&mut b, bus)?;
        let input = fts
            .get(&c.target)
            .and_then(|ft| ft.inputs.get(&c.name))
            .ok_or_else(|| ScenarioError::ChannelMismatch {
                channel: c.name.clone(),
                block: c.target.clone(),
            })?;
        b.fdep(&format!("fdep.bus.{}", c.name), bus, &[input]);
    }
    Ok(b)
}

/// Builds the complete fault tree of a scenario and checks it.
pub fn synthesize(s: &Scenario) -> Result<Dft, ScenarioError> {
    for c in &s.diagram.channels {
        for blk in [&c.source, &c.target] {
            if !s.diagram.blocks.contains_key(blk) {
                return Err(ScenarioError::UnknownBlockReference {
                    context: format!("channel `{}`", c.name),
                    block: blk.clone(),
                });
            }
        }
    }
    if let Some(blk) = s.diagram.blocks.keys().find(|b| !s.block_map.contains_key(*b)) {
        return Err(ScenarioError::UnknownPlatform {
            context: format!("block `{blk}`"),
            platform: String::new(),
        });
    }
    let mut fts = IndexMap::new();
    for (name, template) in &s.diagram.blocks {
        fts.insert(name.clone(), block_fault_tree(name, template, &s.diagram)?);
    }
    let connected = connect_blocks(&s.diagram, &fts)?;
    let system = build_system_layer(&s.tasks, connected)?;
    let assignment =
        derive_channel_assignment(&s.diagram, &s.architecture, &s.block_map, &s.channel_map)?;

    let mut hardware = IndexMap::new();
    let used_platforms = assignment.blocks.values();
    let used_buses = assignment.channels.values().filter_map(|r| match r {
        Route::Bus(b) => Some(b),
        Route::Internal(_) => None,
    });
    for id in used_platforms {
        if hardware.contains_key(id) {
            continue;
        }
        let t = s
            .hardware
            .get(id)
            .ok_or_else(|| ScenarioError::MissingHardwareFT(id.clone()))?;
        hardware.insert(id.clone(), instantiate_hardware_ft(t, id)?);
    }
    for id in used_buses {
        match s.hardware.get(id) {
            None => return Err(ScenarioError::MissingHardwareFT(id.clone())),
            Some(HardwareTemplate::Infallible) => {}
            Some(t) => {
                if !hardware.contains_key(id) {
                    hardware.insert(id.clone(), instantiate_hardware_ft(t, id)?);
                }
            }
        }
    }
    let mut b = assemble_complete(system, &fts, &s.diagram, &hardware, &assignment)?;
    for (k, v) in &s.parameters {
        b.param(k, *v);
    }
    for l in &s.labels {
        let known = |n: &str| {
            if b.contains(n) {
                Ok(ElementId(0))
            } else {
                Err(n.to_string())
            }
        };
        if let Err(n) = l.expr.resolve(&known) {
            return Err(ScenarioError::Label {
                name: l.name.clone(),
                message: format!("unknown element `{n}`"),
            });
        }
        b.label(&l.name, l.expr.clone());
    }
    let dft = b.build()?;
    let diags = validate(&dft);
    if !diags.is_empty() {
        return Err(ScenarioError::Invalid(diags));
    }
    Ok(dft)
}
