//! Checked-in scenario documents and the trees they synthesize.
//! Run with `UPDATE_GOLDEN=1` to regenerate both after intended changes.

use std::fs;
use std::path::PathBuf;

use indexmap::IndexMap;

use dftmc::dft::{DependencyKind, GateKind};
use dftmc::io::galileo;
use dftmc::scenario::{
    block_fault_tree, build_system_layer, connect_blocks, derive_channel_assignment, families,
    instantiate_hardware_ft, parse_scenario, synthesize, HardwareTemplate, Route, Scenario,
    ScenarioDocument,
};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn families() -> Vec<(&'static str, ScenarioDocument)> {
    vec![
        ("sc1", families::sc1()),
        ("sc2-arch-b", families::sc2_arch_b()),
        ("sc2-arch-a", families::sc2_arch_a()),
        ("sc3", families::sc3()),
        ("scaled-3adas", families::scaled_adas(3, 8, 2, 7)),
    ]
}

fn golden(path: PathBuf, actual: &str) {
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1", path.display()));
    assert!(expected == actual, "{} differs from the generated output", path.display());
}

fn load(name: &str) -> Scenario {
    let text = fs::read_to_string(root().join(format!("scenarios/{name}.toml"))).unwrap();
    parse_scenario(&text).unwrap()
}

#[test]
fn documents_match_families() {
    for (name, doc) in families() {
        golden(root().join(format!("scenarios/{name}.toml")), &doc.to_toml());
    }
}

#[test]
fn synthesized_trees_match_golden() {
    for (name, _) in families() {
        let dft = synthesize(&load(name)).unwrap();
        golden(
            root().join(format!("crates/core/tests/golden/{name}.dft")),
            &galileo::serialize(&dft),
        );
    }
}

/// |complete| = |system and blocks| + Σ|hardware trees|
///            + 2·#blocks + #channels over fallible buses
#[test]
fn element_count_arithmetic() {
    for (name, _) in families() {
        let s = load(name);
        let fts: IndexMap<_, _> = s
            .diagram
            .blocks
            .iter()
            .map(|(b, t)| (b.clone(), block_fault_tree(b, t, &s.diagram).unwrap()))
            .collect();
        let system = build_system_layer(&s.tasks, connect_blocks(&s.diagram, &fts).unwrap()).unwrap();
        let a = derive_channel_assignment(&s.diagram, &s.architecture, &s.block_map, &s.channel_map)
            .unwrap();
        let mut hw_ids: Vec<&String> = a.blocks.values().collect();
        let mut bus_channels = 0;
        for r in a.channels.values() {
            if let Route::Bus(b) = r {
                if s.hardware[b] != HardwareTemplate::Infallible {
                    hw_ids.push(b);
                    bus_channels += 1;
                }
            }
        }
        hw_ids.sort();
        hw_ids.dedup();
        let hw: usize = hw_ids
            .iter()
            .map(|id| instantiate_hardware_ft(&s.hardware[*id], id).unwrap().len())
            .sum();
        let n_blocks = s.diagram.blocks.len();
        let dft = synthesize(&s).unwrap();
        assert_eq!(
            dft.len(),
            system.len() + hw + 2 * n_blocks + bus_channels,
            "{name}"
        );
        let b = dft.to_builder();
        let hw_fdeps = (0..dft.len())
            .filter(|&i| dft.elements()[i].name.starts_with("fdep.hw."))
            .count();
        assert_eq!(hw_fdeps, n_blocks, "{name}");
        assert_eq!(b.count_dependencies(DependencyKind::Activation), n_blocks, "{name}");
        let bus_fdeps = (0..dft.len())
            .filter(|&i| dft.elements()[i].name.starts_with("fdep.bus."))
            .count();
        assert_eq!(bus_fdeps, bus_channels, "{name}");
    }
}

fn gate(s: &Scenario, name: &str) -> (GateKind, Vec<String>) {
    let b = synthesize(s).unwrap().to_builder();
    let (k, c) = b.gate_children(name).unwrap();
    (k, c.to_vec())
}

#[test]
fn system_layers() {
    let sc2 = load("sc2-arch-b");
    assert_eq!(
        gate(&sc2, "system"),
        (GateKind::Or, vec!["planning".into(), "selection".into(), "management".into(), "actuation".into()])
    );
    assert_eq!(
        gate(&sc2, "planning"),
        (GateKind::And, vec!["planning.n-path".into(), "planning.s-path".into()])
    );
    let sc3 = load("sc3");
    assert_eq!(
        gate(&sc3, "planning"),
        (GateKind::Spare, vec!["planning.m-path".into(), "planning.fb-path".into()])
    );
    assert_eq!(gate(&sc3, "Switch.wrong_path").0, GateKind::Pand);
    let sc1 = load("sc1");
    assert_eq!(gate(&sc1, "Voter.input").0, GateKind::Vot(2));
    assert_eq!(gate(&sc1, "EP1.input").0, GateKind::Vot(3));
}

#[test]
fn hardware_layer_of_adas() {
    let dft = synthesize(&load("sc2-arch-b")).unwrap();
    let b = dft.to_builder();
    assert_eq!(
        b.gate_children("ADAS1").unwrap().1,
        ["ADAS1.transient", "ADAS1.permanent"]
    );
    assert_eq!(b.gate_children("ADAS1.transient.order").unwrap().0, GateKind::Seq);
    assert!(b.basic_event("ADAS1.transient.uncovered").unwrap().transient);
    assert!(!b.basic_event("ADAS1.permanent.uncovered").unwrap().transient);
    // EP-n and TP-n on ADAS1
    assert_eq!(b.dependency("fdep.hw.TP-n").unwrap().1, "ADAS1");
    assert_eq!(b.dependency("adep.hw.EP-s").unwrap().2, ["ADAS2"]);
}
