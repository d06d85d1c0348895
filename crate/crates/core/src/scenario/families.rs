//! Vehicle-guidance scenarios: four sensors feeding environment perception,
//! trajectory planning on ADAS platforms, and actuation through dedicated
//! ECUs. Rates of the ADAS platforms are symbolic parameters.

use indexmap::IndexMap;

use super::document::{
    ArchitectureEntry, AssignmentEntry, BlockEntry, BusEntry, ChannelEntry, HardwareEntry,
    HardwareKind, PathEntry, Rate, ScenarioDocument, TaskEntry, TemplateName,
};
use super::Redundancy;

/// Failure rate of sensors, actuators, ECUs and fallible buses.
pub const COMPONENT_RATE: f64 = 1e-7;
pub const ADAS_TRANSIENT: f64 = 1e-4;
pub const ADAS_PERMANENT: f64 = 1e-5;
pub const SAFETY_MECHANISM: f64 = 1e-5;
pub const COVERAGE_D: f64 = 0.99;
pub const COVERAGE_B: f64 = 0.9;
pub const COVERAGE_QM: f64 = 0.6;
pub const COVERAGE_PLUS: f64 = 0.999;
/// Failure-rate factor of an ADAS+ platform.
pub const PLUS_FACTOR: f64 = 10.0;

#[derive(Clone, Copy)]
enum Grade {
    D,
    Qm,
    Plus,
}

struct Doc {
    doc: ScenarioDocument,
}

impl Doc {
    fn new() -> Self {
        let mut parameters = IndexMap::new();
        parameters.insert("lambda_t".into(), ADAS_TRANSIENT);
        parameters.insert("lambda_p".into(), ADAS_PERMANENT);
        parameters.insert("lambda_sm".into(), SAFETY_MECHANISM);
        Doc {
            doc: ScenarioDocument {
                top: "system".into(),
                parameters,
                labels: IndexMap::new(),
                blocks: IndexMap::new(),
                channels: Vec::new(),
                tasks: Vec::new(),
                architecture: ArchitectureEntry::default(),
                assignment: AssignmentEntry::default(),
                hardware: IndexMap::new(),
            },
        }
    }

    fn platform(&mut self, name: &str, hw: HardwareEntry) {
        self.doc.architecture.platforms.push(name.into());
        self.doc.hardware.insert(name.into(), hw);
    }

    fn adas(&mut self, name: &str, grade: Grade) {
        let (cov_name, cov, factor) = match grade {
            Grade::D => ("cov_d", COVERAGE_D, ""),
            Grade::Qm => ("cov_qm", COVERAGE_QM, ""),
            Grade::Plus => ("cov_plus", COVERAGE_PLUS, "10*"),
        };
        debug_assert!(factor.is_empty() || PLUS_FACTOR == 10.0);
        self.doc.parameters.insert(cov_name.into(), cov);
        let rate = |p: &str| Some(Rate::Expr(format!("{factor}{p}")));
        let hw = HardwareEntry {
            kind: HardwareKind::Covered,
            transient: rate("lambda_t"),
            permanent: rate("lambda_p"),
            transient_coverage: Some(Rate::Expr(cov_name.into())),
            permanent_coverage: Some(Rate::Expr(cov_name.into())),
            safety_mechanism: rate("lambda_sm"),
            ..HardwareEntry::infallible()
        };
        self.platform(name, hw);
    }

    fn block(&mut self, name: &str, entry: BlockEntry, platform: &str) {
        self.doc.blocks.insert(name.into(), entry);
        self.doc
            .assignment
            .blocks
            .insert(name.into(), platform.into());
    }

    fn channel(&mut self, from: &str, to: &str) {
        self.doc.channels.push(ChannelEntry {
            name: None,
            from: from.into(),
            to: to.into(),
        });
    }

    fn task(&mut self, name: &str, mode: Redundancy, paths: &[(&str, &[&str])]) {
        self.doc.tasks.push(TaskEntry {
            name: name.into(),
            mode,
            paths: paths
                .iter()
                .map(|(n, blocks)| PathEntry {
                    name: n.to_string(),
                    blocks: blocks.iter().map(|b| b.to_string()).collect(),
                })
                .collect(),
        });
    }

    fn bus(&mut self, name: &str, members: Vec<String>, hw: HardwareEntry) {
        self.doc.architecture.buses.push(BusEntry {
            name: name.into(),
            connects: members,
            pairs: Vec::new(),
        });
        self.doc.hardware.insert(name.into(), hw);
    }

    /// Sensors `S1..Sn` on platforms `s1..sn`.
    fn sensors(&mut self, n: usize) -> Vec<String> {
        (1..=n)
            .map(|i| {
                let s = format!("S{i}");
                self.platform(&format!("s{i}"), HardwareEntry::basic(COMPONENT_RATE));
                self.block(&s, BlockEntry::default(), &format!("s{i}"));
                s
            })
            .collect()
    }

    /// Environment perception fed by all sensors, failing once fewer than
    /// `required` sensors work.
    fn perception(&mut self, name: &str, sensors: &[String], required: usize, platform: &str) {
        let entry = BlockEntry {
            template: TemplateName::Voter,
            threshold: Some((sensors.len() - required + 1) as u32),
            ..BlockEntry::default()
        };
        self.block(name, entry, platform);
        for s in sensors {
            self.channel(s, name);
        }
    }

    /// `AC_i` on `ECU_i` driving actuator `A_i` on `a_i`, all fed by `source`.
    fn actuation(&mut self, source: &str, k: usize) -> Vec<String> {
        let mut actuators = Vec::new();
        for i in 1..=k {
            let (ecu, a) = (format!("ECU{i}"), format!("a{i}"));
            self.platform(&ecu, HardwareEntry::basic(COMPONENT_RATE));
            self.platform(&a, HardwareEntry::basic(COMPONENT_RATE));
            self.bus(
                &format!("ECU-actuator{i}"),
                vec![ecu.clone(), a.clone()],
                HardwareEntry::infallible(),
            );
            let (ac, act) = (format!("AC{i}"), format!("A{i}"));
            self.block(&ac, BlockEntry::default(), &ecu);
            self.block(&act, BlockEntry::default(), &a);
            self.channel(source, &ac);
            self.channel(&ac, &act);
            actuators.push(act);
        }
        let refs: Vec<&str> = actuators.iter().map(|s| s.as_str()).collect();
        self.task("actuation", Redundancy::All, &[("actuators", &refs)]);
        actuators
    }

    /// A CAN bus (fallible) over every platform except the actuators.
    fn can_bus(&mut self, name: &str) {
        let members = self
            .doc
            .architecture
            .platforms
            .iter()
            .filter(|p| !(p.starts_with('a') && p[1..].parse::<usize>().is_ok()))
            .cloned()
            .collect();
        self.bus(name, members, HardwareEntry::basic(COMPONENT_RATE));
    }

    fn label(&mut self, name: &str, expr: &str) {
        self.doc.labels.insert(name.into(), expr.into());
    }
}

fn voter(threshold: u32) -> BlockEntry {
    BlockEntry {
        template: TemplateName::Voter,
        threshold: Some(threshold),
        ..BlockEntry::default()
    }
}

/// Triple modular redundancy: three EP/TP/AM paths on ADAS1..3 and a 2-of-3
/// voter on the integration ECU (architecture B).
pub fn sc1() -> ScenarioDocument {
    let mut d = Doc::new();
    let sensors = d.sensors(4);
    for i in 1..=3 {
        d.adas(&format!("ADAS{i}"), Grade::D);
    }
    d.platform("I-ECU", HardwareEntry::basic(COMPONENT_RATE));
    for i in 1..=3 {
        let p = format!("ADAS{i}");
        let (ep, tp, am) = (format!("EP{i}"), format!("TP{i}"), format!("AM{i}"));
        d.perception(&ep, &sensors, 2, &p);
        d.block(&tp, BlockEntry::default(), &p);
        d.block(&am, BlockEntry::default(), &p);
        d.channel(&ep, &tp);
        d.channel(&tp, &am);
    }
    d.block("Voter", voter(2), "I-ECU");
    for i in 1..=3 {
        d.channel(&format!("AM{i}"), "Voter");
    }
    d.task("voting", Redundancy::All, &[("voter", &["Voter"])]);
    d.actuation("Voter", 4);
    d.can_bus("CAN-BUS");
    d.doc
}

fn sc2(single_adas: bool) -> ScenarioDocument {
    let mut d = Doc::new();
    let sensors = d.sensors(4);
    let (n_hw, s_hw, sel_hw) = if single_adas {
        d.adas("ADAS", Grade::D);
        ("ADAS", "ADAS", "ADAS")
    } else {
        d.adas("ADAS1", Grade::Qm);
        d.adas("ADAS2", Grade::D);
        d.platform("I-ECU", HardwareEntry::basic(COMPONENT_RATE));
        ("ADAS1", "ADAS2", "I-ECU")
    };
    d.perception("EP-n", &sensors, 2, n_hw);
    d.block("TP-n", BlockEntry::default(), n_hw);
    d.perception("EP-s", &sensors, 2, s_hw);
    d.block("TP-s", BlockEntry::default(), s_hw);
    d.channel("EP-n", "TP-n");
    d.channel("EP-s", "TP-s");
    d.block("TCS", voter(2), sel_hw);
    d.block("AM", BlockEntry::default(), sel_hw);
    d.channel("TP-n", "TCS");
    d.channel("TP-s", "TCS");
    d.channel("TCS", "AM");
    d.task(
        "planning",
        Redundancy::All,
        &[("n-path", &["EP-n", "TP-n"]), ("s-path", &["EP-s", "TP-s"])],
    );
    d.task("selection", Redundancy::All, &[("tcs", &["TCS"])]);
    d.task("management", Redundancy::All, &[("am", &["AM"])]);
    d.actuation("AM", 4);
    d.can_bus("CAN-BUS");
    d.label("degraded", "failed(planning.n-path)");
    d.doc
}

/// Nominal path (ASIL QM) on ADAS1 and safety path (ASIL D) on ADAS2 in hot
/// standby; TCS and AM on the integration ECU (architecture B).
pub fn sc2_arch_b() -> ScenarioDocument {
    sc2(false)
}

/// The nominal/safety path concept with every function on one ADAS
/// (architecture A).
pub fn sc2_arch_a() -> ScenarioDocument {
    sc2(true)
}

/// Main path on ADAS1 and a cold-standby fallback path on ADAS2+, selected by
/// a switch on the integration ECU (architecture C).
pub fn sc3() -> ScenarioDocument {
    let mut d = Doc::new();
    let sensors = d.sensors(4);
    d.adas("ADAS1", Grade::D);
    d.adas("ADAS2+", Grade::Plus);
    d.doc.hardware["ADAS2+"].dormancy = Some(0.0);
    d.platform("I-ECU", HardwareEntry::basic(COMPONENT_RATE));
    d.perception("EP-m", &sensors, 2, "ADAS1");
    d.block("TP-m", BlockEntry::default(), "ADAS1");
    d.perception("EP-fb", &sensors, 2, "ADAS2+");
    d.block("TP-fb", BlockEntry::default(), "ADAS2+");
    d.channel("EP-m", "TP-m");
    d.channel("EP-fb", "TP-fb");
    let switch = BlockEntry {
        template: TemplateName::Switch,
        switching: Some(Rate::Number(COMPONENT_RATE)),
        primary: Some("TP-m-Switch".into()),
        ..BlockEntry::default()
    };
    d.block("Switch", switch, "I-ECU");
    d.block("AM", BlockEntry::default(), "I-ECU");
    d.channel("TP-m", "Switch");
    d.channel("TP-fb", "Switch");
    d.channel("Switch", "AM");
    d.task(
        "planning",
        Redundancy::Standby,
        &[("m-path", &["EP-m", "TP-m"]), ("fb-path", &["EP-fb", "TP-fb"])],
    );
    d.task("switching", Redundancy::All, &[("switch", &["Switch"])]);
    d.task("management", Redundancy::All, &[("am", &["AM"])]);
    d.actuation("AM", 4);
    d.can_bus("CAN-BUS");
    d.label("degraded", "failed(planning.m-path)");
    d.doc
}

/// The nominal/safety concept scaled up: one planning path per ADAS (the
/// first ASIL QM, the others ASIL D), `sensors` sensors of which `required`
/// must work, `actuators` actuators, and two redundant CAN buses between
/// which cross-platform channels alternate.
pub fn scaled_adas(
    n_adas: usize,
    sensors: usize,
    required: usize,
    actuators: usize,
) -> ScenarioDocument {
    assert!(n_adas >= 1 && required >= 1 && required <= sensors);
    let mut d = Doc::new();
    let sensor_blocks = d.sensors(sensors);
    for i in 1..=n_adas {
        d.adas(&format!("ADAS{i}"), if i == 1 { Grade::Qm } else { Grade::D });
    }
    d.platform("I-ECU", HardwareEntry::basic(COMPONENT_RATE));
    let mut paths = Vec::new();
    for i in 1..=n_adas {
        let p = format!("ADAS{i}");
        let (ep, tp) = (format!("EP{i}"), format!("TP{i}"));
        d.perception(&ep, &sensor_blocks, required, &p);
        d.block(&tp, BlockEntry::default(), &p);
        d.channel(&ep, &tp);
        paths.push((format!("path{i}"), vec![ep, tp]));
    }
    d.block("TCS", voter(n_adas as u32), "I-ECU");
    d.block("AM", BlockEntry::default(), "I-ECU");
    for i in 1..=n_adas {
        d.channel(&format!("TP{i}"), "TCS");
    }
    d.channel("TCS", "AM");
    let path_refs: Vec<(&str, Vec<&str>)> = paths
        .iter()
        .map(|(n, b)| (n.as_str(), b.iter().map(|s| s.as_str()).collect()))
        .collect();
    let path_refs: Vec<(&str, &[&str])> = path_refs.iter().map(|(n, b)| (*n, &b[..])).collect();
    d.task("planning", Redundancy::All, &path_refs);
    d.task("selection", Redundancy::All, &[("tcs", &["TCS"])]);
    d.task("management", Redundancy::All, &[("am", &["AM"])]);
    d.actuation("AM", actuators);
    d.can_bus("CAN-A");
    d.can_bus("CAN-B");
    // Both buses connect every ECU-side pair, so cross-platform channels need
    // an explicit choice.
    let mut k = 0;
    for c in &d.doc.channels {
        let from = &d.doc.assignment.blocks[&c.from];
        let to = &d.doc.assignment.blocks[&c.to];
        let internal = from == to;
        let actuator_link = to.starts_with('a') || from.starts_with('a');
        if internal || actuator_link {
            continue;
        }
        let bus = if k % 2 == 0 { "CAN-A" } else { "CAN-B" };
        k += 1;
        d.doc
            .assignment
            .channels
            .insert(format!("{}-{}", c.from, c.to), bus.into());
    }
    d.label("degraded", "failed(planning.path1)");
    d.doc
}
