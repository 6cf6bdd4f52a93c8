//! Fast built-in checks of the model against hand-computed values.

use orsim_core::delaymodel::{adjusted_priority_ranks, relaying_delay_slots};
use orsim_core::graphmodel::{fig2_fixture, neighbor_matrices, CandidateSet, NodeId};
use orsim_core::rnr::{classify, RelayKind};
use orsim_core::selector::{order_numbers, relative_variance, Direction};
use orsim_core::simcore::{run_scenario, Policy, ScenarioConfig};
use orsim_core::{build_cfs, CfsPolicy, LinkProbModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn fixture_cfs() -> (orsim_core::Topology, CandidateSet) {
    let topo = fig2_fixture();
    let cfs = build_cfs(
        &topo,
        &LinkProbModel::Constant(0.5),
        NodeId(0),
        NodeId(9),
        &CfsPolicy::default(),
    )
    .expect("fixture sender has progress neighbors");
    (topo, cfs)
}

pub fn run_selftest() -> Vec<Check> {
    let mut out = Vec::new();

    let (topo, cfs) = fixture_cfs();
    let m = neighbor_matrices(&topo, &cfs);
    let pos = |ids: &[usize]| -> Vec<usize> {
        ids.iter()
            .map(|&i| cfs.position_of(NodeId(i)).expect("fixture node"))
            .collect()
    };
    let full = classify(&pos(&[1, 2, 3, 7]), &m);
    let part = classify(&pos(&[1, 2, 3]), &m);
    let none = classify(&pos(&[2, 5, 6]), &m);
    out.push(check(
        "fixture classification",
        full.kind == RelayKind::ONetwork
            && part.kind == RelayKind::SNetwork { parent_degree: 4 }
            && none.kind == RelayKind::NotRelay
            && none.sum.0 == 1,
        format!(
            "{:?} / {:?} / {:?} D={}",
            full.kind, part.kind, none.kind, none.sum.0
        ),
    ));

    let slots = relaying_delay_slots(&[0.8, 0.6]);
    out.push(check(
        "two-node relaying delay",
        (slots - 0.28).abs() < 1e-12,
        format!("{slots} slots"),
    ));

    let ranks = adjusted_priority_ranks(
        &[0.9, 0.87, 0.83, 0.79, 0.75],
        &[0.65, 0.78, 0.8, 0.69, 0.57],
    );
    out.push(check(
        "adjusted priorities",
        ranks == vec![3, 1, 2, 4, 5],
        format!("{ranks:?}"),
    ));

    let a = relative_variance(&[29.0, 45.0, 63.0]).expect("nonzero mean");
    let b = relative_variance(&[0.27, 0.68, 0.49]).expect("nonzero mean");
    let r1 = order_numbers(&[29.0, 45.0, 63.0], Direction::HigherBetter);
    let r2 = order_numbers(&[0.27, 0.68, 0.49], Direction::HigherBetter);
    let ub = a * r1[1] as f64 + b * r2[1] as f64;
    out.push(check(
        "rank-weighted score",
        (a - 0.0925).abs() < 5e-4 && (b - 0.122).abs() < 5e-4 && (ub - 0.551).abs() < 1e-3,
        format!("rv = {a:.4}, {b:.4}; U^F(b) = {ub:.4}"),
    ));

    let cfg = ScenarioConfig {
        nodes: 30,
        cbr: 3,
        sim_time: 3.0,
        area: orsim_core::Area::square(600.0),
        ..ScenarioConfig::default()
    };
    let x = run_scenario(&cfg, 5);
    let y = run_scenario(&cfg, 5);
    out.push(check(
        "deterministic replication",
        format!("{x:?}") == format!("{y:?}"),
        String::new(),
    ));

    let perfect = ScenarioConfig {
        link_model: LinkProbModel::Constant(1.0),
        policy: Policy::Dda,
        ..cfg
    };
    let row = run_scenario(&perfect, 5).expect("valid scenario");
    out.push(check(
        "no duplicates on perfect links",
        row.duplicates == 0,
        format!("{} duplicates", row.duplicates),
    ));
    out
}
