use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use orsim::config::ExperimentConfig;
use orsim::explain::explain_selection;
use orsim_core::graphmodel::{fig2_fixture, Topology};
use orsim_core::NodeId;

const TINY: &str = "area = 500\nnode_counts = 20,30\ncbr_connections = 2,4\ndensity_cbr = 3\nload_nodes = 25\nseeds = 1,2,3\nsim_time = 3\n";

fn orsim(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_orsim"));
    cmd.args(args).env_remove("ORSIM_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/fig2.nodes")
}

fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/tiny_density.csv")
}

fn run_tiny(dir: &Path, sweep: &str, config: &str, envs: &[(&str, &str)]) -> String {
    let conf = dir.join("tiny.conf");
    fs::write(&conf, config).unwrap();
    let out = dir.join("out");
    let o = orsim(
        &[
            sweep,
            "--config",
            conf.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        envs,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(out.join(format!("{sweep}.csv"))).unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).expect("stderr is one json document")
}

#[test]
fn density_csv_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_tiny(dir.path(), "density", TINY, &[]);
    let golden = fs::read_to_string(golden_path()).unwrap();
    assert_eq!(csv, golden);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("policy,nodes,cbr,seed,mean_delay_ms,pdr,throughput,dup_per_delivery,failures")
    );
    assert_eq!(lines.clone().count(), 2 * 3 * 3);
    for l in lines {
        assert_eq!(l.split(',').count(), 9, "{l}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_tiny(dir.path(), "load", TINY, &[("ORSIM_THREADS", "1")]);
    let b = run_tiny(dir.path(), "load", TINY, &[("ORSIM_THREADS", "4")]);
    let c = run_tiny(dir.path(), "load", TINY, &[]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a.lines().count(), 1 + 2 * 3 * 3);
}

fn t975(df: usize) -> f64 {
    [
        12.706204736174707,
        4.302652729749464,
        3.182446305284263,
        2.7764451051977987,
        2.570581835636314,
    ][df - 1]
}

#[test]
fn aggregates_can_be_recomputed_from_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_tiny(dir.path(), "density", TINY, &[]);
    let agg = fs::read_to_string(dir.path().join("out/density_agg.dat")).unwrap();
    let rows: Vec<Vec<String>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    let data: Vec<Vec<&str>> = agg
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().collect())
        .collect();
    assert_eq!(data.len(), 2 * 3);
    let mut block = 0;
    let mut policy_of_block = Vec::new();
    for r in &rows {
        if !policy_of_block.contains(&r[0]) {
            policy_of_block.push(r[0].clone());
        }
    }
    for (i, d) in data.iter().enumerate() {
        if i > 0 && i % 2 == 0 {
            block += 1;
        }
        let policy = &policy_of_block[block];
        let group: Vec<&Vec<String>> = rows
            .iter()
            .filter(|r| {
                &r[0] == policy && r[1] == d[0] && r[2] == d[1] && !r[8].starts_with("error")
            })
            .collect();
        assert_eq!(d[2].parse::<usize>().unwrap(), group.len());
        for (m, col) in (4..8).enumerate() {
            let xs: Vec<f64> = group
                .iter()
                .map(|r| r[col].parse::<f64>().unwrap())
                .filter(|x| !x.is_nan())
                .collect();
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let ci = if n < 2 {
                0.0
            } else {
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                t975(n - 1) * (var / n as f64).sqrt()
            };
            let got_mean: f64 = d[3 + 2 * m].parse().unwrap();
            let got_ci: f64 = d[4 + 2 * m].parse().unwrap();
            assert!(
                (got_mean - mean).abs() <= 1e-9 * mean.abs().max(1.0),
                "{got_mean} vs {mean}"
            );
            assert!(
                (got_ci - ci).abs() <= 1e-9 * ci.abs().max(1.0),
                "{got_ci} vs {ci}"
            );
        }
    }
}

#[test]
fn perfect_links_deliver_every_packet() {
    let dir = tempfile::tempdir().unwrap();
    let config = "area = 300\nnode_counts = 30,40\ndensity_cbr = 2\nseeds = 1,2,3\nsim_time = 3\nlink_model = constant\nlink_prob = 1\ncbr_rate = 1\n";
    let csv = run_tiny(dir.path(), "density", config, &[]);
    for l in csv.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[5], "1", "{l}");
    }
}

#[test]
fn explain_reports_fixture_selection() {
    let path = fixture_path();
    let o = orsim(
        &[
            "explain",
            "--topology",
            path.to_str().unwrap(),
            "--sender",
            "0",
            "--destination",
            "9",
        ],
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("(1,2,3,7)            o-network"));
    assert!(text.contains("(2,5,6)              D = 1 not-relay"));

    let topo = Topology::from_node_file(&fs::read_to_string(&path).unwrap(), None).unwrap();
    let lib = explain_selection(&topo, NodeId(0), NodeId(9), &ExperimentConfig::default()).unwrap();
    assert_eq!(text, lib.text);
    let chosen: Vec<String> = lib.chosen_nodes().iter().map(|n| n.to_string()).collect();
    let line = text.lines().find(|l| l.starts_with("chosen: ")).unwrap();
    assert!(line.ends_with(&chosen.join(" > ")), "{line}");
    assert_eq!(topo.node_count(), fig2_fixture().node_count());
}

#[test]
fn explain_on_any_fixture_agrees_with_the_library() {
    use orsim_core::selector::select_relay_network;
    use orsim_core::{build_cfs, neighbor_matrices, CfsPolicy};
    let topo = fig2_fixture();
    let config = ExperimentConfig::default();
    for s in 0..8 {
        for d in 0..10 {
            let Ok(e) = explain_selection(&topo, NodeId(s), NodeId(d), &config) else {
                continue;
            };
            let cfs = build_cfs(
                &topo,
                &config.link_model,
                NodeId(s),
                NodeId(d),
                &CfsPolicy::default(),
            )
            .unwrap();
            if cfs.len() < 2 {
                continue;
            }
            let sel =
                select_relay_network(&cfs, &neighbor_matrices(&topo, &cfs), &config.selector())
                    .unwrap();
            let want: Vec<NodeId> = sel
                .node_priorities
                .iter()
                .map(|&i| cfs.members[i])
                .collect();
            assert_eq!(e.chosen_nodes(), want);
        }
    }
}

#[test]
fn validation_errors_are_json_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "node_counts = [0]\n").unwrap();
    let o = orsim(&["density", "--config", conf.to_str().unwrap()], &[]);
    assert!(!o.status.success());
    let v = stderr_json(&o);
    assert_eq!(v["error"]["kind"], "config");
    assert_eq!(v["error"]["key"], "node_counts");

    fs::write(&conf, "wobble = 1\n").unwrap();
    let o = orsim(&["load", "--config", conf.to_str().unwrap()], &[]);
    assert!(!o.status.success());
    assert_eq!(stderr_json(&o)["error"]["key"], "wobble");

    let o = orsim(&["density", "--policies", "dda,olsr"], &[]);
    assert_eq!(stderr_json(&o)["error"]["key"], "policies");

    let o = orsim(&["selftest"], &[("ORSIM_THREADS", "0")]);
    assert!(o.status.success());
    let o = orsim(
        &["density", "--profile", "desk"],
        &[("ORSIM_THREADS", "zero")],
    );
    assert!(!o.status.success());
    assert_eq!(stderr_json(&o)["error"]["kind"], "env");

    let o = orsim(&["fly"], &[]);
    assert!(!o.status.success());
    assert_eq!(stderr_json(&o)["error"]["kind"], "usage");

    let o = orsim(
        &[
            "explain",
            "--topology",
            "/nonexistent/file",
            "--sender",
            "0",
            "--destination",
            "1",
        ],
        &[],
    );
    assert_eq!(stderr_json(&o)["error"]["kind"], "io");
}

#[test]
fn selftest_passes() {
    let o = orsim(&["selftest"], &[]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
}

#[test]
fn help_exits_cleanly() {
    let o = orsim(&["--help"], &[]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("density"));
}
