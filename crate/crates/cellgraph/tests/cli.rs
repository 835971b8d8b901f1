//! Black-box tests of the `cellgraph` binary: exit-code contract,
//! staged-pipeline equivalence with the one-shot builders, format
//! conversions, and configuration precedence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_cellgraph")
}

fn run(args: &[&str]) -> Output {
    Command::new(exe()).args(args).output().expect("spawn cellgraph")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "`{}` failed with {:?}:\n{}",
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref())
        .unwrap_or_else(|e| panic!("read {}: {e}", path.as_ref().display()))
}

/// A small synthetic city shared by the pipeline tests.
fn make_city(dir: &TempDir) -> (String, String) {
    run_ok(&[
        "synth-city",
        "--cells-per-scenario",
        "4",
        "--days",
        "2",
        "--seed",
        "5",
        "--out",
        &p(dir, "city"),
    ]);
    (p(dir, "city/flows.csv"), p(dir, "city/cells.csv"))
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["bssn", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    // missing required --cells
    let out = run(&["bssn", "--flows", "x.csv", "--out", "y"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--cells"));
}

#[test]
fn data_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "not,a,flow,header\n").unwrap();
    let out = run(&[
        "aggregate",
        "--flows",
        bad.to_str().unwrap(),
        "--key",
        "cell",
        "--out",
        &p(&dir, "out"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    // nonexistent input file is a data error, not a crash
    let out = run(&[
        "aggregate",
        "--flows",
        &p(&dir, "missing.csv"),
        "--key",
        "cell",
        "--out",
        &p(&dir, "out2"),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn staged_chain_matches_one_shot_bssn() {
    let dir = TempDir::new().unwrap();
    let (flows, cells) = make_city(&dir);
    let span: &[&str] = &["--begin", "0", "--end", "172800"];

    let mut bssn_args = vec!["bssn", "--flows", &flows, "--cells", &cells];
    bssn_args.extend_from_slice(span);
    let net = p(&dir, "net");
    bssn_args.extend_from_slice(&["--out", &net]);
    run_ok(&bssn_args);

    let mut agg_args = vec!["aggregate", "--flows", &flows, "--key", "cell"];
    agg_args.extend_from_slice(span);
    let agg = p(&dir, "agg");
    agg_args.extend_from_slice(&["--out", &agg]);
    run_ok(&agg_args);
    let series = p(&dir, "agg/series.csv");
    run_ok(&["correlate", "--series", &series, "--out", &p(&dir, "corr")]);
    run_ok(&[
        "pmfg",
        "--matrix",
        &p(&dir, "corr/matrix.csv"),
        "--out",
        &p(&dir, "pm"),
    ]);
    run_ok(&[
        "communities",
        "--graph",
        &p(&dir, "pm/graph.json"),
        "--series",
        &series,
        "--out",
        &p(&dir, "comm"),
    ]);

    assert_eq!(
        read(p(&dir, "comm/partition.csv")),
        read(p(&dir, "net/partition.csv")),
        "staged pipeline must reproduce the one-shot partition byte for byte"
    );
}

#[test]
fn export_reproduces_pipeline_outputs() {
    let dir = TempDir::new().unwrap();
    let (flows, cells) = make_city(&dir);
    run_ok(&[
        "bssn", "--flows", &flows, "--cells", &cells, "--begin", "0", "--end", "172800",
        "--out", &p(&dir, "net"),
    ]);
    for format in ["graphml", "dot", "json"] {
        run_ok(&[
            "export",
            "--graph",
            &p(&dir, "net/graph.json"),
            "--format",
            format,
            "--out",
            &p(&dir, "exp"),
        ]);
        let ext = format; // file extension matches the format name
        assert_eq!(
            read(dir.path().join("exp").join(format!("graph.{ext}"))),
            read(dir.path().join("net").join(format!("graph.{ext}"))),
            "{format} conversion must match the pipeline's own export"
        );
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let (flows, _) = make_city(&dir);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"bin_width": 7200, "span": [0, 172800]}"#).unwrap();

    run_ok(&[
        "aggregate", "--flows", &flows, "--key", "cell",
        "--config", cfg.to_str().unwrap(), "--bin", "3600",
        "--out", &p(&dir, "agg"),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(p(&dir, "agg/manifest.json"))).unwrap();
    assert_eq!(manifest["config"]["bin_width"], 3600, "flag beats config file");
    assert_eq!(manifest["config"]["span"][1], 172_800, "file value kept where no flag");
    // 48 bins of 3600 s over two days
    let series = String::from_utf8(read(p(&dir, "agg/series.csv"))).unwrap();
    let header = series.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 3 + 48);

    // unknown keys in the config file are rejected, not ignored
    let typo = dir.path().join("typo.json");
    std::fs::write(&typo, r#"{"bin": 3600}"#).unwrap();
    let out = run(&[
        "aggregate", "--flows", &flows, "--key", "cell",
        "--config", typo.to_str().unwrap(), "--out", &p(&dir, "x"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
}

#[test]
fn stats_subcommands_report_values() {
    let dir = TempDir::new().unwrap();
    let (flows, _) = make_city(&dir);
    run_ok(&[
        "aggregate", "--flows", &flows, "--key", "cell", "--begin", "0", "--end", "172800",
        "--out", &p(&dir, "agg"),
    ]);
    let series = p(&dir, "agg/series.csv");

    let acf = run_ok(&["stats", "acf", "--series", &series, "--entity", "bs000", "--max-lag", "6"]);
    let mut lines = acf.lines();
    assert_eq!(lines.next(), Some("lag,r"));
    assert_eq!(lines.next(), Some("0,1"));
    assert_eq!(acf.lines().count(), 8);

    let xcf = run_ok(&[
        "stats", "xcf", "--series", &series, "--a", "bs000", "--b", "bs001", "--max-lag", "3",
    ]);
    assert_eq!(xcf.lines().count(), 8); // header + lags -3..=3

    run_ok(&["synth-subs", "--n", "200", "--alpha", "0.5", "--seed", "1", "--out", &p(&dir, "subs")]);
    let conc = run_ok(&[
        "stats", "concentration", "--totals", &p(&dir, "subs/totals.csv"),
        "--p", "0.2", "--p", "1.0",
    ]);
    let mut shares = conc.lines().map(|l| {
        let (name, value) = l.split_once(" = ").expect("share line");
        assert!(name.starts_with("top_share("));
        value.parse::<f64>().unwrap()
    });
    let s02 = shares.next().unwrap();
    let s10 = shares.next().unwrap();
    assert!((0.2..=1.0).contains(&s02));
    assert!((s10 - 1.0).abs() < 1e-12);
}

#[test]
fn usn_pipeline_writes_unlabeled_partition() {
    let dir = TempDir::new().unwrap();
    run_ok(&[
        "synth-calls", "--users-per-block", "8", "--blocks", "3", "--seed", "2",
        "--out", &p(&dir, "calls"),
    ]);
    let stdout = run_ok(&[
        "usn", "--calls", &p(&dir, "calls/calls.csv"), "--begin", "0", "--end", "86400",
        "--out", &p(&dir, "net"),
    ]);
    assert!(stdout.starts_with("usn: 24 users"), "got: {stdout}");
    let partition = String::from_utf8(read(p(&dir, "net/partition.csv"))).unwrap();
    let mut lines = partition.lines();
    assert_eq!(lines.next(), Some("node_id,community_id,scenario_label"));
    // no scenario labels for user graphs: third field stays empty
    assert!(lines.clone().all(|l| l.ends_with(',')));
    assert_eq!(lines.count(), 24);
    for name in ["graph.json", "graph.graphml", "graph.dot", "manifest.json"] {
        assert!(dir.path().join("net").join(name).exists(), "{name} missing");
    }
}

#[test]
fn scenario_csv_lists_planted_labels() {
    let dir = TempDir::new().unwrap();
    let (_, _) = make_city(&dir);
    let scenarios = String::from_utf8(read(p(&dir, "city/scenarios.csv"))).unwrap();
    let mut lines = scenarios.lines();
    assert_eq!(lines.next(), Some("entity_id,label"));
    assert_eq!(lines.clone().count(), 16); // 4 scenarios x 4 cells
    for expected in ["office", "residential", "shopping", "transport"] {
        assert!(
            scenarios.lines().any(|l| l.ends_with(expected)),
            "missing scenario {expected}"
        );
    }
}

#[test]
fn manifest_records_inputs_and_tool_version() {
    let dir = TempDir::new().unwrap();
    let (flows, cells) = make_city(&dir);
    run_ok(&[
        "bssn", "--flows", &flows, "--cells", &cells, "--begin", "0", "--end", "172800",
        "--out", &p(&dir, "net"),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(p(&dir, "net/manifest.json"))).unwrap();
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    let inputs = manifest["inputs"].as_object().unwrap();
    assert_eq!(inputs.len(), 2);
    for digest in inputs.values() {
        let digest = digest.as_str().unwrap();
        assert_eq!(digest.len(), 64);
        assert!(digest.chars().all(|c| c.is_ascii_hexdigit()));
    }
    assert!(manifest["command"].as_array().unwrap().len() >= 10);
    assert!(manifest["duration_ms"].is_u64());
    assert_eq!(manifest["config"]["bin_width"], 3600);
}

#[test]
fn communities_accepts_custom_profiles() {
    let dir = TempDir::new().unwrap();
    let (flows, cells) = make_city(&dir);
    run_ok(&[
        "bssn", "--flows", &flows, "--cells", &cells, "--begin", "0", "--end", "172800",
        "--out", &p(&dir, "net"),
    ]);
    run_ok(&[
        "aggregate", "--flows", &flows, "--key", "cell", "--begin", "0", "--end", "172800",
        "--out", &p(&dir, "agg"),
    ]);
    // one custom profile: everything maps to it regardless of shape
    let mut profile = String::from("label");
    for h in 0..24 {
        profile.push_str(&format!(",h{h}"));
    }
    profile.push('\n');
    profile.push_str("custom");
    for _ in 0..24 {
        profile.push_str(&format!(",{}", 1.0 / 24.0));
    }
    profile.push('\n');
    let profiles = dir.path().join("profiles.csv");
    std::fs::write(&profiles, profile).unwrap();

    run_ok(&[
        "communities",
        "--graph",
        &p(&dir, "net/graph.json"),
        "--series",
        &p(&dir, "agg/series.csv"),
        "--profiles",
        profiles.to_str().unwrap(),
        "--threshold",
        "10",
        "--out",
        &p(&dir, "comm"),
    ]);
    let partition = String::from_utf8(read(p(&dir, "comm/partition.csv"))).unwrap();
    assert!(partition.lines().skip(1).all(|l| l.ends_with(",custom")));
}

fn graphml_is_well_formed(text: &str) {
    // cheap structural check: tags balance and the graphml root closes
    assert!(text.starts_with("<?xml"));
    assert_eq!(text.matches("<node ").count(), text.matches("</node>").count());
    assert_eq!(text.matches("<edge ").count(), text.matches("</edge>").count());
    assert!(text.trim_end().ends_with("</graphml>"));
}

#[test]
fn asn_sizes_nodes_and_exports_well_formed_graphml() {
    let dir = TempDir::new().unwrap();
    let (flows, _) = make_city(&dir);
    run_ok(&[
        "asn", "--flows", &flows, "--begin", "0", "--end", "172800",
        "--out", &p(&dir, "net"),
    ]);
    let doc: serde_json::Value = serde_json::from_slice(&read(p(&dir, "net/graph.json"))).unwrap();
    let nodes = doc["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 4); // web, video, im, music
    for node in nodes {
        assert_eq!(node["kind"], "app");
        assert!(node["size"].as_f64().unwrap() >= 1.0, "degree-sized node");
    }
    graphml_is_well_formed(&String::from_utf8(read(p(&dir, "net/graph.graphml"))).unwrap());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let (flows, cells) = make_city(&dir);
    for (out, threads) in [("a", "1"), ("b", "4")] {
        run_ok(&[
            "bssn", "--flows", &flows, "--cells", &cells, "--begin", "0", "--end", "172800",
            "--threads", threads, "--out", &p(&dir, out),
        ]);
    }
    for name in ["graph.json", "partition.csv"] {
        assert_eq!(
            read(dir.path().join("a").join(name)),
            read(dir.path().join("b").join(name)),
            "{name} differs with thread count"
        );
    }
}

#[test]
fn log_level_env_var_controls_verbosity() {
    let dir = TempDir::new().unwrap();
    let (flows, cells) = make_city(&dir);
    // drop one cell from the table: triggers an unknown-cell warning
    let table = String::from_utf8(read(&cells)).unwrap();
    let mut lines: Vec<&str> = table.lines().collect();
    lines.remove(lines.len() - 1);
    let trimmed = dir.path().join("fewer_cells.csv");
    std::fs::write(&trimmed, lines.join("\n") + "\n").unwrap();

    let mut base = Command::new(exe());
    base.args([
        "bssn", "--flows", &flows, "--cells", trimmed.to_str().unwrap(),
        "--begin", "0", "--end", "172800", "--out", &p(&dir, "quiet"),
    ]);
    base.env("CELLGRAPH_LOG", "error");
    let quiet = base.output().unwrap();
    assert!(quiet.status.success());
    assert!(
        !String::from_utf8_lossy(&quiet.stderr).contains("excluding"),
        "warn output despite CELLGRAPH_LOG=error"
    );

    let mut loud = Command::new(exe());
    loud.args([
        "bssn", "--flows", &flows, "--cells", trimmed.to_str().unwrap(),
        "--begin", "0", "--end", "172800", "--out", &p(&dir, "loud"),
    ]);
    loud.env("CELLGRAPH_LOG", "warn");
    let loud = loud.output().unwrap();
    assert!(loud.status.success());
    assert!(
        String::from_utf8_lossy(&loud.stderr).contains("excluding"),
        "expected an unknown-cell warning at warn level"
    );
}

#[test]
fn synth_city_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    for out in ["one", "two"] {
        run_ok(&[
            "synth-city", "--cells-per-scenario", "3", "--days", "1", "--seed", "7",
            "--out", &p(&dir, out),
        ]);
    }
    for name in ["flows.csv", "cells.csv", "scenarios.csv"] {
        assert_eq!(
            read(dir.path().join("one").join(name)),
            read(dir.path().join("two").join(name)),
            "{name} differs between identical-seed runs"
        );
    }
}

#[test]
fn outputs_land_in_created_directory() {
    let dir = TempDir::new().unwrap();
    let nested: PathBuf = dir.path().join("deep/nested/out");
    run_ok(&[
        "synth-subs", "--n", "50", "--alpha", "1.0", "--seed", "0",
        "--out", nested.to_str().unwrap(),
    ]);
    assert!(nested.join("totals.csv").exists());
    assert!(nested.join("manifest.json").exists());
}
