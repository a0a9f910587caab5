use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sdfw::report::from_json;
use sdfw_core::topology::SwitchId;

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn sdfw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdfw"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn flat_scenario_report_has_a_mitigation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = sdfw(&[
        "run",
        "--scenario",
        manifest("scenarios/flat100_synflood.json")
            .to_str()
            .unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(o.stdout.is_empty());
    let r = from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(!r.mitigations.is_empty());
    assert!(r.conservation.holds());
}

#[test]
fn tree_scenario_detects_on_leaf_agents() {
    let o = sdfw(&[
        "run",
        "--scenario",
        manifest("scenarios/tree_d2_f8_synflood.json")
            .to_str()
            .unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let r = from_json(&text(&o.stdout)).unwrap();
    // Attacker sits under the first leaf (switch 2), the victim under the last (switch 9).
    let switches: Vec<SwitchId> = r.mitigations.iter().map(|m| m.switch).collect();
    assert!(
        switches.contains(&SwitchId(2)) && switches.contains(&SwitchId(9)),
        "{switches:?}"
    );
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = manifest("scenarios/tree_d2_f8_synflood_nosdfw.json");
    let mut reports = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name);
        let o = sdfw(&[
            "run",
            "--scenario",
            scenario.to_str().unwrap(),
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        reports.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(from_json(&text(&reports[0])).unwrap().seed, 9);
}

#[test]
fn table_format_compares_both_variants() {
    let o = sdfw(&[
        "run",
        "--scenario",
        manifest("scenarios/flat100_synflood_nosdfw.json")
            .to_str()
            .unwrap(),
        "--format",
        "table",
    ]);
    assert!(o.status.success());
    let out = text(&o.stdout);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3, "{out}");
    assert!(lines[0].contains("BW-No-SDFW") && lines[0].contains("Latency-SDFW"));
    assert!(lines[2].trim_start().starts_with("100 |"));
}

#[test]
fn bad_inputs_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.json");

    let malformed = write(&dir, "bad.json", "{\"topology\": ");
    let o = sdfw(&[
        "run",
        "--scenario",
        &malformed,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("bad.json"));
    assert!(!out.exists());

    let o = sdfw(&["run", "--scenario", "/nonexistent/x.json"]);
    assert_eq!(o.status.code(), Some(4));

    let bad_traffic = write(
        &dir,
        "traffic.json",
        r#"{"topology":{"kind":"flat","params":{"hosts":3}},"policies":[],"sdfw_enabled":true,"seed":1,"duration_s":1.0,
            "traffic":[{"kind":"syn_flood","src":"10.9.9.9","dst":"10.0.3.2","dport":80,"count":5,"rate":10.0}]}"#,
    );
    let o = sdfw(&["run", "--scenario", &bad_traffic]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        text(&o.stderr).contains("traffic[0]"),
        "{}",
        text(&o.stderr)
    );

    // Equal-priority allow and deny that only partly overlap cannot be compiled.
    let ambiguous = write(
        &dir,
        "amb.json",
        r#"[{"id":"a","src":["10.0.3.1"],"dst":["10.0.3.2"],"proto":"any","action":"allow","priority":5},
            {"id":"d","src":["10.0.3.1"],"dst":["10.0.3.2"],"proto":"tcp","dst_port":22,"action":"deny","priority":5}]"#,
    );
    let o = sdfw(&["compile", "--policies", &ambiguous, "--topology", "flat:2"]);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o.stderr));
    assert!(text(&o.stderr).contains("amb.json"));
}

#[test]
fn check_policies_examples() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(&dir, "empty.json", "[]");
    let o = sdfw(&["check-policies", &empty]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(text(&o.stdout), "no conflicts\n");

    let o = sdfw(&[
        "check-policies",
        manifest("policies/shadowing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = text(&o.stdout);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("shadowing: block-all vs web"), "{out}");

    let o = sdfw(&[
        "check-policies",
        manifest("policies/single_allow.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));

    let broken = write(&dir, "broken.json", "[{\"id\": 3}]");
    let o = sdfw(&["check-policies", &broken]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("[0].id"), "{}", text(&o.stderr));
}

#[test]
fn compile_examples() {
    let o = sdfw(&[
        "compile",
        "--policies",
        manifest("policies/single_allow.json").to_str().unwrap(),
        "--topology",
        "flat:2",
    ]);
    assert!(o.status.success());
    let out = text(&o.stdout);
    let rules: Vec<&str> = out.lines().filter(|l| l.contains("actions=")).collect();
    assert_eq!(rules.len(), 3);
    assert!(rules[0].ends_with("actions=ct(table=0)"));
    assert!(
        rules[1].contains("ct_state=+new") && rules[1].ends_with("actions=ct(commit),output:2")
    );
    assert!(rules[2].contains("ct_state=+est") && rules[2].ends_with("actions=output:2"));

    let dir = tempfile::tempdir().unwrap();
    let deny = write(
        &dir,
        "deny.json",
        r#"[{"id":"d","src":["10.0.3.1"],"dst":["10.0.3.2"],"proto":"any","action":"deny","priority":9}]"#,
    );
    let o = sdfw(&["compile", "--policies", &deny, "--topology", "flat:2"]);
    let out = text(&o.stdout);
    let rules: Vec<&str> = out.lines().filter(|l| l.contains("actions=")).collect();
    assert_eq!(rules.len(), 1);
    assert!(
        rules[0].ends_with("priority=9,nw_src=10.0.3.1,nw_dst=10.0.3.2 actions=drop"),
        "{out}"
    );

    let cross = write(
        &dir,
        "cross.json",
        r#"[{"id":"x","src":["10.0.0.1"],"dst":["10.0.0.4"],"proto":"tcp","action":"allow","priority":50}]"#,
    );
    let o = sdfw(&["compile", "--policies", &cross, "--topology", "tree:2,2"]);
    let out = text(&o.stdout);
    let populated = out
        .lines()
        .filter(|l| l.starts_with('s') && !l.contains("(0 rules)"))
        .count();
    assert_eq!(populated, 3, "{out}");

    let o = sdfw(&[
        "compile",
        "--scenario",
        manifest("scenarios/tree_d2_f8_synflood.json")
            .to_str()
            .unwrap(),
    ]);
    assert!(o.status.success());

    let o = sdfw(&["compile", "--policies", &cross, "--topology", "ring:4"]);
    assert_eq!(o.status.code(), Some(2));
}
