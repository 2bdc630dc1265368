use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uclab"))
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad report ({e}): {}", String::from_utf8_lossy(&out.stderr)))
}

fn schema(name: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(repo().join("schemas").join(name)).unwrap();
    jsonschema::draft202012::new(&serde_json::from_str(&text).unwrap()).unwrap()
}

#[test]
fn default_roundtrip_succeeds_everywhere() {
    let out = run(&["roundtrip"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let layers = r["layers"].as_array().unwrap();
    assert_eq!(layers.len(), 6);
    for l in layers {
        assert_eq!(l["failures"], 0, "{l}");
        assert_eq!(l["success_rate"], 1.0);
    }
}

#[test]
fn exact_roundtrip_enumerates_base_keys() {
    let out = run(&["roundtrip", "--exact"]);
    assert_eq!(out.status.code(), Some(0));
    let base = &report(&out)["layers"][0];
    assert_eq!(base["mode"], "exhaustive");
    // n = 2: four bases times four pads, two messages each.
    assert_eq!(base["cases"], 32);
}

#[test]
fn corrupted_key_fails_with_runtime_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"version":1,"seed":7,"roundtrip":{"keys":8,"corrupt_key":true}}"#);
    let out = run(&["--config", cfg.to_str().unwrap(), "roundtrip"]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["passed"], false);
    for l in r["layers"].as_array().unwrap() {
        assert!(l["failures"].as_u64().unwrap() > 0, "{l}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.json",
        r#"{"version":1,"seed":42,"game":{"game":"clone","trials":300,"scheme":"ucbit","strategy":"bb84_broadcast"}}"#,
    );
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        assert_eq!(run(&["--config", cfg, "--out", p.to_str().unwrap(), "run-game"]).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let other = run(&["--config", cfg, "--seed", "43", "run-game"]);
    assert_ne!(other.stdout, std::fs::read(&a).unwrap());
}

#[test]
fn single_copy_twirl_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.json", r#"{"version":1,"twirl":{"n":2,"m":2,"t":[1],"pairs":5}}"#);
    let out = run(&["--config", cfg.to_str().unwrap(), "verify-twirl", "--exact"]);
    assert_eq!(out.status.code(), Some(0));
    let check = &report(&out)["checks"][0];
    assert!(check["max_sim_distance"].as_f64().unwrap() <= 1e-9);
    assert_eq!(check["mc_pairs"], 0);
}

#[test]
fn tight_twirl_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "t.json",
        r#"{"version":1,"twirl":{"n":2,"m":2,"t":[1],"pairs":1,"mc_pairs":1,"mc_samples":50,"mc_tolerance":1e-12}}"#,
    );
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "verify-twirl"]).status.code(), Some(3));
}

#[test]
fn copy_on_classical_control_always_wins_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trials.csv");
    let body = format!(
        r#"{{"version":1,"seed":1,"stack":{{"base":"classical_control"}},
            "game":{{"game":"clone","trials":50,"scheme":"expand","strategy":"copy","csv":{}}}}}"#,
        serde_json::to_string(csv.to_str().unwrap()).unwrap()
    );
    let cfg = write_config(dir.path(), "g.json", &body);
    let out = run(&["--config", cfg.to_str().unwrap(), "run-game"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["stats"]["estimate"], 1.0);
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial,b,guesses,win"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn guessing_stays_at_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.json", r#"{"version":1,"seed":5,"game":{"game":"clone","trials":4000,"scheme":"ucbit","strategy":"guessing"}}"#);
    let out = run(&["--config", cfg.to_str().unwrap(), "--exact", "run-game"]);
    let r = report(&out);
    let est = r["stats"]["estimate"].as_f64().unwrap();
    // 3.3 standard errors: a false alarm about once in a thousand seeds.
    assert!((est - 0.5).abs() <= 3.3 * (0.25f64 / 4000.0).sqrt(), "{est}");
    let ci = r["stats"]["ci"].as_array().unwrap();
    assert!(ci[0].as_f64().unwrap() <= est && est <= ci[1].as_f64().unwrap());
    assert_eq!(r["exact"], 0.5);
}

#[test]
fn reduction_reports_both_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.json",
        r#"{"version":1,"seed":2,"stack":{"base":"classical_control"},
            "game":{"game":"clone","trials":100,"scheme":"expand","strategy":"guessing","reduction":true}}"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "run-game"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let p = &r["paired"];
    let direct = r["stats"]["estimate"].as_f64().unwrap();
    let wrapped = p["wrapped"]["estimate"].as_f64().unwrap();
    assert!((p["difference"].as_f64().unwrap() - (wrapped - direct)).abs() < 1e-12);
    assert_eq!(p["wrapped"]["scheme"]["scheme"], "classical-control");
}

#[test]
fn bad_configs_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("version", r#"{"version":2}"#, "roundtrip"),
        ("syntax", r#"{"version":1,"#, "roundtrip"),
        ("unknown", r#"{"version":1,"bogus":true}"#, "roundtrip"),
        ("message_len", r#"{"version":1,"stack":{"message_len":0}}"#, "roundtrip"),
        ("no_game", r#"{"version":1}"#, "run-game"),
        ("mismatch", r#"{"version":1,"game":{"game":"clone","trials":5,"scheme":"ske","strategy":"copy"}}"#, "run-game"),
        ("reduction", r#"{"version":1,"game":{"game":"clone","trials":5,"scheme":"ucbit","strategy":"copy","reduction":true}}"#, "run-game"),
        ("twirl_cap", r#"{"version":1,"twirl":{"n":4,"m":4,"t":[4]}}"#, "verify-twirl"),
    ];
    for (name, body, cmd) in cases {
        let cfg = write_config(dir.path(), &format!("{name}.json"), body);
        let out = run(&["--config", cfg.to_str().unwrap(), cmd]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty(), "{name}");
    }
    assert_eq!(run(&["--config", dir.path().join("missing.json").to_str().unwrap(), "roundtrip"]).status.code(), Some(2));
}

#[test]
fn reports_and_examples_match_schemas() {
    let reports = schema("report.schema.json");
    let dir = tempfile::tempdir().unwrap();
    let twirl = write_config(dir.path(), "t.json", r#"{"version":1,"twirl":{"n":2,"m":2,"t":[1,2],"pairs":2}}"#);
    let game = write_config(
        dir.path(),
        "g.json",
        r#"{"version":1,"stack":{"base":"classical_control"},"game":{"game":"clone","trials":10,"scheme":"expand","strategy":"copy","reduction":true}}"#,
    );
    let ske = write_config(dir.path(), "s.json", r#"{"version":1,"game":{"game":"pr","trials":10,"scheme":"ske","strategy":"prefix_match"}}"#);
    let outs = [
        run(&["roundtrip"]),
        run(&["--config", twirl.to_str().unwrap(), "verify-twirl"]),
        run(&["--config", game.to_str().unwrap(), "run-game"]),
        run(&["--config", ske.to_str().unwrap(), "run-game"]),
    ];
    for out in &outs {
        let r = report(out);
        assert!(reports.is_valid(&r), "{r}");
    }

    let configs = schema("config.schema.json");
    let mut seen = 0;
    for entry in std::fs::read_dir(repo().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(configs.is_valid(&v), "{}", path.display());
        seen += 1;
    }
    assert!(seen > 0);
    assert!(!configs.is_valid(&serde_json::json!({"version": 1, "bogus": 1})));
}
