use std::process::Command;

use formulads_cli::{bits_sweep, run_scenario, CliError, RingChoice, Scenario, ScenarioConfig};
use formulads_core::EngineKind;

fn cfg(scenario: Scenario, seed: u64) -> ScenarioConfig {
    ScenarioConfig::new(scenario, seed)
}

#[test]
fn exact_maintain_has_zero_error() {
    for engine in EngineKind::ALL {
        let mut c = cfg(Scenario::Maintain, 3);
        c.formula = Some("A:4x4; inv(A)".into());
        c.t = 4;
        c.ring = RingChoice::Rational;
        c.engine = engine;
        let r = run_scenario(&c).unwrap();
        assert_eq!(r.records.len(), 4);
        assert_eq!(r.summary.max_abs_error, 0.0);
        assert!(r.pass());
    }
}

#[test]
fn generated_formulas_in_every_ring() {
    for ring in [
        RingChoice::Rational,
        RingChoice::Float64,
        RingChoice::Fixed(80),
    ] {
        for seed in 0..5 {
            let mut c = cfg(Scenario::Maintain, seed);
            c.t = 6;
            c.ring = ring;
            c.eps = 1e-6;
            c.dominant = true;
            let r = run_scenario(&c).unwrap();
            assert!(r.pass(), "{ring} seed {seed}: {:?}", r.summary);
        }
    }
}

#[test]
fn matching_follows_brute_force() {
    let mut c = cfg(Scenario::Matching, 7);
    c.n = Some(6);
    c.t = 50;
    let r = run_scenario(&c).unwrap();
    assert_eq!(r.records.len(), 50);
    assert!(r
        .records
        .iter()
        .all(|x| x.answer == x.oracle && x.rank.unwrap() % 2 == 0));
    assert!(r.pass());
}

#[test]
fn zero_updates_pass_with_no_records() {
    for s in [Scenario::Maintain, Scenario::Determinant, Scenario::Rank] {
        let mut c = cfg(s, 1);
        c.n = Some(3);
        let r = run_scenario(&c).unwrap();
        assert!(r.records.is_empty() && r.pass());
    }
    let mut c = cfg(Scenario::Matching, 1);
    c.n = Some(4);
    assert!(run_scenario(&c).unwrap().pass());
}

#[test]
fn determinant_and_rank_scenarios() {
    let mut c = cfg(Scenario::Determinant, 11);
    c.formula = Some("A:3x3; B:3x3; A*inv(B) + A".into());
    c.t = 10;
    c.eps = 1e-6;
    c.dominant = true;
    assert!(run_scenario(&c).unwrap().pass());

    let mut c = cfg(Scenario::Rank, 12);
    c.n = Some(5);
    c.t = 30;
    let r = run_scenario(&c).unwrap();
    assert!(r.pass());
    assert!(r.summary.max_rank_step.unwrap() <= 1);
}

#[test]
fn identical_configs_give_identical_reports() {
    for s in [Scenario::Maintain, Scenario::Rank, Scenario::Matching] {
        let mut c = cfg(s, 21);
        c.n = Some(4);
        c.t = 8;
        let a = run_scenario(&c).unwrap().without_timing().to_jsonl();
        let b = run_scenario(&c).unwrap().without_timing().to_jsonl();
        assert_eq!(a, b);
    }
}

#[test]
fn sweep_errors_shrink_with_bits() {
    let mut c = cfg(Scenario::BitsSweep, 4);
    c.n = Some(8);
    c.t = 8;
    c.dominant = true;
    let r = bits_sweep(&c, &[16, 24, 32]).unwrap();
    let errs: Vec<f64> = r.records.iter().map(|x| x.abs_error).collect();
    assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
    assert!(r.summary.slope.unwrap() <= -0.8);

    let single = bits_sweep(&c, &[24]).unwrap();
    assert_eq!(single.summary.slope, None);
    let line = single.to_jsonl();
    assert!(line.lines().last().unwrap().contains("\"slope\":null"));
    assert!(matches!(
        bits_sweep(&c, &[32, 16]),
        Err(CliError::Config(_))
    ));
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = cfg(Scenario::Maintain, 1);
    c.formula = Some("inv(A)".into());
    assert!(matches!(run_scenario(&c), Err(CliError::Config(_))));
    c.seed = None;
    assert!(matches!(run_scenario(&c), Err(CliError::Config(_))));
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_formulads"))
}

#[test]
fn binary_exit_status_and_outputs() {
    let dir = std::env::temp_dir().join(format!("formulads-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let conf = dir.join("m.toml");
    std::fs::write(
        &conf,
        "formula = \"A:3x3; inv(A)\"\nt = 3\nring = \"rational\"\nseed = 9\n",
    )
    .unwrap();
    let out = dir.join("m.jsonl");
    let csv = dir.join("m.csv");
    let st = bin()
        .args(["maintain", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&out)
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(
        st.status.success(),
        "{}",
        String::from_utf8_lossy(&st.stderr)
    );
    assert!(String::from_utf8_lossy(&st.stdout).contains("PASS"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 4);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4);

    let st = bin()
        .args(["maintain", "--json", "--seed", "10", "--config"])
        .arg(&conf)
        .output()
        .unwrap();
    assert!(st.status.success());
    let last = String::from_utf8(st.stdout)
        .unwrap()
        .lines()
        .last()
        .unwrap()
        .to_string();
    let v: serde_json::Value = serde_json::from_str(&last).unwrap();
    assert_eq!(v["summary"]["seed"], 10);

    // A float run held to an impossible tolerance fails its checks.
    let strict = dir.join("s.json");
    std::fs::write(
        &strict,
        r#"{"n": 6, "t": 4, "ring": "fixed(4)", "eps": 1e-300, "seed": 2, "dominant": true}"#,
    )
    .unwrap();
    let st = bin()
        .args(["maintain", "--config"])
        .arg(&strict)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(1));

    let st = bin()
        .args(["rank", "--config"])
        .arg(&conf)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    let st = bin()
        .args(["bogus", "--config"])
        .arg(&conf)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
    std::fs::write(&conf, "scenario = \"matching\"\nn = 4\nseed = 1\n").unwrap();
    let st = bin()
        .args(["rank", "--config"])
        .arg(&conf)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}
