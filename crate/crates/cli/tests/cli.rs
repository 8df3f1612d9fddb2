use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qm2arl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qm2arl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

fn train_meta(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec![
        "--out",
        out,
        "--meta-epochs",
        "40",
        "--learning-rate",
        "0.01",
    ];
    args.extend_from_slice(extra);
    args.push("train-meta");
    qm2arl(&args)
}

fn assert_csv_shape(text: &str, header: &str) {
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    assert_eq!(text.lines().next().unwrap(), header);
}

#[test]
fn train_meta_writes_artifacts_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(train_meta(&a, &["--seed", "5"]).status.success());
    assert!(train_meta(&b, &["--seed", "5"]).status.success());
    let loss = read(&a.join("loss.csv"));
    assert_eq!(loss, read(&b.join("loss.csv")));
    assert_csv_shape(&loss, "epoch,loss");
    assert_eq!(loss.lines().count(), 41);

    let q = read(&a.join("qtable.csv"));
    assert_csv_shape(&q, "state,action,q,q_optimal");
    let keys: Vec<String> = q
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(keys, ["s1,0", "s1,1", "s2,0", "s2,1", "s3,0", "s3,1"]);

    let mem: serde_json::Value = serde_json::from_str(&read(&a.join("model.mem"))).unwrap();
    assert_eq!(mem["entries"][0]["label"], "meta");
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&a.join("manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config"]["meta_epochs"], 40);

    let c = tmp.path().join("c");
    assert!(train_meta(&c, &["--seed", "6"]).status.success());
    assert_ne!(loss, read(&c.join("loss.csv")));
}

#[test]
fn default_epoch_count_gives_3000_loss_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qm2arl(&["--out", tmp.path().to_str().unwrap(), "train-meta"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&tmp.path().join("loss.csv")).lines().count(), 3001);
}

#[test]
fn config_file_then_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"meta_epochs": 12, "alpha_degrees": 45.0, "temperature": 0.5}"#,
    )
    .unwrap();
    let out = tmp.path().join("o");
    let o = qm2arl(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--alpha",
        "10",
        "train-meta",
        "--temperature=2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(m["config"]["meta_epochs"], 12);
    assert_eq!(m["config"]["alpha_degrees"], 10.0);
    assert_eq!(m["config"]["temperature"], 2.0);
    assert_eq!(read(&out.join("loss.csv")).lines().count(), 13);
}

#[test]
fn invalid_config_exits_one_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    for (flag, value, field) in [
        ("--alpha", "200", "alpha_degrees"),
        ("--target-period", "0", "target_period"),
        ("--temperature", "hot", "temperature"),
        ("--env", "mars", "env"),
    ] {
        let o = qm2arl(&["--out", out, flag, value, "train-meta"]);
        assert_eq!(o.status.code(), Some(1), "{flag}");
        assert!(stderr(&o).contains(field), "{flag}: {}", stderr(&o));
    }
    assert_eq!(qm2arl(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn train_pole_emits_two_agent_trajectory_and_updates_memory() {
    let tmp = tempfile::tempdir().unwrap();
    let m = tmp.path().join("m");
    assert!(train_meta(&m, &[]).status.success());
    let p = tmp.path().join("p");
    let o = qm2arl(&[
        "--out",
        p.to_str().unwrap(),
        "--pole-epochs",
        "25",
        "--pole-learning-rate",
        "0.01",
        "train-pole",
        "--model",
        m.join("model.json").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let traj = read(&p.join("pole_trajectory.csv"));
    assert_csv_shape(&traj, "epoch,agent,theta1,theta2");
    assert_eq!(traj.lines().count(), 1 + 25 * 2);
    let agents: std::collections::BTreeSet<&str> = traj
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(agents.into_iter().collect::<Vec<_>>(), ["0", "1"]);
    assert_csv_shape(&read(&p.join("return.csv")), "epoch,return,loss");
    let mem: serde_json::Value = serde_json::from_str(&read(&p.join("model.mem"))).unwrap();
    let labels: Vec<&str> = mem["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["meta", "twostep-main"]);
}

#[test]
fn train_pole_rejects_missing_model_and_qubit_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o = qm2arl(&[
        "--out",
        out.to_str().unwrap(),
        "train-pole",
        "--model",
        "missing/model.json",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let m = tmp.path().join("m4");
    assert!(train_meta(&m, &["--qubits", "4", "--meta-epochs", "3"])
        .status
        .success());
    let o = qm2arl(&[
        "--out",
        out.to_str().unwrap(),
        "train-pole",
        "--model",
        m.join("model.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("qubits"));
}

#[test]
fn probe_grid_shape_centre_and_stability() {
    let tmp = tempfile::tempdir().unwrap();
    let m = tmp.path().join("m");
    assert!(train_meta(&m, &[]).status.success());
    let model = m.join("model.json");
    let run = |dir: &str, state: &str| {
        qm2arl(&[
            "--out",
            tmp.path().join(dir).to_str().unwrap(),
            "probe",
            "--model",
            model.to_str().unwrap(),
            "--state",
            state,
        ])
    };
    assert!(run("g1", "s1").status.success());
    assert!(run("g2", "s1").status.success());
    let grid = read(&tmp.path().join("g1/polegrid.csv"));
    assert_eq!(grid, read(&tmp.path().join("g2/polegrid.csv")));
    assert_csv_shape(&grid, "theta1,theta2,qmax");
    assert_eq!(grid.lines().count(), 1 + 1089);

    // Grid centre against the meta Q-table at s1.
    let centre: f64 = grid
        .lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|x| x.parse::<f64>().unwrap())
                .collect::<Vec<_>>()
        })
        .find(|r| r[0].abs() < 1e-12 && r[1].abs() < 1e-12)
        .unwrap()[2];
    let q = read(&m.join("qtable.csv"));
    let best = q
        .lines()
        .filter(|l| l.starts_with("s1,"))
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(centre.to_bits(), best.to_bits());

    let o = run("g3", "s9");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("state"));
}

#[test]
fn continual_rows_and_phase_boundaries() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qm2arl(&[
        "--out",
        tmp.path().to_str().unwrap(),
        "--continual-meta-epochs",
        "10",
        "--phase-epochs",
        "6",
        "continual",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d = read(&tmp.path().join("distance.csv"));
    assert_csv_shape(&d, "epoch,phase,distance,memory_enabled");
    for arm in ["true", "false"] {
        let phases: Vec<String> = d
            .lines()
            .skip(1)
            .filter(|l| l.ends_with(arm))
            .map(|l| l.split(',').nth(1).unwrap().to_string())
            .collect();
        assert_eq!(phases.len(), 18);
        assert_eq!(phases.windows(2).filter(|w| w[0] != w[1]).count(), 2);
    }
}

#[test]
fn verify_reports_factors_and_uses_the_five_sigma_rule() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qm2arl(&[
        "--out",
        tmp.path().to_str().unwrap(),
        "--samples",
        "1000",
        "verify",
    ]);
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("lemma1")).count(), 4);
    assert!(text.contains("factor=0.9549"));
    assert!(text
        .lines()
        .filter(|l| l.starts_with("lemma1"))
        .all(|l| l.ends_with("PASS")));
    assert!(text.contains("lemma3"));
    // Exit status follows the checks.
    let all_pass = text.lines().all(|l| !l.ends_with("FAIL"));
    assert_eq!(o.status.code(), Some(if all_pass { 0 } else { 2 }));
    assert_csv_shape(
        &read(&tmp.path().join("verify.csv")),
        "check,alpha_degrees,estimate,reference,standard_error,pass",
    );
}

#[test]
fn gradcheck_passes_and_forced_bug_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = qm2arl(&["--out", out, "--gradcheck-configs", "4", "gradcheck"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for cat in ["angle", "pole", "loss"] {
        assert!(text.contains(cat));
    }
    let o = qm2arl(&[
        "--out",
        out,
        "--gradcheck-configs",
        "2",
        "gradcheck",
        "--force-bug",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn thread_cap_is_honoured_and_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_qm2arl"))
            .env("QM2ARL_THREADS", threads)
            .args(["--out", out, "--meta-epochs", "5", "train-meta"])
            .output()
            .unwrap()
    };
    assert!(run("1").status.success());
    let single = read(&tmp.path().join("loss.csv"));
    assert!(run("0").status.success());
    assert_eq!(single, read(&tmp.path().join("loss.csv")));
    assert_eq!(run("many").status.code(), Some(1));
}
