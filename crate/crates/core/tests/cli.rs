use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use moltr::cli::cli_main;
use moltr::data::load_dataset;
use moltr::distill::SoftLabelSet;
use moltr::pipeline::ExperimentReport;
use moltr::{Lineage, Model};

fn run(args: &[&str]) -> i32 {
    cli_main(std::iter::once("moltr").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_generator(dir: &Path) -> PathBuf {
    let path = dir.join("gen.json");
    fs::write(&path, r#"{"num_queries": 300, "m": 6, "seed": 11}"#).unwrap();
    path
}

#[test]
fn gen_data_writes_a_loadable_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_generator(tmp.path());
    let out = tmp.path().join("d.jsonl");
    assert_eq!(run(&["gen-data", "--config", p(&cfg), "--out", p(&out)]), 0);
    let ds = load_dataset(&out).unwrap();
    assert_eq!(ds.len(), 300);
    assert_eq!(ds.m, 6);

    let again = tmp.path().join("d2.jsonl");
    assert_eq!(
        run(&[
            "gen-data",
            "--config",
            p(&cfg),
            "--queries",
            "50",
            "--seed",
            "3",
            "--out",
            p(&again)
        ]),
        0
    );
    assert_eq!(load_dataset(&again).unwrap().len(), 50);
}

#[test]
fn full_command_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let f = |name: &str| tmp.path().join(name);
    let cfg = small_generator(tmp.path());
    assert_eq!(run(&["gen-data", "--config", p(&cfg), "--out", p(&f("d.jsonl"))]), 0);
    let data = f("d.jsonl");
    for k in 0..3 {
        let out = f(&format!("t{k}.json"));
        let code = run(&[
            "train-teacher",
            "--data",
            p(&data),
            "--objective",
            &k.to_string(),
            "--epochs",
            "2",
            "--out",
            p(&out),
        ]);
        assert_eq!(code, 0);
    }
    assert_eq!(
        run(&[
            "fuse",
            "--data",
            p(&data),
            "--teacher",
            p(&f("t0.json")),
            "--teacher",
            p(&f("t1.json")),
            "--teacher",
            p(&f("t2.json")),
            "--weights",
            "0.6,0.2,0.2",
            "--out",
            p(&f("soft.jsonl")),
        ]),
        0
    );
    assert_eq!(
        run(&[
            "inject-boost",
            "--data",
            p(&data),
            "--soft",
            p(&f("soft.jsonl")),
            "--rho",
            "4.5",
            "--beta",
            "0.5",
            "--out",
            p(&f("boosted.jsonl")),
        ]),
        0
    );
    assert_eq!(SoftLabelSet::load(f("boosted.jsonl")).unwrap().len(), 300);
    assert_eq!(
        run(&[
            "train-student",
            "--data",
            p(&data),
            "--soft",
            p(&f("boosted.jsonl")),
            "--alpha",
            "0.2",
            "--epochs",
            "2",
            "--out",
            p(&f("v0.json")),
        ]),
        0
    );
    assert_eq!(
        run(&[
            "self-distill",
            "--prev",
            p(&f("v0.json")),
            "--data",
            p(&data),
            "--epochs",
            "2",
            "--out",
            p(&f("v1.json")),
        ]),
        0
    );
    let v1 = Model::load(f("v1.json")).unwrap();
    assert_eq!(v1.lineage.student_version(), Some(1));
    assert!(matches!(v1.lineage, Lineage::Student { parent: Some(_), .. }));
    assert_eq!(
        run(&[
            "score",
            "--model",
            p(&f("v1.json")),
            "--data",
            p(&data),
            "--out",
            p(&f("s.jsonl"))
        ]),
        0
    );
    assert_eq!(fs::read_to_string(f("s.jsonl")).unwrap().lines().count(), 300);
    assert_eq!(
        run(&[
            "eval",
            "--model",
            p(&f("v1.json")),
            "--data",
            p(&data),
            "--k",
            "5",
            "--rho",
            "4.5",
            "--gamma",
            "0.3",
            "--out",
            p(&f("eval.json")),
        ]),
        0
    );
    let eval: serde_json::Value = serde_json::from_str(&fs::read_to_string(f("eval.json")).unwrap()).unwrap();
    assert!(eval.to_string().contains("ndcg_at_10"));
}

#[test]
fn study_repro_emits_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.json");
    fs::write(
        &cfg,
        r#"{"generator": {"num_queries": 400}, "teacher": {"epochs": 2}, "distill": {"train": {"epochs": 2}}}"#,
    )
    .unwrap();
    let out = tmp.path().join("repro");
    assert_eq!(
        run(&["study-repro", "--config", p(&cfg), "--seeds", "4", "--out", p(&out)]),
        0
    );
    let report: ExperimentReport = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.config.num_seeds, 4);
    assert_eq!(report.comparisons.len(), 2 * 6);
    assert!(fs::read_to_string(out.join("report.md")).unwrap().starts_with("# "));
    assert!(out.join("metrics.csv").exists());
    // every checkpoint the report names is on disk under its hash
    for c in &report.checkpoints {
        let path = out.join("checkpoints").join(format!("{}.json", c.hash));
        assert_eq!(Model::load(&path).unwrap().checkpoint_hash(), c.hash);
    }
    for arm in &report.arms {
        assert!(report.datasets.iter().any(|d| d.hash == arm.dataset));
        assert!(arm
            .checkpoints
            .iter()
            .all(|h| report.checkpoints.iter().any(|c| &c.hash == h)));
    }
}

#[test]
fn study_needs_an_output_directory() {
    assert_eq!(run(&["study-repro", "--queries", "100"]), 2);
}

#[test]
fn repro_with_one_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["study-repro", "--seeds", "1", "--out", p(tmp.path())]), 2);
}

fn binary(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_moltr")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn invalid_config_exits_2_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, "{\n  \"num_seeds\": 4,\n  \"bogus_field\": 1\n}\n").unwrap();
    let (code, err) = binary(&["study-repro", "--config", p(&cfg), "--out", p(tmp.path())]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.json:3"), "{err}");
    assert!(err.contains("bogus_field"), "{err}");

    fs::write(&cfg, "{\"num_queries\": 10,").unwrap();
    let (code, err) = binary(&["gen-data", "--config", p(&cfg), "--out", p(&tmp.path().join("d.jsonl"))]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(binary(&["no-such-command"]).0, 2);
    assert_eq!(binary(&["gen-data", "--bogus"]).0, 2);
    assert_eq!(binary(&[]).0, 2);
    assert_eq!(binary(&["--help"]).0, 0);
}

#[test]
fn runtime_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, err) = binary(&[
        "score",
        "--model",
        "/nonexistent/m.json",
        "--data",
        "x",
        "--out",
        p(&tmp.path().join("s")),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent/m.json"), "{err}");
}
