use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use moltr_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(moltr_last_error()) }
        .to_string_lossy()
        .into_owned()
}

const GEN: &str = r#"{"num_queries": 150, "m": 5, "k": 3, "seed": 3}"#;
const TRAIN: &str = r#"{"epochs": 2, "batch_size": 8}"#;
const DISTILL: &str = r#"{"alpha": 0.3, "train": {"epochs": 2, "batch_size": 8}}"#;

fn dataset() -> *mut MoltrDataset {
    let mut ds = ptr::null_mut();
    assert_eq!(
        unsafe { moltr_dataset_generate(c(GEN).as_ptr(), &mut ds) },
        MoltrStatus::Ok
    );
    ds
}

fn scores_of(model: *const MoltrModel, ds: *const MoltrDataset, q: usize) -> Vec<f64> {
    let mut n = 0;
    let mut buf = vec![0.0; 64];
    let st = unsafe { moltr_model_score_query(model, ds, q, buf.as_mut_ptr(), buf.len(), &mut n) };
    assert_eq!(st, MoltrStatus::Ok, "{}", last_error());
    buf.truncate(n);
    buf
}

#[test]
fn dataset_handle_round_trip() {
    let ds = dataset();
    let dir = tempfile::tempdir().unwrap();
    let path = c(dir.path().join("d.jsonl").to_str().unwrap());
    unsafe {
        let mut n = 0;
        assert_eq!(moltr_dataset_num_queries(ds, &mut n), MoltrStatus::Ok);
        assert_eq!(n, 150);
        assert_eq!(moltr_dataset_save(ds, path.as_ptr()), MoltrStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(moltr_dataset_load(path.as_ptr(), &mut back), MoltrStatus::Ok);
        let mut m = 0;
        assert_eq!(moltr_dataset_num_queries(back, &mut m), MoltrStatus::Ok);
        assert_eq!(m, n);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(moltr_dataset_split_by_time(ds, 10, &mut a, &mut b), MoltrStatus::Ok);
        let (mut na, mut nb) = (0, 0);
        moltr_dataset_num_queries(a, &mut na);
        moltr_dataset_num_queries(b, &mut nb);
        assert_eq!(na + nb, n);
        for h in [ds, back, a, b] {
            moltr_dataset_free(h);
        }
    }
}

#[test]
fn training_chain_through_handles() {
    let ds = dataset();
    unsafe {
        let mut teachers = Vec::new();
        for k in 0..3 {
            let mut t = ptr::null_mut();
            let st = moltr_model_train_teacher(ds, k, c(TRAIN).as_ptr(), &mut t);
            assert_eq!(st, MoltrStatus::Ok, "{}", last_error());
            teachers.push(t as *const MoltrModel);
        }
        let weights = [0.6, 0.2, 0.2];
        let mut soft = ptr::null_mut();
        assert_eq!(
            moltr_soft_labels_fuse(teachers.as_ptr(), weights.as_ptr(), 3, ds, &mut soft),
            MoltrStatus::Ok
        );
        let mut boosted = ptr::null_mut();
        assert_eq!(
            moltr_soft_labels_inject_boost(soft, ds, MoltrBoostKind::RatingAtLeast, 4.5, 0.5, &mut boosted),
            MoltrStatus::Ok
        );
        let mut student = ptr::null_mut();
        let st = moltr_model_train_student(ds, boosted, c(DISTILL).as_ptr(), &mut student);
        assert_eq!(st, MoltrStatus::Ok, "{}", last_error());
        let mut v1 = ptr::null_mut();
        let st = moltr_model_self_distill(student, ds, c(DISTILL).as_ptr(), &mut v1);
        assert_eq!(st, MoltrStatus::Ok, "{}", last_error());

        let dir = tempfile::tempdir().unwrap();
        let path = c(dir.path().join("v1.json").to_str().unwrap());
        assert_eq!(moltr_model_save(v1, path.as_ptr()), MoltrStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(moltr_model_load(path.as_ptr(), &mut loaded), MoltrStatus::Ok);
        assert_eq!(scores_of(v1, ds, 3), scores_of(loaded, ds, 3));

        let mut json = ptr::null_mut();
        assert_eq!(moltr_model_evaluate_json(loaded, ds, 10, &mut json), MoltrStatus::Ok);
        let report: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(report["queries"], 150);
        moltr_string_free(json);

        let spath = c(dir.path().join("soft.jsonl").to_str().unwrap());
        assert_eq!(moltr_soft_labels_save(boosted, spath.as_ptr()), MoltrStatus::Ok);
        let mut sback = ptr::null_mut();
        assert_eq!(moltr_soft_labels_load(spath.as_ptr(), &mut sback), MoltrStatus::Ok);

        for t in teachers {
            moltr_model_free(t as *mut MoltrModel);
        }
        moltr_model_free(student);
        moltr_model_free(v1);
        moltr_model_free(loaded);
        moltr_soft_labels_free(soft);
        moltr_soft_labels_free(boosted);
        moltr_soft_labels_free(sback);
        moltr_dataset_free(ds);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(
            moltr_dataset_generate(ptr::null(), ptr::null_mut()),
            MoltrStatus::NullArgument
        );
        assert!(last_error().contains("out"));
        assert_eq!(
            moltr_dataset_generate(c("{\"bogus\": 1}").as_ptr(), &mut ds),
            MoltrStatus::InvalidConfig
        );
        assert!(last_error().contains("bogus"));
        assert_eq!(
            moltr_dataset_generate(c("{\"k\": 1}").as_ptr(), &mut ds),
            MoltrStatus::InvalidConfig
        );
        assert!(ds.is_null());
        assert_eq!(
            moltr_dataset_load(c("/nonexistent/x.jsonl").as_ptr(), &mut ds),
            MoltrStatus::Io
        );
        let bad = [0xffu8, 0];
        assert_eq!(
            moltr_dataset_load(bad.as_ptr().cast(), &mut ds),
            MoltrStatus::InvalidUtf8
        );

        let ds = dataset();
        let mut t = ptr::null_mut();
        assert_eq!(
            moltr_model_train_teacher(ds, 7, c(TRAIN).as_ptr(), &mut t),
            MoltrStatus::InvalidInput
        );
        assert_eq!(
            moltr_model_train_teacher(ds, 0, c(TRAIN).as_ptr(), &mut t),
            MoltrStatus::Ok
        );
        assert_eq!(last_error(), "");
        let mut buf = [0.0; 1];
        let mut n = 0;
        assert_eq!(
            moltr_model_score_query(t, ds, 0, buf.as_mut_ptr(), 1, &mut n),
            MoltrStatus::BufferTooSmall
        );
        assert!(n > 1);
        assert_eq!(
            moltr_model_score_query(t, ds, 10_000, buf.as_mut_ptr(), 1, &mut n),
            MoltrStatus::InvalidInput
        );
        moltr_model_free(t);
        moltr_dataset_free(ds);
        moltr_dataset_free(ptr::null_mut());
        moltr_model_free(ptr::null_mut());
        moltr_soft_labels_free(ptr::null_mut());
    }
}

#[test]
fn metric_entry_points() {
    unsafe {
        let mut v = 0.0;
        let scores = [2.0, 3.0, 1.0];
        let rel = [1u8, 0, 0];
        assert_eq!(
            moltr_ndcg_at_k(scores.as_ptr(), rel.as_ptr(), 3, 3, &mut v),
            MoltrStatus::Ok
        );
        assert!((v - 1.0 / 3f64.log2()).abs() < 1e-12);
        let a = [0usize, 1, 2];
        let b = [2usize, 1, 0];
        assert_eq!(moltr_kendall_tau(a.as_ptr(), b.as_ptr(), 3, &mut v), MoltrStatus::Ok);
        assert_eq!(v, -1.0);
        let dup = [0usize, 0, 1];
        assert_eq!(
            moltr_kendall_tau(a.as_ptr(), dup.as_ptr(), 3, &mut v),
            MoltrStatus::InvalidInput
        );
        let p = [1.0, 2.0];
        let q = [3.0, 2.0];
        assert_eq!(
            moltr_prediction_difference(p.as_ptr(), q.as_ptr(), 2, &mut v),
            MoltrStatus::Ok
        );
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(
            moltr_ndcg_at_k(ptr::null(), rel.as_ptr(), 3, 3, &mut v),
            MoltrStatus::NullArgument
        );
        assert!(!CStr::from_ptr(moltr_version()).to_str().unwrap().is_empty());
    }
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn have_cc() -> bool {
    Command::new("cc")
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

#[test]
fn header_compiles_as_c() {
    if !have_cc() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let dir = crate_dir();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(dir.join("tests/c/smoke.c"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

/// Links the C smoke program against the static library when cargo has built one.
#[test]
fn c_program_runs_against_staticlib() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libmoltr_ffi.a");
    if !have_cc() || !lib.exists() {
        eprintln!("no C compiler or static library; skipping");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let dir = crate_dir();
    let out = Command::new("cc")
        .args(["-std=c99", "-I"])
        .arg(dir.join("include"))
        .arg(dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(report["queries"], 120);
}
