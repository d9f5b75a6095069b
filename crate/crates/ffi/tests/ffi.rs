use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use core_kgt::cli::train_into;
use core_kgt::dataset::{load_dataset, LoadOptions};
use core_kgt::evaluation::evaluate;
use core_kgt::model::read_checkpoint;
use core_kgt::synthetic::{generate, write_dataset_dir, SyntheticSpec};
use core_kgt::training::TrainConfig;
use core_kgt::ModelKind;
use core_kgt_ffi::*;

fn small_config() -> TrainConfig {
    let mut cfg = TrainConfig::fb15k_et_complex();
    cfg.model = ModelKind::ComplEx;
    cfg.k = 8;
    cfg.l = 8;
    cfg.entity_batch = 32;
    cfg.type_batch = 32;
    cfg.neg_size = 4;
    cfg.gamma1 = 6.0;
    cfg.eta1 = 1e-2;
    cfg.total_steps = 30;
    cfg.alternation_period = 10;
    cfg
}

/// Writes a synthetic dataset and a trained checkpoint; returns (data dir, checkpoint).
fn fixture(root: &Path) -> (PathBuf, PathBuf) {
    let data = root.join("data");
    write_dataset_dir(&generate(&SyntheticSpec::default()).unwrap(), &data).unwrap();
    let ds = load_dataset(&data, &LoadOptions::default()).unwrap();
    let out = root.join("run");
    let outcome = train_into(&small_config(), &ds, &out).unwrap();
    (data, outcome.final_checkpoint.unwrap())
}

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn handles_roundtrip_and_match_core() {
    let dir = tempfile::tempdir().unwrap();
    let (data, ckpt) = fixture(dir.path());
    let mut ds = ptr::null_mut();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(core_kgt_dataset_load(cstr(&data).as_ptr(), &mut ds), CoreKgtStatus::Ok);
        assert_eq!(core_kgt_model_load(cstr(&ckpt).as_ptr(), &mut model), CoreKgtStatus::Ok);

        let (mut ne, mut nt) = (0u64, 0u64);
        assert_eq!(core_kgt_dataset_counts(ds, &mut ne, ptr::null_mut(), &mut nt), CoreKgtStatus::Ok);
        assert_eq!((ne, nt), (200, 20));

        let mut shape = std::mem::MaybeUninit::<CoreKgtModelShape>::uninit();
        assert_eq!(core_kgt_model_shape(model, shape.as_mut_ptr()), CoreKgtStatus::Ok);
        let shape = shape.assume_init();
        assert_eq!((shape.kind, shape.k, shape.l, shape.step), (CoreKgtModelKind::Complex, 8, 8, 30));

        let name = CString::new("e3").unwrap();
        let mut e = 0u32;
        assert_eq!(core_kgt_entity_id(ds, name.as_ptr(), &mut e), CoreKgtStatus::Ok);

        let mut types = [0u32; 5];
        let mut scores = [0f64; 5];
        let mut n = 0usize;
        assert_eq!(
            core_kgt_model_predict_top(model, e, 5, types.as_mut_ptr(), scores.as_mut_ptr(), &mut n),
            CoreKgtStatus::Ok
        );
        assert_eq!(n, 5);
        assert!(scores.windows(2).all(|w| w[0] <= w[1]));
        let mut s = 0.0;
        assert_eq!(core_kgt_model_score(model, e, types[0], &mut s), CoreKgtStatus::Ok);
        assert_eq!(s, scores[0]);

        let mut rep = CoreKgtReport::default();
        assert_eq!(core_kgt_evaluate(model, ds, CoreKgtSplit::Test, &mut rep), CoreKgtStatus::Ok);
        let core_ds = load_dataset(&data, &LoadOptions::default()).unwrap();
        let (core_model, _) = read_checkpoint(&ckpt).unwrap();
        let expect = evaluate(&core_ds.store.tp_test, &core_model, &core_ds.store).unwrap();
        assert_eq!(rep.mrr, expect.mrr);
        assert_eq!(rep.hits3, expect.hits_at(3));
        assert_eq!(rep.n_queries, 40);

        let mut base = CoreKgtReport::default();
        assert_eq!(
            core_kgt_baseline_evaluate(ds, CoreKgtBaseline::SdtypeCond, CoreKgtSplit::Test, &mut base),
            CoreKgtStatus::Ok
        );
        assert!(base.mrr > 0.0 && base.mrr <= 1.0);

        let mut buf = [0 as std::ffi::c_char; 2];
        let mut needed = 0usize;
        assert_eq!(
            core_kgt_type_name(ds, types[0], buf.as_mut_ptr(), buf.len(), &mut needed),
            CoreKgtStatus::BufferTooSmall
        );
        let mut buf = vec![0 as std::ffi::c_char; needed];
        assert_eq!(
            core_kgt_type_name(ds, types[0], buf.as_mut_ptr(), buf.len(), &mut needed),
            CoreKgtStatus::Ok
        );
        assert!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap().starts_with('t'));

        core_kgt_model_free(model);
        core_kgt_dataset_free(ds);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut ds = ptr::null_mut();
        let missing = CString::new("/nonexistent/dir").unwrap();
        assert_eq!(core_kgt_dataset_load(missing.as_ptr(), &mut ds), CoreKgtStatus::Io);
        assert!(ds.is_null());
        let msg = CStr::from_ptr(core_kgt_last_error()).to_str().unwrap();
        assert!(msg.contains("train.txt"), "{msg}");

        assert_eq!(core_kgt_dataset_load(ptr::null(), &mut ds), CoreKgtStatus::NullPointer);
        let mut out = 0.0;
        assert_eq!(core_kgt_model_score(ptr::null(), 0, 0, &mut out), CoreKgtStatus::NullPointer);

        let mut m = ptr::null_mut();
        let bogus = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(bogus.path(), b"not a checkpoint").unwrap();
        let st = core_kgt_model_load(cstr(bogus.path()).as_ptr(), &mut m);
        assert_ne!(st, CoreKgtStatus::Ok);
        assert!(m.is_null());

        assert!(!CStr::from_ptr(core_kgt_version()).to_bytes().is_empty());
        core_kgt_dataset_free(ptr::null_mut());
        core_kgt_model_free(ptr::null_mut());
    }
}

#[test]
fn out_of_range_ids_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let (_, ckpt) = fixture(dir.path());
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(core_kgt_model_load(cstr(&ckpt).as_ptr(), &mut m), CoreKgtStatus::Ok);
        let mut out = 0.0;
        assert_eq!(core_kgt_model_score(m, 10_000, 0, &mut out), CoreKgtStatus::NotFound);
        assert_eq!(core_kgt_model_score(m, 0, 10_000, &mut out), CoreKgtStatus::NotFound);
        core_kgt_model_free(m);
    }
}

/// Compiles the C smoke program against the generated header and static
/// library. Skipped when no C compiler is on PATH.
#[test]
fn c_program_links_and_runs() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libcore_kgt_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: cc or {} not available", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let (data, ckpt) = fixture(dir.path());
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).arg(&data).arg(&ckpt).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.starts_with("top=t"), "{stdout}");
    assert!(stdout.contains("queries=40"), "{stdout}");
}
