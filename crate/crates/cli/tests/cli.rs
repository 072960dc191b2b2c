//! End-to-end runs of the `spectrum-lab` binary on a micro scenario.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use spectrum_lab::dataset::load_dataset_header;
use tempfile::TempDir;

const TINY: &str = r#"
[scenario]
su_count = 2
antennas = 4
samples_per_period = 16
sequence_len = 2
area_width_m = 300.0
area_height_m = 300.0
sensing_fading_scale = [1.0, 0.8]
reporting_fading_scale = [1.0, 0.9]

[model]
su_count = 2
sequence_len = 2
side = 4
tube = [2, 1, 1]
embed_dim = 8
heads = 2
su_layers = 1
collab_layers = 1
encoder_mlp = [16, 8]
head_units = [12, 6]

[train]
epochs = 2
stage2_epochs = 2
batch = 8

[eval]
calibration_samples = 200
test_samples = 60
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectrum-lab"))
        .args(args)
        .env_remove("SPECTRUM_LAB_OUT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

/// Dataset plus stage-1 and stage-2 checkpoints shared by the tests.
struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        let cfg = f.path("tiny.toml");
        std::fs::write(&cfg, TINY).unwrap();
        ok(&["gen-data", "--config", s(&cfg), "--out", s(&f.path("data")), "--samples", "80"]);
        ok(&["train", "--stage", "1", "--data", s(&f.path("data")), "--ckpt", s(&f.path("ck/s1.ckpt"))]);
        ok(&[
            "train",
            "--stage",
            "2",
            "--data",
            s(&f.path("data")),
            "--ckpt",
            s(&f.path("ck/s2.ckpt")),
            "--init",
            s(&f.path("ck/s1.ckpt")),
        ]);
        f
    })
}

/// Manifest with the creation timestamp removed.
fn manifest_body(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&read(path)).unwrap();
    v.as_object_mut().unwrap().remove("created_unix_s");
    v
}

#[test]
fn gen_data_writes_requested_count_deterministically() {
    let f = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let cfg = f.path("tiny.toml");
    for out in ["a", "b"] {
        ok(&["gen-data", "--config", s(&cfg), "--out", s(&tmp.path().join(out)), "--samples", "100"]);
    }
    let header = load_dataset_header(&tmp.path().join("a/dataset.bin")).unwrap();
    assert_eq!(header.count, 100);
    // one index row per SU sequence
    assert_eq!(read(&tmp.path().join("a/index.csv")).lines().count(), 1 + 100 * 2);
    for file in ["dataset.bin", "index.csv", "config.toml"] {
        assert!(
            std::fs::read(tmp.path().join("a").join(file)).unwrap() == std::fs::read(tmp.path().join("b").join(file)).unwrap(),
            "{file} differs"
        );
    }
    let (ma, mb) = (
        manifest_body(&tmp.path().join("a/gen-data.manifest.json")),
        manifest_body(&tmp.path().join("b/gen-data.manifest.json")),
    );
    assert_eq!(ma, mb);
    assert_eq!(ma["outputs"].as_object().unwrap().len(), 3);
}

#[test]
fn paper_profile_records_published_geometry() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["gen-data", "--profile", "paper", "--out", s(tmp.path()), "--samples", "2"]);
    let h = load_dataset_header(&tmp.path().join("dataset.bin")).unwrap();
    assert_eq!((h.sequence_len, h.su_count, h.antennas, h.samples_per_period), (20, 3, 15, 100));
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[train]\nlr = -1.0\n").unwrap();
    assert_eq!(code(&run(&["gen-data", "--config", s(&bad), "--out", s(tmp.path())])), 2);
    std::fs::write(&bad, "[nonsense]\nx = 1\n").unwrap();
    assert_eq!(code(&run(&["gen-data", "--config", s(&bad), "--out", s(tmp.path())])), 2);
    assert_eq!(code(&run(&["gen-data", "--config", s(&tmp.path().join("missing.toml"))])), 2);
}

#[test]
fn output_directory_env_override() {
    let f = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spectrum-lab"))
        .args(["gen-data", "--config", s(&f.path("tiny.toml")), "--samples", "4"])
        .env("SPECTRUM_LAB_OUT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(tmp.path().join("dataset.bin").is_file());
}

#[test]
fn stage_order_is_enforced() {
    let f = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let data = f.path("data");
    let ck = tmp.path().join("s2.ckpt");
    assert_eq!(code(&run(&["train", "--stage", "2", "--data", s(&data), "--ckpt", s(&ck)])), 3);
    let missing = tmp.path().join("none.ckpt");
    let out = run(&["train", "--stage", "2", "--data", s(&data), "--ckpt", s(&ck), "--init", s(&missing)]);
    assert_eq!(code(&out), 3);
    // a stage-2 checkpoint is not a valid stage-1 initialization
    let s2 = f.path("ck/s2.ckpt");
    assert_eq!(code(&run(&["train", "--stage", "2", "--data", s(&data), "--ckpt", s(&ck), "--init", s(&s2)])), 3);
    assert_eq!(code(&run(&["train", "--stage", "1", "--data", s(&tmp.path().join("nodata")), "--ckpt", s(&ck)])), 3);
}

#[test]
fn epochs_override_and_resume() {
    let f = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let data = f.path("data");
    let full = tmp.path().join("full/s1.ckpt");
    let part = tmp.path().join("part/s1.ckpt");
    ok(&["train", "--stage", "1", "--data", s(&data), "--ckpt", s(&full), "--epochs", "3"]);
    assert_eq!(read(&tmp.path().join("full/train_stage1.csv")).lines().count(), 4);
    ok(&["train", "--stage", "1", "--data", s(&data), "--ckpt", s(&part), "--epochs", "2"]);
    ok(&["train", "--stage", "1", "--data", s(&data), "--ckpt", s(&part), "--epochs", "3", "--resume"]);
    assert_eq!(read(&tmp.path().join("full/train_stage1.csv")), read(&tmp.path().join("part/train_stage1.csv")));
    assert!(std::fs::read(&full).unwrap() == std::fs::read(&part).unwrap());
    // the 2-epoch fixture run is a prefix of the 3-epoch run
    let short = read(&f.path("ck/train_stage1.csv"));
    assert!(read(&tmp.path().join("full/train_stage1.csv")).starts_with(&short));
}

#[test]
fn training_is_idempotent() {
    let f = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let ck = tmp.path().join("s1.ckpt");
    ok(&["train", "--stage", "1", "--data", s(&f.path("data")), "--ckpt", s(&ck)]);
    assert!(std::fs::read(&ck).unwrap() == std::fs::read(f.path("ck/s1.ckpt")).unwrap());
    assert_eq!(
        manifest_body(&tmp.path().join("train-stage1.manifest.json"))["checkpoint_hash"],
        manifest_body(&f.path("ck/train-stage1.manifest.json"))["checkpoint_hash"]
    );
}

#[test]
fn evaluate_writes_reference_point_and_baseline() {
    let f = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let (ck, data) = (f.path("ck/s2.ckpt"), f.path("data"));
    let out = tmp.path().join("ed");
    ok(&["evaluate", "--ckpt", s(&ck), "--data", s(&data), "--n0", "-150,-145", "--pfa", "0.05,0.2", "--baseline", "ed", "--out", s(&out)]);
    let report = read(&out.join("report.csv"));
    let mut lines = report.lines();
    assert_eq!(lines.next().unwrap(), "method,n0_dbm_per_hz,pfa,threshold,pd,empirical_pfa,sensing_error,accuracy");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // two methods x two noise levels x {0.05, 0.09, 0.2}
    assert_eq!(rows.len(), 12);
    for method in ["transformer", "energy"] {
        for n0 in ["-150", "-145"] {
            assert!(rows.iter().any(|r| r[0] == method && r[1] == n0 && r[2] == "0.09"), "{method} {n0}");
        }
    }
    for file in ["report.json", "summary.csv", "roc_n0_-150.csv", "roc_n0_-145.csv", "sensing_error_vs_n0.csv", "accuracy_vs_n0.csv"] {
        assert!(out.join(file).is_file(), "{file}");
    }
    assert_eq!(read(&out.join("pd_vs_n0.csv")).lines().next().unwrap(), "n0_dbm_per_hz,transformer,energy");

    let none = tmp.path().join("none");
    ok(&["evaluate", "--ckpt", s(&ck), "--data", s(&data), "--n0", "-150", "--baseline", "none", "--out", s(&none)]);
    let report = read(&none.join("report.csv"));
    assert!(!report.contains("energy"));
    // no --pfa: the default 30-point grid
    assert_eq!(report.lines().count(), 31);
    assert_eq!(read(&none.join("pd_vs_n0.csv")).lines().next().unwrap(), "n0_dbm_per_hz,transformer");
}

#[test]
fn empty_pfa_list_selects_default_grid() {
    let f = fixture();
    let tmp = tempfile::tempdir().unwrap();
    ok(&[
        "evaluate", "--ckpt", s(&f.path("ck/s2.ckpt")), "--data", s(&f.path("data")), "--n0", "-150", "--pfa", "", "--baseline", "none",
        "--out", s(tmp.path()),
    ]);
    assert_eq!(read(&tmp.path().join("report.csv")).lines().count(), 31);
}

#[test]
fn evaluate_is_idempotent() {
    let f = fixture();
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        ok(&["evaluate", "--ckpt", s(&f.path("ck/s2.ckpt")), "--data", s(&f.path("data")), "--n0", "-150", "--out", s(&tmp.path().join(out))]);
    }
    for file in ["report.csv", "report.json", "summary.csv", "roc_n0_-150.csv", "pd_vs_n0.csv"] {
        assert_eq!(read(&tmp.path().join("a").join(file)), read(&tmp.path().join("b").join(file)), "{file}");
    }
    assert_eq!(
        manifest_body(&tmp.path().join("a/evaluate.manifest.json")),
        manifest_body(&tmp.path().join("b/evaluate.manifest.json"))
    );
}

#[test]
fn evaluate_checks_prerequisites_and_compatibility() {
    let f = fixture();
    let tmp = tempfile::tempdir().unwrap();
    let data = f.path("data");
    let out = s(tmp.path());
    assert_eq!(code(&run(&["evaluate", "--ckpt", s(&f.path("ck/s1.ckpt")), "--data", s(&data), "--out", out])), 3);
    assert_eq!(code(&run(&["evaluate", "--ckpt", s(&tmp.path().join("no.ckpt")), "--data", s(&data), "--out", out])), 3);

    // same geometry, different scenario seed: hashes disagree
    let other = tmp.path().join("other");
    ok(&["gen-data", "--config", s(&f.path("tiny.toml")), "--out", s(&other), "--samples", "4", "--seed", "77"]);
    assert_eq!(code(&run(&["evaluate", "--ckpt", s(&f.path("ck/s2.ckpt")), "--data", s(&other), "--out", out])), 4);
    let ck = tmp.path().join("x.ckpt");
    let stage2 = run(&["train", "--stage", "2", "--data", s(&other), "--ckpt", s(&ck), "--init", s(&f.path("ck/s1.ckpt"))]);
    assert_eq!(code(&stage2), 4);

    // corrupt checkpoint
    let junk = tmp.path().join("junk.ckpt");
    std::fs::write(&junk, b"not a checkpoint").unwrap();
    assert_eq!(code(&run(&["evaluate", "--ckpt", s(&junk), "--data", s(&data), "--out", out])), 4);
    assert_eq!(code(&run(&["evaluate", "--ckpt", s(&f.path("ck/s2.ckpt")), "--data", s(&data), "--pfa", "1.5", "--out", out])), 2);
}

#[test]
fn report_flops_uses_layer_row_names() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&["report-flops", "--profile", "paper", "--two-channel", "--out", s(tmp.path())]);
    let csv = read(&tmp.path().join("flops.csv"));
    for row in ["Patch Embedding", "MSA", "MLP in Encoder", "Layer Normalization", "Sequence Pooling", "MLP Head", "Total FLOPs", "Parameters"] {
        assert!(csv.lines().any(|l| l.split(',').nth(1) == Some(row)), "{row}");
        assert!(String::from_utf8_lossy(&out.stdout).contains(row));
    }
    assert!(csv.contains("su,Patch Embedding,245760,1,245760,245760"));
    let complexity = read(&tmp.path().join("complexity.csv"));
    assert!(complexity.contains("cnn_lstm,ones,total,11,"));
    for file in ["flops.txt", "parameters.csv", "report-flops.manifest.json"] {
        assert!(tmp.path().join(file).is_file(), "{file}");
    }
}

#[test]
fn bench_honors_reps() {
    let f = fixture();
    let tmp = tempfile::tempdir().unwrap();
    ok(&["bench", "--config", s(&f.path("tiny.toml")), "--ckpt", s(&f.path("ck/s2.ckpt")), "--reps", "7", "--out", s(tmp.path())]);
    let v: serde_json::Value = serde_json::from_str(&read(&tmp.path().join("bench.json"))).unwrap();
    assert_eq!(v["inference"]["reps"], 7);
    assert_eq!(v["preprocessing"]["reps"], 7);
    assert_eq!(v["within_evacuation_bound"], true);
    assert_eq!(code(&run(&["bench", "--config", s(&f.path("tiny.toml")), "--reps", "0", "--out", s(tmp.path())])), 2);
}
