use std::fs;
use std::process::Command;

use scramble::config::ExperimentConfig;
use scramble::manifest::{read_manifest, run_with_threads, MANIFEST_FILE};
use scramble::output::{body_checksum, sha256_hex, Table};

fn small(method: &str, dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    for kv in [
        format!("method={method}"),
        "physics.N=8".into(),
        "numerics.t_max=2".into(),
        "numerics.dt=0.1".into(),
        "numerics.n_samples=64".into(),
        format!("output.directory={}", dir.display()),
    ] {
        cfg.apply_override(&kv).unwrap();
    }
    cfg.validate().unwrap();
    cfg
}

#[test]
fn ed_quench_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("ed-quench", dir.path());
    let m = run_with_threads(&cfg, 1).unwrap();
    let files: Vec<&str> = m.outputs.iter().map(|o| o.file.as_str()).collect();
    for f in ["mz.csv", "cqt.csv", "qfi.csv", "tmi.csv"] {
        assert!(files.contains(&f), "{f} missing from {files:?}");
    }
    let on_disk = read_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(on_disk, m);
    assert_eq!(m.config_hash, sha256_hex(cfg.to_canonical().as_bytes()));
    for o in &m.outputs {
        let text = fs::read_to_string(dir.path().join(&o.file)).unwrap();
        assert_eq!(o.sha256, body_checksum(&text), "{}", o.file);
        let t = Table::read_csv(&dir.path().join(&o.file)).unwrap();
        assert_eq!(t.rows.len(), o.rows);
        assert_eq!(t.metadata.get("method").map(String::as_str), Some("ed-quench"));
    }
    let mz = Table::read_csv(&dir.path().join("mz.csv")).unwrap();
    assert_eq!(mz.rows.len(), 21);
    assert!((mz.column(&mz.columns[1]).unwrap()[0] - 1.0).abs() < 1e-12);
}

#[test]
fn outputs_do_not_depend_on_threads() {
    for method in ["dtwa", "twa"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = run_with_threads(&small(method, a.path()), 1).unwrap();
        let mb = run_with_threads(&small(method, b.path()), 3).unwrap();
        assert_eq!(ma.outputs, mb.outputs, "{method}");
        for o in &ma.outputs {
            assert_eq!(fs::read(a.path().join(&o.file)).unwrap(), fs::read(b.path().join(&o.file)).unwrap());
        }
    }
}

fn cli(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_scramble")).args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = format!("output.directory={}", dir.path().display());
    assert_eq!(cli(&["run", "--set", "physics.N=6", "--set", "numerics.t_max=1", "--set", &out]), 0);
    assert!(dir.path().join(MANIFEST_FILE).exists());
    assert_eq!(cli(&["run", "--set", "physics.bogus=1"]), 2);
    assert_eq!(cli(&["run", "--set", "physics.N=0", "--set", &out]), 2);
    assert_eq!(cli(&["run", dir.path().join("missing.cfg").to_str().unwrap()]), 2);
    assert_eq!(cli(&["figure", "no-such-figure", "--out", dir.path().to_str().unwrap()]), 2);
    assert_eq!(cli(&["figure", "--list"]), 0);
}
