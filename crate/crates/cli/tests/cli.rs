use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use resonator_cli::{parse_config, FigurePreset};

fn resonator(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resonator"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn subcommands_write_documented_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        r#"{
            "model": {"t1": 1, "t2": 1, "delta": 0.8, "cells_per_chain": 3},
            "run": {
                "sweep": {"start": 0.5, "end": 1.5, "step": 0.25},
                "time": {"t_max": 10, "samples": 101},
                "accumulation_window": [2, 10],
                "drive": {"omega_start": -1, "omega_end": 1, "omega_step": 0.5}
            }
        }"#,
    );
    let out_s = out.to_string_lossy().into_owned();
    let expected = [
        (
            "sweep",
            vec![
                ("sweep_real.csv", "t2,index,re_E,im_E"),
                ("sweep_imag.csv", "t2,zero_mode_count,max_abs_imag"),
                ("ipr.csv", "t2,index,re_E,ipr"),
            ],
        ),
        (
            "evolve",
            vec![("evolution.csv", "t,site,population,log_norm")],
        ),
        ("scan", vec![("scan.csv", "omega,site,intensity")]),
        (
            "spectrum",
            vec![("spectrum.csv", "index,re_E,im_E,ipr,peak_site,zero_mode")],
        ),
    ];
    for (cmd, files) in expected {
        let dir = format!("{out_s}/{cmd}");
        let o = resonator(&[cmd, "--config", &cfg, "--out", &dir, "--format", "csv+svg"]);
        assert!(
            o.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let dir = Path::new(&dir);
        for (name, cols) in files {
            assert_eq!(header(&dir.join(name)), cols, "{cmd}/{name}");
        }
        assert_eq!(header(&dir.join("manifest.csv")), "path,sha256");
    }
    let sweep_rows = fs::read_to_string(out.join("sweep/sweep_real.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(sweep_rows, 1 + 5 * 13);
    assert!(out.join("evolve/evolution.svg").exists());
}

#[test]
fn manifest_lists_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("fig7");
    let o = resonator(&["reproduce", "fig7", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success());
    let mut listed: Vec<String> = fs::read_to_string(dir.join("manifest.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    let mut present: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.csv")
        .collect();
    listed.sort();
    present.sort();
    assert_eq!(listed, present);
    let notes = fs::read_to_string(dir.join("notes.txt")).unwrap();
    assert!(notes.contains("eigenstates peaking at Q (site 10): 11"));
    assert!(notes.contains("(sites 9, 11): 10"));
}

#[test]
fn config_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"model": {"t1": 1, "t2": 1}, "bogus": 1}"#);
    let o = resonator(&["spectrum", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("model.delta") && err.contains("bogus"),
        "{err}"
    );

    let cfg = write_config(tmp.path(), "{\"model\": [1,}");
    let o = resonator(&["spectrum", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    assert_eq!(resonator(&["reproduce", "fig11"]).status.code(), Some(2));
    assert_eq!(resonator(&["sweep"]).status.code(), Some(2));
}

#[test]
fn computation_errors_exit_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"model": {"t1": 1, "t2": 1, "delta": 0.8}, "run": {"drive": {"kappa": 0}}}"#,
    );
    let out = tmp.path().join("out");
    let o = resonator(&["scan", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("response"));
}

#[test]
fn io_errors_exit_with_code_4() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("out");
    let o = resonator(&["reproduce", "fig3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let missing = tmp.path().join("missing.json");
    assert_eq!(
        resonator(&["spectrum", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn tol_flag_changes_zero_mode_count() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("loose");
    let o = resonator(&[
        "reproduce",
        "fig5",
        "--out",
        dir.to_str().unwrap(),
        "--tol",
        "0.5",
    ]);
    assert!(o.status.success());
    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert!(summary.contains("zero_mode_tol,0.5"));
    assert!(!summary.contains("zero_mode_count,3\n"));
}

#[test]
fn presets_round_trip_through_json() {
    for fig in FigurePreset::ALL {
        let c = fig.config();
        assert_eq!(parse_config(&c.to_json()).unwrap(), c, "{fig}");
    }
}
