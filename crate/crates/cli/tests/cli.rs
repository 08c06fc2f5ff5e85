use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cloaklab_cli::config::{parse_toml, RunConfig};
use cloaklab_cli::{resolve, Overrides, EXIT_CONFIG, EXIT_GATE, EXIT_OK};

fn cloaklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cloaklab")).args(args).output().expect("spawn cloaklab")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn empty_config_file_gives_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "").unwrap();
    let cfg = resolve(&Overrides {
        config: Some(path),
        ..Default::default()
    })
    .unwrap();
    let d = RunConfig::default();
    assert_eq!(cfg.hash(), d.hash());
    assert_eq!(cfg.k, 2.0);
    assert_eq!(parse_toml("").unwrap().hash(), d.hash());
}

#[test]
fn bad_values_exit_with_config_code() {
    for args in [
        &["sweep", "--k", "0"][..],
        &["sweep", "--k", "-1"],
        &["sweep", "--eps-list", "0.1,0.2"],
        &["sweep", "--eps-list", "0.1,0.1"],
        &["sweep", "--eps-list", "0.1,x"],
        &["sweep", "--scheme", "ball4d"],
        &["sweep", "--source", "1,2"],
        &["stability", "--scheme", "ball2d"],
        &["no-such-command"],
    ] {
        let o = cloaklab(args);
        assert_eq!(code(&o), EXIT_CONFIG, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn decreasing_eps_list_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let o = cloaklab(&["sweep", "--eps-list", "0.2,0.1,0.05", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("epsilon,visibility_h1,certificate,n_unknowns,runtime_s,flags,config_hash\n"));
}

#[test]
fn unknown_toml_key_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "k = 2.0\nwavenumber = 3.0\n").unwrap();
    let o = cloaklab(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_CONFIG);
    assert!(String::from_utf8_lossy(&o.stderr).contains("wavenumber"));

    fs::write(&path, "[mfs]\nn_theta = \"many\"\n").unwrap();
    let o = cloaklab(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_CONFIG);
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_theta"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "k = 3.0\nscheme = \"ball2d\"\n").unwrap();
    let cfg = resolve(&Overrides {
        config: Some(path),
        k: Some(1.5),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(cfg.k, 1.5);
    assert_eq!(cfg.scheme.as_str(), "ball2d");
}

#[test]
fn selftest_passes() {
    let o = cloaklab(&["selftest"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), EXIT_OK, "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn starved_cylinder_solver_flags_rows_and_exits_with_gate_code() {
    let dir = tempfile::tempdir().unwrap();
    #[rustfmt::skip]
    let o = cloaklab(&[
        "sweep", "--scheme", "cyl3d", "--eps-list", "0.2,0.1",
        "--mfs-n-theta", "4", "--mfs-n-z", "4", "--mfs-n-cap-rings", "1", "--mfs-axis-sources", "4",
        "--mfs-fixed-resolution", "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), EXIT_GATE);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row.split(',').nth(5).unwrap().contains("cert-fail"), "{row}");
    }
    let audit: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("audit-sweep.json")).unwrap()).unwrap();
    assert_eq!(audit[0]["verdict"], "refuted-as-printed");
}

#[test]
fn materials_header_carries_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let o = cloaklab(&["materials", "--map", "radial", "--grid-n", "5", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), EXIT_OK);
    let text = fs::read_to_string(dir.path().join("materials.dat")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# cloaklab-mat-1 map=radial eps=0.1 dim=3 config="), "{header}");
    let hash = header.rsplit('=').next().unwrap();
    assert_eq!(hash.len(), 16);
    assert!(lines.next().unwrap().starts_with("y1 y2 y3"));
    assert!(lines.count() > 0);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for cmd in ["sweep", "audit-lowfreq"] {
        for d in [&a, &b] {
            let o = cloaklab(&[cmd, "--scheme", "ball2d", "--threads", "1", "--out", &out_arg(d.path())]);
            assert_eq!(code(&o), EXIT_OK);
        }
    }
    for name in ["sweep.csv", "audit-sweep.json", "audit-lowfreq.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn out_and_threads_do_not_change_the_hash() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o1 = cloaklab(&["sweep", "--threads", "1", "--out", &out_arg(a.path())]);
    let o2 = cloaklab(&["sweep", "--threads", "3", "--out", &out_arg(b.path())]);
    assert_eq!(code(&o1), EXIT_OK);
    assert_eq!(code(&o2), EXIT_OK);
    let last = |p: &Path| {
        let csv = fs::read_to_string(p.join("sweep.csv")).unwrap();
        csv.lines().nth(1).unwrap().rsplit(',').next().unwrap().to_string()
    };
    assert_eq!(last(a.path()), last(b.path()));
    let other = cloaklab(&["sweep", "--k", "2.5", "--out", &out_arg(a.path())]);
    assert_eq!(code(&other), EXIT_OK);
    assert_ne!(last(a.path()), last(b.path()));
}
