//! End-to-end runs of the `superrad` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use superrad::io::CsvTable;

fn superrad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superrad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = superrad(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap()
}

const SMALL_SWEEP: [&str; 4] = ["--override", "n_emitters=6", "--override", "sweep.points=5"];

#[test]
fn sweep_output_is_byte_stable_across_runs_and_workers() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut args = vec!["steady-sweep", "--out", a.path().to_str().unwrap(), "--workers", "1"];
    args.extend(SMALL_SWEEP);
    run_ok(&args);
    let mut args = vec!["steady-sweep", "--out", b.path().to_str().unwrap(), "--workers", "3"];
    args.extend(SMALL_SWEEP);
    run_ok(&args);
    let first = read(a.path(), "steady_sweep.csv");
    assert_eq!(first, read(b.path(), "steady_sweep.csv"));

    let (_, table) = CsvTable::parse(&first).unwrap();
    assert_eq!(table.rows.len(), 5);
    assert_eq!(table.columns[0], "pump[1/s]");
    assert!(table.columns.contains(&"radiation[1/s]".to_string()));
    let pump = table.column("pump[1/s]").unwrap();
    assert!(pump.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn header_reproduces_the_file() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_ok(&[
        "g2",
        "--out",
        a.path().to_str().unwrap(),
        "--override",
        "sweep.values=[1e6, 1e7]",
        "--override",
        "options.tau_points=40",
        "--override",
        "model.n_max=3",
    ]);
    run_ok(&[
        "g2",
        "--config",
        a.path().join("g2_features.csv").to_str().unwrap(),
        "--out",
        b.path().to_str().unwrap(),
    ]);
    for f in ["g2.csv", "g2_features.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let (header, feats) = CsvTable::parse(&read(a.path(), "g2_features.csv")).unwrap();
    assert!(header.contains("version = "));
    assert!(header.contains("values = [1000000.0, 10000000.0]"));
    assert_eq!(feats.rows.len(), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // dicke backend on a five-level model
    assert_eq!(
        superrad(&["steady-sweep", "--backend", "dicke", "--out", out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        superrad(&["g2", "--override", "nonsense", "--out", out]).status.code(),
        Some(2)
    );
    assert_eq!(
        superrad(&["g2", "--override", "sweep.values=[3, 2, 5]", "--out", out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        superrad(&["g2", "--backend", "meanfield", "--out", out]).status.code(),
        Some(2)
    );
    assert_eq!(
        superrad(&["g2", "--override", "n_emitters=12", "--out", out])
            .status
            .code(),
        Some(3)
    );
    let code = superrad(&[
        "steady-sweep",
        "--override",
        "n_emitters=2",
        "--override",
        "options.t_end=1e-15",
        "--override",
        "sweep.points=2",
        "--out",
        out,
    ])
    .status
    .code();
    assert_eq!(code, Some(4));
    assert_eq!(
        fs::read_dir(dir.path()).unwrap().count(),
        0,
        "failed runs leave no files"
    );
}

#[test]
fn validate_and_presets() {
    let listing = run_ok(&["presets", "list"]);
    for name in superrad::models::presets::NAMES {
        assert!(listing.contains(name), "{name}");
    }
    assert!(run_ok(&["presets", "show", "paper-pulse-2lvl"]).contains("n_emitters = 40"));
    let resolved = run_ok(&[
        "validate-config",
        "--command",
        "spectrum",
        "--override",
        "rates.pump=\"5 MHz\"",
    ]);
    assert!(resolved.contains("pump = \"5 MHz\""));
    assert!(resolved.contains("n_emitters = 80"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, &resolved).unwrap();
    let again = run_ok(&["validate-config", "--config", path.to_str().unwrap()]);
    assert_eq!(again, resolved);
    let code = superrad(&["pulse", "--config", path.to_str().unwrap()]).status.code();
    assert_eq!(code, Some(2), "a spectrum config is not a pulse config");
}

#[test]
fn released_ensemble_bursts() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "pulse",
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "n_emitters=8",
        "--override",
        "options.time_points=61",
    ]);
    let (_, t) = CsvTable::parse(&read(dir.path(), "pulse.csv")).unwrap();
    let rad = t.column("radiation[1/s]").unwrap();
    let (k, peak) = rad
        .iter()
        .enumerate()
        .fold((0, 0.0), |b, (i, &r)| if r > b.1 { (i, r) } else { b });
    assert!(k > 0 && peak > 1.2 * rad[0], "peak {peak} at {k}, start {}", rad[0]);
    assert!(*rad.last().unwrap() < 0.05 * peak);
}
