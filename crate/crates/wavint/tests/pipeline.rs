//! End-to-end runs through the configuration format, the file outputs and
//! the installed binary: format stability, determinism, exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;
use wavint::cli::{self, OracleKind};

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wavint-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const IDEAL_SMALL: &str = r#"
frequency 20
source_depth 36
layer {
  z_top 0
  z_bot 100
  c constant 1500
  rho constant 1
  alpha constant 0
}
bottom pressure_release
order 10
k_grid auto 1024
ranges 1 1500 300
depths 0 100 51
output spectrum 46
output tl_grid
output tl_bin
output tl_line 46
"#;

#[test]
fn run_produces_all_requested_files() {
    let cfg = cli::parse(IDEAL_SMALL).unwrap();
    let out = temp_dir("files");
    let summary = cli::run(&cfg, &out, Some(OracleKind::IdealFree)).unwrap();

    for name in [
        "spectrum_z46_000.csv",
        "tl_grid.csv",
        "tl_grid.bin",
        "tl_line_z46_000.csv",
        "tl_grid_oracle.csv",
        "summary.txt",
    ] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    assert_eq!(summary.peaks.len(), 1);
    // Both propagating modes make the summary's peak list.
    assert_eq!(summary.peaks[0].1.len(), 2, "peaks: {:?}", summary.peaks);
    assert!(summary.oracle_error_db.unwrap() < 1.0);
    assert!(summary.tl_min.unwrap() > 0.0);
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn spectrum_only_config_writes_no_tl_files() {
    let text = IDEAL_SMALL
        .replace("output tl_grid\n", "")
        .replace("output tl_bin\n", "")
        .replace("output tl_line 46\n", "");
    let cfg = cli::parse(&text).unwrap();
    let out = temp_dir("spectrum-only");
    let summary = cli::run(&cfg, &out, None).unwrap();
    assert!(out.join("spectrum_z46_000.csv").is_file());
    assert!(!out.join("tl_grid.csv").exists());
    assert!(!out.join("tl_grid.bin").exists());
    assert!(summary.tl_min.is_none());
    std::fs::remove_dir_all(&out).unwrap();
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    entries
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn identical_configs_reproduce_identical_files() {
    let cfg = cli::parse(IDEAL_SMALL).unwrap();
    let out1 = temp_dir("det1");
    let out2 = temp_dir("det2");
    cli::run(&cfg, &out1, None).unwrap();
    cli::run(&cfg, &out2, None).unwrap();
    let a = read_all(&out1);
    let b = read_all(&out2);
    assert_eq!(a.len(), b.len());
    for ((na, da), (nb, db)) in a.iter().zip(b.iter()) {
        assert_eq!(na, nb);
        assert_eq!(da, db, "file {na} differs between identical runs");
    }
    std::fs::remove_dir_all(&out1).unwrap();
    std::fs::remove_dir_all(&out2).unwrap();
}

#[test]
fn binary_grid_matches_header_and_dimensions() {
    let cfg = cli::parse(IDEAL_SMALL).unwrap();
    let out = temp_dir("bin");
    cli::run(&cfg, &out, None).unwrap();
    let bytes = std::fs::read(out.join("tl_grid.bin")).unwrap();
    assert_eq!(&bytes[0..8], b"WINTTL01");
    let nr = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let nz = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    assert_eq!(&bytes[24..32], &[0u8; 8]);
    assert_eq!(nr, 300);
    assert_eq!(nz, 51);
    assert_eq!(bytes.len(), 32 + 8 * nr * nz);
    // All values finite and clamped.
    for chunk in bytes[32..].chunks_exact(8) {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        assert!(v.is_finite() && v <= 300.0);
    }
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn line_source_pekeris_completes_with_finite_tl() {
    let text = r#"
frequency 50
source_depth 36
source_geometry line
layer {
  z_top 0
  z_bot 100
  c constant 1500
  rho constant 1
  alpha constant 0
}
bottom halfspace 2000 1.5 0.5
order 10
k_grid auto 2048
ranges 1 3000 3000
depths 0 100 401
output tl_grid
normalization line-h0-at-1
"#;
    let cfg = cli::parse(text).unwrap();
    let out = temp_dir("line");
    let summary = cli::run(&cfg, &out, None).unwrap();
    assert!(summary.tl_min.unwrap().is_finite());
    assert!(summary.tl_max.unwrap() <= 300.0);
    let csv = std::fs::read_to_string(out.join("tl_grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 402); // header + 401 depth rows
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_wavint");
    let out = temp_dir("exitcodes");

    // Missing config file: configuration error (2).
    let status = Command::new(exe)
        .args(["--config", "/nonexistent.cfg", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));

    // Invalid config content: 2.
    let bad = out.join("bad.cfg");
    std::fs::write(&bad, "frequency fish\n").unwrap();
    let status = Command::new(exe)
        .args(["--config"])
        .arg(&bad)
        .args(["--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));

    // Valid tiny run: 0, and the summary goes to stdout.
    let good = out.join("good.cfg");
    std::fs::write(
        &good,
        IDEAL_SMALL
            .replace("k_grid auto 1024", "k_grid auto 512")
            .replace("ranges 1 1500 300", "ranges 1 500 50"),
    )
    .unwrap();
    let result = Command::new(exe)
        .args(["--config"])
        .arg(&good)
        .args(["--out"])
        .arg(out.join("res"))
        .args(["--threads", "2"])
        .output()
        .unwrap();
    assert_eq!(
        result.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("spectrum peaks"));
    assert!(stdout.contains("stage times"));

    // Quiet suppresses the report.
    let result = Command::new(exe)
        .args(["--config"])
        .arg(&good)
        .args(["--out"])
        .arg(out.join("res2"))
        .arg("--quiet")
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(0));
    assert!(result.stdout.is_empty());

    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn config_round_trip_through_files() {
    let cfg = cli::parse(IDEAL_SMALL).unwrap();
    let text = cli::serialize(&cfg);
    let again = cli::parse(&text).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(text, cli::serialize(&again));
}
