use std::path::Path;
use std::process::{Command, Output};

use dpe::photonstats::{delay_grid, g2_dip_convolved, Histogram, HistogramKind};

fn dpe(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpe"))
        .args(args)
        .env("DPE_CACHE_DIR", dir.join("cache"))
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value_after(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no {key} in {text}"));
    line[key.len()..].trim().parse().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "[pulse]\nareaa_pi = 3.0\n").unwrap();
    let o = dpe(&["pulse", "-c", cfg.to_str().unwrap(), "-o", tmp.path().to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("areaa_pi"));
}

#[test]
fn oversized_memory_is_a_resource_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = dpe(
        &["evolve", "-o", out, "--set", "engine.kind=\"path-integral\"", "--set", "pathint.memory_k=20"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn zero_detuning_collapses_to_resonant_pi_pulse() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = dpe(&["evolve", "-o", out, "--set", "pulse.delta=0.0", "--set", "pulse.area_pi=1.0"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let n = value_after(&stdout(&o), "n_final = ");
    assert!((n - 1.0).abs() < 1e-3, "{n}");
    assert!(tmp.path().join("trajectory.csv").exists());
}

#[test]
fn uncoupled_path_integral_agrees_with_closed_engine() {
    let tmp = tempfile::tempdir().unwrap();
    let closed = tmp.path().join("closed");
    let pi = tmp.path().join("pi");
    let common = ["--set", "pulse.area_pi=5.0"];
    let a = dpe(&[&["evolve", "-o", closed.to_str().unwrap()][..], &common].concat(), tmp.path());
    let b = dpe(
        &[
            &["evolve", "-o", pi.to_str().unwrap()][..],
            &common,
            &["--set", "engine.kind=\"path-integral\"", "--set", "phonon.d_e=0.0", "--set", "phonon.d_h=0.0"],
            &["--set", "pathint.dt=0.05", "--set", "pathint.memory_k=1"],
        ]
        .concat(),
        tmp.path(),
    );
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    let (na, nb) = (value_after(&stdout(&a), "n_final = "), value_after(&stdout(&b), "n_final = "));
    assert!((na - nb).abs() < 1e-3, "{na} vs {nb}");
}

#[test]
fn scan_resumes_and_restarts_on_config_change() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let grid = ["--set", "scan.areas_pi=[1.0, 2.0, 3.0]", "--set", "scan.contrasts=[-0.5, 0.0, 0.5]"];
    let first = dpe(&[&["scan", "-o", out][..], &grid].concat(), tmp.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(stdout(&first).contains("cells = 9 computed = 9 failed = 0"), "{}", stdout(&first));
    let m1 = manifest(tmp.path());
    assert_eq!(m1["details"]["complete"], true);
    let map1 = std::fs::read_to_string(tmp.path().join("occupation_map.csv")).unwrap();

    let again = dpe(&[&["scan", "-o", out][..], &grid].concat(), tmp.path());
    assert!(stdout(&again).contains("computed = 0"), "{}", stdout(&again));
    assert_eq!(std::fs::read_to_string(tmp.path().join("occupation_map.csv")).unwrap(), map1);

    let changed = dpe(&[&["scan", "-o", out][..], &grid, &["--set", "pulse.delta=0.7"]].concat(), tmp.path());
    assert!(stdout(&changed).contains("computed = 9"), "{}", stdout(&changed));
    assert_ne!(manifest(tmp.path())["config_hash"], m1["config_hash"]);
}

#[test]
fn fit_reads_a_histogram_file_and_writes_json() {
    let tmp = tempfile::tempdir().unwrap();
    let taus = delay_grid(5.0, 0.01);
    let par = Histogram::new(taus.clone(), g2_dip_convolved(&taus, 0.687, 0.95, 0.33, 0.168).unwrap(), HistogramKind::G2).unwrap();
    let perp = Histogram::new(taus.clone(), g2_dip_convolved(&taus, 0.687, 0.0, 0.33, 0.168).unwrap(), HistogramKind::G2).unwrap();
    std::fs::write(tmp.path().join("par.csv"), par.to_csv()).unwrap();
    std::fs::write(tmp.path().join("perp.csv"), perp.to_csv()).unwrap();
    let perp_path = tmp.path().join("perp.csv");
    let o = dpe(
        &[
            "fit",
            "-i",
            tmp.path().join("par.csv").to_str().unwrap(),
            "-o",
            tmp.path().to_str().unwrap(),
            "--set",
            &format!("fit.g_perp=\"{}\"", perp_path.display()),
            "--set",
            "fit.windows=[0.1, 10.0]",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["kind"], "g2");
    let v = fit["params"]["v_hom"].as_f64().unwrap();
    assert!((v - 0.95).abs() < 1e-3, "{fit}");
    let curve = std::fs::read_to_string(tmp.path().join("visibility.csv")).unwrap();
    assert!(curve.contains("window_ns,visibility"));

    // Mismatched kind is a configuration error.
    let o = dpe(
        &["fit", "-i", tmp.path().join("par.csv").to_str().unwrap(), "-o", tmp.path().to_str().unwrap(), "--set", "fit.kind=\"lifetime\""],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_histogram_reports_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "# kind: g2\nbin_center,counts\n0.0,1.0\n0.1,oops\n0.2,3.0\n").unwrap();
    let o = dpe(&["fit", "-i", bad.to_str().unwrap(), "-o", tmp.path().to_str().unwrap()], tmp.path());
    assert_ne!(o.status.code(), Some(0));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.csv:4:") && err.contains("oops"), "{err}");
}

#[test]
fn pulse_writes_field_and_spectrum() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dpe(&["pulse", "-o", tmp.path().to_str().unwrap(), "--set", "pulse.w_blue=0.2"], tmp.path());
    assert!(o.status.success());
    let c = value_after(&stdout(&o), "contrast = ");
    // Equal heights make intensity proportional to width, and C = (I_B - I_R)/(I_B + I_R).
    assert!((c + 1.0 / 3.0).abs() < 1e-6, "{c}");
    let field = std::fs::read_to_string(tmp.path().join("pulse_field.csv")).unwrap();
    assert!(field.contains("t_ps,re_f,im_f"));
    let m = manifest(tmp.path());
    assert_eq!(m["command"], "pulse");
    assert!(m["outputs"].as_array().unwrap().len() >= 2);
}
