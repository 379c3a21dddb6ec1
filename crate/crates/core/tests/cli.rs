use std::path::Path;
use std::process::Command;

use infopower::circuit::{CircuitParams, Placement, Termination};
use infopower::pareto::{trace_pareto, Scenario, TraceConfig};
use infopower::shell::config::config_from_meta;
use infopower::shell::output::read_pareto_csv;
use infopower::shell::{load_config_str, run_trace, verify_with, VerifyOptions};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_infopower"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const UNIFORM: &str = r#"{
  "g_d_over_gm": [0.05, 0.1, 0.15],
  "P_norm": 0.1,
  "scenario": "B",
  "eta_grid": [0, 1, 10, 30]
}"#;

fn run(args: &[&str]) -> std::process::Output {
    bin().args(args).output().unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", UNIFORM);
    for out in ["one", "two"] {
        let o = run(&["trace", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join(out).to_str().unwrap(), "--emit-svg"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for member in ["B_gd0.05", "B_gd0.1", "B_gd0.15"] {
        let a = std::fs::read(tmp.path().join("one").join(member).join("pareto.csv")).unwrap();
        let b = std::fs::read(tmp.path().join("two").join(member).join("pareto.csv")).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn empty_eta_grid_is_rejected_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"g_d_over_gm": 0.1, "P_norm": 0.1, "scenario": "A", "eta_grid": []}"#);
    let out = tmp.path().join("out");
    let o = run(&["trace", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eta_grid"));
    assert!(!out.exists());
}

#[test]
fn unordered_bounds_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"g_d_over_gm": 0.1, "P_norm": 0.1, "scenario": "A", "g_s_bounds": [0.1, 0.01]}"#,
    );
    let o = run(&["trace", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("g_s_bounds"));
}

#[test]
fn unwritable_output_fails_with_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", UNIFORM);
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = run(&["trace", "--config", cfg.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn unknown_keys_and_flags_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"g_d_over_gm": 0.1, "P_norm": 0.1, "scenario": "A", "colour": 1}"#);
    let o = run(&["trace", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    assert_eq!(run(&["trace", "--config", cfg.to_str().unwrap(), "--scenario", "C"]).status.code(), Some(2));
}

#[test]
fn strict_mode_flags_infeasible_points() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"g_d_over_gm": 0.1, "P_norm": 0.1, "scenario": "B", "eta_grid": [0, 1e6]}"#,
    );
    let out = tmp.path().join("o");
    let args = ["trace", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(run(&args).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(run(&strict).status.code(), Some(1));
    let text = std::fs::read_to_string(out.join("pareto.csv")).unwrap();
    assert!(text.lines().last().unwrap().ends_with("Infeasible"));
}

#[test]
fn metadata_reloads_to_the_same_config() {
    let tmp = tempfile::tempdir().unwrap();
    for body in [
        format!(r#"{{"g_d_over_gm": 0.1, "P_norm": 0.1, "scenario": ["B", "BL"], "eta_grid": [0, 5], "output_dir": "{}"}}"#, tmp.path().join("n").display()),
        format!(
            r#"{{"physical": {{"g_m": 0.02, "C_gd": 1e-13, "g_d": 0.002, "N0": 1e-20, "P": 2e-9, "omega_B": 2e10}},
                "scenario": "B", "eta_grid": [0, 5], "output_dir": "{}"}}"#,
            tmp.path().join("p").display()
        ),
    ] {
        let cfg = load_config_str(&body).unwrap();
        let summary = run_trace(&cfg).unwrap();
        let meta = std::fs::read_to_string(summary.output_dir.join("meta.json")).unwrap();
        assert_eq!(config_from_meta(&meta).unwrap(), cfg);
        assert!(meta.contains("\"units\""));
    }
}

#[test]
fn written_tables_parse_back_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{"g_d_over_gm": 0.1, "P_norm": 0.1, "scenario": "BL", "eta_grid": [0, 2.5, 17, 60], "output_dir": "{}"}}"#,
        tmp.path().display()
    );
    let cfg = load_config_str(&body).unwrap();
    run_trace(&cfg).unwrap();
    let parsed = read_pareto_csv(&std::fs::read_to_string(tmp.path().join("pareto.csv")).unwrap()).unwrap();
    let direct = trace_pareto(
        &TraceConfig {
            scenario: Scenario::UniformWithMatching,
            eta_grid: vec![0.0, 2.5, 17.0, 60.0],
            power: 0.1,
            omega_b: 0.1,
            grid: cfg.grid,
            search: cfg.search(),
        },
        &cfg.circuit(0.1).unwrap(),
    )
    .unwrap();
    let close = |a: f64, b: f64| a == b || (a - b).abs() <= 1e-15 * a.abs().max(b.abs());
    assert_eq!(parsed.len(), direct.len());
    for (p, d) in parsed.iter().zip(&direct) {
        for (a, b) in [(p.eta, d.eta), (p.capacity, d.capacity), (p.g_s, d.g_s), (p.g_l, d.g_l), (p.mu, d.mu), (p.p_out, d.p_out)] {
            assert!(close(a, b), "{a} vs {b}");
        }
        assert_eq!(p.inductance.is_some(), d.inductance.is_some());
        assert_eq!(p.status, d.status);
    }
}

#[test]
fn svg_plots_are_well_formed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", UNIFORM);
    let out = tmp.path().join("o");
    let o = run(&["trace", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--emit-svg"]);
    assert!(o.status.success());
    let combined = std::fs::read_to_string(out.join("pareto.svg")).unwrap();
    let doc = roxmltree::Document::parse(&combined).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(doc.root_element().attribute("version"), Some("1.1"));
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 3);
    for g in ["0.05", "0.1", "0.15"] {
        assert!(combined.contains(&format!("g_d/g_m = {g}")));
    }
    let single = std::fs::read_to_string(out.join("B_gd0.1").join("pareto.svg")).unwrap();
    roxmltree::Document::parse(&single).unwrap();
}

#[test]
fn gain_profile_and_psd_commands_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"g_d_over_gm": 0.1, "P_norm": 0.1, "scenario": "A", "multistart": 3,
            "grid": {"samples": 513}, "psd_etas": [2],
            "termination": {"g_s": 1.0, "g_l": 0.5, "L": 2.0}}"#,
    );
    let out = tmp.path().join("o");
    for cmd in ["gain-profile", "psd"] {
        let o = run(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--emit-svg"]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let gain = std::fs::read_to_string(out.join("gain.csv")).unwrap();
    assert!(gain.starts_with("omega,gain\n"));
    assert_eq!(gain.lines().count(), 514);
    let psd = std::fs::read_to_string(out.join("psd_2.csv")).unwrap();
    assert!(psd.starts_with("omega,phi_s\n"));
    roxmltree::Document::parse(&std::fs::read_to_string(out.join("psd.svg")).unwrap()).unwrap();
}

#[test]
fn quick_verify_passes() {
    let o = run(&["verify", "--quick"]);
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{table}");
    assert!(table.lines().count() >= 8);
    assert!(table.lines().all(|l| l.starts_with("PASS")));
}

fn flipped_gain(p: &CircuitParams, t: &Termination, omega: f64) -> infopower::Result<f64> {
    use num_complex::Complex64;
    let mut y1 = Complex64::new(t.g_s, 0.0);
    let mut y2 = Complex64::new(t.g_l + p.g_d, 0.0);
    let mut yb = Complex64::new(0.0, omega * p.c_gd);
    if let Some(m) = t.matching {
        let y_l = Complex64::new(0.0, -1.0 / (omega * m.inductance));
        match m.placement {
            Placement::ParallelToCgd => yb += y_l,
            Placement::ShuntOutput => y2 += y_l,
            Placement::ShuntInput => y1 += y_l,
        }
    }
    // transconductance enters the denominator with the wrong sign
    let h = (yb - p.g_m) / (y1 * y2 + yb * (y1 + y2 - p.g_m));
    Ok(4.0 * t.g_s * t.g_l * h.norm_sqr())
}

#[test]
fn sign_flip_in_the_gain_is_caught() {
    let cfg = load_config_str(r#"{"g_d_over_gm": 0.1, "P_norm": 0.1, "scenario": "A"}"#).unwrap();
    let checks = verify_with(&cfg, &VerifyOptions { quick: true }, &flipped_gain).unwrap();
    assert!(!checks[0].passed, "{checks:?}");
    assert!(checks[0].name.contains("nodal"));
}
