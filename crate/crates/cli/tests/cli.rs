use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blockade_cli::ModelConfig;
use blockade_core::experiments::SweepSpec;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn blockade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockade"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn model_fixtures() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(fixture(""))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.file_name().unwrap().to_str().unwrap().contains("sweep"))
        .collect();
    v.sort();
    v
}

#[test]
fn fixtures_round_trip() {
    let fixtures = model_fixtures();
    assert!(fixtures.len() >= 7);
    for path in fixtures {
        let cfg = ModelConfig::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let again = ModelConfig::parse(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
        let (a, b) = (cfg.model().unwrap(), again.model().unwrap());
        for (x, y) in a.hamiltonian_terms().iter().zip(b.hamiltonian_terms()) {
            assert!((&x.op - &y.op).max_abs() <= 1e-15 && x.coeff == y.coeff);
        }
        for (x, y) in a.dissipators().iter().zip(b.dissipators()) {
            assert!((&x.jump - &y.jump).max_abs() <= 1e-15 && x.rate == y.rate);
        }
    }
    let spec: SweepSpec = serde_json::from_str(&std::fs::read_to_string(fixture("spin1_sweep.json")).unwrap()).unwrap();
    assert_eq!(spec.n_points(), 21 * 41);
}

#[test]
fn fixture_models_match_library_builders() {
    use blockade_core::experiments::{spin1_model, spin32_model, su3_thermal_model};
    let check = |name: &str, lib: blockade_core::LindbladModel| {
        let cfg = ModelConfig::parse(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap();
        let m = cfg.model().unwrap();
        assert!((&m.hamiltonian() - &lib.hamiltonian()).max_abs() <= 1e-15, "{name}");
        let rho = blockade_core::DensityMatrix::maximally_mixed(m.dim()).into_operator();
        assert!((&m.rhs(&rho) - &lib.rhs(&rho)).max_abs() <= 1e-15, "{name}");
    };
    check("spin1_blockade.json", spin1_model(0.0, 0.01, 0.1, 0.1).unwrap());
    check("spin32_v2.json", spin32_model(0.0, 0.0, 0.01, 0.1, 1.0, 0.0588, 0.1696).unwrap());
    check("spin32_v1.json", spin32_model(0.0, 0.01, 0.0, 0.1, 1.0, 1.0, 0.0235).unwrap());
    check("su3_thermal.json", su3_thermal_model(0.02, 0.01, 0.1, 0.1, 2.0, 0.1).unwrap());
}

#[test]
fn symmetry_verdicts() {
    let v = |name: &str| json(&blockade(&["symmetry", "--config", fixture(name).to_str().unwrap()]));
    assert_eq!(v("spin1_blockade.json")["feasible"], true);
    assert_eq!(v("su3_thermal.json")["feasible"], false);
    let c = v("composite_two_blocks.json");
    assert_eq!(c["closure_dims"], serde_json::json!([15, 3]));
    assert_eq!(c["blockade_feasible"], serde_json::json!([false, true]));
    let b = v("composite_isolated_level.json");
    assert_eq!(b["labels"], serde_json::json!(["u(1)", "full su(7)"]));
}

#[test]
fn sync_reports_measures_and_blockade_flag() {
    let out = json(&blockade(&["sync", "--config", fixture("spin1_blockade.json").to_str().unwrap()]));
    assert!(out["s_max"].is_f64());
    assert_eq!(out["threshold"].as_f64(), Some(1e-9));
    // the first harmonic cancels exactly; the second harmonic stays
    assert!(out["residuals"][0]["residual"].as_f64().unwrap() <= 1e-9);
    assert!(out["s_max"].as_f64().unwrap() < 1e-3);
    assert!(out["l1"].as_f64().unwrap() >= 1e-4);

    let off = json(&blockade(&["sync", "--config", fixture("spin1_detuned_loss.json").to_str().unwrap()]));
    assert!(off["s_max"].as_f64().unwrap() >= 1e-6);
    assert_eq!(off["blockade"], false);
}

#[test]
fn steady_writes_density_matrix() {
    let out = json(&blockade(&["steady", "--config", fixture("spin32_v2.json").to_str().unwrap()]));
    let rho = out["rho"].as_array().unwrap();
    assert_eq!(rho.len(), 4);
    let trace: f64 = (0..4).map(|k| rho[k][k][0].as_f64().unwrap()).sum();
    assert!((trace - 1.0).abs() <= 1e-12);
    assert!(out["diagnostics"]["relative_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn floats_carry_seventeen_digits() {
    let out = blockade(&["steady", "--config", fixture("spin1_blockade.json").to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let re = text.lines().find(|l| l.contains("relative_residual")).unwrap();
    let mantissa = re.split(':').nth(1).unwrap().trim().trim_end_matches(',').split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17);
}

fn first_harmonic(marginal: &[Value]) -> f64 {
    let n = marginal.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for row in marginal {
        let phi = row[0].as_f64().unwrap();
        let v = row[1].as_f64().unwrap();
        c += v * phi.cos() / n;
        s += v * phi.sin() / n;
    }
    c.hypot(s)
}

#[test]
fn qfunc_grid_and_offdiag_marginal() {
    let out = json(&blockade(&["qfunc", "--config", fixture("spin1_blockade.json").to_str().unwrap()]));
    let rows = out["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 60 * 120);
    assert_eq!(out["columns"], serde_json::json!(["theta_1", "phi_1", "q", "q_offdiag"]));

    let marginal = out["offdiag_phase_integral"].as_array().unwrap();
    assert_eq!(marginal.len(), 120);
    assert!(first_harmonic(marginal) <= 1e-12);
    assert!(marginal.iter().all(|r| r[1].as_f64().unwrap().abs() <= 1e-3));

    // trapezoid over the tabulated theta column reproduces the marginal
    let dtheta = PI / 59.0;
    for j in [0, 17, 60] {
        let mut total = 0.0;
        for i in 0..60 {
            let r = &rows[i * 120 + j];
            let theta = r[0].as_f64().unwrap();
            let w = if i == 0 || i == 59 { 0.5 } else { 1.0 };
            total += w * dtheta * theta.sin() * r[3].as_f64().unwrap();
        }
        assert!((total - marginal[j][1].as_f64().unwrap()).abs() <= 1e-5);
    }

    let off = json(&blockade(&["qfunc", "--config", fixture("spin1_detuned_loss.json").to_str().unwrap(), "--theta-points", "3", "--phi-points", "16"]));
    assert!(first_harmonic(off["offdiag_phase_integral"].as_array().unwrap()) >= 1e-6);
}

#[test]
fn one_point_sweep_matches_sync() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"model": "spin1",
            "axes": [{"name": "gamma_d", "min": 0.05, "max": 0.05, "count": 1}],
            "fixed": {"delta": 0.0, "epsilon": 0.01, "gamma_g": 0.1},
            "measures": ["s_max", "l1", "rel_entropy", "residuals"]}"#,
    )
    .unwrap();
    let out = blockade(&["sweep", "--config", spec.to_str().unwrap()]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let cell = |name: &str| -> f64 { rows[0][header.iter().position(|h| h == name).unwrap()].parse().unwrap() };
    assert_eq!(&rows[0][header.len() - 1], "ok");

    let sync = json(&blockade(&["sync", "--config", fixture("spin1_detuned_loss.json").to_str().unwrap()]));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-14 * b.abs().max(1e-3);
    assert!(close(cell("s_max"), sync["s_max"].as_f64().unwrap()));
    assert!(close(cell("l1"), sync["l1"].as_f64().unwrap()));
    assert!(close(cell("rel_entropy"), sync["rel_entropy"].as_f64().unwrap()));
    for (k, r) in sync["residuals"].as_array().unwrap().iter().enumerate() {
        assert!((cell(&format!("residual_{}", k + 1)) - r["residual"].as_f64().unwrap()).abs() <= 1e-15);
    }
}

#[test]
fn sweep_output_is_deterministic_and_has_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"model": "spin1",
            "axes": [{"name": "gamma_ratio", "min": 0.5, "max": 2.0, "count": 5, "scale": "log"},
                     {"name": "epsilon_rel", "min": 0.05, "max": 0.1, "count": 2}],
            "measures": ["s_max", "l1"]}"#,
    )
    .unwrap();
    let run = |workers: &str, name: &str| -> Vec<u8> {
        let out = dir.path().join(name);
        let meta = dir.path().join(format!("{name}.json"));
        let o = blockade(&[
            "sweep",
            "--config",
            spec.to_str().unwrap(),
            "--workers",
            workers,
            "--threshold",
            "1e-3",
            "--out",
            out.to_str().unwrap(),
            "--meta",
            meta.to_str().unwrap(),
        ]);
        assert!(o.status.success() && o.stdout.is_empty());
        let sidecar: Value = serde_json::from_slice(&std::fs::read(meta).unwrap()).unwrap();
        assert_eq!(sidecar["failed_points"], 0);
        assert_eq!(sidecar["phase_grid"], 12);
        std::fs::read(out).unwrap()
    };
    let a = run("1", "a.csv");
    let b = run("4", "b.csv");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("gamma_ratio,epsilon_rel,s_max,l1,ss_residual,trace_error,min_eigenvalue,blockade,status\n"));
    assert_eq!(text.lines().count(), 11);
}

fn corrupt(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn input_errors_exit_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let good = std::fs::read_to_string(fixture("spin1_blockade.json")).unwrap();
    let cases = [
        corrupt(dir.path(), "truncated.json", &good[..good.len() / 2]),
        corrupt(dir.path(), "unknown_field.json", &good.replacen("\"dim\"", "\"colour\": 1, \"dim\"", 1)),
        corrupt(dir.path(), "bad_op.json", &good.replacen("\"Sy\"", "\"Sw\"", 1)),
        corrupt(dir.path(), "non_hermitian.json", &good.replacen("\"Sy\"", "\"sigma 1 2\"", 1)),
        corrupt(dir.path(), "negative_rate.json", &good.replacen("\"rate\": 0.1", "\"rate\": -0.1", 1)),
        corrupt(dir.path(), "bad_index.json", &good.replacen("\"Sz\"", "\"sigma 4 4\"", 1)),
        corrupt(dir.path(), "bad_family.json", &good.replacen("\"spin\"", "\"su3\"", 1).replacen("\"dim\": 3", "\"dim\": 4", 1)),
        dir.path().join("missing.json"),
    ];
    for (i, path) in cases.iter().enumerate() {
        let out_file = dir.path().join(format!("out{i}.json"));
        let o = blockade(&["sync", "--config", path.to_str().unwrap(), "--out", out_file.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
        assert!(!out_file.exists());
        assert!(!o.stderr.is_empty());
    }

    let o = blockade(&["sync", "--config", fixture("spin1_blockade.json").to_str().unwrap(), "--phase-grid", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = blockade(&["symmetry", "--config", dir.path().join("truncated.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    let bad_spec = corrupt(dir.path(), "spec.json", r#"{"model": "spin1", "axes": [{"name": "nope", "min": 0, "max": 1, "count": 2}]}"#);
    assert_eq!(blockade(&["sweep", "--config", bad_spec.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // no dissipation: every diagonal state is stationary
    let p = corrupt(dir.path(), "closed.json", r#"{"dim": 3, "hamiltonian": [{"op": "Sz", "coeff": 1.0}]}"#);
    let out_file = dir.path().join("o.json");
    let o = blockade(&["steady", "--config", p.to_str().unwrap(), "--out", out_file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out_file.exists());
}

#[test]
fn verify_passes() {
    let o = blockade(&["verify"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(o.status.success(), "{text}");
    assert!(text.contains("z-matrix spin-1"));
    assert!(text.contains("completeness su3"));
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 20);
}
