use super::*;

const SOLVE: &str = r#"
[problem]
id = "poisson1d"

[model]
type = "rfm"
neurons = 30
activation = "sin"
seed = 3

[grid]
counts = [30]

[solve]
cutoff = 1e-12
"#;

const TRAIN: &str = r#"
[problem]
id = "poisson1d"

[model]
type = "two_layer"
neurons = 12
seed = 1

[grid]
counts = [16]

[train]
optimizer = "gd"
learning_rate = 1e-3
steps = 40
record_interval = 5
snapshot_interval = 20
theorem_band = [1e-5, 1e-1]
"#;

fn opts(dir: &Path) -> RunOptions {
    RunOptions {
        output_root: dir.to_path_buf(),
        plots: true,
    }
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = ExperimentConfig::from_toml_str(SOLVE).unwrap();
    let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(cfg.run_name(), "poisson1d_rfm_seed3");
}

#[test]
fn schema_violations_are_config_errors() {
    let cases = [
        SOLVE.replace("poisson1d", "heat"),
        SOLVE.replace("neurons = 30", "neurons = 0"),
        SOLVE.replace("counts = [30]", "counts = [30, 30]"),
        SOLVE.replace("cutoff = 1e-12", "cutoff = 2.0"),
        SOLVE.replace("[solve]", "[solve]\nbogus = 1"),
        format!("{SOLVE}\n[train]\noptimizer = \"gd\"\nlearning_rate = 1e-3\nsteps = 1\n"),
        TRAIN.replace("two_layer", "rfm"),
        TRAIN.replace("steps = 40", "steps = 40\nprecision = \"single\"").replace("two_layer", "deep"),
    ];
    for text in cases {
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, Error::Config(_) | Error::UnknownProblem(_)), "{err:?}");
    }
}

#[test]
fn solve_run_writes_artifacts_and_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_str(SOLVE).unwrap();
    let a = run_experiment(&cfg, &opts(tmp.path())).unwrap();
    let spectrum = std::fs::read_to_string(a.directory.join("spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("index,sigma_ad,sigma_fd\n1,"));
    let sweep = std::fs::read_to_string(a.directory.join("truncation_sweep.csv")).unwrap();
    assert!(sweep.starts_with("P,rel_residual_ad,rel_residual_fd\n"));
    assert!(a.svg_paths.iter().all(|p| p.exists()) && a.svg_paths.len() == 2);
    let s = &a.summary;
    assert_eq!(s.modes.len(), 2);
    assert!(s.h_ad.is_some() && s.e_ad > 0 && s.e_fd > 0);
    assert_ne!(s.prop1.status, VerdictStatus::NotApplicable);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&a.summary_path).unwrap()).unwrap();
    for key in ["H_AD", "H_FD", "e_AD", "e_FD", "prop1", "prop2", "modes"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    let b = run_experiment(&cfg, &opts(tmp.path())).unwrap();
    assert_eq!(spectrum, std::fs::read_to_string(b.directory.join("spectrum.csv")).unwrap());
}

#[test]
fn no_plots_suppresses_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_str(SOLVE).unwrap();
    let a = run_experiment(&cfg, &RunOptions { output_root: tmp.path().into(), plots: false }).unwrap();
    assert!(a.svg_paths.is_empty());
}

#[test]
fn train_run_writes_history_and_kernel_spectra() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_str(TRAIN).unwrap();
    let a = run_experiment(&cfg, &opts(tmp.path())).unwrap();
    assert!(!a.diverged());
    let hist = std::fs::read_to_string(a.directory.join("ad/training.csv")).unwrap();
    assert!(hist.starts_with("step,loss_pinn,loss_f,rel_train_err,rel_l2_err\n0,"));
    assert_eq!(hist.lines().count(), 1 + 9);
    for step in [0, 20, 40] {
        let p = a.directory.join(format!("central2/kernel_spectrum_{step}.csv"));
        assert!(std::fs::read_to_string(p).unwrap().starts_with("index,eigenvalue\n"));
    }
    assert_eq!(a.summary.spectrum_kind, "kernel");
    assert!(a.summary.modes[0].speed_indicator.is_some());
    assert_ne!(a.summary.prop1.status, VerdictStatus::NotApplicable);
}

#[test]
fn divergence_keeps_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let text = TRAIN.replace("learning_rate = 1e-3", "learning_rate = 10.0").replace("steps = 40", "steps = 400");
    let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    let a = run_experiment(&cfg, &opts(tmp.path())).unwrap();
    assert!(a.diverged());
    assert!(a.summary.modes[0].diverged_at.is_some());
    assert!(a.directory.join("ad/training.csv").exists());
    assert!(a.summary_path.exists());
}

#[test]
fn relative_and_absolute_output_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::from_toml_str(SOLVE).unwrap();
    assert_eq!(output_dir(&cfg, tmp.path()), tmp.path().join("runs/poisson1d_rfm_seed3"));
    cfg.output.directory = Some("x/y".into());
    assert_eq!(output_dir(&cfg, tmp.path()), tmp.path().join("x/y"));
    cfg.output.directory = Some(tmp.path().join("abs"));
    assert_eq!(output_dir(&cfg, Path::new("/elsewhere")), tmp.path().join("abs"));
}

#[test]
fn verify_reports_both_propositions() {
    let cfg = ExperimentConfig::from_toml_str(SOLVE).unwrap();
    let v = verify_config(&cfg).unwrap();
    assert_eq!(v.prop1.status, VerdictStatus::Holds);
    assert_ne!(v.prop2.status, VerdictStatus::NotApplicable);
}

#[test]
fn every_preset_builds_valid_configs() {
    for name in PRESET_NAMES {
        let members = preset(name, 4).unwrap();
        assert!(!members.is_empty(), "{name}");
        for m in members {
            m.config.validate().unwrap_or_else(|e| panic!("{name}/{}: {e}", m.tag));
            assert_eq!(m.config.model.seed, 4);
        }
    }
    assert!(preset("fig10", 0).is_err());
}

#[test]
fn preset_aggregates_over_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_preset("fig2a", 2, tmp.path(), false).unwrap();
    assert_eq!(out.runs.len(), 2);
    let agg = &out.aggregates[0];
    assert_eq!(agg.seeds, vec![0, 1]);
    let h = &agg.metrics["H_AD"];
    assert!(h.min <= h.mean && h.mean <= h.max && h.count == 2);
    assert!(out.directory.join("fig2a/aggregate.csv").exists());
    assert!(out.directory.join("fig2a/seed1/spectrum.csv").exists());
}
