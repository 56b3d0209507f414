//! Config-driven experiments: assemble, analyse spectra, solve or train,
//! verify, and write CSV/JSON/SVG artifacts.

mod config;
pub mod output;
pub mod plot;
mod presets;

pub use config::{
    model_label, DiffSection, ExperimentConfig, GridSection, InitKind, ModelKind, ModelSection,
    OutputSection, ProblemSection, RowSelection, SolveSection, TrainSection,
};
pub use plot::{emit_plot, render_svg, Axes, Scale, Series, Style};
pub use presets::{preset, run_preset, Aggregate, PresetExperiment, PresetOutcome, PRESET_NAMES};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_system_with, AssembledSystem, AssemblyOptions, DiffMode};
use crate::error::{Error, Result};
use crate::features::{sample_features, DeepNetwork, FeatureBasis, FeatureModel};
use crate::linalg::DenseMatrix;
use crate::problems::{make_grid, Grid, PdeProblem};
use crate::spectral::{
    entropy_speed_indicator, sweep_with, verify_prop1, verify_prop2, Hypothesis, Prop1Report,
    Prop2Report, SpectralReport, SpeedIndicator, TruncatedSolver,
};
use crate::training::{
    default_t_star, theorem1_envelopes, train, KernelSample, PinnModel, TrainConfig,
    TwoLayerModel,
};

/// Environment variable that replaces the output root.
pub const OUTPUT_ROOT_ENV: &str = "ADFD_OUTPUT_ROOT";

/// Output root: `$ADFD_OUTPUT_ROOT` if set, else the working directory.
pub fn default_output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub output_root: PathBuf,
    /// `false` suppresses SVG output regardless of the config.
    pub plots: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            output_root: default_output_root(),
            plots: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Holds,
    Fails,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop1Verdict {
    pub status: VerdictStatus,
    pub report: Option<Prop1Report>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop2Verdict {
    /// Whether `σ_min(A_FD) ≥ σ_min(A_AD)` was observed.
    pub status: VerdictStatus,
    pub hypothesis: Option<Hypothesis>,
    pub report: Option<Prop2Report>,
    pub note: String,
}

impl Prop1Verdict {
    fn not_applicable(note: impl Into<String>) -> Self {
        Self {
            status: VerdictStatus::NotApplicable,
            report: None,
            note: note.into(),
        }
    }
}

impl Prop2Verdict {
    fn not_applicable(note: impl Into<String>) -> Self {
        Self {
            status: VerdictStatus::NotApplicable,
            hypothesis: None,
            report: None,
            note: note.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Summary {
    pub a: f64,
    pub b: f64,
    pub t_star: f64,
    pub t_end: f64,
    pub eta: f64,
    pub zeta: f64,
    pub band_mean_min: f64,
    pub band_mean_max: f64,
    pub violation_fraction: f64,
    pub out_of_band_energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub label: String,
    pub mode: DiffMode,
    pub cutoff: usize,
    pub entropy: Option<f64>,
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// Relative residual of the truncated solve at `P = e(a)` (solve runs).
    pub rel_residual_at_cutoff: Option<f64>,
    pub final_loss_pinn: Option<f64>,
    pub final_loss_f: Option<f64>,
    pub final_rel_train_err: Option<f64>,
    pub final_rel_l2_err: Option<f64>,
    pub diverged_at: Option<usize>,
    pub speed_indicator: Option<SpeedIndicator>,
    pub theorem1: Option<Theorem1Summary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub problem: String,
    pub model: String,
    pub seed: u64,
    /// `system` for singular values of `A`, `kernel` for eigenvalues of `G`.
    pub spectrum_kind: String,
    pub threshold: f64,
    #[serde(rename = "H_AD")]
    pub h_ad: Option<f64>,
    #[serde(rename = "H_FD")]
    pub h_fd: Option<f64>,
    #[serde(rename = "e_AD")]
    pub e_ad: usize,
    #[serde(rename = "e_FD")]
    pub e_fd: usize,
    pub modes: Vec<ModeSummary>,
    pub prop1: Prop1Verdict,
    pub prop2: Prop2Verdict,
    pub diverged: bool,
    pub wall_time_s: f64,
}

impl RunSummary {
    /// Flat numeric view used for seed aggregates.
    pub fn metrics(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        let mut put = |k: String, v: Option<f64>| {
            if let Some(v) = v.filter(|v| v.is_finite()) {
                m.insert(k, v);
            }
        };
        put("H_AD".into(), self.h_ad);
        put("H_FD".into(), self.h_fd);
        put("e_AD".into(), Some(self.e_ad as f64));
        put("e_FD".into(), Some(self.e_fd as f64));
        for s in &self.modes {
            let l = &s.label;
            put(format!("{l}.entropy"), s.entropy);
            put(format!("{l}.cutoff"), Some(s.cutoff as f64));
            put(format!("{l}.sigma_max"), Some(s.sigma_max));
            put(format!("{l}.sigma_min"), Some(s.sigma_min));
            put(format!("{l}.rel_residual_at_cutoff"), s.rel_residual_at_cutoff);
            put(format!("{l}.final_loss_pinn"), s.final_loss_pinn);
            put(format!("{l}.final_rel_train_err"), s.final_rel_train_err);
            put(format!("{l}.final_rel_l2_err"), s.final_rel_l2_err);
            put(format!("{l}.speed_lhs"), s.speed_indicator.as_ref().map(|x| x.lhs));
        }
        let flag = |s: VerdictStatus| match s {
            VerdictStatus::Holds => Some(1.0),
            VerdictStatus::Fails => Some(0.0),
            VerdictStatus::NotApplicable => None,
        };
        put("prop1_holds".into(), flag(self.prop1.status));
        put("prop2_conclusion".into(), flag(self.prop2.status));
        put("wall_time_s".into(), Some(self.wall_time_s));
        m
    }
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub run_id: String,
    pub directory: PathBuf,
    pub config_echo: String,
    pub csv_paths: Vec<PathBuf>,
    pub svg_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub summary: RunSummary,
}

impl RunArtifacts {
    pub fn diverged(&self) -> bool {
        self.summary.diverged
    }
}

/// Directory a config writes into under `root`.
pub fn output_dir(cfg: &ExperimentConfig, root: &Path) -> PathBuf {
    match &cfg.output.directory {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => root.join(d),
        None => root.join("runs").join(cfg.run_name()),
    }
}

struct Emitter {
    dir: PathBuf,
    plots: bool,
    csv: Vec<PathBuf>,
    svg: Vec<PathBuf>,
}

impl Emitter {
    fn csv(&mut self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        write(&p)?;
        self.csv.push(p);
        Ok(())
    }

    fn plot(&mut self, name: &str, series: Vec<Series>, axes: &Axes) -> Result<()> {
        if !self.plots {
            return Ok(());
        }
        let series: Vec<Series> = series.into_iter().filter(|s| !s.xs.is_empty()).collect();
        if series.is_empty() {
            return Ok(());
        }
        let p = self.dir.join(name);
        emit_plot(&series, axes, &p)?;
        self.svg.push(p);
        Ok(())
    }
}

/// Keeps the strictly positive points of a series (for log axes).
fn positive(label: &str, xs: &[f64], ys: &[f64], style: Style) -> Series {
    let (x, y): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .unzip();
    Series::new(label, x, y, style)
}

fn legend(mode: &DiffMode) -> String {
    match mode {
        DiffMode::Ad => "AD".into(),
        DiffMode::Fd { scheme, .. } => format!("FD ({scheme})"),
    }
}

/// Runs one experiment end to end and writes its artifacts.
///
/// Divergence during training is not an error: partial artifacts are written
/// and [`RunArtifacts::diverged`] is set.
pub fn run_experiment(cfg: &ExperimentConfig, options: &RunOptions) -> Result<RunArtifacts> {
    cfg.validate()?;
    let start = Instant::now();
    let problem = cfg.build_problem()?;
    let grid = make_grid(&problem, &cfg.grid.counts)?;
    let modes = cfg.modes(&problem, grid.spacing[0]);
    let dir = output_dir(cfg, &options.output_root);
    std::fs::create_dir_all(&dir)?;
    let config_echo = cfg.to_toml_string();
    std::fs::write(dir.join("config.toml"), &config_echo)?;
    let mut em = Emitter {
        dir: dir.clone(),
        plots: options.plots && cfg.output.plots,
        csv: Vec::new(),
        svg: Vec::new(),
    };
    let mut summary = RunSummary {
        run_id: cfg.run_name(),
        problem: problem.id.to_string(),
        model: model_label(cfg.model.kind).into(),
        seed: cfg.model.seed,
        spectrum_kind: String::new(),
        threshold: 0.0,
        h_ad: None,
        h_fd: None,
        e_ad: 0,
        e_fd: 0,
        modes: Vec::new(),
        prop1: Prop1Verdict::not_applicable(""),
        prop2: Prop2Verdict::not_applicable(""),
        diverged: false,
        wall_time_s: 0.0,
    };
    if let Some(solve) = &cfg.solve {
        run_solve(cfg, solve, &problem, &grid, &modes, &mut em, &mut summary)?;
    } else if let Some(t) = &cfg.train {
        run_train(cfg, t, &problem, &grid, &modes, &mut em, &mut summary)?;
    }
    if let Some(ad) = summary.modes.first() {
        summary.h_ad = ad.entropy;
        summary.e_ad = ad.cutoff;
    }
    if let Some(fd) = summary.modes.get(1) {
        summary.h_fd = fd.entropy;
        summary.e_fd = fd.cutoff;
    }
    summary.wall_time_s = start.elapsed().as_secs_f64();
    let summary_path = dir.join("summary.json");
    output::write_json(&summary_path, &summary)?;
    Ok(RunArtifacts {
        run_id: summary.run_id.clone(),
        directory: dir,
        config_echo,
        csv_paths: em.csv,
        svg_paths: em.svg,
        summary_path,
        summary,
    })
}

enum FixedBasis {
    Rfm(FeatureModel),
    Net(DeepNetwork),
}

impl FixedBasis {
    fn as_basis(&self) -> &dyn FeatureBasis {
        match self {
            FixedBasis::Rfm(m) => m,
            FixedBasis::Net(n) => n,
        }
    }
}

fn fixed_basis(cfg: &ExperimentConfig, problem: &PdeProblem) -> Result<FixedBasis> {
    let m = &cfg.model;
    Ok(match m.kind {
        ModelKind::Rfm | ModelKind::TwoLayer => FixedBasis::Rfm(sample_features(
            m.neurons.unwrap_or(0),
            problem.dim,
            m.init_range.unwrap_or(1.0),
            m.seed,
            m.activation,
        )?),
        ModelKind::RandomNet | ModelKind::Deep => FixedBasis::Net(DeepNetwork::sample(
            m.widths.as_deref().unwrap_or(&[]),
            m.activation,
            cfg.init_scheme(),
            m.seed,
        )?),
    })
}

fn sweep_positions(k: usize, cutoff: usize, sigma: &[f64]) -> Vec<usize> {
    let mut ps: Vec<usize> = if k <= 400 {
        (1..=k).collect()
    } else {
        let stride = (k - 200).div_ceil(200);
        (1..=200).chain((200 + stride..=k).step_by(stride)).collect()
    };
    ps.push(cutoff.clamp(1, k));
    ps.sort_unstable();
    ps.dedup();
    ps.retain(|&p| sigma[p - 1] > 0.0);
    ps
}

/// Propositions 1 and 2 on the residual rows of the AD system and the first FD system.
fn verdicts(
    problem: &PdeProblem,
    basis: &FixedBasis,
    grid: &Grid,
    systems: &[AssembledSystem],
) -> (Prop1Verdict, Prop2Verdict) {
    if systems.len() < 2 {
        return (
            Prop1Verdict::not_applicable("no FD system"),
            Prop2Verdict::not_applicable("no FD system"),
        );
    }
    let p1 = match verify_prop1(&systems[0], &systems[1]) {
        Ok(r) => Prop1Verdict {
            status: if r.holds { VerdictStatus::Holds } else { VerdictStatus::Fails },
            report: Some(r),
            note: String::new(),
        },
        Err(e) => Prop1Verdict::not_applicable(e.to_string()),
    };
    let p2 = match basis {
        FixedBasis::Rfm(model) => match verify_prop2(problem, model, grid, &systems[0], &systems[1]) {
            Ok(r) => Prop2Verdict {
                status: if r.conclusion { VerdictStatus::Holds } else { VerdictStatus::Fails },
                hypothesis: Some(r.hypothesis),
                note: r.note.clone(),
                report: Some(r),
            },
            Err(e) => Prop2Verdict::not_applicable(e.to_string()),
        },
        FixedBasis::Net(_) => Prop2Verdict::not_applicable("defined for two-layer feature models"),
    };
    (p1, p2)
}

fn assemble_all(
    problem: &PdeProblem,
    basis: &FixedBasis,
    modes: &[DiffMode],
    grid: &Grid,
    lambda: f64,
) -> Result<Vec<AssembledSystem>> {
    let opts = AssemblyOptions::new(lambda);
    modes
        .iter()
        .map(|m| assemble_system_with(problem, basis.as_basis(), *m, grid, &opts))
        .collect()
}

fn run_solve(
    cfg: &ExperimentConfig,
    solve: &SolveSection,
    problem: &PdeProblem,
    grid: &Grid,
    modes: &[DiffMode],
    em: &mut Emitter,
    summary: &mut RunSummary,
) -> Result<()> {
    summary.spectrum_kind = "system".into();
    summary.threshold = solve.cutoff;
    let basis = fixed_basis(cfg, problem)?;
    let systems = assemble_all(problem, &basis, modes, grid, cfg.lambda(problem))?;
    let mut spectra = Vec::new();
    let mut sweeps = Vec::new();
    for (mode, sys) in modes.iter().zip(&systems) {
        let (a, f): (DenseMatrix, Vec<f64>) = match solve.rows {
            RowSelection::Residual => (sys.residual_matrix(), sys.residual_rhs()),
            RowSelection::All => (sys.a.clone(), sys.f.clone()),
        };
        let solver = TruncatedSolver::new(&a)?;
        let report = SpectralReport::new(solver.sigma().to_vec(), solve.cutoff)?;
        let k = report.sigma.len();
        let positions = match &solve.sweep {
            Some(p) => p.iter().copied().filter(|&p| p <= k && report.sigma[p - 1] > 0.0).collect(),
            None => sweep_positions(k, report.cutoff, &report.sigma),
        };
        let sweep = sweep_with(&solver, &f, &positions)?;
        let at_cutoff = solver.solve(&f, report.cutoff).ok().map(|s| s.rel_residual);
        summary.modes.push(ModeSummary {
            label: mode.label(),
            mode: *mode,
            cutoff: report.cutoff,
            entropy: report.entropy,
            sigma_max: report.sigma_max,
            sigma_min: report.sigma_min,
            rel_residual_at_cutoff: at_cutoff,
            final_loss_pinn: None,
            final_loss_f: None,
            final_rel_train_err: None,
            final_rel_l2_err: None,
            diverged_at: None,
            speed_indicator: None,
            theorem1: None,
        });
        spectra.push(report);
        sweeps.push(sweep.entries);
    }
    let (p1, p2) = verdicts(problem, &basis, grid, &systems);
    summary.prop1 = p1;
    summary.prop2 = p2;

    let empty = Vec::new();
    let fd_sigma = spectra.get(1).map_or(&empty, |r| &r.sigma);
    em.csv("spectrum.csv", |p| output::write_spectrum(p, &spectra[0].sigma, fd_sigma))?;
    let fd_sweep = sweeps.get(1).map_or(&[][..], |s| &s[..]);
    em.csv("truncation_sweep.csv", |p| output::write_sweep(p, &sweeps[0], fd_sweep))?;
    for (i, mode) in modes.iter().enumerate().skip(2) {
        let l = mode.label();
        em.csv(&format!("spectrum_{l}.csv"), |p| output::write_single_spectrum(p, &spectra[i].sigma))?;
        em.csv(&format!("truncation_sweep_{l}.csv"), |p| output::write_single_sweep(p, &sweeps[i]))?;
    }

    let mut ax = Axes::new(
        &format!("Singular values, {} ({})", problem.id, model_label(cfg.model.kind)),
        "index",
        "singular value",
        Scale::Linear,
        Scale::Log,
    );
    let mut series = Vec::new();
    for (mode, r) in modes.iter().zip(&spectra) {
        let xs: Vec<f64> = (1..=r.sigma.len()).map(|i| i as f64).collect();
        series.push(positive(&legend(mode), &xs, &r.sigma, Style::Points));
        ax.markers.push((r.cutoff as f64, format!("e = {} ({})", r.cutoff, mode.label())));
    }
    em.plot("spectrum.svg", series, &ax)?;
    let ax = Axes::new("Truncated solve", "truncation position P", "relative residual", Scale::Linear, Scale::Log);
    let series = modes
        .iter()
        .zip(&sweeps)
        .map(|(mode, s)| {
            let xs: Vec<f64> = s.iter().map(|e| e.0 as f64).collect();
            let ys: Vec<f64> = s.iter().map(|e| e.1).collect();
            positive(&legend(mode), &xs, &ys, Style::Line)
        })
        .collect();
    em.plot("truncation_sweep.svg", series, &ax)?;
    Ok(())
}

fn trainable(cfg: &ExperimentConfig, problem: &PdeProblem, t: &TrainSection) -> Result<Box<dyn PinnModel>> {
    let m = &cfg.model;
    Ok(match m.kind {
        ModelKind::TwoLayer => Box::new(TwoLayerModel::new(
            sample_features(
                m.neurons.unwrap_or(0),
                problem.dim,
                m.init_range.unwrap_or(1.0),
                m.seed,
                m.activation,
            )?,
            t.precision,
        )),
        ModelKind::Deep => Box::new(DeepNetwork::sample(
            m.widths.as_deref().unwrap_or(&[]),
            m.activation,
            cfg.init_scheme(),
            m.seed,
        )?),
        other => {
            return Err(Error::Config(format!("model type {} cannot be trained", model_label(other))))
        }
    })
}

fn run_train(
    cfg: &ExperimentConfig,
    t: &TrainSection,
    problem: &PdeProblem,
    grid: &Grid,
    modes: &[DiffMode],
    em: &mut Emitter,
    summary: &mut RunSummary,
) -> Result<()> {
    summary.spectrum_kind = "kernel".into();
    summary.threshold = t.kernel_threshold;
    let lambda = cfg.lambda(problem);
    let mut histories = Vec::new();
    for mode in modes {
        let mut model = trainable(cfg, problem, t)?;
        let tc = TrainConfig {
            optimizer: t.optimizer,
            learning_rate: t.learning_rate,
            steps: t.steps,
            mode: *mode,
            lambda,
            scaling: t.scaling,
            boundary_derivative: t.boundary_derivative,
            snapshot_interval: t.snapshot_interval,
            kernel_threshold: t.kernel_threshold,
            record_interval: t.record_interval,
            eval_points: t.eval_points,
            seed: cfg.model.seed,
        };
        let history = train(model.as_mut(), problem, grid, &tc)?;
        let label = mode.label();
        em.csv(&format!("{label}/training.csv"), |p| output::write_training(p, &history.records))?;
        for s in &history.snapshots {
            em.csv(&format!("{label}/kernel_spectrum_{}.csv", s.step), |p| {
                output::write_kernel_spectrum(p, &s.eigenvalues)
            })?;
        }
        let last = history.last().copied();
        let snap = history.snapshots.last();
        let mut ms = ModeSummary {
            label: label.clone(),
            mode: *mode,
            cutoff: snap.map_or(0, |s| s.cutoff),
            entropy: snap.and_then(|s| s.entropy),
            sigma_max: snap.map_or(f64::NAN, |s| s.eigenvalues[0]),
            sigma_min: snap.map_or(f64::NAN, |s| *s.eigenvalues.last().unwrap()),
            rel_residual_at_cutoff: None,
            final_loss_pinn: last.map(|r| r.loss_pinn),
            final_loss_f: last.map(|r| r.loss_f),
            final_rel_train_err: last.map(|r| r.rel_train_err),
            final_rel_l2_err: last.map(|r| r.rel_l2_err),
            diverged_at: history.diverged_at,
            speed_indicator: None,
            theorem1: None,
        };
        if history.diverged_at.is_some() {
            summary.diverged = true;
        }
        if let (Some([a, b]), Some(s)) = (t.theorem_band, snap) {
            ms.speed_indicator = entropy_speed_indicator(&s.eigenvalues, a, b).ok();
            let samples: Vec<KernelSample> = history
                .snapshots
                .iter()
                .filter_map(|s| {
                    let r = s.residual.as_ref()?;
                    Some(KernelSample::from_components(s.time, &s.decompose(r).ok()?))
                })
                .collect();
            let times: Vec<f64> = history.records.iter().map(|r| r.time).collect();
            let losses: Vec<f64> = history.records.iter().map(|r| r.loss_pinn).collect();
            let t_end = times.last().copied().unwrap_or(0.0);
            let t_star = default_t_star(&samples, a, b, 0.01)
                .ok()
                .flatten()
                .or(samples.first().map(|s| s.time))
                .unwrap_or(0.0);
            if let Ok(rep) = theorem1_envelopes(&times, &losses, &samples, a, b, t_star, t_end, 1e-3) {
                let rows: Vec<Vec<f64>> = (0..rep.times.len())
                    .map(|i| vec![rep.times[i], rep.losses[i], rep.lower[i], rep.upper[i]])
                    .collect();
                em.csv(&format!("{label}/theorem1.csv"), |p| {
                    output::write_csv(p, &["time", "loss", "lower", "upper"], &rows, &[])
                })?;
                ms.theorem1 = Some(Theorem1Summary {
                    a,
                    b,
                    t_star: rep.t_star,
                    t_end: rep.t_end,
                    eta: rep.eta,
                    zeta: rep.zeta,
                    band_mean_min: rep.band_mean_min,
                    band_mean_max: rep.band_mean_max,
                    violation_fraction: rep.violation_fraction,
                    out_of_band_energy: rep.out_of_band_energy,
                });
            }
        }
        summary.modes.push(ms);
        histories.push(history);
    }
    // Props. 1-2 concern the fixed-feature systems at initialization.
    if cfg.model.kind == ModelKind::TwoLayer && problem.nonlinearity.is_none() {
        let basis = fixed_basis(cfg, problem)?;
        let systems = assemble_all(problem, &basis, &modes[..modes.len().min(2)], grid, lambda)?;
        let (p1, p2) = verdicts(problem, &basis, grid, &systems);
        summary.prop1 = p1;
        summary.prop2 = p2;
    } else {
        summary.prop1 = Prop1Verdict::not_applicable("defined for linear two-layer feature systems");
        summary.prop2 = Prop2Verdict::not_applicable("defined for linear two-layer feature systems");
    }

    let curves = |f: fn(&crate::training::HistoryRecord) -> f64| -> Vec<Series> {
        modes
            .iter()
            .zip(&histories)
            .map(|(mode, h)| {
                let xs: Vec<f64> = h.records.iter().map(|r| r.step as f64).collect();
                let ys: Vec<f64> = h.records.iter().map(f).collect();
                let (x, y): (Vec<f64>, Vec<f64>) =
                    xs.into_iter().zip(ys).filter(|(_, y)| *y > 0.0 && y.is_finite()).unzip();
                Series::new(legend(mode), x, y, Style::Line)
            })
            .collect()
    };
    let title = format!("{} ({})", problem.id, model_label(cfg.model.kind));
    em.plot(
        "training.svg",
        curves(|r| r.rel_train_err),
        &Axes::new(&format!("Relative training error, {title}"), "step", "relative training error", Scale::Linear, Scale::Log),
    )?;
    em.plot(
        "loss.svg",
        curves(|r| r.loss_pinn),
        &Axes::new(&format!("PINN loss, {title}"), "step", "loss", Scale::Linear, Scale::Log),
    )?;
    em.plot(
        "l2_error.svg",
        curves(|r| r.rel_l2_err),
        &Axes::new(&format!("Relative L2 error, {title}"), "step", "relative L2 error", Scale::Linear, Scale::Log),
    )?;
    let mut ax = Axes::new(&format!("Kernel eigenvalues, {title}"), "index", "eigenvalue", Scale::Linear, Scale::Log);
    let mut series = Vec::new();
    for (mode, h) in modes.iter().zip(&histories) {
        if let Some(s) = h.snapshots.last() {
            let xs: Vec<f64> = (1..=s.eigenvalues.len()).map(|i| i as f64).collect();
            series.push(positive(&legend(mode), &xs, &s.eigenvalues, Style::Points));
            ax.markers.push((s.cutoff as f64, format!("e = {} ({})", s.cutoff, mode.label())));
        }
    }
    em.plot("kernel_spectrum.svg", series, &ax)?;
    Ok(())
}

/// Result of the `verify` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub run_id: String,
    pub prop1: Prop1Verdict,
    pub prop2: Prop2Verdict,
}

impl VerifyReport {
    /// The sandwich holds, and the σ_min ordering holds wherever its hypothesis does.
    pub fn passed(&self) -> bool {
        let p2_binding = self.prop2.hypothesis == Some(Hypothesis::Holds);
        self.prop1.status != VerdictStatus::Fails
            && !(p2_binding && self.prop2.status == VerdictStatus::Fails)
    }
}

/// Propositions 1-2 on the fixed-feature systems described by `cfg`,
/// without writing artifacts.
pub fn verify_config(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    if problem.nonlinearity.is_some() {
        return Err(Error::Config(format!("{} has no linear system to verify", problem.id)));
    }
    let grid = make_grid(&problem, &cfg.grid.counts)?;
    let modes = cfg.modes(&problem, grid.spacing[0]);
    let basis = fixed_basis(cfg, &problem)?;
    let systems = assemble_all(&problem, &basis, &modes[..modes.len().min(2)], &grid, cfg.lambda(&problem))?;
    let (prop1, prop2) = verdicts(&problem, &basis, &grid, &systems);
    Ok(VerifyReport {
        run_id: cfg.run_name(),
        prop1,
        prop2,
    })
}

#[cfg(test)]
mod tests;
