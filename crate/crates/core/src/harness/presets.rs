//! Figure presets: fixed experiment families run over several seeds, with
//! per-seed artifacts and mean/min/max aggregates.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{
    DiffSection, ExperimentConfig, GridSection, ModelKind, ModelSection, OutputSection,
    ProblemSection, RowSelection, SolveSection, TrainSection,
};
use super::plot::{emit_plot, Axes, Scale, Series, Style};
use super::{output, run_experiment, RunArtifacts, RunOptions};
use crate::assembly::{BoundaryDerivative, FdScheme, LossScaling};
use crate::error::{Error, Result};
use crate::features::Activation;
use crate::training::{Optimizer, Precision};

pub const PRESET_NAMES: [&str; 15] = [
    "fig1", "fig2", "fig2a", "fig2b", "fig2c", "fig2d", "fig3", "fig4", "fig5", "fig6", "fig7",
    "fig8", "fig9", "appendixB", "lr_sweep",
];

/// One member of a preset family. `sweep` carries the swept size, if any.
#[derive(Clone, Debug)]
pub struct PresetExperiment {
    pub tag: String,
    pub config: ExperimentConfig,
    pub sweep: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub tag: String,
    pub sweep: Option<f64>,
    pub seeds: Vec<u64>,
    pub metrics: BTreeMap<String, MetricStats>,
}

#[derive(Clone, Debug)]
pub struct PresetOutcome {
    pub directory: PathBuf,
    pub runs: Vec<RunArtifacts>,
    pub aggregates: Vec<Aggregate>,
}

impl PresetOutcome {
    pub fn diverged(&self) -> bool {
        self.runs.iter().any(|r| r.diverged())
    }
}

fn model(kind: ModelKind, seed: u64) -> ModelSection {
    ModelSection {
        kind,
        neurons: None,
        widths: None,
        activation: Activation::Sin,
        init_range: None,
        init: None,
        seed,
    }
}

fn rfm(neurons: usize, activation: Activation, seed: u64) -> ModelSection {
    ModelSection {
        neurons: Some(neurons),
        activation,
        init_range: Some(1.0),
        ..model(ModelKind::Rfm, seed)
    }
}

fn two_layer(neurons: usize, seed: u64) -> ModelSection {
    ModelSection {
        kind: ModelKind::TwoLayer,
        ..rfm(neurons, Activation::Sin, seed)
    }
}

fn net(kind: ModelKind, seed: u64) -> ModelSection {
    ModelSection {
        widths: Some(vec![1, 50, 50, 50, 1]),
        activation: Activation::Tanh,
        ..model(kind, seed)
    }
}

fn problem(id: &str) -> ProblemSection {
    ProblemSection {
        id: id.into(),
        epsilon: None,
        points_per_side: None,
    }
}

fn solve(cutoff: f64) -> SolveSection {
    SolveSection {
        cutoff,
        sweep: None,
        rows: RowSelection::Residual,
        lambda: None,
    }
}

fn train(optimizer: Optimizer, learning_rate: f64, steps: usize, threshold: f64) -> TrainSection {
    TrainSection {
        optimizer,
        learning_rate,
        steps,
        // The paper trains networks in float; deep networks run in double.
        precision: if optimizer == Optimizer::Gd { Precision::Single } else { Precision::Double },
        lambda: None,
        snapshot_interval: None,
        kernel_threshold: threshold,
        record_interval: 10,
        eval_points: 201,
        scaling: LossScaling::Mean,
        boundary_derivative: BoundaryDerivative::FollowInterior,
        theorem_band: None,
    }
}

fn cfg(problem: ProblemSection, model: ModelSection, counts: Vec<usize>) -> ExperimentConfig {
    ExperimentConfig {
        name: None,
        problem,
        model,
        diff: DiffSection::default(),
        grid: GridSection { counts },
        solve: None,
        train: None,
        output: OutputSection::default(),
    }
}

fn solving(mut c: ExperimentConfig, s: SolveSection) -> ExperimentConfig {
    c.solve = Some(s);
    c
}

fn training(mut c: ExperimentConfig, t: TrainSection) -> ExperimentConfig {
    c.train = Some(t);
    c
}

fn member(tag: impl Into<String>, config: ExperimentConfig, sweep: Option<f64>) -> PresetExperiment {
    PresetExperiment {
        tag: tag.into(),
        config,
        sweep,
    }
}

fn fig2(part: char, seed: u64) -> PresetExperiment {
    let c = match part {
        'a' => cfg(problem("poisson1d"), rfm(100, Activation::Sin, seed), vec![100]),
        'b' => cfg(problem("poisson1d"), rfm(300, Activation::Tanh, seed), vec![300]),
        'c' => cfg(problem("poisson2d"), rfm(200, Activation::Sin, seed), vec![64, 64]),
        _ => cfg(problem("poisson2d"), rfm(256, Activation::Sin, seed), vec![16, 16]),
    };
    member(format!("fig2{part}"), solving(c, solve(1e-12)), None)
}

/// Members of preset `name` for one seed.
pub fn preset(name: &str, seed: u64) -> Result<Vec<PresetExperiment>> {
    let five = || DiffSection {
        schemes: vec![FdScheme::Central2, FdScheme::FivePoint4],
        h: None,
    };
    Ok(match name {
        "fig1" => [100, 300, 500, 1000]
            .into_iter()
            .map(|n| {
                let c = cfg(problem("poisson1d"), rfm(n, Activation::Sin, seed), vec![n]);
                member(format!("n{n}"), solving(c, solve(1e-12)), Some(n as f64))
            })
            .collect(),
        "fig2" => "abcd".chars().map(|p| fig2(p, seed)).collect(),
        "fig2a" | "fig2b" | "fig2c" | "fig2d" => vec![fig2(name.chars().last().unwrap(), seed)],
        "fig3" => {
            let c = cfg(problem("poisson1d"), rfm(100, Activation::Sin, seed), vec![100]);
            vec![member("fig3", solving(c, solve(1e-12)), None)]
        }
        "fig4" => {
            let mut t = train(Optimizer::Gd, 1e-3, 20_000, 1e-5);
            t.theorem_band = Some([1e-5, 1e-1]);
            t.snapshot_interval = Some(2_000);
            let c = cfg(problem("poisson1d"), two_layer(100, seed), vec![100]);
            vec![member("fig4", training(c, t), None)]
        }
        "fig5" => {
            let mut r = cfg(problem("poisson2d"), rfm(100, Activation::Sin, seed), vec![64, 64]);
            r.diff.h = Some(1.0 / 300.0);
            let mut n = cfg(problem("poisson2d"), two_layer(100, seed), vec![32, 32]);
            n.diff.h = Some(1.0 / 300.0);
            vec![
                member("rfm", solving(r, solve(1e-13)), None),
                member("nn", training(n, train(Optimizer::Gd, 1e-3, 5_000, 1e-4)), None),
            ]
        }
        "fig6" => {
            let r = cfg(problem("biharmonic1d"), rfm(500, Activation::Sin, seed), vec![500]);
            let n = cfg(problem("biharmonic1d"), two_layer(100, seed), vec![64]);
            vec![
                member("rfm", solving(r, solve(1e-13)), None),
                member("nn", training(n, train(Optimizer::Gd, 1e-4, 20_000, 1e-2)), None),
            ]
        }
        "fig7" => {
            let mut c = cfg(problem("poisson1d"), net(ModelKind::RandomNet, seed), vec![500]);
            c.diff = five();
            vec![member("fig7", solving(c, solve(1e-13)), None)]
        }
        "fig8" => {
            let mut c = cfg(problem("poisson1d"), net(ModelKind::Deep, seed), vec![100]);
            c.diff = five();
            vec![member("fig8", training(c, train(Optimizer::Adam, 1e-3, 5_000, 1e-8)), None)]
        }
        "fig9" => {
            let c = cfg(problem("allen_cahn_steady"), net(ModelKind::Deep, seed), vec![100]);
            vec![member("fig9", training(c, train(Optimizer::Adam, 1e-3, 5_000, 1e-10)), None)]
        }
        "appendixB" => {
            let spectra = [1000, 2000].into_iter().map(|n| {
                let c = cfg(problem("poisson1d"), rfm(n, Activation::Sin, seed), vec![n]);
                member(format!("spectrum_n{n}"), solving(c, solve(1e-12)), Some(n as f64))
            });
            let curves = [100, 500, 1000].into_iter().map(|n| {
                let c = cfg(problem("poisson1d"), two_layer(n, seed), vec![n]);
                member(format!("train_n{n}"), training(c, train(Optimizer::Gd, 1e-4, 2_000, 1e-5)), Some(n as f64))
            });
            spectra.chain(curves).collect()
        }
        "lr_sweep" => [1e-3, 5e-4, 1e-4]
            .into_iter()
            .map(|lr| {
                let c = cfg(problem("poisson1d"), two_layer(100, seed), vec![100]);
                member(format!("lr{lr:e}"), training(c, train(Optimizer::Gd, lr, 20_000, 1e-5)), Some(lr))
            })
            .collect(),
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; known: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}

fn aggregate(tag: &str, sweep: Option<f64>, runs: &[&RunArtifacts]) -> Aggregate {
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in runs {
        for (k, v) in r.summary.metrics() {
            values.entry(k).or_default().push(v);
        }
    }
    let metrics = values
        .into_iter()
        .map(|(k, v)| {
            let stats = MetricStats {
                mean: v.iter().sum::<f64>() / v.len() as f64,
                min: v.iter().copied().fold(f64::INFINITY, f64::min),
                max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                count: v.len(),
            };
            (k, stats)
        })
        .collect();
    Aggregate {
        tag: tag.into(),
        sweep,
        seeds: runs.iter().map(|r| r.summary.seed).collect(),
        metrics,
    }
}

fn write_aggregate(dir: &Path, agg: &Aggregate) -> Result<()> {
    output::write_json(&dir.join("aggregate.json"), agg)?;
    let mut w = csv::Writer::from_path(dir.join("aggregate.csv"))?;
    w.write_record(["metric", "mean", "min", "max", "count"])?;
    for (k, s) in &agg.metrics {
        w.write_record([
            k.clone(),
            output::fmt_num(s.mean),
            output::fmt_num(s.min),
            output::fmt_num(s.max),
            s.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Seed-averaged metrics against the swept size, for families that sweep one.
fn write_sweep_table(dir: &Path, aggs: &[Aggregate], plots: bool) -> Result<()> {
    let swept: Vec<&Aggregate> = aggs.iter().filter(|a| a.sweep.is_some()).collect();
    if swept.len() < 2 {
        return Ok(());
    }
    let keys = ["H_AD", "H_FD", "e_AD", "e_FD"];
    let mut names: Vec<String> = keys.iter().map(|k| format!("{k}_mean")).collect();
    for extra in ["final_rel_train_err", "rel_residual_at_cutoff"] {
        for label in ["ad", "central2", "biharm5", "laplace2d_5point", "five_point4"] {
            let k = format!("{label}.{extra}");
            if swept.iter().any(|a| a.metrics.contains_key(&k)) {
                names.push(format!("{k}_mean"));
            }
        }
    }
    let mean = |a: &Aggregate, name: &str| {
        let k = name.trim_end_matches("_mean");
        a.metrics.get(k).map_or(f64::NAN, |s| s.mean)
    };
    let rows: Vec<Vec<f64>> = swept
        .iter()
        .map(|a| std::iter::once(a.sweep.unwrap()).chain(names.iter().map(|n| mean(a, n))).collect())
        .collect();
    let mut header = vec!["size"];
    header.extend(names.iter().map(String::as_str));
    output::write_csv(&dir.join("sweep.csv"), &header, &rows, &[])?;
    if plots {
        let series: Vec<Series> = ["H_AD_mean", "H_FD_mean"]
            .iter()
            .map(|n| {
                let (xs, ys): (Vec<f64>, Vec<f64>) = swept
                    .iter()
                    .map(|a| (a.sweep.unwrap(), mean(a, n)))
                    .filter(|(_, y)| y.is_finite())
                    .unzip();
                Series::new(n.trim_end_matches("_mean"), xs, ys, Style::Line)
            })
            .filter(|s| !s.xs.is_empty())
            .collect();
        if !series.is_empty() {
            let ax = Axes::new("Seed-averaged truncated entropy", "size", "H", Scale::Log, Scale::Linear);
            emit_plot(&series, &ax, &dir.join("sweep.svg"))?;
        }
    }
    Ok(())
}

/// Runs preset `name` for seeds `0..seeds` under `out/<name>/<tag>/seed<k>`.
pub fn run_preset(name: &str, seeds: usize, out: &Path, plots: bool) -> Result<PresetOutcome> {
    if seeds == 0 {
        return Err(Error::Config("--seeds must be positive".into()));
    }
    let root = out.join(name);
    let mut runs: Vec<(String, Option<f64>, RunArtifacts)> = Vec::new();
    for seed in 0..seeds as u64 {
        for mut m in preset(name, seed)? {
            m.config.name = Some(format!("{}_seed{seed}", m.tag));
            m.config.output.directory = Some(Path::new(name).join(&m.tag).join(format!("seed{seed}")));
            let art = run_experiment(&m.config, &RunOptions { output_root: out.to_path_buf(), plots })?;
            runs.push((m.tag, m.sweep, art));
        }
    }
    let mut tags: Vec<(String, Option<f64>)> = Vec::new();
    for (t, s, _) in &runs {
        if !tags.iter().any(|(x, _)| x == t) {
            tags.push((t.clone(), *s));
        }
    }
    let mut aggregates = Vec::new();
    for (tag, sweep) in tags {
        let members: Vec<&RunArtifacts> = runs.iter().filter(|r| r.0 == tag).map(|r| &r.2).collect();
        let agg = aggregate(&tag, sweep, &members);
        write_aggregate(&root.join(&tag), &agg)?;
        aggregates.push(agg);
    }
    write_sweep_table(&root, &aggregates, plots)?;
    Ok(PresetOutcome {
        directory: root,
        runs: runs.into_iter().map(|r| r.2).collect(),
        aggregates,
    })
}
