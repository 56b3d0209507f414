//! Experiment configuration, read from TOML.
//!
//! ```toml
//! name = "fig3"
//!
//! [problem]
//! id = "poisson1d"          # poisson1d | poisson2d | biharmonic1d | allen_cahn_steady
//! # epsilon = 0.1           # Allen-Cahn width
//! # points_per_side = 64    # 2D boundary points per side
//!
//! [model]
//! type = "rfm"              # rfm | two_layer | random_net | deep
//! neurons = 100             # rfm, two_layer
//! # widths = [1, 50, 50, 50, 1]   # random_net, deep
//! activation = "sin"        # sin | tanh
//! init_range = 1.0          # uniform range R; deep nets default to fan-in scaling
//! seed = 0
//!
//! [diff]
//! schemes = ["central2"]    # FD variants compared against AD
//! # h = 0.02                # FD step, defaults to the grid spacing
//!
//! [grid]
//! counts = [100]
//!
//! [solve]                   # fixed-feature models
//! cutoff = 1e-12
//! rows = "residual"         # residual | all
//! # sweep = [1, 2, 3]       # truncation positions, default 1..=rank
//!
//! # [train]                 # trainable models
//! # optimizer = "gd"        # gd | adam
//! # learning_rate = 1e-3
//! # steps = 20000
//!
//! [output]
//! directory = "runs/fig3"
//! plots = true
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::{BoundaryDerivative, DiffMode, FdScheme, LossScaling};
use crate::error::{Error, Result};
use crate::features::{Activation, InitScheme};
use crate::problems::{allen_cahn, make_problem, poisson2d, Operator, PdeProblem, ProblemId};
use crate::training::{Optimizer, Precision};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub problem: ProblemSection,
    pub model: ModelSection,
    #[serde(default)]
    pub diff: DiffSection,
    pub grid: GridSection,
    #[serde(default)]
    pub solve: Option<SolveSection>,
    #[serde(default)]
    pub train: Option<TrainSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub id: String,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub points_per_side: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Rfm,
    TwoLayer,
    RandomNet,
    Deep,
}

impl ModelKind {
    pub fn is_trainable(self) -> bool {
        matches!(self, ModelKind::TwoLayer | ModelKind::Deep)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Uniform,
    FanIn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "type")]
    pub kind: ModelKind,
    #[serde(default)]
    pub neurons: Option<usize>,
    #[serde(default)]
    pub widths: Option<Vec<usize>>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default)]
    pub init_range: Option<f64>,
    #[serde(default)]
    pub init: Option<InitKind>,
    #[serde(default)]
    pub seed: u64,
}

fn default_activation() -> Activation {
    Activation::Sin
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffSection {
    /// FD variants; empty selects the problem's default stencil.
    #[serde(default)]
    pub schemes: Vec<FdScheme>,
    #[serde(default)]
    pub h: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub counts: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSelection {
    Residual,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default)]
    pub sweep: Option<Vec<usize>>,
    #[serde(default = "default_rows")]
    pub rows: RowSelection,
    #[serde(default)]
    pub lambda: Option<f64>,
}

fn default_cutoff() -> f64 {
    1e-12
}

fn default_rows() -> RowSelection {
    RowSelection::Residual
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub steps: usize,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Kernel snapshot interval; omitted means end of training only.
    #[serde(default)]
    pub snapshot_interval: Option<usize>,
    #[serde(default = "default_kernel_threshold")]
    pub kernel_threshold: f64,
    #[serde(default = "default_record_interval")]
    pub record_interval: usize,
    #[serde(default = "default_eval_points")]
    pub eval_points: usize,
    #[serde(default = "default_scaling")]
    pub scaling: LossScaling,
    #[serde(default = "default_boundary_derivative")]
    pub boundary_derivative: BoundaryDerivative,
    /// `[a, b]` band for the convergence-envelope check.
    #[serde(default)]
    pub theorem_band: Option<[f64; 2]>,
}

fn default_kernel_threshold() -> f64 {
    1e-5
}

fn default_record_interval() -> usize {
    10
}

fn default_eval_points() -> usize {
    201
}

fn default_scaling() -> LossScaling {
    LossScaling::Mean
}

fn default_boundary_derivative() -> BoundaryDerivative {
    BoundaryDerivative::FollowInterior
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_plots")]
    pub plots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: None,
            plots: true,
        }
    }
}

fn default_plots() -> bool {
    true
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn run_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{}_{}_seed{}", self.problem.id, model_label(self.model.kind), self.model.seed))
    }

    /// Checks the schema invariants and that every referenced id resolves.
    pub fn validate(&self) -> Result<()> {
        let problem = self.build_problem()?;
        match (&self.solve, &self.train) {
            (Some(_), Some(_)) => return Err(config_error("exactly one of [solve] and [train] may be present")),
            (None, None) => return Err(config_error("one of [solve] or [train] is required")),
            _ => {}
        }
        let kind = self.model.kind;
        if kind.is_trainable() && self.train.is_none() {
            return Err(config_error(format!("model type {} needs a [train] section", model_label(kind))));
        }
        if !kind.is_trainable() && self.solve.is_none() {
            return Err(config_error(format!("model type {} needs a [solve] section", model_label(kind))));
        }
        match kind {
            ModelKind::Rfm | ModelKind::TwoLayer => match self.model.neurons {
                Some(n) if n > 0 => {}
                _ => return Err(config_error("model.neurons must be a positive integer")),
            },
            ModelKind::RandomNet | ModelKind::Deep => {
                let w = self
                    .model
                    .widths
                    .as_ref()
                    .ok_or_else(|| config_error("model.widths is required for network models"))?;
                if w.len() < 3 || w[0] != problem.dim || *w.last().unwrap() != 1 || w.contains(&0) {
                    return Err(config_error(format!(
                        "model.widths {w:?} must start with the input dimension {}, end with 1 and have a hidden layer",
                        problem.dim
                    )));
                }
            }
        }
        if let Some(r) = self.model.init_range {
            if !(r > 0.0 && r.is_finite()) {
                return Err(config_error("model.init_range must be positive"));
            }
        }
        if self.grid.counts.len() != problem.dim {
            return Err(config_error(format!(
                "grid.counts has {} entries for a {}-dimensional problem",
                self.grid.counts.len(),
                problem.dim
            )));
        }
        if let Some(&n) = self.grid.counts.iter().find(|&&n| n < problem.min_count()) {
            return Err(config_error(format!("grid count {n} is below {}", problem.min_count())));
        }
        if let Some(h) = self.diff.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(config_error("diff.h must be positive"));
            }
        }
        for s in &self.schemes(&problem) {
            if !s.supports(problem.operator) {
                return Err(config_error(format!("stencil {s} does not fit the operator of {}", problem.id)));
            }
        }
        if let Some(s) = &self.solve {
            if !(0.0..1.0).contains(&s.cutoff) {
                return Err(config_error("solve.cutoff must lie in [0, 1)"));
            }
            if problem.nonlinearity.is_some() {
                return Err(config_error(format!("{} is nonlinear; use a [train] section", problem.id)));
            }
            if let Some(sw) = &s.sweep {
                if sw.is_empty() || sw.contains(&0) || sw.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(config_error("solve.sweep must be strictly ascending positive ranks"));
                }
            }
        }
        if let Some(t) = &self.train {
            if !(t.learning_rate >= 0.0 && t.learning_rate.is_finite()) {
                return Err(config_error("train.learning_rate must be non-negative"));
            }
            if t.steps == 0 || t.record_interval == 0 || t.snapshot_interval == Some(0) {
                return Err(config_error("train.steps and intervals must be positive"));
            }
            if !(0.0..1.0).contains(&t.kernel_threshold) {
                return Err(config_error("train.kernel_threshold must lie in [0, 1)"));
            }
            if t.precision == Precision::Single && kind != ModelKind::TwoLayer {
                return Err(config_error("single precision is available for two_layer models only"));
            }
            if let Some([a, b]) = t.theorem_band {
                if !(0.0 <= a && a < b && b < 1.0) {
                    return Err(config_error("train.theorem_band must satisfy 0 <= a < b < 1"));
                }
            }
        }
        for lambda in [self.solve.as_ref().and_then(|s| s.lambda), self.train.as_ref().and_then(|t| t.lambda)]
            .into_iter()
            .flatten()
        {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(config_error("lambda must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<PdeProblem> {
        let id: ProblemId = self.problem.id.parse()?;
        Ok(match id {
            ProblemId::AllenCahnSteady => {
                let eps = self.problem.epsilon.unwrap_or(0.1);
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(config_error("problem.epsilon must be positive"));
                }
                allen_cahn(eps)
            }
            ProblemId::Poisson2d => match self.problem.points_per_side {
                Some(0) => return Err(config_error("problem.points_per_side must be positive")),
                Some(n) => poisson2d(n),
                None => make_problem(id),
            },
            _ => make_problem(id),
        })
    }

    /// FD stencils to compare against AD.
    pub fn schemes(&self, problem: &PdeProblem) -> Vec<FdScheme> {
        if !self.diff.schemes.is_empty() {
            return self.diff.schemes.clone();
        }
        vec![match problem.operator {
            Operator::SecondDerivative => FdScheme::Central2,
            Operator::Laplacian2d => FdScheme::Laplace2d5Point,
            Operator::FourthDerivative => FdScheme::Biharm5,
        }]
    }

    /// AD followed by every FD variant, with the step defaulting to the grid spacing.
    pub fn modes(&self, problem: &PdeProblem, grid_spacing: f64) -> Vec<DiffMode> {
        let h = self.diff.h.unwrap_or(grid_spacing);
        std::iter::once(DiffMode::Ad)
            .chain(self.schemes(problem).into_iter().map(|s| DiffMode::fd(s, h)))
            .collect()
    }

    pub fn lambda(&self, problem: &PdeProblem) -> f64 {
        self.solve
            .as_ref()
            .and_then(|s| s.lambda)
            .or(self.train.as_ref().and_then(|t| t.lambda))
            .unwrap_or(problem.lambda_default)
    }

    pub fn init_scheme(&self) -> InitScheme {
        let uniform = InitScheme::Uniform {
            range: self.model.init_range.unwrap_or(match self.model.kind {
                ModelKind::RandomNet => 0.1,
                _ => 1.0,
            }),
        };
        match (self.model.init, self.model.kind) {
            (Some(InitKind::FanIn), _) => InitScheme::FanIn,
            (Some(InitKind::Uniform), _) => uniform,
            (None, ModelKind::Deep) if self.model.init_range.is_none() => InitScheme::FanIn,
            _ => uniform,
        }
    }
}

pub fn model_label(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Rfm => "rfm",
        ModelKind::TwoLayer => "two_layer",
        ModelKind::RandomNet => "random_net",
        ModelKind::Deep => "deep",
    }
}
