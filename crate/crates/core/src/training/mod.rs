//! Full-batch training of PINN models under AD or FD residuals, the
//! residual kernel `G = J Jᵀ`, and convergence envelopes.
//!
//! Time follows gradient flow in the normalization `dθ/dt = −Jᵀr`, so one
//! GD step of size `lr` on `L = Σ r_i²` advances `t` by `2·lr` and
//! `dL/dt = −2 rᵀ G r`.

mod deep;
mod kernel;
mod theorem;
mod two_layer;

pub use kernel::{
    kernel_snapshot, residual_eigendecomposition, KernelSnapshot, ResidualComponents,
};
pub use theorem::{
    band_range, default_t_star, frozen_kernel_flow, theorem1_envelopes, FrozenFlow, KernelSample,
    Theorem1Report,
};
pub use two_layer::TwoLayerModel;

use serde::{Deserialize, Serialize};

use crate::assembly::{
    row_specs, AssemblyOptions, BoundaryDerivative, DiffMode, LossScaling, RowKind, RowSpec,
};
use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseMatrix};
use crate::problems::{make_eval_grid, Grid, Nonlinearity, PdeProblem};
use crate::Point;

/// Arithmetic used to evaluate a model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    Single,
}

/// The rows of a PINN loss `L = Σ r_i²` together with the problem's
/// nonlinearity.
#[derive(Clone, Debug)]
pub struct LossSpec {
    pub rows: Vec<RowSpec>,
    pub nonlinearity: Option<Nonlinearity>,
}

impl LossSpec {
    pub fn new(
        problem: &PdeProblem,
        mode: &DiffMode,
        grid: &Grid,
        options: &AssemblyOptions,
    ) -> Result<Self> {
        Ok(Self {
            rows: row_specs(problem, mode, grid, options)?,
            nonlinearity: problem.nonlinearity,
        })
    }

    pub fn residual_indices(&self) -> Vec<usize> {
        self.indices(RowKind::Residual)
    }

    fn indices(&self, kind: RowKind) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| self.rows[i].kind == kind).collect()
    }
}

/// A model trainable on a [`LossSpec`].
pub trait PinnModel {
    fn input_dim(&self) -> usize;
    fn num_params(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, theta: &[f64]) -> Result<()>;
    fn value(&self, x: &Point) -> f64;
    /// Scaled row residuals `r_i`.
    fn residuals(&self, spec: &LossSpec) -> Vec<f64>;
    /// `r` and `∇_θ Σ r_i²`.
    fn residuals_and_grad(&self, spec: &LossSpec) -> (Vec<f64>, Vec<f64>);
    /// `J = ∂r/∂θ`, rows × parameters.
    fn jacobian(&self, spec: &LossSpec) -> DenseMatrix;
}

/// `(Σ r_i², ∇_θ Σ r_i²)`.
pub fn loss_and_grad(model: &dyn PinnModel, spec: &LossSpec) -> (f64, Vec<f64>) {
    let (r, g) = model.residuals_and_grad(spec);
    (r.iter().map(|v| v * v).sum(), g)
}

/// `‖φ_θ − u*‖₂ / ‖u*‖₂` over `eval`.
pub fn l2_relative_error(model: &dyn PinnModel, problem: &PdeProblem, eval: &Grid) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for x in &eval.points {
        let u = problem.exact_value(x);
        num += (model.value(x) - u).powi(2);
        den += u * u;
    }
    if den == 0.0 {
        return Err(Error::InvalidArgument("exact solution vanishes on the evaluation grid".into()));
    }
    Ok((num / den).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Gd,
    Adam,
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub steps: usize,
    pub mode: DiffMode,
    pub lambda: f64,
    pub scaling: LossScaling,
    pub boundary_derivative: BoundaryDerivative,
    /// Kernel snapshot every this many steps; `None` snapshots only the final state.
    pub snapshot_interval: Option<usize>,
    /// Threshold `a` for `e_G(a)` and `H_G(a)`.
    pub kernel_threshold: f64,
    /// History is recorded every this many steps (and at the last step).
    pub record_interval: usize,
    /// Points per axis of the L2 evaluation grid.
    pub eval_points: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(mode: DiffMode, optimizer: Optimizer, learning_rate: f64, steps: usize) -> Self {
        Self {
            optimizer,
            learning_rate,
            steps,
            mode,
            lambda: 1.0,
            scaling: LossScaling::Mean,
            boundary_derivative: BoundaryDerivative::FollowInterior,
            snapshot_interval: None,
            kernel_threshold: 1e-5,
            record_interval: 1,
            eval_points: 201,
            seed: 0,
        }
    }

    pub fn assembly_options(&self) -> AssemblyOptions {
        AssemblyOptions {
            lambda: self.lambda,
            scaling: self.scaling,
            boundary_derivative: self.boundary_derivative,
            include_boundary: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be non-negative", self.learning_rate)));
        }
        if self.steps == 0 {
            return Err(Error::Config("at least one training step is required".into()));
        }
        if self.record_interval == 0 || self.snapshot_interval == Some(0) {
            return Err(Error::Config("record and snapshot intervals must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.kernel_threshold) {
            return Err(Error::Config(format!("kernel threshold {} not in [0, 1)", self.kernel_threshold)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub step: usize,
    /// Gradient-flow time `2·lr·step`.
    pub time: f64,
    pub loss_pinn: f64,
    pub loss_f: f64,
    pub rel_train_err: f64,
    pub rel_l2_err: f64,
}

#[derive(Clone, Debug)]
pub struct TrainHistory {
    pub records: Vec<HistoryRecord>,
    pub snapshots: Vec<KernelSnapshot>,
    /// Step at which the loss became non-finite.
    pub diverged_at: Option<usize>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&HistoryRecord> {
        self.records.last()
    }
}

/// Relative training error `‖F‖₂/‖f‖₂` over residual rows, with the scaling
/// removed. Falls back to the RMS residual when the forcing vanishes.
fn relative_train_error(spec: &LossSpec, res_idx: &[usize], r: &[f64], f_norm: f64) -> f64 {
    let unscaled: Vec<f64> = res_idx
        .iter()
        .map(|&i| r[i] / spec.rows[i].scale)
        .collect();
    let n = norm2(&unscaled);
    if f_norm > 0.0 {
        n / f_norm
    } else {
        n / (res_idx.len().max(1) as f64).sqrt()
    }
}

/// Full-batch training. A non-finite loss stops the run and sets
/// [`TrainHistory::diverged_at`]; records up to that point are kept.
pub fn train(
    model: &mut dyn PinnModel,
    problem: &PdeProblem,
    grid: &Grid,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    config.validate()?;
    if model.input_dim() != problem.dim {
        return Err(Error::DimensionMismatch(format!(
            "model input dimension {} for a {}-dimensional problem",
            model.input_dim(),
            problem.dim
        )));
    }
    let spec = LossSpec::new(problem, &config.mode, grid, &config.assembly_options())?;
    let eval = make_eval_grid(problem, config.eval_points)?;
    let res_idx = spec.residual_indices();
    let f_norm = norm2(&res_idx.iter().map(|&i| spec.rows[i].target).collect::<Vec<_>>());
    let mut theta = model.params();
    let mut adam = Adam::new(theta.len());
    let mut history = TrainHistory {
        records: Vec::new(),
        snapshots: Vec::new(),
        diverged_at: None,
    };
    let lr = config.learning_rate;
    for step in 0..=config.steps {
        let (r, grad) = model.residuals_and_grad(&spec);
        let loss_pinn: f64 = r.iter().map(|v| v * v).sum();
        if !loss_pinn.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            history.diverged_at = Some(step);
            break;
        }
        if step % config.record_interval == 0 || step == config.steps {
            history.records.push(HistoryRecord {
                step,
                time: 2.0 * lr * step as f64,
                loss_pinn,
                loss_f: res_idx.iter().map(|&i| r[i] * r[i]).sum(),
                rel_train_err: relative_train_error(&spec, &res_idx, &r, f_norm),
                rel_l2_err: l2_relative_error(model, problem, &eval)?,
            });
        }
        let snap_due = match config.snapshot_interval {
            Some(k) => step % k == 0 || step == config.steps,
            None => step == config.steps,
        };
        if snap_due {
            let mut snap = kernel_snapshot(model, &spec, config.kernel_threshold)?;
            snap.step = step;
            snap.time = 2.0 * lr * step as f64;
            snap.residual = Some(r.clone());
            history.snapshots.push(snap);
        }
        if step == config.steps {
            break;
        }
        match config.optimizer {
            Optimizer::Gd => crate::linalg::axpy(-lr, &grad, &mut theta),
            Optimizer::Adam => adam.step(&mut theta, &grad, lr),
        }
        model.set_params(&theta)?;
        // Keep the optimizer's view consistent with any precision rounding.
        theta = model.params();
    }
    Ok(history)
}
