//! Random feature models, deep fixed-weight networks and exact input
//! derivatives of both.
//!
//! Shallow models differentiate in closed form: the `k`-th derivative of
//! feature `j` along axis `m` is `w_jm^k σ⁽ᵏ⁾(w_j·x + b_j)`. Deep networks push
//! [`TaylorJet`]s through every layer instead.

mod activation;
mod jet;
mod network;

pub use activation::{activation_derivative, Activation, MAX_DERIVATIVE_ORDER};
pub use jet::{TaylorJet, MAX_JET_ORDER};
pub use network::{DeepNetwork, DenseLayer, InitScheme, JetTape};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::problems::Grid;
use crate::Point;

/// Differential operation evaluated at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeOp {
    Value,
    /// `∂ᵏ/∂x_axisᵏ`.
    Derivative { axis: usize, order: usize },
    Laplacian,
}

/// One weighted term `coef · op[φ](point)` of an assembled row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub point: Point,
    pub op: ProbeOp,
    pub coef: f64,
}

impl Probe {
    pub fn new(point: Point, op: ProbeOp, coef: f64) -> Self {
        Self { point, op, coef }
    }
}

/// A family of basis functions whose probes can be evaluated featurewise.
pub trait FeatureBasis {
    fn num_features(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// Adds `probe.coef · op[feature_j](probe.point)` to `out[j]` for every `j`.
    fn accumulate_probe(&self, probe: &Probe, out: &mut [f64]);
}

/// Anything whose scalar output can be differentiated along a direction.
pub trait JetModel {
    fn input_dim(&self) -> usize;
    fn output_jet(&self, x: Point, direction: Point, order: usize) -> TaylorJet;
}

/// Two-layer model `φ(x) = Σ a_j σ(w_j·x + b_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub activation: Activation,
    pub dim: usize,
    /// `w_j`, padded to two components (unused ones are zero).
    pub weights: Vec<Point>,
    pub biases: Vec<f64>,
    /// Outer coefficients `a_j`.
    pub outer: Vec<f64>,
    pub init_range: f64,
    pub seed: u64,
}

/// Samples `w_j, b_j, a_j` i.i.d. uniform on `[-R, R]`.
///
/// Stream order from a `ChaCha8Rng` seeded with `seed`: for each neuron the
/// `d` weight components then the bias, then all outer coefficients.
pub fn sample_features(
    neurons: usize,
    dim: usize,
    init_range: f64,
    seed: u64,
    activation: Activation,
) -> Result<FeatureModel> {
    if neurons == 0 {
        return Err(Error::InvalidArgument("at least one neuron is required".into()));
    }
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidArgument(format!("input dimension {dim} not in 1..=2")));
    }
    if !(init_range > 0.0 && init_range.is_finite()) {
        return Err(Error::InvalidArgument(format!("init range {init_range} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(neurons);
    let mut biases = Vec::with_capacity(neurons);
    for _ in 0..neurons {
        let mut w = [0.0; 2];
        for wm in w.iter_mut().take(dim) {
            *wm = rng.gen_range(-init_range..=init_range);
        }
        weights.push(w);
        biases.push(rng.gen_range(-init_range..=init_range));
    }
    let outer = (0..neurons)
        .map(|_| rng.gen_range(-init_range..=init_range))
        .collect();
    Ok(FeatureModel {
        activation,
        dim,
        weights,
        biases,
        outer,
        init_range,
        seed,
    })
}

impl FeatureModel {
    pub fn neurons(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn pre_activation(&self, j: usize, x: &Point) -> f64 {
        let w = &self.weights[j];
        w[0] * x[0] + w[1] * x[1] + self.biases[j]
    }

    pub fn evaluate(&self, x: &Point) -> f64 {
        (0..self.neurons())
            .map(|j| self.outer[j] * self.activation.value(self.pre_activation(j, x)))
            .sum()
    }

    /// `diag(w_j^power)` along one axis.
    pub fn weight_power_diag(&self, axis: usize, power: i32) -> Vec<f64> {
        self.weights.iter().map(|w| w[axis].powi(power)).collect()
    }

    /// `diag(‖w_j‖²)`.
    pub fn weight_norm_sq_diag(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w[0] * w[0] + w[1] * w[1]).collect()
    }
}

impl FeatureBasis for FeatureModel {
    fn num_features(&self) -> usize {
        self.neurons()
    }

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn accumulate_probe(&self, probe: &Probe, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let z = self.pre_activation(j, &probe.point);
            let w = &self.weights[j];
            let term = match probe.op {
                ProbeOp::Value => self.activation.value(z),
                ProbeOp::Derivative { axis, order } => {
                    w[axis].powi(order as i32) * self.activation.derivatives(z)[order]
                }
                ProbeOp::Laplacian => {
                    (w[0] * w[0] + w[1] * w[1]) * self.activation.derivatives(z)[2]
                }
            };
            *o += probe.coef * term;
        }
    }
}

impl JetModel for FeatureModel {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_jet(&self, x: Point, direction: Point, order: usize) -> TaylorJet {
        let mut acc = TaylorJet::constant(0.0, order);
        for j in 0..self.neurons() {
            let w = &self.weights[j];
            let slope = w[0] * direction[0] + w[1] * direction[1];
            let z = TaylorJet::variable(self.pre_activation(j, &x), slope, order);
            acc += z.activate(self.activation).scale(self.outer[j]);
        }
        acc
    }
}

/// `A_k = (σ⁽ᵏ⁾(w_j·x_i + b_j))_{ij}`, one row per grid point.
pub fn feature_matrix(model: &FeatureModel, k: usize, grid: &Grid) -> Result<DenseMatrix> {
    if k > MAX_DERIVATIVE_ORDER {
        return Err(Error::UnsupportedOrder(k));
    }
    if grid.dim != model.dim {
        return Err(Error::DimensionMismatch(format!(
            "grid of dimension {} for a model with input dimension {}",
            grid.dim, model.dim
        )));
    }
    let act = model.activation;
    Ok(DenseMatrix::from_fn(grid.len(), model.neurons(), |i, j| {
        act.derivatives(model.pre_activation(j, &grid.points[i]))[k]
    }))
}

/// Directional Taylor jet of a model's output at `x`, exact up to `order`.
pub fn jet_propagate(
    net: &dyn JetModel,
    x: Point,
    direction: Point,
    order: usize,
) -> Result<TaylorJet> {
    if order > MAX_JET_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let norm = direction[0].hypot(direction[1]);
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "direction must be a unit vector, got norm {norm}"
        )));
    }
    if net.input_dim() == 1 && direction[1] != 0.0 {
        return Err(Error::DimensionMismatch("1D model with a 2D direction".into()));
    }
    Ok(net.output_jet(x, direction, order))
}

/// Unit vector along `axis`.
pub fn axis_direction(axis: usize) -> Point {
    let mut d = [0.0; 2];
    d[axis] = 1.0;
    d
}
