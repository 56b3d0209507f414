//! Fully connected networks with batched Taylor-jet forward passes and
//! reverse accumulation through the jets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, FeatureBasis, JetModel, Probe, ProbeOp, TaylorJet, MAX_JET_ORDER};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::Point;

/// Parameter initialization for [`DeepNetwork::sample`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitScheme {
    /// Every weight and bias uniform on `[-R, R]`.
    Uniform { range: f64 },
    /// Uniform on `[-1/√fan_in, 1/√fan_in]` per layer.
    FanIn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out × in`.
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn fan_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.rows()
    }
}

/// Multilayer perceptron; hidden layers are activated, the last is linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeepNetwork {
    pub widths: Vec<usize>,
    pub layers: Vec<DenseLayer>,
    pub activation: Activation,
    pub init: InitScheme,
    pub seed: u64,
}

/// Jets of every layer for a batch of points, kept for the backward pass.
///
/// Layer arrays are laid out `[order][unit][point]`.
#[derive(Clone, Debug)]
pub struct JetTape {
    pub order: usize,
    pub points: usize,
    /// Inputs to each layer; `inputs[0]` is the coordinate jet.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of hidden layers.
    pre: Vec<Vec<f64>>,
    /// Output coefficients, `[order][point]`.
    output: Vec<f64>,
}

impl JetTape {
    /// Output jet coefficient `c_k` at point `p`.
    pub fn coeff(&self, k: usize, p: usize) -> f64 {
        self.output[k * self.points + p]
    }

    /// Output derivative `u⁽ᵏ⁾` at point `p`.
    pub fn derivative(&self, k: usize, p: usize) -> f64 {
        FACTORIAL[k] * self.coeff(k, p)
    }

    /// Jets of the last hidden layer, `[order][unit][point]`.
    pub fn last_hidden(&self) -> &[f64] {
        &self.inputs[self.inputs.len() - 1]
    }
}

const FACTORIAL: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];

impl DeepNetwork {
    /// Draws parameters from a `ChaCha8Rng` seeded with `seed`, layer by
    /// layer: weights row-major, then biases.
    pub fn sample(
        widths: &[usize],
        activation: Activation,
        init: InitScheme,
        seed: u64,
    ) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidArgument("a network needs at least two widths".into()));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument(format!("zero width in {widths:?}")));
        }
        if !(1..=2).contains(&widths[0]) {
            return Err(Error::InvalidArgument(format!("input width {} not in 1..=2", widths[0])));
        }
        if widths[widths.len() - 1] != 1 {
            return Err(Error::InvalidArgument("output width must be 1".into()));
        }
        if let InitScheme::Uniform { range } = init {
            if !(range > 0.0 && range.is_finite()) {
                return Err(Error::InvalidArgument(format!("init range {range} must be positive")));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = widths
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let r = match init {
                    InitScheme::Uniform { range } => range,
                    InitScheme::FanIn => 1.0 / (fan_in as f64).sqrt(),
                };
                let weights = DenseMatrix::from_fn(fan_out, fan_in, |_, _| rng.gen_range(-r..=r));
                let bias = (0..fan_out).map(|_| rng.gen_range(-r..=r)).collect();
                DenseLayer { weights, bias }
            })
            .collect();
        Ok(Self {
            widths: widths.to_vec(),
            layers,
            activation,
            init,
            seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn last_hidden_width(&self) -> usize {
        self.widths[self.widths.len() - 2]
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.fan_out() * (l.fan_in() + 1))
            .sum()
    }

    /// Parameters flattened layer by layer, weights row-major then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for a network with {}",
                theta.len(),
                self.num_params()
            )));
        }
        if let Some(i) = theta.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        let mut offset = 0;
        for l in &mut self.layers {
            let (o, i) = (l.fan_out(), l.fan_in());
            l.weights = DenseMatrix::new(o, i, theta[offset..offset + o * i].to_vec())?;
            offset += o * i;
            l.bias.copy_from_slice(&theta[offset..offset + o]);
            offset += o;
        }
        Ok(())
    }

    /// Plain forward pass.
    pub fn forward(&self, x: &Point) -> f64 {
        let mut h: Vec<f64> = x[..self.input_dim()].to_vec();
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let mut z = l.weights.matvec(&h).expect("layer widths are consistent");
            for (zi, bi) in z.iter_mut().zip(&l.bias) {
                *zi += bi;
                if li < last {
                    *zi = self.activation.value(*zi);
                }
            }
            h = z;
        }
        h[0]
    }

    /// Batched jets of order `order` along `direction` at every point.
    pub fn forward_jets(&self, points: &[Point], direction: Point, order: usize) -> JetTape {
        assert!(order <= MAX_JET_ORDER, "jet order {order} exceeds {MAX_JET_ORDER}");
        let np = points.len();
        let k1 = order + 1;
        let d = self.input_dim();
        let mut input = vec![0.0; k1 * d * np];
        for (p, x) in points.iter().enumerate() {
            for m in 0..d {
                input[m * np + p] = x[m];
                if order >= 1 {
                    input[(d + m) * np + p] = direction[m];
                }
            }
        }
        let mut inputs = vec![input];
        let mut pre = Vec::with_capacity(self.layers.len() - 1);
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let z = affine(l, &inputs[li], k1, np);
            if li < last {
                let width = l.fan_out();
                let mut h = vec![0.0; z.len()];
                let mut c = [0.0; MAX_JET_ORDER + 1];
                for u in 0..width {
                    for p in 0..np {
                        for (k, ck) in c.iter_mut().enumerate().take(k1) {
                            *ck = z[(k * width + u) * np + p];
                        }
                        let y = TaylorJet::from_coeffs(&c[..k1])
                            .expect("order checked")
                            .activate(self.activation);
                        for (k, yk) in y.coeffs().iter().enumerate() {
                            h[(k * width + u) * np + p] = *yk;
                        }
                    }
                }
                pre.push(z);
                inputs.push(h);
            } else {
                return JetTape {
                    order,
                    points: np,
                    inputs,
                    pre,
                    output: z,
                };
            }
        }
        unreachable!("network has at least one layer")
    }

    /// Parameter gradient of `Σ_p Σ_k out_bar[k][p] · c_k(p)` where `c_k` are
    /// the output jet coefficients recorded in `tape`.
    pub fn backward(&self, tape: &JetTape, out_bar: &[f64]) -> Vec<f64> {
        let np = tape.points;
        let k1 = tape.order + 1;
        assert_eq!(out_bar.len(), k1 * np, "cotangent layout is [order][point]");
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut z_bar = out_bar.to_vec();
        for li in (0..self.layers.len()).rev() {
            let l = &self.layers[li];
            let (fo, fi) = (l.fan_out(), l.fan_in());
            let h = &tape.inputs[li];
            let mut g = vec![0.0; fo * fi + fo];
            for k in 0..k1 {
                for o in 0..fo {
                    let zb = &z_bar[(k * fo + o) * np..(k * fo + o + 1) * np];
                    if k == 0 {
                        g[fo * fi + o] += zb.iter().sum::<f64>();
                    }
                    for i in 0..fi {
                        let hk = &h[(k * fi + i) * np..(k * fi + i + 1) * np];
                        g[o * fi + i] += crate::linalg::dot(zb, hk);
                    }
                }
            }
            grads.push(g);
            if li == 0 {
                break;
            }
            // Cotangent of this layer's inputs, then through the activation.
            let mut h_bar = vec![0.0; k1 * fi * np];
            for k in 0..k1 {
                for o in 0..fo {
                    let zb = &z_bar[(k * fo + o) * np..(k * fo + o + 1) * np];
                    for i in 0..fi {
                        let w = l.weights.get(o, i);
                        let hb = &mut h_bar[(k * fi + i) * np..(k * fi + i + 1) * np];
                        crate::linalg::axpy(w, zb, hb);
                    }
                }
            }
            let z = &tape.pre[li - 1];
            let mut next = vec![0.0; h_bar.len()];
            let mut c = [0.0; MAX_JET_ORDER + 1];
            let mut hb = [0.0; MAX_JET_ORDER + 1];
            for u in 0..fi {
                for p in 0..np {
                    for k in 0..k1 {
                        c[k] = z[(k * fi + u) * np + p];
                        hb[k] = h_bar[(k * fi + u) * np + p];
                    }
                    let jet = TaylorJet::from_coeffs(&c[..k1]).expect("order checked");
                    let zb = jet.activate_adjoint(self.activation, &hb);
                    for k in 0..k1 {
                        next[(k * fi + u) * np + p] = zb[k];
                    }
                }
            }
            z_bar = next;
        }
        grads.reverse();
        grads.concat()
    }

    /// Jets of every last-hidden-layer unit at one point.
    pub fn hidden_jets(&self, x: Point, direction: Point, order: usize) -> Vec<TaylorJet> {
        let tape = self.forward_jets(&[x], direction, order);
        let width = self.last_hidden_width();
        let h = tape.last_hidden();
        (0..width)
            .map(|u| {
                let c: Vec<f64> = (0..=order).map(|k| h[k * width + u]).collect();
                TaylorJet::from_coeffs(&c).expect("order checked")
            })
            .collect()
    }
}

/// `W·H_k` for every order `k`, plus the bias on the value coefficient.
fn affine(l: &DenseLayer, h: &[f64], k1: usize, np: usize) -> Vec<f64> {
    let (fo, fi) = (l.fan_out(), l.fan_in());
    let mut z = vec![0.0; k1 * fo * np];
    for k in 0..k1 {
        for o in 0..fo {
            let zr = &mut z[(k * fo + o) * np..(k * fo + o + 1) * np];
            if k == 0 {
                zr.fill(l.bias[o]);
            }
            for i in 0..fi {
                let hk = &h[(k * fi + i) * np..(k * fi + i + 1) * np];
                crate::linalg::axpy(l.weights.get(o, i), hk, zr);
            }
        }
    }
    z
}

impl JetModel for DeepNetwork {
    fn input_dim(&self) -> usize {
        self.widths[0]
    }

    fn output_jet(&self, x: Point, direction: Point, order: usize) -> TaylorJet {
        let tape = self.forward_jets(&[x], direction, order);
        let c: Vec<f64> = (0..=order).map(|k| tape.coeff(k, 0)).collect();
        TaylorJet::from_coeffs(&c).expect("order checked")
    }
}

/// The last hidden layer of a fixed network as a feature basis.
impl FeatureBasis for DeepNetwork {
    fn num_features(&self) -> usize {
        self.last_hidden_width()
    }

    fn input_dim(&self) -> usize {
        self.widths[0]
    }

    fn accumulate_probe(&self, probe: &Probe, out: &mut [f64]) {
        let mut add = |axis: usize, k: usize| {
            let dir = super::axis_direction(axis);
            for (o, jet) in out.iter_mut().zip(self.hidden_jets(probe.point, dir, k)) {
                *o += probe.coef * jet.derivative(k);
            }
        };
        match probe.op {
            ProbeOp::Value => add(0, 0),
            ProbeOp::Derivative { axis, order } => add(axis, order),
            ProbeOp::Laplacian => {
                for axis in 0..self.widths[0] {
                    add(axis, 2);
                }
            }
        }
    }
}
