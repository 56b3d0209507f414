//! Closed-form residuals, gradients and Jacobians of `φ(x) = Σ a_j σ(w_j·x + b_j)`.
//!
//! Parameter layout: `[a_0..a_M, w_0 (d entries) .. w_M, b_0..b_M]`.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{LossSpec, PinnModel, Precision};
use crate::error::{Error, Result};
use crate::features::{Activation, FeatureModel, ProbeOp};
use crate::linalg::DenseMatrix;
use crate::problems::Nonlinearity;
use crate::Point;

/// Trainable two-layer network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerModel {
    pub features: FeatureModel,
    pub precision: Precision,
}

impl TwoLayerModel {
    pub fn new(features: FeatureModel, precision: Precision) -> Self {
        let mut m = Self { features, precision };
        if precision == Precision::Single {
            let theta = m.params();
            m.set_params(&theta).expect("own parameter vector");
        }
        m
    }
}

struct Params<T> {
    act: Activation,
    d: usize,
    a: Vec<T>,
    w: Vec<[T; 2]>,
    b: Vec<T>,
}

fn cast<T: Float>(v: f64) -> T {
    T::from(v).expect("finite f64 converts")
}

impl<T: Float> Params<T> {
    fn from_model(m: &FeatureModel) -> Self {
        Self {
            act: m.activation,
            d: m.dim,
            a: m.outer.iter().map(|&v| cast(v)).collect(),
            w: m.weights.iter().map(|w| [cast(w[0]), cast(w[1])]).collect(),
            b: m.biases.iter().map(|&v| cast(v)).collect(),
        }
    }

    fn neurons(&self) -> usize {
        self.a.len()
    }

    fn derivs(&self, j: usize, x: &[T; 2]) -> [T; 6] {
        let w = &self.w[j];
        self.act.derivatives(w[0] * x[0] + w[1] * x[1] + self.b[j])
    }

    fn value(&self, x: &[T; 2]) -> T {
        (0..self.neurons()).fold(T::zero(), |acc, j| acc + self.a[j] * self.derivs(j, x)[0])
    }
}

fn point<T: Float>(p: &Point) -> [T; 2] {
    [cast(p[0]), cast(p[1])]
}

/// Feature term `op[σ(w·x + b)]` given the activation derivatives `s`.
fn term<T: Float>(op: ProbeOp, w: &[T; 2], s: &[T; 6]) -> T {
    match op {
        ProbeOp::Value => s[0],
        ProbeOp::Derivative { axis, order } => w[axis].powi(order as i32) * s[order],
        ProbeOp::Laplacian => (w[0] * w[0] + w[1] * w[1]) * s[2],
    }
}

/// Adds `c · ∂(a_j op[σ_j])/∂θ` for one neuron.
#[allow(clippy::too_many_arguments)]
fn add_term_grad<T: Float>(
    p: &Params<T>,
    j: usize,
    op: ProbeOp,
    x: &[T; 2],
    s: &[T; 6],
    c: T,
    g: &mut [T],
) {
    let m = p.neurons();
    let d = p.d;
    let (a, w) = (p.a[j], &p.w[j]);
    let gw = m + j * d;
    let gb = m + m * d + j;
    match op {
        ProbeOp::Value => {
            g[j] = g[j] + c * s[0];
            for k in 0..d {
                g[gw + k] = g[gw + k] + c * a * s[1] * x[k];
            }
            g[gb] = g[gb] + c * a * s[1];
        }
        ProbeOp::Derivative { axis, order } => {
            let wk = w[axis].powi(order as i32);
            g[j] = g[j] + c * wk * s[order];
            for k in 0..d {
                g[gw + k] = g[gw + k] + c * a * wk * x[k] * s[order + 1];
            }
            if order > 0 {
                let dwk = cast::<T>(order as f64) * w[axis].powi(order as i32 - 1);
                g[gw + axis] = g[gw + axis] + c * a * dwk * s[order];
            }
            g[gb] = g[gb] + c * a * wk * s[order + 1];
        }
        ProbeOp::Laplacian => {
            let n2 = w[0] * w[0] + w[1] * w[1];
            g[j] = g[j] + c * n2 * s[2];
            let two = cast::<T>(2.0);
            for k in 0..d {
                g[gw + k] = g[gw + k] + c * a * (two * w[k] * s[2] + n2 * x[k] * s[3]);
            }
            g[gb] = g[gb] + c * a * n2 * s[3];
        }
    }
}

enum GradTarget<'a, T> {
    None,
    /// Accumulate `2 r_i ∂r_i/∂θ`.
    Loss(&'a mut [T]),
    /// Write `∂r_i/∂θ`.
    Row(&'a mut [T]),
}

fn row_residual<T: Float>(
    p: &Params<T>,
    row: &crate::assembly::RowSpec,
    nl: Option<&Nonlinearity>,
    cache: &mut Vec<[T; 6]>,
    target: GradTarget<'_, T>,
) -> T {
    let m = p.neurons();
    cache.clear();
    let mut val = T::zero();
    for probe in &row.probes {
        let x = point::<T>(&probe.point);
        let coef = cast::<T>(probe.coef);
        for j in 0..m {
            let s = p.derivs(j, &x);
            val = val + coef * p.a[j] * term(probe.op, &p.w[j], &s);
            cache.push(s);
        }
    }
    let mut nl_state = None;
    if let (Some(n), Some(xn)) = (nl, row.nonlinear_at) {
        let x = point::<T>(&xn);
        let phi = p.value(&x);
        val = val + cast::<T>(n.value(phi.to_f64().unwrap_or(f64::NAN)));
        nl_state = Some((x, n.derivative(phi.to_f64().unwrap_or(f64::NAN))));
    }
    let scale = cast::<T>(row.scale);
    let r = scale * (val - cast(row.target));
    let (g, factor) = match target {
        GradTarget::None => return r,
        GradTarget::Loss(g) => (g, cast::<T>(2.0) * r * scale),
        GradTarget::Row(g) => (g, scale),
    };
    for (pi, probe) in row.probes.iter().enumerate() {
        let x = point::<T>(&probe.point);
        let c = factor * cast(probe.coef);
        for j in 0..m {
            add_term_grad(p, j, probe.op, &x, &cache[pi * m + j], c, g);
        }
    }
    if let Some((x, dn)) = nl_state {
        let c = factor * cast(dn);
        for j in 0..m {
            let s = p.derivs(j, &x);
            add_term_grad(p, j, ProbeOp::Value, &x, &s, c, g);
        }
    }
    r
}

fn residuals_t<T: Float>(p: &Params<T>, spec: &LossSpec) -> Vec<f64> {
    let mut cache = Vec::new();
    spec.rows
        .iter()
        .map(|row| {
            row_residual(p, row, spec.nonlinearity.as_ref(), &mut cache, GradTarget::None)
                .to_f64()
                .unwrap_or(f64::NAN)
        })
        .collect()
}

fn loss_grad_t<T: Float>(p: &Params<T>, spec: &LossSpec, nparams: usize) -> (Vec<f64>, Vec<f64>) {
    let mut cache = Vec::new();
    let mut g = vec![T::zero(); nparams];
    let r = spec
        .rows
        .iter()
        .map(|row| {
            row_residual(p, row, spec.nonlinearity.as_ref(), &mut cache, GradTarget::Loss(&mut g))
                .to_f64()
                .unwrap_or(f64::NAN)
        })
        .collect();
    (r, g.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
}

fn jacobian_t<T: Float>(p: &Params<T>, spec: &LossSpec, nparams: usize) -> DenseMatrix {
    let mut cache = Vec::new();
    let mut j = DenseMatrix::zeros(spec.rows.len(), nparams);
    let mut g = vec![T::zero(); nparams];
    for (i, row) in spec.rows.iter().enumerate() {
        g.iter_mut().for_each(|v| *v = T::zero());
        row_residual(p, row, spec.nonlinearity.as_ref(), &mut cache, GradTarget::Row(&mut g));
        for (dst, v) in j.row_mut(i).iter_mut().zip(&g) {
            *dst = v.to_f64().unwrap_or(f64::NAN);
        }
    }
    j
}

impl PinnModel for TwoLayerModel {
    fn input_dim(&self) -> usize {
        self.features.dim
    }

    fn num_params(&self) -> usize {
        self.features.neurons() * (self.features.dim + 2)
    }

    fn params(&self) -> Vec<f64> {
        let f = &self.features;
        let mut theta = f.outer.clone();
        for w in &f.weights {
            theta.extend_from_slice(&w[..f.dim]);
        }
        theta.extend_from_slice(&f.biases);
        theta
    }

    fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for a model with {}",
                theta.len(),
                self.num_params()
            )));
        }
        let round = |v: f64| match self.precision {
            Precision::Double => v,
            Precision::Single => v as f32 as f64,
        };
        let f = &mut self.features;
        let (m, d) = (f.neurons(), f.dim);
        for j in 0..m {
            f.outer[j] = round(theta[j]);
            for k in 0..d {
                f.weights[j][k] = round(theta[m + j * d + k]);
            }
            f.biases[j] = round(theta[m + m * d + j]);
        }
        Ok(())
    }

    fn value(&self, x: &Point) -> f64 {
        match self.precision {
            Precision::Double => self.features.evaluate(x),
            Precision::Single => Params::<f32>::from_model(&self.features).value(&point(x)) as f64,
        }
    }

    fn residuals(&self, spec: &LossSpec) -> Vec<f64> {
        match self.precision {
            Precision::Double => residuals_t(&Params::<f64>::from_model(&self.features), spec),
            Precision::Single => residuals_t(&Params::<f32>::from_model(&self.features), spec),
        }
    }

    fn residuals_and_grad(&self, spec: &LossSpec) -> (Vec<f64>, Vec<f64>) {
        let n = self.num_params();
        match self.precision {
            Precision::Double => loss_grad_t(&Params::<f64>::from_model(&self.features), spec, n),
            Precision::Single => loss_grad_t(&Params::<f32>::from_model(&self.features), spec, n),
        }
    }

    fn jacobian(&self, spec: &LossSpec) -> DenseMatrix {
        let n = self.num_params();
        match self.precision {
            Precision::Double => jacobian_t(&Params::<f64>::from_model(&self.features), spec, n),
            Precision::Single => jacobian_t(&Params::<f32>::from_model(&self.features), spec, n),
        }
    }
}
