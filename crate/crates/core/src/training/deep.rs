//! Residuals and parameter gradients of deep networks by reverse
//! accumulation through batched Taylor jets.

use super::{LossSpec, PinnModel};
use crate::assembly::RowSpec;
use crate::error::Result;
use crate::features::{axis_direction, DeepNetwork, ProbeOp};
use crate::linalg::DenseMatrix;
use crate::problems::Nonlinearity;
use crate::Point;

const FACTORIAL: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];

/// Points sharing one jet direction and order.
struct Group {
    axis: usize,
    order: usize,
    points: Vec<Point>,
}

/// Where a probe reads its value: group, point slot, derivative order, weight.
struct Entry {
    row: usize,
    group: usize,
    slot: usize,
    k: usize,
    coef: f64,
}

struct Plan {
    groups: Vec<Group>,
    entries: Vec<Entry>,
    /// `(row, group, slot)` of each nonlinear evaluation.
    nonlinear: Vec<(usize, usize, usize)>,
}

impl Plan {
    fn compile(rows: &[RowSpec]) -> Self {
        let mut plan = Plan {
            groups: Vec::new(),
            entries: Vec::new(),
            nonlinear: Vec::new(),
        };
        for (i, row) in rows.iter().enumerate() {
            for p in &row.probes {
                match p.op {
                    ProbeOp::Value => plan.push(i, 0, 0, 0, p.point, p.coef),
                    ProbeOp::Derivative { axis, order } => {
                        plan.push(i, axis, order, order, p.point, p.coef)
                    }
                    ProbeOp::Laplacian => {
                        plan.push(i, 0, 2, 2, p.point, p.coef);
                        plan.push(i, 1, 2, 2, p.point, p.coef);
                    }
                }
            }
            if let Some(x) = row.nonlinear_at {
                let (g, slot) = plan.slot(0, 0, x);
                plan.nonlinear.push((i, g, slot));
            }
        }
        plan
    }

    fn slot(&mut self, axis: usize, order: usize, x: Point) -> (usize, usize) {
        // Value groups are shared by every axis.
        let axis = if order == 0 { 0 } else { axis };
        let g = match self.groups.iter().position(|g| g.axis == axis && g.order == order) {
            Some(g) => g,
            None => {
                self.groups.push(Group {
                    axis,
                    order,
                    points: Vec::new(),
                });
                self.groups.len() - 1
            }
        };
        self.groups[g].points.push(x);
        (g, self.groups[g].points.len() - 1)
    }

    fn push(&mut self, row: usize, axis: usize, order: usize, k: usize, x: Point, coef: f64) {
        let (group, slot) = self.slot(axis, order, x);
        self.entries.push(Entry {
            row,
            group,
            slot,
            k,
            coef,
        });
    }
}

/// Scaled residuals of `rows`; with `want_grad`, also `Σ_i w_i ∂r_i/∂θ` where
/// the weights come from `weights(residuals)`.
fn evaluate(
    net: &DeepNetwork,
    rows: &[RowSpec],
    nl: Option<&Nonlinearity>,
    weights: Option<&dyn Fn(&[f64]) -> Vec<f64>>,
) -> (Vec<f64>, Option<Vec<f64>>) {
    let plan = Plan::compile(rows);
    let tapes: Vec<_> = plan
        .groups
        .iter()
        .map(|g| net.forward_jets(&g.points, axis_direction(g.axis), g.order))
        .collect();
    let mut vals = vec![0.0; rows.len()];
    for e in &plan.entries {
        vals[e.row] += e.coef * tapes[e.group].derivative(e.k, e.slot);
    }
    let mut dn = vec![0.0; rows.len()];
    if let Some(n) = nl {
        for &(i, g, slot) in &plan.nonlinear {
            let phi = tapes[g].derivative(0, slot);
            vals[i] += n.value(phi);
            dn[i] = n.derivative(phi);
        }
    }
    let r: Vec<f64> = rows
        .iter()
        .zip(&vals)
        .map(|(row, v)| row.scale * (v - row.target))
        .collect();
    let Some(weights) = weights else {
        return (r, None);
    };
    let w = weights(&r);
    let mut bars: Vec<Vec<f64>> = plan
        .groups
        .iter()
        .map(|g| vec![0.0; (g.order + 1) * g.points.len()])
        .collect();
    for e in &plan.entries {
        let np = plan.groups[e.group].points.len();
        bars[e.group][e.k * np + e.slot] += w[e.row] * rows[e.row].scale * e.coef * FACTORIAL[e.k];
    }
    for &(i, g, slot) in &plan.nonlinear {
        bars[g][slot] += w[i] * rows[i].scale * dn[i];
    }
    let mut grad = vec![0.0; net.num_params()];
    for (tape, bar) in tapes.iter().zip(&bars) {
        let g = net.backward(tape, bar);
        crate::linalg::axpy(1.0, &g, &mut grad);
    }
    (r, Some(grad))
}

impl PinnModel for DeepNetwork {
    fn input_dim(&self) -> usize {
        DeepNetwork::input_dim(self)
    }

    fn num_params(&self) -> usize {
        DeepNetwork::num_params(self)
    }

    fn params(&self) -> Vec<f64> {
        DeepNetwork::params(self)
    }

    fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        DeepNetwork::set_params(self, theta)
    }

    fn value(&self, x: &Point) -> f64 {
        self.forward(x)
    }

    fn residuals(&self, spec: &LossSpec) -> Vec<f64> {
        evaluate(self, &spec.rows, spec.nonlinearity.as_ref(), None).0
    }

    fn residuals_and_grad(&self, spec: &LossSpec) -> (Vec<f64>, Vec<f64>) {
        let twice = |r: &[f64]| r.iter().map(|v| 2.0 * v).collect::<Vec<_>>();
        let (r, g) = evaluate(self, &spec.rows, spec.nonlinearity.as_ref(), Some(&twice));
        (r, g.expect("gradient requested"))
    }

    fn jacobian(&self, spec: &LossSpec) -> DenseMatrix {
        let mut j = DenseMatrix::zeros(spec.rows.len(), self.num_params());
        let ones = |r: &[f64]| vec![1.0; r.len()];
        for (i, row) in spec.rows.iter().enumerate() {
            let rows = std::slice::from_ref(row);
            let (_, g) = evaluate(self, rows, spec.nonlinearity.as_ref(), Some(&ones));
            j.row_mut(i).copy_from_slice(&g.expect("gradient requested"));
        }
        j
    }
}
