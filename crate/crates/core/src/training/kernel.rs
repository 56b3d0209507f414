//! The residual kernel `G = J Jᵀ` and the eigen-expansion of residuals in it.

use super::{LossSpec, PinnModel};
use crate::error::{Error, Result};
use crate::linalg::{dot, svd, sym_eig, DenseMatrix};
use crate::spectral::{effective_cutoff, truncated_entropy};

/// Spectrum of `G` at one training step.
///
/// `G` is kept in factored form: its eigenvectors are the left singular
/// vectors of `J` and its eigenvalues the squared singular values, padded
/// with zeros to the number of rows.
#[derive(Clone, Debug)]
pub struct KernelSnapshot {
    pub step: usize,
    pub time: f64,
    pub jacobian: DenseMatrix,
    /// Descending, length = number of rows.
    pub eigenvalues: Vec<f64>,
    /// Rows × `min(rows, params)`, orthonormal columns.
    pub eigenvectors: DenseMatrix,
    pub threshold: f64,
    pub cutoff: usize,
    pub entropy: Option<f64>,
    /// Scaled residual at this step, if recorded.
    pub residual: Option<Vec<f64>>,
}

impl KernelSnapshot {
    /// Dense `G = J Jᵀ`.
    pub fn kernel(&self) -> DenseMatrix {
        self.jacobian.outer_gram()
    }

    /// Expansion of `residual` in this snapshot's eigenbasis.
    pub fn decompose(&self, residual: &[f64]) -> Result<ResidualComponents> {
        decompose(&self.eigenvalues, &self.eigenvectors, residual)
    }
}

/// Snapshot of `G` for `model` on `spec` with entropy metrics at threshold `a`.
pub fn kernel_snapshot(model: &dyn PinnModel, spec: &LossSpec, a: f64) -> Result<KernelSnapshot> {
    let jacobian = model.jacobian(spec);
    let s = svd(&jacobian)?;
    let mut eigenvalues: Vec<f64> = s.sigma.iter().map(|v| v * v).collect();
    eigenvalues.resize(jacobian.rows(), 0.0);
    let cutoff = effective_cutoff(&eigenvalues, a)?;
    let entropy = truncated_entropy(&eigenvalues, a)?;
    Ok(KernelSnapshot {
        step: 0,
        time: 0.0,
        jacobian,
        eigenvalues,
        eigenvectors: s.u,
        threshold: a,
        cutoff,
        entropy,
        residual: None,
    })
}

/// `r = Σ_i c_i q_i` with `G q_i = λ_i q_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualComponents {
    pub eigenvalues: Vec<f64>,
    /// `c_i = q_iᵀ r` for each available eigenvector.
    pub coefficients: Vec<f64>,
    /// `c_i²`.
    pub energies: Vec<f64>,
    /// Energy in the part of the zero eigenspace not spanned by the
    /// available eigenvectors.
    pub null_energy: f64,
}

impl ResidualComponents {
    pub fn total_energy(&self) -> f64 {
        self.energies.iter().sum::<f64>() + self.null_energy
    }

    /// `Σ λ_i c_i²`, i.e. `rᵀ G r`.
    pub fn quadratic_form(&self) -> f64 {
        self.eigenvalues.iter().zip(&self.energies).map(|(l, e)| l * e).sum()
    }
}

fn decompose(eigenvalues: &[f64], q: &DenseMatrix, residual: &[f64]) -> Result<ResidualComponents> {
    if q.rows() != residual.len() {
        return Err(Error::DimensionMismatch(format!(
            "residual of length {} for a kernel of size {}",
            residual.len(),
            q.rows()
        )));
    }
    let k = q.cols();
    let mut coefficients = vec![0.0; k];
    for (i, ri) in residual.iter().enumerate() {
        let row = q.row(i);
        for (c, qi) in coefficients.iter_mut().zip(row) {
            *c += qi * ri;
        }
    }
    let energies: Vec<f64> = coefficients.iter().map(|c| c * c).collect();
    let total = dot(residual, residual);
    let null_energy = (total - energies.iter().sum::<f64>()).max(0.0);
    Ok(ResidualComponents {
        eigenvalues: eigenvalues[..k].to_vec(),
        coefficients,
        energies,
        null_energy,
    })
}

/// Eigen-expansion of `residual` in a symmetric kernel such as `A Aᵀ` or `G`.
pub fn residual_eigendecomposition(kernel: &DenseMatrix, residual: &[f64]) -> Result<ResidualComponents> {
    if kernel.rows() != residual.len() {
        return Err(Error::DimensionMismatch(format!(
            "residual of length {} for a kernel of size {}x{}",
            residual.len(),
            kernel.rows(),
            kernel.cols()
        )));
    }
    let eig = sym_eig(kernel)?;
    decompose(&eig.eigenvalues, &eig.eigenvectors, residual)
}
