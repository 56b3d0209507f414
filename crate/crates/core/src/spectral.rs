//! Effective cut-off numbers, truncated entropy, truncated pseudo-inverse
//! solves and numerical checks of the AD/FD spectral inequalities.

use serde::{Deserialize, Serialize};

use crate::assembly::{build_stencil, discrepancy_matrix, AssembledSystem, DiffMode};
use crate::error::{Error, Result};
use crate::features::{feature_matrix, FeatureModel};
use crate::linalg::{norm2, singular_values, svd, sym_eig, DenseMatrix, SvdResult};
use crate::problems::{Grid, Operator, PdeProblem};

/// Relative slack allowed on exact inequalities checked in floating point.
pub const VERIFIER_SLACK: f64 = 1e-8;

fn check_threshold(a: f64) -> Result<()> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::InvalidArgument(format!("threshold {a} not in [0, 1)")));
    }
    Ok(())
}

/// `e(a) = #{σ_i ≥ a·σ_1}` for a descending spectrum.
pub fn effective_cutoff(sigma: &[f64], a: f64) -> Result<usize> {
    check_threshold(a)?;
    let top = *sigma.first().ok_or_else(|| Error::Empty("spectrum".into()))?;
    let bar = a * top;
    Ok(sigma.iter().filter(|&&s| s >= bar).count())
}

/// Normalized Shannon entropy of `values`, `−Σ p log p / log n`.
///
/// `None` when fewer than two values are given.
pub fn normalized_entropy(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let h: f64 = values
        .iter()
        .map(|&v| v / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Some(h / (n as f64).ln())
}

/// Truncated entropy `H(a)` over the `e(a)` leading values.
///
/// `Ok(None)` is the undefined-entropy sentinel for `e(a) = 1`.
pub fn truncated_entropy(sigma: &[f64], a: f64) -> Result<Option<f64>> {
    let e = effective_cutoff(sigma, a)?;
    Ok(normalized_entropy(&sigma[..e]))
}

/// Cut-off, entropy and tail energies of one spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub sigma: Vec<f64>,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub threshold: f64,
    pub cutoff: usize,
    pub entropy: Option<f64>,
    /// `Σ_{i>P} σ_i²` for `P = 0..=len`.
    pub tail_energy: Vec<f64>,
}

impl SpectralReport {
    pub fn new(sigma: Vec<f64>, a: f64) -> Result<Self> {
        let cutoff = effective_cutoff(&sigma, a)?;
        let entropy = normalized_entropy(&sigma[..cutoff]);
        let mut tail_energy = vec![0.0; sigma.len() + 1];
        for p in (0..sigma.len()).rev() {
            tail_energy[p] = tail_energy[p + 1] + sigma[p] * sigma[p];
        }
        Ok(Self {
            sigma_max: sigma[0],
            sigma_min: *sigma.last().expect("non-empty"),
            threshold: a,
            cutoff,
            entropy,
            tail_energy,
            sigma,
        })
    }

    pub fn condition_number(&self) -> f64 {
        self.sigma_max / self.sigma_min
    }
}

/// Singular values of `A` wrapped in a report.
pub fn spectral_report(a_matrix: &DenseMatrix, a: f64) -> Result<SpectralReport> {
    SpectralReport::new(singular_values(a_matrix)?, a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSolve {
    pub coeffs: Vec<f64>,
    pub rel_residual: f64,
}

/// Reusable SVD of a system matrix for solves at many truncation ranks.
#[derive(Clone, Debug)]
pub struct TruncatedSolver {
    a: DenseMatrix,
    svd: SvdResult,
}

impl TruncatedSolver {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        Ok(Self {
            a: a.clone(),
            svd: svd(a)?,
        })
    }

    pub fn sigma(&self) -> &[f64] {
        &self.svd.sigma
    }

    pub fn svd(&self) -> &SvdResult {
        &self.svd
    }

    /// `a_P = Σ_{i≤P} (u_iᵀf/σ_i) v_i` and `‖A a_P − f‖/‖f‖`.
    pub fn solve(&self, f: &[f64], rank: usize) -> Result<TruncatedSolve> {
        let (m, n) = self.a.shape();
        if f.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for {m} rows",
                f.len()
            )));
        }
        let k = self.svd.sigma.len();
        if rank == 0 || rank > k {
            return Err(Error::InvalidArgument(format!("truncation rank {rank} not in 1..={k}")));
        }
        if self.svd.sigma[rank - 1] == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "singular value {rank} is zero and cannot be inverted"
            )));
        }
        let f_norm = norm2(f);
        if f_norm == 0.0 {
            return Err(Error::InvalidArgument("right-hand side is zero".into()));
        }
        let u = &self.svd.u;
        let v = &self.svd.v;
        let mut proj = vec![0.0; rank];
        for (r, fr) in f.iter().enumerate() {
            let urow = u.row(r);
            for i in 0..rank {
                proj[i] += urow[i] * fr;
            }
        }
        for (p, s) in proj.iter_mut().zip(&self.svd.sigma) {
            *p /= s;
        }
        let coeffs: Vec<f64> = (0..n)
            .map(|j| {
                let vrow = v.row(j);
                (0..rank).map(|i| vrow[i] * proj[i]).sum()
            })
            .collect();
        let mut r = self.a.matvec(&coeffs)?;
        for (ri, fi) in r.iter_mut().zip(f) {
            *ri -= fi;
        }
        Ok(TruncatedSolve {
            rel_residual: norm2(&r) / f_norm,
            coeffs,
        })
    }
}

pub fn truncated_pinv_solve(a: &DenseMatrix, f: &[f64], rank: usize) -> Result<TruncatedSolve> {
    TruncatedSolver::new(a)?.solve(f, rank)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TruncationSweep {
    /// `(P, ‖A a_P − f‖/‖f‖)`.
    pub entries: Vec<(usize, f64)>,
}

impl TruncationSweep {
    pub fn residual_at(&self, rank: usize) -> Option<f64> {
        self.entries.iter().find(|(p, _)| *p == rank).map(|(_, r)| *r)
    }

    /// Rank with the smallest residual.
    pub fn argmin(&self) -> Option<(usize, f64)> {
        self.entries
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

pub fn truncation_sweep(a: &DenseMatrix, f: &[f64], positions: &[usize]) -> Result<TruncationSweep> {
    sweep_with(&TruncatedSolver::new(a)?, f, positions)
}

pub fn sweep_with(solver: &TruncatedSolver, f: &[f64], positions: &[usize]) -> Result<TruncationSweep> {
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("truncation positions must ascend".into()));
    }
    let entries = positions
        .iter()
        .map(|&p| solver.solve(f, p).map(|s| (p, s.rel_residual)))
        .collect::<Result<_>>()?;
    Ok(TruncationSweep { entries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop1Report {
    pub h: f64,
    pub lambda_max_ad: f64,
    pub lambda_max_fd: f64,
    /// Extreme eigenvalues of `EᵀF + FᵀE + h²EᵀE`.
    pub lambda_bar: f64,
    pub lambda_under: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

/// Checks `λ_max(FᵀF) + h²λ̲ ≤ λ_max(AᵀA) ≤ λ_max(FᵀF) + h²λ̄` on the
/// residual rows, with `F = A_FD` and `A = A_AD`.
pub fn verify_prop1(sys_ad: &AssembledSystem, sys_fd: &AssembledSystem) -> Result<Prop1Report> {
    let e = discrepancy_matrix(sys_ad, sys_fd)?;
    let h = sys_fd.mode.step().unwrap_or(1.0);
    let a_ad = sys_ad.residual_matrix();
    let a_fd = sys_fd.residual_matrix();
    let x = e.transpose().matmul(&a_fd)?;
    let s = x.add(&x.transpose())?.add(&e.gram().scaled(h * h))?;
    let eig = sym_eig(&s.symmetrized()?)?;
    let lambda_bar = eig.eigenvalues[0];
    let lambda_under = *eig.eigenvalues.last().expect("non-empty");
    let top = |m: &DenseMatrix| -> Result<f64> {
        let s = singular_values(m)?;
        Ok(s[0] * s[0])
    };
    let lambda_max_ad = top(&a_ad)?;
    let lambda_max_fd = top(&a_fd)?;
    let lower = lambda_max_fd + h * h * lambda_under;
    let upper = lambda_max_fd + h * h * lambda_bar;
    let slack = VERIFIER_SLACK * lambda_max_ad.max(lambda_max_fd);
    Ok(Prop1Report {
        h,
        lambda_max_ad,
        lambda_max_fd,
        lambda_bar,
        lambda_under,
        lower,
        upper,
        holds: lower <= lambda_max_ad + slack && lambda_max_ad <= upper + slack,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Holds,
    Fails,
    Unverifiable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop2Report {
    pub sigma_min_a0: f64,
    pub sigma_min_a2: f64,
    /// `σ_min(A₀)/σ_min(A₂)`.
    pub c: f64,
    pub s_min_c: f64,
    pub s_min_d_inv: f64,
    /// `1/(s_min(C)·s_min(D⁻¹))`.
    pub threshold: f64,
    pub hypothesis: Hypothesis,
    pub note: String,
    pub sigma_min_ad: f64,
    pub sigma_min_fd: f64,
    /// `σ_min(A_FD) ≥ σ_min(A_AD)`.
    pub conclusion: bool,
}

fn smallest(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Evaluates the smallest-singular-value comparison and its sufficient
/// condition for a 1D random feature system.
pub fn verify_prop2(
    problem: &PdeProblem,
    model: &FeatureModel,
    grid: &Grid,
    sys_ad: &AssembledSystem,
    sys_fd: &AssembledSystem,
) -> Result<Prop2Report> {
    let (scheme, h) = match sys_fd.mode {
        DiffMode::Fd { scheme, h } => (scheme, h),
        DiffMode::Ad => return Err(Error::InvalidArgument("second system must be FD".into())),
    };
    let (k, power) = match (problem.operator, problem.dim) {
        (Operator::SecondDerivative, 1) => (2, 2),
        (Operator::FourthDerivative, 1) => (4, 4),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "the comparison is defined for 1D problems, not {}",
                problem.id
            )))
        }
    };
    let sigma_min_ad = smallest(&singular_values(&sys_ad.residual_matrix())?);
    let sigma_min_fd = smallest(&singular_values(&sys_fd.residual_matrix())?);
    let sigma_min_a0 = smallest(&singular_values(&feature_matrix(model, 0, grid)?)?);
    let sigma_min_a2 = smallest(&singular_values(&feature_matrix(model, k, grid)?)?);
    let c_matrix = build_stencil(scheme, grid.len(), h)?.to_dense();
    let s_min_c = smallest(&singular_values(&c_matrix)?);
    let d = model.weight_power_diag(0, power);
    let max_d = d.iter().copied().fold(0.0, f64::max);
    let d_invertible = d.iter().all(|&v| v != 0.0);
    let s_min_d_inv = if max_d > 0.0 { 1.0 / max_d } else { 0.0 };
    let threshold = 1.0 / (s_min_c * s_min_d_inv);
    let c = sigma_min_a0 / sigma_min_a2;
    let (hypothesis, note) = if !d_invertible {
        (Hypothesis::Fails, "D is not invertible".to_string())
    } else if sigma_min_a2 == 0.0 {
        (Hypothesis::Unverifiable, "smallest singular value of A_k is zero".to_string())
    } else if c >= threshold {
        (Hypothesis::Holds, String::new())
    } else {
        (Hypothesis::Fails, format!("C = {c:e} below threshold {threshold:e}"))
    };
    Ok(Prop2Report {
        sigma_min_a0,
        sigma_min_a2,
        c,
        s_min_c,
        s_min_d_inv,
        threshold,
        hypothesis,
        note,
        sigma_min_ad,
        sigma_min_fd,
        conclusion: sigma_min_fd >= sigma_min_ad,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedIndicator {
    pub e_a: usize,
    pub e_b: usize,
    pub entropy: Option<f64>,
    /// `(log e(a)/e(a))·H(a)`.
    pub lhs: f64,
    /// Mean of `λ_{e(b)}..=λ_{e(a)}`.
    pub rhs: f64,
}

/// Both sides of the entropy/convergence-speed relation for a descending
/// kernel spectrum. Negative rounding noise is clamped to zero.
pub fn entropy_speed_indicator(spectrum: &[f64], a: f64, b: f64) -> Result<SpeedIndicator> {
    check_threshold(a)?;
    check_threshold(b)?;
    if b <= a {
        return Err(Error::InvalidArgument(format!("band needs b > a, got a={a}, b={b}")));
    }
    let clamped: Vec<f64> = spectrum.iter().map(|&v| v.max(0.0)).collect();
    let e_a = effective_cutoff(&clamped, a)?;
    let e_b = effective_cutoff(&clamped, b)?;
    if e_b == 0 || e_b > e_a {
        return Err(Error::Empty(format!("eigenvalue band {e_b}..={e_a}")));
    }
    let entropy = normalized_entropy(&clamped[..e_a]);
    let lhs = (e_a as f64).ln() / e_a as f64 * entropy.unwrap_or(0.0);
    let band = &clamped[e_b - 1..e_a];
    let rhs = band.iter().sum::<f64>() / band.len() as f64;
    Ok(SpeedIndicator {
        e_a,
        e_b,
        entropy,
        lhs,
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_examples() {
        assert_eq!(effective_cutoff(&[4.0, 2.0, 1.0, 1e-20], 1e-3).unwrap(), 3);
        assert_eq!(effective_cutoff(&[7.0], 0.5).unwrap(), 1);
        assert_eq!(effective_cutoff(&[3.0, 1.0, 0.0], 0.0).unwrap(), 3);
        assert!(effective_cutoff(&[], 0.1).is_err());
        assert!(effective_cutoff(&[1.0], 1.0).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert!((truncated_entropy(&[5.0; 7], 0.5).unwrap().unwrap() - 1.0).abs() < 1e-15);
        // Independent evaluation: p = (1/2, 1/4, 1/4), H = 1.5 ln 2 / ln 3.
        let oracle = 1.5 * std::f64::consts::LN_2 / 3f64.ln();
        let h = truncated_entropy(&[2.0, 1.0, 1.0], 0.0).unwrap().unwrap();
        assert!((h - oracle).abs() < 1e-15);
        assert!((h - 0.9464).abs() < 1e-4);
        assert_eq!(truncated_entropy(&[1.0, 1e-20], 1e-3).unwrap(), None);
    }

    #[test]
    fn identity_solve() {
        let a = DenseMatrix::identity(4);
        let f = [1.0, -2.0, 3.0, 0.5];
        let s = truncated_pinv_solve(&a, &f, 4).unwrap();
        for (x, y) in s.coeffs.iter().zip(f) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(s.rel_residual < 1e-15);
    }

    #[test]
    fn rank_one_pseudo_inverse() {
        let a = DenseMatrix::from_diag(&[1.0, 1e-16]);
        let s = truncated_pinv_solve(&a, &[1.0, 1.0], 1).unwrap();
        assert_eq!(s.coeffs, vec![1.0, 0.0]);
        assert!((s.rel_residual - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(truncated_pinv_solve(&DenseMatrix::from_diag(&[1.0, 0.0]), &[1.0, 1.0], 2).is_err());
    }

    #[test]
    fn tail_energy_identity() {
        let a = DenseMatrix::from_fn(12, 9, |i, j| ((i * 7 + j * 3) as f64).sin() + 0.1 * j as f64);
        let solver = TruncatedSolver::new(&a).unwrap();
        let report = SpectralReport::new(solver.sigma().to_vec(), 0.0).unwrap();
        let svd = solver.svd();
        for p in 0..=9 {
            let mut ap = DenseMatrix::zeros(12, 9);
            for k in 0..p {
                for i in 0..12 {
                    for j in 0..9 {
                        let v = ap.get(i, j) + svd.sigma[k] * svd.u.get(i, k) * svd.v.get(j, k);
                        ap.set(i, j, v);
                    }
                }
            }
            let err = a.sub(&ap).unwrap().frobenius_norm().powi(2);
            let tail = report.tail_energy[p];
            assert!((err - tail).abs() <= 1e-10 * report.tail_energy[0], "P={p}");
        }
    }

    #[test]
    fn sweep_is_nested_for_well_conditioned_spectra() {
        let a = DenseMatrix::from_fn(20, 10, |i, j| 1.0 / (1.0 + i as f64 + 2.0 * j as f64));
        let a = a.add(&DenseMatrix::from_fn(20, 10, |i, j| if i == j { 1.0 } else { 0.0 })).unwrap();
        let f: Vec<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        let sweep = truncation_sweep(&a, &f, &(1..=10).collect::<Vec<_>>()).unwrap();
        for w in sweep.entries.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-14);
        }
        assert!(truncation_sweep(&a, &f, &[3, 2]).is_err());
    }

    #[test]
    fn speed_indicator_on_flat_band() {
        let s = entropy_speed_indicator(&[2.0, 2.0, 2.0, 1e-9], 1e-3, 0.5).unwrap();
        assert_eq!(s.e_a, 3);
        assert_eq!(s.e_b, 3);
        assert!((s.entropy.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(s.rhs, 2.0);
        assert!((s.lhs - 3f64.ln() / 3.0).abs() < 1e-15);
        assert!(entropy_speed_indicator(&[1.0, 0.5], 0.5, 0.1).is_err());
    }
}
