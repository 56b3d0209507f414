//! Exponential loss envelopes from band-restricted kernel spectra, and a
//! frozen-kernel gradient flow to test them on.

use serde::{Deserialize, Serialize};

use super::ResidualComponents;
use crate::error::{Error, Result};
use crate::linalg::{dot, svd, DenseMatrix};
use crate::spectral::effective_cutoff;

/// Kernel eigenvalues and residual energies at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSample {
    pub time: f64,
    pub eigenvalues: Vec<f64>,
    pub energies: Vec<f64>,
    pub null_energy: f64,
}

impl KernelSample {
    pub fn from_components(time: f64, c: &ResidualComponents) -> Self {
        Self {
            time,
            eigenvalues: c.eigenvalues.clone(),
            energies: c.energies.clone(),
            null_energy: c.null_energy,
        }
    }

    pub fn total_energy(&self) -> f64 {
        self.energies.iter().sum::<f64>() + self.null_energy
    }

    /// Residual energy inside the band of [`band_range`].
    pub fn band_energy(&self, a: f64, b: f64) -> Result<f64> {
        let band = band_range(&self.eigenvalues, a, b)?;
        Ok(self.energies[band].iter().sum())
    }
}

/// Zero-based index range of the eigenvalues `λ_{e(b)} ..= λ_{e(a)}`, `a < b`.
pub fn band_range(eigenvalues: &[f64], a: f64, b: f64) -> Result<std::ops::Range<usize>> {
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("band needs a < b, got a={a}, b={b}")));
    }
    let lambda: Vec<f64> = eigenvalues.iter().map(|v| v.max(0.0)).collect();
    let e_a = effective_cutoff(&lambda, a)?;
    let e_b = effective_cutoff(&lambda, b)?;
    if e_b == 0 || e_a < e_b {
        return Err(Error::Empty("eigenvalue band".into()));
    }
    Ok(e_b - 1..e_a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub t_star: f64,
    pub t_end: f64,
    pub a: f64,
    pub b: f64,
    pub eta: f64,
    pub zeta: f64,
    /// Smallest and largest band-mean eigenvalue over the window.
    pub band_mean_min: f64,
    pub band_mean_max: f64,
    pub times: Vec<f64>,
    pub losses: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub violation_fraction: f64,
    /// Largest fraction of residual energy outside the band over the window.
    pub out_of_band_energy: f64,
}

/// Envelopes `L(t*)·exp(−2ζ·μ_max(t−t*)) ≤ L(t) ≤ L(t*)·exp(−2η·μ_min(t−t*))`
/// on `[t*, T]`, where `η`/`ζ` are the extreme min/max ratios of band
/// energies and `μ` the band-mean eigenvalue over the window's samples.
///
/// `times`/`losses` are the loss trace to check; `slack` is relative.
#[allow(clippy::too_many_arguments)]
pub fn theorem1_envelopes(
    times: &[f64],
    losses: &[f64],
    samples: &[KernelSample],
    a: f64,
    b: f64,
    t_star: f64,
    t_end: f64,
    slack: f64,
) -> Result<Theorem1Report> {
    if times.len() != losses.len() {
        return Err(Error::DimensionMismatch("times and losses differ in length".into()));
    }
    if !(t_star < t_end) {
        return Err(Error::InvalidArgument(format!("window [{t_star}, {t_end}] is empty")));
    }
    let in_window = |t: f64| t >= t_star && t <= t_end;
    let window: Vec<&KernelSample> = samples.iter().filter(|s| in_window(s.time)).collect();
    if window.is_empty() {
        return Err(Error::Empty("kernel samples inside the window".into()));
    }
    let (mut eta, mut zeta) = (f64::INFINITY, 0.0f64);
    let (mut mu_min, mut mu_max) = (f64::INFINITY, 0.0f64);
    let mut out_of_band = 0.0f64;
    for s in &window {
        let band = band_range(&s.eigenvalues, a, b)?;
        let e = &s.energies[band.clone()];
        let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = e.iter().cloned().fold(0.0, f64::max);
        let (eta_s, zeta_s) = if hi == 0.0 {
            (1.0, 1.0)
        } else {
            (lo / hi, if lo > 0.0 { hi / lo } else { f64::INFINITY })
        };
        eta = eta.min(eta_s);
        zeta = zeta.max(zeta_s);
        let mu = s.eigenvalues[band.clone()].iter().sum::<f64>() / band.len() as f64;
        mu_min = mu_min.min(mu);
        mu_max = mu_max.max(mu);
        let total = s.total_energy();
        if total > 0.0 {
            out_of_band = out_of_band.max(1.0 - e.iter().sum::<f64>() / total);
        }
    }
    let start = times
        .iter()
        .position(|&t| t >= t_star)
        .ok_or_else(|| Error::Empty("loss trace inside the window".into()))?;
    let l_star = losses[start];
    let (mut wt, mut wl, mut lower, mut upper) = (vec![], vec![], vec![], vec![]);
    let mut violations = 0usize;
    for (&t, &l) in times.iter().zip(losses).skip(start) {
        if t > t_end {
            break;
        }
        let dt = t - t_star;
        let up = l_star * (-2.0 * eta * mu_min * dt).exp();
        let low = if zeta.is_finite() {
            l_star * (-2.0 * zeta * mu_max * dt).exp()
        } else if dt > 0.0 {
            0.0
        } else {
            l_star
        };
        if l > up * (1.0 + slack) || l < low * (1.0 - slack) {
            violations += 1;
        }
        wt.push(t);
        wl.push(l);
        lower.push(low);
        upper.push(up);
    }
    let n = wt.len().max(1);
    Ok(Theorem1Report {
        t_star,
        t_end,
        a,
        b,
        eta,
        zeta,
        band_mean_min: mu_min,
        band_mean_max: mu_max,
        times: wt,
        losses: wl,
        lower,
        upper,
        violation_fraction: violations as f64 / n as f64,
        out_of_band_energy: out_of_band,
    })
}

/// First sample time at which the energy above the band (eigenvalues
/// beyond `λ_{e(b)}`) is below `fraction` of the total.
pub fn default_t_star(samples: &[KernelSample], a: f64, b: f64, fraction: f64) -> Result<Option<f64>> {
    for s in samples {
        let band = band_range(&s.eigenvalues, a, b)?;
        let top: f64 = s.energies[..band.start].iter().sum();
        if top <= fraction * s.total_energy() {
            return Ok(Some(s.time));
        }
    }
    Ok(None)
}

/// Gradient descent on `‖A x − f‖²` over `x` alone, with `G = A Aᵀ` fixed.
#[derive(Clone, Debug)]
pub struct FrozenFlow {
    pub eigenvalues: Vec<f64>,
    pub times: Vec<f64>,
    pub losses: Vec<f64>,
    pub samples: Vec<KernelSample>,
}

impl FrozenFlow {
    /// Loss restricted to the band, one value per sample.
    pub fn band_losses(&self, a: f64, b: f64) -> Result<Vec<f64>> {
        self.samples.iter().map(|s| s.band_energy(a, b)).collect()
    }
}

/// Explicit Euler on the frozen-kernel flow from `x = 0`; every
/// `record_interval` steps the residual is expanded in the eigenbasis of `A Aᵀ`.
pub fn frozen_kernel_flow(
    a: &DenseMatrix,
    f: &[f64],
    lr: f64,
    steps: usize,
    record_interval: usize,
) -> Result<FrozenFlow> {
    if a.rows() != f.len() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side of length {} for {} rows",
            f.len(),
            a.rows()
        )));
    }
    if record_interval == 0 {
        return Err(Error::InvalidArgument("record interval must be positive".into()));
    }
    let s = svd(a)?;
    let mut eigenvalues: Vec<f64> = s.sigma.iter().map(|v| v * v).collect();
    let k = eigenvalues.len();
    eigenvalues.resize(a.rows(), 0.0);
    let mut x = vec![0.0; a.cols()];
    let mut flow = FrozenFlow {
        eigenvalues: eigenvalues.clone(),
        times: Vec::new(),
        losses: Vec::new(),
        samples: Vec::new(),
    };
    for step in 0..=steps {
        let mut r = a.matvec(&x)?;
        for (ri, fi) in r.iter_mut().zip(f) {
            *ri -= fi;
        }
        let loss = dot(&r, &r);
        let t = 2.0 * lr * step as f64;
        flow.times.push(t);
        flow.losses.push(loss);
        if step % record_interval == 0 || step == steps {
            let mut energies = vec![0.0; k];
            for (j, e) in energies.iter_mut().enumerate() {
                let c: f64 = (0..a.rows()).map(|i| s.u.get(i, j) * r[i]).sum();
                *e = c * c;
            }
            let null_energy = (loss - energies.iter().sum::<f64>()).max(0.0);
            flow.samples.push(KernelSample {
                time: t,
                eigenvalues: eigenvalues[..k].to_vec(),
                energies,
                null_energy,
            });
        }
        if step == steps {
            break;
        }
        let g = a.tr_matvec(&r)?;
        crate::linalg::axpy(-2.0 * lr, &g, &mut x);
    }
    Ok(flow)
}
