//! Finite-difference stencils and assembly of the rectangular least-squares
//! systems `A a ≈ f` for exact (AD) and stencil (FD) differentiation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureBasis, FeatureModel, Probe, ProbeOp};
use crate::linalg::DenseMatrix;
use crate::problems::{ConstraintKind, Grid, Operator, PdeProblem};
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdScheme {
    /// `(1, −2, 1)/h²`.
    Central2,
    /// `(−1, 16, −30, 16, −1)/(12h²)`.
    FivePoint4,
    /// `(1, −4, 6, −4, 1)/h⁴`.
    Biharm5,
    /// Block five-point matrix with `4` on the diagonal, i.e. `−Δ_h`.
    Laplace2d5Point,
}

impl FdScheme {
    pub const ALL: [FdScheme; 4] = [
        FdScheme::Central2,
        FdScheme::FivePoint4,
        FdScheme::Biharm5,
        FdScheme::Laplace2d5Point,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FdScheme::Central2 => "central2",
            FdScheme::FivePoint4 => "five_point4",
            FdScheme::Biharm5 => "biharm5",
            FdScheme::Laplace2d5Point => "laplace2d_5point",
        }
    }

    /// Offsets and integer weights of the 1D pattern, with the denominator
    /// applied separately as `1/(denominator·h^power)`.
    fn pattern(self) -> (&'static [(isize, f64)], f64, i32) {
        match self {
            FdScheme::Central2 => (&[(-1, 1.0), (0, -2.0), (1, 1.0)], 1.0, 2),
            FdScheme::FivePoint4 => (
                &[(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)],
                12.0,
                2,
            ),
            FdScheme::Biharm5 => (
                &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
                1.0,
                4,
            ),
            FdScheme::Laplace2d5Point => (&[(-1, -1.0), (0, 4.0), (1, -1.0)], 1.0, 2),
        }
    }

    pub fn supports(self, op: Operator) -> bool {
        matches!(
            (self, op),
            (FdScheme::Central2 | FdScheme::FivePoint4, Operator::SecondDerivative)
                | (
                    FdScheme::Central2 | FdScheme::FivePoint4 | FdScheme::Laplace2d5Point,
                    Operator::Laplacian2d
                )
                | (FdScheme::Biharm5, Operator::FourthDerivative)
        )
    }
}

impl fmt::Display for FdScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FdScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FdScheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stencil `{s}`")))
    }
}

/// How the differential operator is applied to the network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffMode {
    Ad,
    Fd { scheme: FdScheme, h: f64 },
}

impl DiffMode {
    pub fn fd(scheme: FdScheme, h: f64) -> Self {
        DiffMode::Fd { scheme, h }
    }

    pub fn is_ad(&self) -> bool {
        matches!(self, DiffMode::Ad)
    }

    pub fn step(&self) -> Option<f64> {
        match self {
            DiffMode::Ad => None,
            DiffMode::Fd { h, .. } => Some(*h),
        }
    }

    /// Short label used in file names and plot legends.
    pub fn label(&self) -> String {
        match self {
            DiffMode::Ad => "ad".into(),
            DiffMode::Fd { scheme, .. } => scheme.name().into(),
        }
    }

    pub fn validate(&self, problem: &PdeProblem) -> Result<()> {
        if let DiffMode::Fd { scheme, h } = *self {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidArgument(format!("FD step {h} must be positive")));
            }
            if !scheme.supports(problem.operator) {
                return Err(Error::InvalidArgument(format!(
                    "stencil {scheme} cannot discretize the order-{} operator of {}",
                    problem.operator_order(),
                    problem.id
                )));
            }
        }
        Ok(())
    }
}

/// Banded stencil matrix, stored by diagonal offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilMatrix {
    pub scheme: FdScheme,
    pub size: usize,
    pub h: f64,
    /// Column offsets `j − i` with their unscaled weights.
    pub bands: Vec<(isize, f64)>,
    /// Row length of the underlying lattice for 2D block stencils.
    pub block: Option<usize>,
    pub scale: f64,
}

/// Banded matrix of `scheme` on `n` points per axis with step `h`.
///
/// 1D schemes give an `n×n` matrix truncated at the ends; the 2D scheme gives
/// the `n²×n²` block matrix on a row-major lattice.
pub fn build_stencil(scheme: FdScheme, n: usize, h: f64) -> Result<StencilMatrix> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("stencil step {h} must be positive")));
    }
    let (pattern, denom, power) = scheme.pattern();
    let half = pattern.iter().map(|(o, _)| o.unsigned_abs()).max().unwrap_or(0);
    if n < 2 * half + 1 {
        return Err(Error::InvalidArgument(format!(
            "{scheme} needs at least {} points, got {n}",
            2 * half + 1
        )));
    }
    let scale = 1.0 / (denom * h.powi(power));
    if scheme == FdScheme::Laplace2d5Point {
        let n_i = n as isize;
        let bands = vec![(-n_i, -1.0), (-1, -1.0), (0, 4.0), (1, -1.0), (n_i, -1.0)];
        return Ok(StencilMatrix {
            scheme,
            size: n * n,
            h,
            bands,
            block: Some(n),
            scale,
        });
    }
    Ok(StencilMatrix {
        scheme,
        size: n,
        h,
        bands: pattern.to_vec(),
        block: None,
        scale,
    })
}

impl StencilMatrix {
    fn entry_in_band(&self, i: usize, off: isize) -> bool {
        let j = i as isize + off;
        if j < 0 || j >= self.size as isize {
            return false;
        }
        match self.block {
            // ±1 neighbours must stay on the same lattice row.
            Some(n) if off.abs() == 1 => (i / n) == (j as usize / n),
            _ => true,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.size, self.size);
        for i in 0..self.size {
            for &(off, w) in &self.bands {
                if self.entry_in_band(i, off) {
                    m.set(i, (i as isize + off) as usize, w * self.scale);
                }
            }
        }
        m
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.size {
            return Err(Error::DimensionMismatch(format!(
                "stencil of size {} applied to {} values",
                self.size,
                x.len()
            )));
        }
        Ok((0..self.size)
            .map(|i| {
                self.bands
                    .iter()
                    .filter(|(off, _)| self.entry_in_band(i, *off))
                    .map(|&(off, w)| w * x[(i as isize + off) as usize])
                    .sum::<f64>()
                    * self.scale
            })
            .collect())
    }

    /// `S·M` for a dense `M` with `size` rows.
    pub fn apply_matrix(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        if m.rows() != self.size {
            return Err(Error::DimensionMismatch(format!(
                "stencil of size {} applied to {} rows",
                self.size,
                m.rows()
            )));
        }
        let mut out = DenseMatrix::zeros(self.size, m.cols());
        for i in 0..self.size {
            for &(off, w) in &self.bands {
                if self.entry_in_band(i, off) {
                    let src = m.row((i as isize + off) as usize).to_vec();
                    crate::linalg::axpy(w * self.scale, &src, out.row_mut(i));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Residual,
    Boundary,
}

/// Row weighting of the assembled quadratic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossScaling {
    /// `Σ r_i² + λ Σ g_j²`.
    Sum,
    /// `(1/N) Σ r_i² + (λ/N̂) Σ g_j²`.
    Mean,
}

/// Differentiation used in first-derivative boundary rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryDerivative {
    /// Same mode as the interior: exact under AD, `(φ(y+h) − φ(y−h))/(2h)`
    /// under FD.
    FollowInterior,
    /// Always exact.
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub lambda: f64,
    pub scaling: LossScaling,
    pub boundary_derivative: BoundaryDerivative,
    pub include_boundary: bool,
}

impl AssemblyOptions {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            scaling: LossScaling::Sum,
            boundary_derivative: BoundaryDerivative::FollowInterior,
            include_boundary: true,
        }
    }
}

/// One scaled row: `scale·(Σ probes + N(φ(nonlinear_at)) − target)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowSpec {
    pub kind: RowKind,
    pub probes: Vec<Probe>,
    /// Point where the problem's nonlinearity is evaluated, if any.
    pub nonlinear_at: Option<Point>,
    pub target: f64,
    pub scale: f64,
}

/// Probes of `c·L[φ](x)` under `mode`.
pub fn operator_probes(problem: &PdeProblem, mode: &DiffMode, x: Point) -> Result<Vec<Probe>> {
    mode.validate(problem)?;
    let c = problem.operator_coef;
    let probes = match *mode {
        DiffMode::Ad => vec![match problem.operator {
            Operator::SecondDerivative => {
                Probe::new(x, ProbeOp::Derivative { axis: 0, order: 2 }, c)
            }
            Operator::Laplacian2d => Probe::new(x, ProbeOp::Laplacian, c),
            Operator::FourthDerivative => {
                Probe::new(x, ProbeOp::Derivative { axis: 0, order: 4 }, c)
            }
        }],
        DiffMode::Fd { scheme, h } => {
            let along = |axis: usize, scheme: FdScheme| {
                let (pattern, denom, power) = scheme.pattern();
                let s = c / (denom * h.powi(power));
                pattern
                    .iter()
                    .map(move |&(off, w)| {
                        let mut p = x;
                        p[axis] += off as f64 * h;
                        Probe::new(p, ProbeOp::Value, s * w)
                    })
                    .collect::<Vec<_>>()
            };
            match problem.operator {
                Operator::SecondDerivative | Operator::FourthDerivative => along(0, scheme),
                Operator::Laplacian2d => {
                    // The block five-point matrix is −Δ_h; its probes carry Δ_h.
                    let axis_scheme = match scheme {
                        FdScheme::Laplace2d5Point => FdScheme::Central2,
                        other => other,
                    };
                    combine(along(0, axis_scheme), along(1, axis_scheme))
                }
            }
        }
    };
    Ok(probes)
}

/// Concatenates axis stencils, merging probes at the same point.
fn combine(a: Vec<Probe>, b: Vec<Probe>) -> Vec<Probe> {
    let mut out: Vec<Probe> = a;
    for p in b {
        match out.iter_mut().find(|q| q.point == p.point && q.op == p.op) {
            Some(q) => q.coef += p.coef,
            None => out.push(p),
        }
    }
    out
}

/// Probes of a boundary constraint.
pub fn boundary_probes(
    kind: ConstraintKind,
    axis: usize,
    point: Point,
    mode: &DiffMode,
    policy: BoundaryDerivative,
) -> Vec<Probe> {
    match kind {
        ConstraintKind::Value => vec![Probe::new(point, ProbeOp::Value, 1.0)],
        ConstraintKind::FirstDerivative => match (mode, policy) {
            (DiffMode::Fd { h, .. }, BoundaryDerivative::FollowInterior) => {
                let (mut p, mut m) = (point, point);
                p[axis] += h;
                m[axis] -= h;
                vec![
                    Probe::new(p, ProbeOp::Value, 0.5 / h),
                    Probe::new(m, ProbeOp::Value, -0.5 / h),
                ]
            }
            _ => vec![Probe::new(point, ProbeOp::Derivative { axis, order: 1 }, 1.0)],
        },
    }
}

/// All rows of the PINN least-squares functional: residual rows in grid
/// order, then boundary rows in problem order.
pub fn row_specs(
    problem: &PdeProblem,
    mode: &DiffMode,
    grid: &Grid,
    options: &AssemblyOptions,
) -> Result<Vec<RowSpec>> {
    mode.validate(problem)?;
    if grid.dim != problem.dim {
        return Err(Error::DimensionMismatch(format!(
            "grid of dimension {} for problem {}",
            grid.dim, problem.id
        )));
    }
    if grid.is_empty() {
        return Err(Error::Empty("collocation grid".into()));
    }
    if !(options.lambda >= 0.0 && options.lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "boundary weight {} must be non-negative",
            options.lambda
        )));
    }
    let (res_scale, bnd_scale) = match options.scaling {
        LossScaling::Sum => (1.0, options.lambda.sqrt()),
        LossScaling::Mean => {
            let n_hat = problem.num_value_constraints().max(1) as f64;
            (
                1.0 / (grid.len() as f64).sqrt(),
                (options.lambda / n_hat).sqrt(),
            )
        }
    };
    let mut rows = Vec::with_capacity(grid.len() + problem.boundary.len());
    for x in &grid.points {
        rows.push(RowSpec {
            kind: RowKind::Residual,
            probes: operator_probes(problem, mode, *x)?,
            nonlinear_at: problem.nonlinearity.map(|_| *x),
            target: problem.forcing(x),
            scale: res_scale,
        });
    }
    if options.include_boundary {
        for c in &problem.boundary {
            rows.push(RowSpec {
                kind: RowKind::Boundary,
                probes: boundary_probes(c.kind, c.axis, c.point, mode, options.boundary_derivative),
                nonlinear_at: None,
                target: c.target,
                scale: bnd_scale,
            });
        }
    }
    Ok(rows)
}

/// Linear system `A a ≈ f` whose squared residual is the weighted PINN loss.
#[derive(Clone, Debug, PartialEq)]
pub struct AssembledSystem {
    pub a: DenseMatrix,
    pub f: Vec<f64>,
    pub row_kinds: Vec<RowKind>,
    pub lambda: f64,
    pub mode: DiffMode,
    pub scaling: LossScaling,
}

impl AssembledSystem {
    pub fn residual_indices(&self) -> Vec<usize> {
        self.indices_of(RowKind::Residual)
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        self.indices_of(RowKind::Boundary)
    }

    fn indices_of(&self, kind: RowKind) -> Vec<usize> {
        self.row_kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == kind)
            .map(|(i, _)| i)
            .collect()
    }

    /// Residual rows of `A` only.
    pub fn residual_matrix(&self) -> DenseMatrix {
        self.a.select_rows(&self.residual_indices())
    }

    pub fn residual_rhs(&self) -> Vec<f64> {
        self.residual_indices().iter().map(|&i| self.f[i]).collect()
    }

    /// `A a − f`.
    pub fn residual(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.a.matvec(coeffs)?;
        for (ri, fi) in r.iter_mut().zip(&self.f) {
            *ri -= fi;
        }
        Ok(r)
    }

    /// `‖A a − f‖²`.
    pub fn loss(&self, coeffs: &[f64]) -> Result<f64> {
        Ok(self.residual(coeffs)?.iter().map(|r| r * r).sum())
    }
}

/// Assembles with the `Σ r² + λ Σ g²` weighting and boundary rows included.
pub fn assemble_system(
    problem: &PdeProblem,
    model: &dyn FeatureBasis,
    mode: DiffMode,
    grid: &Grid,
    lambda: f64,
) -> Result<AssembledSystem> {
    assemble_system_with(problem, model, mode, grid, &AssemblyOptions::new(lambda))
}

pub fn assemble_system_with(
    problem: &PdeProblem,
    model: &dyn FeatureBasis,
    mode: DiffMode,
    grid: &Grid,
    options: &AssemblyOptions,
) -> Result<AssembledSystem> {
    if problem.nonlinearity.is_some() {
        return Err(Error::InvalidArgument(format!(
            "{} is nonlinear and has no linear system form",
            problem.id
        )));
    }
    if model.input_dim() != problem.dim {
        return Err(Error::DimensionMismatch(format!(
            "model input dimension {} for problem {}",
            model.input_dim(),
            problem.id
        )));
    }
    let rows = row_specs(problem, &mode, grid, options)?;
    let m = model.num_features();
    let mut a = DenseMatrix::zeros(rows.len(), m);
    let mut f = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let out = a.row_mut(i);
        for p in &row.probes {
            model.accumulate_probe(p, out);
        }
        for v in out.iter_mut() {
            *v *= row.scale;
        }
        f.push(row.target * row.scale);
    }
    a.check_finite()?;
    Ok(AssembledSystem {
        a,
        f,
        row_kinds: rows.iter().map(|r| r.kind).collect(),
        lambda: options.lambda,
        mode,
        scaling: options.scaling,
    })
}

/// `E = (A_AD − A_FD)/h²` over residual rows.
pub fn discrepancy_matrix(sys_ad: &AssembledSystem, sys_fd: &AssembledSystem) -> Result<DenseMatrix> {
    let h = match (sys_ad.mode, sys_fd.mode) {
        (DiffMode::Ad, DiffMode::Fd { h, .. }) => h,
        (DiffMode::Ad, DiffMode::Ad) => 1.0,
        _ => {
            return Err(Error::InvalidArgument(
                "discrepancy needs an AD system and an FD system".into(),
            ))
        }
    };
    if sys_ad.a.shape() != sys_fd.a.shape() || sys_ad.row_kinds != sys_fd.row_kinds {
        return Err(Error::DimensionMismatch(format!(
            "systems of shape {:?} and {:?}",
            sys_ad.a.shape(),
            sys_fd.a.shape()
        )));
    }
    Ok(sys_ad
        .residual_matrix()
        .sub(&sys_fd.residual_matrix())?
        .scaled(1.0 / (h * h)))
}

/// Diagonal factors of the closed-form system matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleMatrices {
    /// Operator weight powers: `w_j²`, `‖w_j‖²` or `w_j⁴`.
    pub d: Vec<f64>,
    /// Outer coefficients `a_j`.
    pub a_bar: Vec<f64>,
    /// Collocation coordinates along the first axis.
    pub x: Vec<f64>,
}

pub fn scale_matrices(problem: &PdeProblem, model: &FeatureModel, grid: &Grid) -> ScaleMatrices {
    let d = match problem.operator {
        Operator::SecondDerivative => model.weight_power_diag(0, 2),
        Operator::Laplacian2d => model.weight_norm_sq_diag(),
        Operator::FourthDerivative => model.weight_power_diag(0, 4),
    };
    ScaleMatrices {
        d,
        a_bar: model.outer.clone(),
        x: grid.points.iter().map(|p| p[0]).collect(),
    }
}
