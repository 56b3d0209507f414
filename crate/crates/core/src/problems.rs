//! Benchmark boundary value problems, their exact solutions and collocation
//! grids.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Activation;
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemId {
    Poisson1d,
    Poisson2d,
    Biharmonic1d,
    AllenCahnSteady,
}

impl ProblemId {
    pub const ALL: [ProblemId; 4] = [
        ProblemId::Poisson1d,
        ProblemId::Poisson2d,
        ProblemId::Biharmonic1d,
        ProblemId::AllenCahnSteady,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Poisson1d => "poisson1d",
            ProblemId::Poisson2d => "poisson2d",
            ProblemId::Biharmonic1d => "biharmonic1d",
            ProblemId::AllenCahnSteady => "allen_cahn_steady",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::UnknownProblem(s.to_string()))
    }
}

/// Leading differential operator `L` of the residual `c·L[u] + N(u) − f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator {
    /// `u''` in 1D.
    SecondDerivative,
    /// `u_xx + u_yy`.
    Laplacian2d,
    /// `u''''` in 1D.
    FourthDerivative,
}

impl Operator {
    pub fn order(self) -> usize {
        match self {
            Operator::SecondDerivative | Operator::Laplacian2d => 2,
            Operator::FourthDerivative => 4,
        }
    }
}

/// `N(u) = coef·(u − u³)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nonlinearity {
    pub coef: f64,
}

impl Nonlinearity {
    pub fn value(&self, u: f64) -> f64 {
        self.coef * (u - u * u * u)
    }

    pub fn derivative(&self, u: f64) -> f64 {
        self.coef * (1.0 - 3.0 * u * u)
    }
}

/// Axis-aligned box; the second axis is ignored in 1D.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Point,
    pub hi: Point,
}

impl Domain {
    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Value,
    FirstDerivative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryConstraint {
    pub point: Point,
    pub kind: ConstraintKind,
    /// Differentiation axis for first-derivative constraints.
    pub axis: usize,
    pub target: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Exact {
    SinPi1d,
    SinPi2d,
    /// `Σ c_k x^k + eˣ`.
    PolyExp([f64; 4]),
    /// `tanh(s(x − x₀))`.
    TanhFront { slope: f64, center: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PdeProblem {
    pub id: ProblemId,
    pub dim: usize,
    pub operator: Operator,
    /// Coefficient `c` multiplying the leading operator.
    pub operator_coef: f64,
    pub nonlinearity: Option<Nonlinearity>,
    pub domain: Domain,
    pub boundary: Vec<BoundaryConstraint>,
    pub lambda_default: f64,
    /// Interface width of the Allen-Cahn problem.
    pub epsilon: Option<f64>,
    exact: Exact,
}

/// Boundary points per side of the unit square.
pub const DEFAULT_POINTS_PER_SIDE: usize = 64;

/// Coefficients `c₀..c₃` of the clamped biharmonic solution with `f = eˣ`
/// on `[−1, 1]`.
pub fn biharmonic_coefficients() -> [f64; 4] {
    let e = std::f64::consts::E;
    let ei = 1.0 / e;
    [
        -0.75 * ei - 0.25 * e,
        ei - 0.5 * e,
        0.25 * ei - 0.25 * e,
        -0.5 * ei,
    ]
}

pub fn make_problem(id: ProblemId) -> PdeProblem {
    match id {
        ProblemId::Poisson1d => {
            let mut p = PdeProblem {
                id,
                dim: 1,
                operator: Operator::SecondDerivative,
                operator_coef: 1.0,
                nonlinearity: None,
                domain: Domain {
                    lo: [-1.0, 0.0],
                    hi: [1.0, 0.0],
                },
                boundary: Vec::new(),
                lambda_default: 1.0,
                epsilon: None,
                exact: Exact::SinPi1d,
            };
            p.boundary = p.endpoint_values();
            p
        }
        ProblemId::Poisson2d => poisson2d(DEFAULT_POINTS_PER_SIDE),
        ProblemId::Biharmonic1d => {
            let mut p = PdeProblem {
                id,
                dim: 1,
                operator: Operator::FourthDerivative,
                operator_coef: 1.0,
                nonlinearity: None,
                domain: Domain {
                    lo: [-1.0, 0.0],
                    hi: [1.0, 0.0],
                },
                boundary: Vec::new(),
                lambda_default: 100.0,
                epsilon: None,
                exact: Exact::PolyExp(biharmonic_coefficients()),
            };
            let mut b = p.endpoint_values();
            for x in [-1.0, 1.0] {
                let point = [x, 0.0];
                b.push(BoundaryConstraint {
                    point,
                    kind: ConstraintKind::FirstDerivative,
                    axis: 0,
                    target: p.exact_derivative(&point, 0, 1),
                });
            }
            p.boundary = b;
            p
        }
        ProblemId::AllenCahnSteady => allen_cahn(0.1),
    }
}

/// Parses and builds a problem in one step.
pub fn make_problem_by_name(name: &str) -> Result<PdeProblem> {
    Ok(make_problem(name.parse()?))
}

/// 2D Poisson problem with `per_side` boundary points on each edge.
pub fn poisson2d(per_side: usize) -> PdeProblem {
    let mut p = PdeProblem {
        id: ProblemId::Poisson2d,
        dim: 2,
        operator: Operator::Laplacian2d,
        operator_coef: 1.0,
        nonlinearity: None,
        domain: Domain {
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
        },
        boundary: Vec::new(),
        lambda_default: 1.0,
        epsilon: None,
        exact: Exact::SinPi2d,
    };
    let n = per_side.max(1);
    let mut pts = Vec::with_capacity(4 * n);
    for i in 0..n {
        let t = i as f64 / n as f64;
        pts.push([t, 0.0]);
        pts.push([1.0, t]);
        pts.push([1.0 - t, 1.0]);
        pts.push([0.0, 1.0 - t]);
    }
    p.boundary = pts
        .into_iter()
        .map(|point| BoundaryConstraint {
            point,
            kind: ConstraintKind::Value,
            axis: 0,
            target: p.exact_value(&point),
        })
        .collect();
    p
}

/// Steady Allen-Cahn front `ε u'' + (u − u³)/ε = 0` on `[0, 1]` with
/// `u(0) = −1`, `u(1) = 1`.
pub fn allen_cahn(epsilon: f64) -> PdeProblem {
    PdeProblem {
        id: ProblemId::AllenCahnSteady,
        dim: 1,
        operator: Operator::SecondDerivative,
        operator_coef: epsilon,
        nonlinearity: Some(Nonlinearity { coef: 1.0 / epsilon }),
        domain: Domain {
            lo: [0.0, 0.0],
            hi: [1.0, 0.0],
        },
        boundary: vec![
            BoundaryConstraint {
                point: [0.0, 0.0],
                kind: ConstraintKind::Value,
                axis: 0,
                target: -1.0,
            },
            BoundaryConstraint {
                point: [1.0, 0.0],
                kind: ConstraintKind::Value,
                axis: 0,
                target: 1.0,
            },
        ],
        lambda_default: 1.0,
        epsilon: Some(epsilon),
        exact: Exact::TanhFront {
            slope: 1.0 / (std::f64::consts::SQRT_2 * epsilon),
            center: 0.5,
        },
    }
}

impl PdeProblem {
    pub fn operator_order(&self) -> usize {
        self.operator.order()
    }

    fn endpoint_values(&self) -> Vec<BoundaryConstraint> {
        [self.domain.lo[0], self.domain.hi[0]]
            .into_iter()
            .map(|x| {
                let point = [x, 0.0];
                BoundaryConstraint {
                    point,
                    kind: ConstraintKind::Value,
                    axis: 0,
                    target: self.exact_value(&point),
                }
            })
            .collect()
    }

    /// Number of value constraints, the `N̂` normalizing boundary terms.
    pub fn num_value_constraints(&self) -> usize {
        self.boundary
            .iter()
            .filter(|c| c.kind == ConstraintKind::Value)
            .count()
    }

    pub fn exact_value(&self, x: &Point) -> f64 {
        self.exact_derivative(x, 0, 0)
    }

    /// `∂ᵏu*/∂x_axisᵏ` at `x`, `k ≤ 4`.
    pub fn exact_derivative(&self, x: &Point, axis: usize, k: usize) -> f64 {
        assert!(k <= 4, "exact derivatives are provided up to order 4");
        // sin(θ + kπ/2) cycles through sin, cos, −sin, −cos.
        let sin_shift = |t: f64, k: usize| match k % 4 {
            0 => t.sin(),
            1 => t.cos(),
            2 => -t.sin(),
            _ => -t.cos(),
        };
        match self.exact {
            Exact::SinPi1d => {
                if axis != 0 {
                    return if k == 0 { self.exact_value(x) } else { 0.0 };
                }
                PI.powi(k as i32) * sin_shift(PI * x[0], k)
            }
            Exact::SinPi2d => {
                let other = 1 - axis;
                PI.powi(k as i32) * sin_shift(PI * x[axis], k) * (PI * x[other]).sin()
            }
            Exact::PolyExp(c) => {
                if axis != 0 {
                    return if k == 0 { self.exact_value(x) } else { 0.0 };
                }
                let t = x[0];
                let poly = match k {
                    0 => c[0] + t * (c[1] + t * (c[2] + t * c[3])),
                    1 => c[1] + t * (2.0 * c[2] + 3.0 * t * c[3]),
                    2 => 2.0 * c[2] + 6.0 * t * c[3],
                    3 => 6.0 * c[3],
                    _ => 0.0,
                };
                poly + t.exp()
            }
            Exact::TanhFront { slope, center } => {
                if axis != 0 {
                    return if k == 0 { self.exact_value(x) } else { 0.0 };
                }
                slope.powi(k as i32) * Activation::Tanh.derivatives(slope * (x[0] - center))[k]
            }
        }
    }

    /// `L[u*](x)` without the coefficient.
    pub fn exact_operator(&self, x: &Point) -> f64 {
        match self.operator {
            Operator::SecondDerivative => self.exact_derivative(x, 0, 2),
            Operator::Laplacian2d => self.exact_derivative(x, 0, 2) + self.exact_derivative(x, 1, 2),
            Operator::FourthDerivative => self.exact_derivative(x, 0, 4),
        }
    }

    /// Right-hand side `f`, in closed form.
    pub fn forcing(&self, x: &Point) -> f64 {
        match self.exact {
            Exact::SinPi1d => -PI * PI * (PI * x[0]).sin(),
            Exact::SinPi2d => -2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin(),
            Exact::PolyExp(_) => x[0].exp(),
            Exact::TanhFront { .. } => 0.0,
        }
    }

    /// `c·L[u*] + N(u*) − f` at `x`; zero up to rounding for every problem.
    pub fn exact_residual(&self, x: &Point) -> f64 {
        let u = self.exact_value(x);
        let n = self.nonlinearity.map_or(0.0, |nl| nl.value(u));
        self.operator_coef * self.exact_operator(x) + n - self.forcing(x)
    }

    /// Smallest per-axis collocation count accepted by [`make_grid`].
    pub fn min_count(&self) -> usize {
        if self.operator_order() >= 4 {
            5
        } else {
            3
        }
    }
}

/// Ordered collocation points. 2D grids are row-major with `x` fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub counts: [usize; 2],
    pub points: Vec<Point>,
    /// Spacing per axis; zero for point sets not built on a lattice.
    pub spacing: [f64; 2],
}

impl Grid {
    /// Wraps an arbitrary point list.
    pub fn from_points(dim: usize, points: Vec<Point>) -> Self {
        let n = points.len();
        Self {
            dim,
            counts: [n, if dim == 2 { 1 } else { 0 }],
            points,
            spacing: [0.0; 2],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_counts(problem: &PdeProblem, counts: &[usize]) -> Result<()> {
    if counts.len() != problem.dim {
        return Err(Error::DimensionMismatch(format!(
            "{} grid counts for a {}-dimensional problem",
            counts.len(),
            problem.dim
        )));
    }
    Ok(())
}

/// Collocation grid `x_i = lo + i·h`, `i = 1..=N`, `h = extent/N` per axis.
pub fn make_grid(problem: &PdeProblem, counts: &[usize]) -> Result<Grid> {
    check_counts(problem, counts)?;
    let min = problem.min_count();
    if let Some(&n) = counts.iter().find(|&&n| n < min) {
        return Err(Error::InvalidArgument(format!(
            "grid count {n} is below the minimum {min} for {}",
            problem.id
        )));
    }
    let axis_points = |axis: usize| -> (f64, Vec<f64>) {
        let n = counts[axis];
        let h = problem.domain.extent(axis) / n as f64;
        let lo = problem.domain.lo[axis];
        (h, (1..=n).map(|i| lo + i as f64 * h).collect())
    };
    lattice(problem.dim, counts, axis_points)
}

/// Evaluation grid of `n` uniformly spaced points per axis, endpoints included.
pub fn make_eval_grid(problem: &PdeProblem, n: usize) -> Result<Grid> {
    if n < 2 {
        return Err(Error::InvalidArgument("evaluation grid needs two points per axis".into()));
    }
    let counts = vec![n; problem.dim];
    let axis_points = |axis: usize| -> (f64, Vec<f64>) {
        let h = problem.domain.extent(axis) / (n - 1) as f64;
        let lo = problem.domain.lo[axis];
        (h, (0..n).map(|i| lo + i as f64 * h).collect())
    };
    lattice(problem.dim, &counts, axis_points)
}

fn lattice(
    dim: usize,
    counts: &[usize],
    axis_points: impl Fn(usize) -> (f64, Vec<f64>),
) -> Result<Grid> {
    let (hx, xs) = axis_points(0);
    if dim == 1 {
        return Ok(Grid {
            dim,
            counts: [counts[0], 0],
            points: xs.into_iter().map(|x| [x, 0.0]).collect(),
            spacing: [hx, 0.0],
        });
    }
    let (hy, ys) = axis_points(1);
    let mut points = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            points.push([x, y]);
        }
    }
    Ok(Grid {
        dim,
        counts: [counts[0], counts[1]],
        points,
        spacing: [hx, hy],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probes(p: &PdeProblem, n: usize) -> Vec<Point> {
        let g = make_eval_grid(p, n).unwrap();
        g.points
    }

    #[test]
    fn unknown_id_rejected() {
        assert!(matches!(
            "heat3d".parse::<ProblemId>(),
            Err(Error::UnknownProblem(_))
        ));
        for id in ProblemId::ALL {
            assert_eq!(id.name().parse::<ProblemId>().unwrap(), id);
        }
    }

    #[test]
    fn exact_solutions_satisfy_their_equations() {
        for id in ProblemId::ALL {
            let p = make_problem(id);
            let n = if p.dim == 2 { 32 } else { 1000 };
            for x in probes(&p, n) {
                let r = p.exact_residual(&x);
                assert!(r.abs() < 1e-10, "{id} residual {r} at {x:?}");
            }
        }
    }

    #[test]
    fn boundary_constraints_hold() {
        for id in [ProblemId::Poisson1d, ProblemId::Poisson2d, ProblemId::Biharmonic1d] {
            let p = make_problem(id);
            for c in &p.boundary {
                let u = match c.kind {
                    ConstraintKind::Value => p.exact_value(&c.point),
                    ConstraintKind::FirstDerivative => p.exact_derivative(&c.point, c.axis, 1),
                };
                assert!(u.abs() < 1e-14, "{id} boundary value {u}");
                assert!(c.target.abs() < 1e-14);
            }
        }
        let ac = make_problem(ProblemId::AllenCahnSteady);
        assert!((ac.exact_value(&[0.0, 0.0]) + 1.0).abs() < 1e-2);
        assert!((ac.exact_value(&[1.0, 0.0]) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn biharmonic_constants_solve_clamped_conditions() {
        // Independent check: the four boundary conditions as a linear system
        // in (c0..c3), evaluated with the shipped constants.
        let c = biharmonic_coefficients();
        let e = std::f64::consts::E;
        let u = |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x + x.exp();
        let du = |x: f64| c[1] + 2.0 * c[2] * x + 3.0 * c[3] * x * x + x.exp();
        for x in [-1.0, 1.0] {
            assert!(u(x).abs() < 1e-14);
            assert!(du(x).abs() < 1e-14);
        }
        // The printed main-text c0 = −(5/12)e⁻¹ − e/4 violates u(−1) = 0.
        let printed_c0 = -5.0 / 12.0 / e - 0.25 * e;
        assert!((printed_c0 - c[0]).abs() > 0.1);
    }

    #[test]
    fn exact_derivatives_match_finite_differences() {
        for id in ProblemId::ALL {
            let p = make_problem(id);
            let x = if p.dim == 2 { [0.31, 0.67] } else { [0.37, 0.0] };
            for axis in 0..p.dim {
                for k in 0..4 {
                    let h = 1e-5;
                    let mut xp = x;
                    xp[axis] += h;
                    let mut xm = x;
                    xm[axis] -= h;
                    let fd = (p.exact_derivative(&xp, axis, k) - p.exact_derivative(&xm, axis, k))
                        / (2.0 * h);
                    let exact = p.exact_derivative(&x, axis, k + 1);
                    assert!(
                        (fd - exact).abs() < 1e-5 * exact.abs().max(1.0),
                        "{id} axis {axis} order {}",
                        k + 1
                    );
                }
            }
        }
    }

    #[test]
    fn forcing_matches_operator_on_exact() {
        for id in [ProblemId::Poisson1d, ProblemId::Poisson2d, ProblemId::Biharmonic1d] {
            let p = make_problem(id);
            for x in probes(&p, if p.dim == 2 { 9 } else { 50 }) {
                assert!((p.exact_operator(&x) - p.forcing(&x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn poisson1d_grid_of_four() {
        let p = make_problem(ProblemId::Poisson1d);
        let g = make_grid(&p, &[4]).unwrap();
        let xs: Vec<f64> = g.points.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.spacing[0], 0.5);
    }

    #[test]
    fn poisson2d_grid_is_row_major() {
        let p = make_problem(ProblemId::Poisson2d);
        let g = make_grid(&p, &[64, 64]).unwrap();
        assert_eq!(g.len(), 4096);
        assert_eq!(g.points[1][1], g.points[0][1]);
        assert!(g.points[1][0] > g.points[0][0]);
        assert!(g.points[64][1] > g.points[0][1]);
        assert_eq!(p.boundary.len(), 4 * DEFAULT_POINTS_PER_SIDE);
    }

    #[test]
    fn small_grids_rejected() {
        let p = make_problem(ProblemId::Biharmonic1d);
        assert!(make_grid(&p, &[2]).is_err());
        assert!(make_grid(&p, &[4]).is_err());
        assert!(make_grid(&p, &[5]).is_ok());
        assert!(make_grid(&make_problem(ProblemId::Poisson1d), &[2]).is_err());
        assert!(make_grid(&make_problem(ProblemId::Poisson2d), &[8]).is_err());
    }

    #[test]
    fn allen_cahn_nonlinearity_derivative() {
        let p = make_problem(ProblemId::AllenCahnSteady);
        let nl = p.nonlinearity.unwrap();
        let (u, h) = (0.3, 1e-6);
        let fd = (nl.value(u + h) - nl.value(u - h)) / (2.0 * h);
        assert!((fd - nl.derivative(u)).abs() < 1e-6);
    }
}
