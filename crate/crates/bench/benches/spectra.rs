use std::hint::black_box;

use adfd_bench::{random_matrix, random_psd};
use adfd_core::assembly::{assemble_system, AssemblyOptions, DiffMode, FdScheme};
use adfd_core::features::{sample_features, Activation};
use adfd_core::linalg::{svd, sym_eig};
use adfd_core::problems::{make_grid, make_problem, ProblemId};
use adfd_core::spectral::TruncatedSolver;
use adfd_core::training::{kernel_snapshot, LossSpec, PinnModel, Precision, TwoLayerModel};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn decompositions(c: &mut Criterion) {
    let mut g = c.benchmark_group("decomposition");
    g.sample_size(10);
    for n in [50, 100, 200] {
        let a = random_matrix(n, n, 1);
        g.bench_with_input(BenchmarkId::new("svd", n), &a, |b, a| b.iter(|| svd(black_box(a)).unwrap()));
        let s = random_psd(n, 2);
        g.bench_with_input(BenchmarkId::new("sym_eig", n), &s, |b, s| b.iter(|| sym_eig(black_box(s)).unwrap()));
    }
    g.finish();
}

fn rfm_pipeline(c: &mut Criterion) {
    let problem = make_problem(ProblemId::Poisson1d);
    let grid = make_grid(&problem, &[100]).unwrap();
    let model = sample_features(100, 1, 1.0, 0, Activation::Sin).unwrap();
    let fd = DiffMode::fd(FdScheme::Central2, grid.spacing[0]);
    let mut g = c.benchmark_group("rfm");
    g.sample_size(10);
    for (name, mode) in [("assemble_ad", DiffMode::Ad), ("assemble_fd", fd)] {
        g.bench_function(name, |b| b.iter(|| assemble_system(&problem, &model, mode, &grid, 1.0).unwrap()));
    }
    let sys = assemble_system(&problem, &model, DiffMode::Ad, &grid, 1.0).unwrap();
    let a = sys.residual_matrix();
    let f = sys.residual_rhs();
    g.bench_function("truncated_solve_100", |b| {
        b.iter(|| TruncatedSolver::new(&a).unwrap().solve(&f, 40).unwrap())
    });
    g.finish();
}

fn training(c: &mut Criterion) {
    let problem = make_problem(ProblemId::Poisson1d);
    let grid = make_grid(&problem, &[100]).unwrap();
    let model = TwoLayerModel::new(sample_features(100, 1, 1.0, 0, Activation::Sin).unwrap(), Precision::Double);
    let spec = LossSpec::new(&problem, &DiffMode::Ad, &grid, &AssemblyOptions::new(1.0)).unwrap();
    let mut g = c.benchmark_group("two_layer");
    g.sample_size(10);
    g.bench_function("residuals_and_grad", |b| b.iter(|| model.residuals_and_grad(black_box(&spec))));
    g.bench_function("kernel_snapshot", |b| b.iter(|| kernel_snapshot(&model, &spec, 1e-5).unwrap()));
    g.finish();
}

criterion_group!(benches, decompositions, rfm_pipeline, training);
criterion_main!(benches);
