//! Acceptance criteria 1-12. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Tolerances are pinned below.

use std::time::Instant;

use adfd_core::assembly::{assemble_system, AssembledSystem, AssemblyOptions, DiffMode, FdScheme, LossScaling};
use adfd_core::features::{
    axis_direction, jet_propagate, sample_features, Activation, DeepNetwork, FeatureModel, InitScheme,
};
use adfd_core::linalg::{dot, norm2, singular_values, svd, sym_eig, DenseMatrix};
use adfd_core::problems::{allen_cahn, make_grid, make_problem, Grid, PdeProblem, ProblemId};
use adfd_core::spectral::{
    effective_cutoff, normalized_entropy, sweep_with, truncated_entropy, verify_prop1, verify_prop2,
    Hypothesis, TruncatedSolver,
};
use adfd_core::training::{
    default_t_star, frozen_kernel_flow, kernel_snapshot, loss_and_grad, residual_eigendecomposition,
    theorem1_envelopes, train, LossSpec, Optimizer, PinnModel, Precision, TrainConfig, TrainHistory,
    TwoLayerModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 10;

// Criterion 1
const TOP_SIGMA_REL_TOL: f64 = 0.01;
const RUNTIME_1_S: f64 = 30.0;
// Criterion 2
const RUNTIME_2_S: f64 = 120.0;
// Criterion 3
const H_AD_PAPER: f64 = 0.4183;
const H_FD_PAPER: f64 = 0.1995;
const ENTROPY_TOL: f64 = 0.1;
const RUNTIME_3_S: f64 = 60.0;
// Criterion 4
const FIG1_SIZES: [usize; 4] = [100, 300, 500, 1000];
const RUNTIME_4_S: f64 = 600.0;
// Criterion 5: relative tolerance on "non-increasing" before the minimum, and
// the rise after it must exceed this factor.
const SWEEP_MONOTONE_TOL: f64 = 1e-2;
const SWEEP_RISE_FACTOR: f64 = 2.0;
// Criterion 6
const TRAIN_EARLY_STEPS: usize = 100;
const TRAIN_EARLY_REL_TOL: f64 = 0.10;
const TRAIN_STEPS: usize = 20_000;
const TRAIN_LR: f64 = 1e-3;
const RUNTIME_6_S: f64 = 600.0;
// Criterion 7
const KERNEL_RATIO: f64 = 4.0;
const KERNEL_RATIO_TOL: f64 = 0.10;
// Criterion 8
const ENVELOPE_MIN_FRACTION: f64 = 0.95;
const SINGLE_MODE_TOL: f64 = 0.01;
// Criterion 9
const JET_REL_TOL: f64 = 1e-6;
const GRAD_REL_TOL: f64 = 1e-6;
// Criterion 10
const IDENTITY_TOL: f64 = 1e-10;
const FLAT_TOL: f64 = 1e-12;
const H_DIAG_211: f64 = 0.9464;
const H_DIAG_211_TOL: f64 = 1e-4;
// Criterion 11
const BIHARM_NN_STEPS: usize = 20_000;
const BIHARM_NN_LR: f64 = 1e-4;
const AC_STEPS: usize = 2_000;
const AC_LR: f64 = 1e-3;
// Criterion 12
const DEEP_STEPS: usize = 2_000;
const DEEP_LR: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn fd_mode(problem: &PdeProblem, grid: &Grid) -> DiffMode {
    let scheme = match problem.id {
        ProblemId::Biharmonic1d => FdScheme::Biharm5,
        ProblemId::Poisson2d => FdScheme::Laplace2d5Point,
        _ => FdScheme::Central2,
    };
    DiffMode::fd(scheme, grid.spacing[0])
}

struct RfmCase {
    problem: PdeProblem,
    grid: Grid,
    model: FeatureModel,
    ad: AssembledSystem,
    fd: AssembledSystem,
}

fn rfm_case(id: ProblemId, m: usize, act: Activation, seed: u64) -> RfmCase {
    let problem = make_problem(id);
    let grid = make_grid(&problem, &[m]).unwrap();
    let model = sample_features(m, 1, 1.0, seed, act).unwrap();
    let lambda = problem.lambda_default;
    let ad = assemble_system(&problem, &model, DiffMode::Ad, &grid, lambda).unwrap();
    let fd = assemble_system(&problem, &model, fd_mode(&problem, &grid), &grid, lambda).unwrap();
    RfmCase { problem, grid, model, ad, fd }
}

fn residual_sigma(sys: &AssembledSystem) -> Vec<f64> {
    singular_values(&sys.residual_matrix()).unwrap()
}

fn criterion1() -> Outcome {
    let t = Instant::now();
    let (mut worst, mut binding, mut violated) = (0.0f64, 0, 0);
    for seed in 0..SEEDS {
        let c = rfm_case(ProblemId::Poisson1d, 100, Activation::Sin, seed);
        let (sa, sf) = (residual_sigma(&c.ad), residual_sigma(&c.fd));
        for i in 0..10 {
            worst = worst.max((sa[i] - sf[i]).abs() / sa[i]);
        }
        let p2 = verify_prop2(&c.problem, &c.model, &c.grid, &c.ad, &c.fd).unwrap();
        if p2.hypothesis == Hypothesis::Holds {
            binding += 1;
            if !p2.conclusion {
                violated += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst < TOP_SIGMA_REL_TOL && violated == 0 && secs < RUNTIME_1_S,
        format!(
            "top-10 max rel diff {worst:.2e} (< {TOP_SIGMA_REL_TOL}); Prop 2 hypothesis held in {binding}/{SEEDS} seeds, conclusion violated in {violated}; {secs:.1}s"
        ),
    )
}

fn criterion2() -> Outcome {
    let t = Instant::now();
    let mut held = 0;
    for (m, act) in [(100, Activation::Sin), (300, Activation::Tanh)] {
        for seed in 0..SEEDS {
            let c = rfm_case(ProblemId::Poisson1d, m, act, seed);
            if verify_prop1(&c.ad, &c.fd).unwrap().holds {
                held += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let total = 2 * SEEDS;
    outcome(
        held == total && secs < RUNTIME_2_S,
        format!("sandwich held in {held}/{total} systems; {secs:.1}s"),
    )
}

struct SweepStats {
    h_ad: Vec<f64>,
    h_fd: Vec<f64>,
    order_ok: usize,
    shape_ok: [usize; 2],
    residual_ok: usize,
}

fn fig3_stats() -> SweepStats {
    let mut s = SweepStats { h_ad: vec![], h_fd: vec![], order_ok: 0, shape_ok: [0; 2], residual_ok: 0 };
    for seed in 0..SEEDS {
        let c = rfm_case(ProblemId::Poisson1d, 100, Activation::Sin, seed);
        let mut at_cutoff = [0.0; 2];
        for (k, sys) in [&c.ad, &c.fd].into_iter().enumerate() {
            let solver = TruncatedSolver::new(&sys.residual_matrix()).unwrap();
            let f = sys.residual_rhs();
            let sigma = solver.sigma().to_vec();
            let h = truncated_entropy(&sigma, 1e-12).unwrap().unwrap_or(f64::NAN);
            if k == 0 { s.h_ad.push(h) } else { s.h_fd.push(h) }
            let e = effective_cutoff(&sigma, 1e-12).unwrap();
            at_cutoff[k] = solver.solve(&f, e).unwrap().rel_residual;
            let positions: Vec<usize> = (1..=sigma.len()).filter(|&p| sigma[p - 1] > 0.0).collect();
            let sweep = sweep_with(&solver, &f, &positions).unwrap();
            if sweep_shape_ok(&sweep.entries.iter().map(|e| e.1).collect::<Vec<_>>()) {
                s.shape_ok[k] += 1;
            }
        }
        if s.h_ad.last() > s.h_fd.last() {
            s.order_ok += 1;
        }
        if at_cutoff[0] < at_cutoff[1] {
            s.residual_ok += 1;
        }
    }
    s
}

/// Non-increasing (within tolerance) up to the minimum, then a clear rise.
fn sweep_shape_ok(r: &[f64]) -> bool {
    let (imin, &rmin) = r
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let descending = r[..=imin].windows(2).all(|w| w[1] <= w[0] * (1.0 + SWEEP_MONOTONE_TOL));
    let rises = r[imin..].iter().cloned().fold(0.0, f64::max) > SWEEP_RISE_FACTOR * rmin;
    descending && rises
}

fn criterion3(s: &SweepStats, secs: f64) -> Outcome {
    let (ha, hf) = (mean(&s.h_ad), mean(&s.h_fd));
    let pass = (ha - H_AD_PAPER).abs() <= ENTROPY_TOL
        && (hf - H_FD_PAPER).abs() <= ENTROPY_TOL
        && s.order_ok >= 9
        && secs < RUNTIME_3_S;
    outcome(
        pass,
        format!(
            "mean H_AD {ha:.4} (target {H_AD_PAPER}±{ENTROPY_TOL}), mean H_FD {hf:.4} (target {H_FD_PAPER}±{ENTROPY_TOL}), H_AD > H_FD in {}/{SEEDS}; {secs:.1}s",
            s.order_ok
        ),
    )
}

fn criterion5(s: &SweepStats) -> Outcome {
    outcome(
        s.shape_ok == [SEEDS as usize; 2] && s.residual_ok >= 9,
        format!(
            "descend-then-rise shape: AD {}/{SEEDS}, FD {}/{SEEDS} seeds; AD < FD residual at e(1e-12) in {}/{SEEDS}",
            s.shape_ok[0], s.shape_ok[1], s.residual_ok
        ),
    )
}

fn criterion4() -> Outcome {
    let t = Instant::now();
    let mut rows = Vec::new();
    for &m in &FIG1_SIZES {
        // Large sizes are dominated by the SVD; fewer seeds keep the budget.
        let seeds = if m >= 1000 { 3 } else if m >= 500 { 5 } else { SEEDS };
        let (mut ha, mut hf) = (vec![], vec![]);
        for seed in 0..seeds {
            let c = rfm_case(ProblemId::Poisson1d, m, Activation::Sin, seed);
            ha.push(truncated_entropy(&residual_sigma(&c.ad), 1e-12).unwrap().unwrap_or(f64::NAN));
            hf.push(truncated_entropy(&residual_sigma(&c.fd), 1e-12).unwrap().unwrap_or(f64::NAN));
        }
        rows.push((m, mean(&ha), mean(&hf)));
    }
    let secs = t.elapsed().as_secs_f64();
    let dec = |k: usize| rows.windows(2).all(|w| if k == 1 { w[1].1 < w[0].1 } else { w[1].2 < w[0].2 });
    let above = rows.iter().all(|r| r.1 > r.2);
    let table: Vec<String> = rows.iter().map(|r| format!("M={} AD {:.4} FD {:.4}", r.0, r.1, r.2)).collect();
    outcome(
        dec(1) && dec(2) && above && secs < RUNTIME_4_S,
        format!("{}; {secs:.1}s", table.join(", ")),
    )
}

fn two_layer_poisson(seed: u64, mode: DiffMode, lr: f64, steps: usize, record: usize) -> TrainHistory {
    let p = make_problem(ProblemId::Poisson1d);
    let grid = make_grid(&p, &[100]).unwrap();
    let mut m = TwoLayerModel::new(sample_features(100, 1, 1.0, seed, Activation::Sin).unwrap(), Precision::Single);
    let mut cfg = TrainConfig::new(mode, Optimizer::Gd, lr, steps);
    cfg.record_interval = record;
    train(&mut m, &p, &grid, &cfg).unwrap()
}

fn criterion6() -> Outcome {
    let t = Instant::now();
    let (mut early_ok, mut late_ok) = (0, 0);
    let mut finals = Vec::new();
    for seed in 0..SEEDS {
        let ad = two_layer_poisson(seed, DiffMode::Ad, TRAIN_LR, TRAIN_STEPS, 10);
        let fd = two_layer_poisson(seed, DiffMode::fd(FdScheme::Central2, 0.02), TRAIN_LR, TRAIN_STEPS, 10);
        let close = ad
            .records
            .iter()
            .zip(&fd.records)
            .take_while(|(a, _)| a.step <= TRAIN_EARLY_STEPS)
            .all(|(a, f)| (a.rel_train_err - f.rel_train_err).abs() <= TRAIN_EARLY_REL_TOL * f.rel_train_err);
        if close {
            early_ok += 1;
        }
        let (ea, ef) = (ad.last().unwrap().rel_train_err, fd.last().unwrap().rel_train_err);
        if ea < ef {
            late_ok += 1;
        }
        finals.push(format!("{ea:.3e}/{ef:.3e}"));
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        early_ok == SEEDS as usize && late_ok >= 8 && secs < RUNTIME_6_S,
        format!(
            "first {TRAIN_EARLY_STEPS} steps within {TRAIN_EARLY_REL_TOL} in {early_ok}/{SEEDS}; AD < FD at step {TRAIN_STEPS} in {late_ok}/{SEEDS} (AD/FD {}); {secs:.1}s",
            finals.join(" ")
        ),
    )
}

fn criterion7() -> Outcome {
    let p = make_problem(ProblemId::Poisson1d);
    let grid = make_grid(&p, &[50]).unwrap();
    let m = TwoLayerModel::new(sample_features(40, 1, 1.0, 11, Activation::Sin).unwrap(), Precision::Double);
    let mut opts = AssemblyOptions::new(1.0);
    opts.scaling = LossScaling::Mean;
    let kernel = |mode: DiffMode| {
        let spec = LossSpec::new(&p, &mode, &grid, &opts).unwrap();
        kernel_snapshot(&m, &spec, 1e-5).unwrap().kernel()
    };
    let g_ad = kernel(DiffMode::Ad);
    let gap = |h: f64| kernel(DiffMode::fd(FdScheme::Central2, h)).sub(&g_ad).unwrap().frobenius_norm();
    let ratios: Vec<f64> = [(0.04, 0.02), (0.02, 0.01)].iter().map(|&(h1, h2)| gap(h1) / gap(h2)).collect();
    let ok = ratios.iter().all(|r| (r - KERNEL_RATIO).abs() <= KERNEL_RATIO_TOL * KERNEL_RATIO);
    outcome(ok, format!("ratios {:.4} (h 0.04/0.02), {:.4} (h 0.02/0.01); target 4±10%", ratios[0], ratios[1]))
}

fn criterion8() -> Outcome {
    // Multi-mode flow on an RFM system, inside a band after the top modes have decayed.
    let c = rfm_case(ProblemId::Poisson1d, 60, Activation::Sin, 5);
    let a = c.ad.residual_matrix();
    let f = c.ad.residual_rhs();
    let s = svd(&a).unwrap();
    let lmax = s.sigma[0] * s.sigma[0];
    let lr = 1e-4 / lmax;
    let steps = 400_000;
    let flow = frozen_kernel_flow(&a, &f, lr, steps, 1000).unwrap();
    let (band_a, band_b) = (1e-6, 1e-3);
    let band_losses = flow.band_losses(band_a, band_b).unwrap();
    let sample_times: Vec<f64> = flow.samples.iter().map(|s| s.time).collect();
    let t_star = default_t_star(&flow.samples, band_a, band_b, 0.01).unwrap().unwrap_or(0.0);
    let t_end = *sample_times.last().unwrap();
    let report = theorem1_envelopes(&sample_times, &band_losses, &flow.samples, band_a, band_b, t_star, t_end, 1e-9);
    let (env_ok, env_detail) = match report {
        Ok(r) => (
            1.0 - r.violation_fraction >= ENVELOPE_MIN_FRACTION,
            format!("inside envelopes {:.1}% of {} samples in [{:.3e}, {:.3e}]", 100.0 * (1.0 - r.violation_fraction), r.times.len(), r.t_star, r.t_end),
        ),
        Err(e) => (false, format!("envelope error: {e}")),
    };
    // Single eigenmode.
    let k = 2;
    let f1 = s.u.column(k);
    let lambda = s.sigma[k] * s.sigma[k];
    let flow1 = frozen_kernel_flow(&a, &f1, lr, 20_000, 1).unwrap();
    let worst = flow1
        .times
        .iter()
        .zip(&flow1.losses)
        .map(|(t, l)| (l / (-2.0 * lambda * t).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(
        env_ok && worst < SINGLE_MODE_TOL,
        format!("{env_detail}; single mode max rel dev from exp(-2λt) {worst:.2e} (< {SINGLE_MODE_TOL})"),
    )
}

fn richardson(mut g: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    let mut d = |h: f64| (g(x + h) - g(x - h)) / (2.0 * h);
    let fine = d(h / 2.0);
    (4.0 * fine - d(h)) / 3.0
}

fn criterion9() -> Outcome {
    let net = DeepNetwork::sample(&[1, 50, 50, 50, 1], Activation::Tanh, InitScheme::FanIn, 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_jet = 0.0f64;
    for _ in 0..20 {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let jet = jet_propagate(&net, [x, 0.0], axis_direction(0), 2).unwrap();
        let d1 = richardson(|y| net.forward(&[y, 0.0]), x, 1e-2);
        let d2 = richardson(|y| richardson(|z| net.forward(&[z, 0.0]), y, 1e-2), x, 1e-2);
        for (ad, num) in [(jet.derivative(1), d1), (jet.derivative(2), d2)] {
            worst_jet = worst_jet.max((ad - num).abs() / num.abs().max(1e-3));
        }
    }
    // Parameter gradients of the AD and FD losses.
    let p = make_problem(ProblemId::Poisson1d);
    let grid = make_grid(&p, &[12]).unwrap();
    let mut opts = AssemblyOptions::new(1.0);
    opts.scaling = LossScaling::Mean;
    let mut worst_grad = 0.0f64;
    for mode in [DiffMode::Ad, DiffMode::fd(FdScheme::Central2, grid.spacing[0])] {
        let spec = LossSpec::new(&p, &mode, &grid, &opts).unwrap();
        let mut models: Vec<Box<dyn PinnModel>> = vec![
            Box::new(DeepNetwork::sample(&[1, 6, 6, 6, 1], Activation::Tanh, InitScheme::FanIn, 3).unwrap()),
            Box::new(TwoLayerModel::new(sample_features(8, 1, 1.0, 3, Activation::Sin).unwrap(), Precision::Double)),
        ];
        for m in models.iter_mut() {
            let (_, g) = loss_and_grad(m.as_ref(), &spec);
            let theta = m.params();
            let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let loss = |m: &dyn PinnModel| m.residuals(&spec).iter().map(|r| r * r).sum::<f64>();
            for i in 0..theta.len() {
                let num = richardson(
                    |v| {
                        let mut t = theta.clone();
                        t[i] = v;
                        m.set_params(&t).unwrap();
                        loss(m.as_ref())
                    },
                    theta[i],
                    1e-3,
                );
                worst_grad = worst_grad.max((num - g[i]).abs() / scale);
            }
            m.set_params(&theta).unwrap();
        }
    }
    outcome(
        worst_jet < JET_REL_TOL && worst_grad < GRAD_REL_TOL,
        format!("jet max rel err {worst_jet:.2e}; parameter gradient max rel err {worst_grad:.2e} (both < 1e-6)"),
    )
}

fn entropy_log2(values: &[f64]) -> f64 {
    let s: f64 = values.iter().sum();
    let h: f64 = values.iter().map(|v| v / s).filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum();
    h / (values.len() as f64).log2()
}

fn criterion10() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    // Parseval on a kernel eigenbasis.
    let b = DenseMatrix::from_fn(12, 12, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
    let g = b.outer_gram();
    let r: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
    let comp = residual_eigendecomposition(&g, &r).unwrap();
    let parseval = (comp.total_energy() - dot(&r, &r)).abs() / dot(&r, &r);
    ok &= parseval < IDENTITY_TOL;
    notes.push(format!("Parseval {parseval:.1e}"));
    // Tail energy: squared truncated residual equals the energy outside the kept singular directions.
    let c = rfm_case(ProblemId::Poisson1d, 40, Activation::Sin, 1);
    let a = c.ad.residual_matrix();
    let f = c.ad.residual_rhs();
    let solver = TruncatedSolver::new(&a).unwrap();
    let u = &solver.svd().u;
    let coeffs: Vec<f64> = (0..u.cols()).map(|i| dot(&u.column(i), &f)).collect();
    let ff = dot(&f, &f);
    let mut tail_worst = 0.0f64;
    for p in [1, 5, 10, 20] {
        let res = solver.solve(&f, p).unwrap().rel_residual * norm2(&f);
        let kept: f64 = coeffs[..p].iter().map(|c| c * c).sum();
        tail_worst = tail_worst.max((res * res - (ff - kept)).abs() / ff);
    }
    ok &= tail_worst < IDENTITY_TOL;
    notes.push(format!("tail energy {tail_worst:.1e}"));
    // Entropy invariances.
    let v = [5.0, 3.0, 2.5, 0.7, 0.01];
    let h = normalized_entropy(&v).unwrap();
    let scaled: Vec<f64> = v.iter().map(|x| x * 8.0).collect();
    let scale_exact = normalized_entropy(&scaled).unwrap() == h;
    let base_dev = (entropy_log2(&v) - h).abs();
    ok &= scale_exact && base_dev < 1e-15;
    notes.push(format!("scale-exact {scale_exact}, base dev {base_dev:.1e}"));
    let flat = normalized_entropy(&[3.0; 7]).unwrap();
    ok &= (flat - 1.0).abs() < FLAT_TOL;
    let h211 = normalized_entropy(&[2.0, 1.0, 1.0]).unwrap();
    ok &= (h211 - H_DIAG_211).abs() < H_DIAG_211_TOL;
    notes.push(format!("flat dev {:.1e}, H(2,1,1) {h211:.6}", (flat - 1.0).abs()));
    // Eigenvalues of a diagonal matrix feed the same entropy.
    let d = sym_eig(&DenseMatrix::from_diag(&[2.0, 1.0, 1.0])).unwrap();
    ok &= (normalized_entropy(&d.eigenvalues).unwrap() - h211).abs() < 1e-15;
    outcome(ok, notes.join("; "))
}

fn train_pair(
    problem: &PdeProblem,
    grid: &Grid,
    modes: &[DiffMode],
    build: &dyn Fn() -> Box<dyn PinnModel>,
    opt: Optimizer,
    lr: f64,
    steps: usize,
) -> Vec<TrainHistory> {
    modes
        .iter()
        .map(|mode| {
            let mut m = build();
            let mut cfg = TrainConfig::new(*mode, opt, lr, steps);
            cfg.lambda = problem.lambda_default;
            cfg.record_interval = steps / 10;
            train(m.as_mut(), problem, grid, &cfg).unwrap()
        })
        .collect()
}

fn criterion11() -> Outcome {
    let t = Instant::now();
    let gap = |id: ProblemId, m: usize, a: f64, seeds: u64| {
        let g: Vec<f64> = (0..seeds)
            .map(|seed| {
                let c = rfm_case(id, m, Activation::Sin, seed);
                let h = |s: &AssembledSystem| truncated_entropy(&residual_sigma(s), a).unwrap().unwrap_or(0.0);
                h(&c.ad) - h(&c.fd)
            })
            .collect();
        mean(&g)
    };
    let g_bh = gap(ProblemId::Biharmonic1d, 500, 1e-13, 3);
    let g_p = gap(ProblemId::Poisson1d, 100, 1e-12, SEEDS);
    // Biharmonic NN curve.
    let bh = make_problem(ProblemId::Biharmonic1d);
    let grid = make_grid(&bh, &[64]).unwrap();
    let hist = train_pair(
        &bh,
        &grid,
        &[DiffMode::Ad, fd_mode(&bh, &grid)],
        // Networks are trained in float, as in the paper's setup.
        &|| Box::new(TwoLayerModel::new(sample_features(100, 1, 1.0, 0, Activation::Sin).unwrap(), Precision::Single)),
        Optimizer::Gd,
        BIHARM_NN_LR,
        BIHARM_NN_STEPS,
    );
    let below = hist[0]
        .records
        .iter()
        .zip(&hist[1].records)
        .skip(1)
        .filter(|(a, f)| a.rel_train_err < f.rel_train_err)
        .count();
    let curve_ok = below == hist[0].records.len() - 1 && hist[0].diverged_at.is_none() && hist[1].diverged_at.is_none();
    // Allen-Cahn with the deep network.
    let ac = allen_cahn(0.1);
    let grid = make_grid(&ac, &[100]).unwrap();
    let mut ac_ok = 0;
    for seed in 0..SEEDS {
        let h = train_pair(
            &ac,
            &grid,
            &[DiffMode::Ad, fd_mode(&ac, &grid)],
            &|| Box::new(DeepNetwork::sample(&[1, 50, 50, 50, 1], Activation::Tanh, InitScheme::FanIn, seed).unwrap()),
            Optimizer::Adam,
            AC_LR,
            AC_STEPS,
        );
        if h[0].last().unwrap().rel_train_err <= h[1].last().unwrap().rel_train_err {
            ac_ok += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        g_bh > g_p && curve_ok && ac_ok >= 8,
        format!(
            "entropy gap biharmonic {g_bh:.4} vs Poisson {g_p:.4}; biharmonic AD below FD at {below}/{} records (final {:.3e}/{:.3e}); Allen-Cahn AD <= FD in {ac_ok}/{SEEDS}; {secs:.1}s",
            hist[0].records.len() - 1,
            hist[0].last().unwrap().rel_train_err,
            hist[1].last().unwrap().rel_train_err
        ),
    )
}

fn criterion12() -> Outcome {
    let t = Instant::now();
    let p = make_problem(ProblemId::Poisson1d);
    let grid = make_grid(&p, &[100]).unwrap();
    let h = grid.spacing[0];
    let modes = [DiffMode::Ad, DiffMode::fd(FdScheme::Central2, h), DiffMode::fd(FdScheme::FivePoint4, h)];
    let mut ok = 0;
    let mut finals = Vec::new();
    for seed in 0..SEEDS {
        let hist = train_pair(
            &p,
            &grid,
            &modes,
            &|| Box::new(DeepNetwork::sample(&[1, 50, 50, 50, 1], Activation::Tanh, InitScheme::FanIn, seed).unwrap()),
            Optimizer::Adam,
            DEEP_LR,
            DEEP_STEPS,
        );
        let e: Vec<f64> = hist.iter().map(|h| h.last().unwrap().rel_l2_err).collect();
        if e[0] <= e[1] && e[0] <= e[2] {
            ok += 1;
        }
        finals.push(format!("{:.2e}/{:.2e}/{:.2e}", e[0], e[1], e[2]));
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        ok >= 7,
        format!(
            "(qualitative) AD L2 <= both FD variants in {ok}/{SEEDS} (AD/central2/five_point4 {}); {secs:.1}s",
            finals.join(" ")
        ),
    )
}

fn main() {
    let filter: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |n: usize| filter.as_ref().is_none_or(|f| f.contains(&n));
    let mut failures = 0;
    let mut report = |n: usize, o: Outcome| {
        if !o.pass {
            failures += 1;
        }
        println!("criterion {n:>2}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    for n in 1..=12 {
        if !wanted(n) {
            continue;
        }
        let o = match n {
            1 => criterion1(),
            2 => criterion2(),
            3 | 5 => {
                if n == 5 && wanted(3) {
                    continue;
                }
                let t = Instant::now();
                let s = fig3_stats();
                let secs = t.elapsed().as_secs_f64();
                if wanted(3) {
                    report(3, criterion3(&s, secs));
                }
                if wanted(5) {
                    report(5, criterion5(&s));
                }
                continue;
            }
            4 => criterion4(),
            6 => criterion6(),
            7 => criterion7(),
            8 => criterion8(),
            9 => criterion9(),
            10 => criterion10(),
            11 => criterion11(),
            _ => criterion12(),
        };
        report(n, o);
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
