//! Solver contracts checked against independent oracles: the MVDR closed
//! form, finite differences and the penalised-objective ordering.

mod common;

use beamshape::array::split_manifold;
use beamshape::beamformers::{capon_closed_form, sparse_capon};
use beamshape::evaluation::{Draw, GridSpec};
use beamshape::linalg::CMat;
use beamshape::solver::{
    admm_solve, smooth_solve, PenaltyKind, PenaltyTerm, ProblemSpec, SmoothProblem,
};
use beamshape::{Options, Scenario, SolverStatus};
use common::*;
use rand::Rng;

fn random_operator(r: &mut rand_chacha::ChaCha8Rng, m: usize, q: usize) -> CMat<f64> {
    let cols: Vec<Vec<beamshape::Complex64>> = (0..q).map(|_| random_vec(r, m, 1.0)).collect();
    CMat::from_columns(&cols)
}

#[test]
fn zero_weight_admm_and_smooth_match_closed_form() {
    let mut r = rng(21);
    let opts = Options::default();
    for i in 0..100 {
        let m = 8;
        let rr = random_hpd(&mut r, m, 12, 0.05);
        let a = random_vec(&mut r, m, 1.0);
        let want = mvdr_oracle(&rr, &a);
        let g = random_operator(&mut r, m, 5);

        let convex = ProblemSpec::new(
            rr.clone(),
            a.clone(),
            vec![PenaltyTerm::new(g.clone(), PenaltyKind::L1, 0.0).unwrap()],
        )
        .unwrap();
        let res = admm_solve(&convex, &opts).unwrap();
        assert!(rel_err(&res.w, &want) < 1e-6, "admm instance {i}: {}", rel_err(&res.w, &want));

        let smooth = ProblemSpec::new(
            rr.clone(),
            a.clone(),
            vec![PenaltyTerm::new(g, PenaltyKind::QuarticUnit, 0.0).unwrap()],
        )
        .unwrap();
        let start: Vec<_> = a.iter().map(|v| v / norm(&a).powi(2)).collect();
        let res = smooth_solve(&smooth, &opts, &start).unwrap();
        assert!(rel_err(&res.w, &want) < 1e-6, "smooth instance {i}: {}", rel_err(&res.w, &want));
    }
}

#[test]
fn identity_quadratic_gives_minimum_norm_point() {
    let mut r = rng(22);
    let a = random_vec(&mut r, 6, 1.0);
    let spec = ProblemSpec::new(CMat::identity(6), a.clone(), vec![]).unwrap();
    let res = admm_solve(&spec, &Options::default()).unwrap();
    let want: Vec<_> = a.iter().map(|v| v / norm(&a).powi(2)).collect();
    assert!(rel_err(&res.w, &want) < 1e-9);
}

fn reference_smooth_spec(
    r: &mut rand_chacha::ChaCha8Rng,
    gamma: f64,
) -> ProblemSpec<f64> {
    let s = Scenario::reference().with_seed(r.random());
    let manifold = GridSpec::default().build::<f64>(&s).unwrap();
    let split = split_manifold(&manifold, 0.0, 15).unwrap();
    let draw = Draw::new(&s).unwrap();
    ProblemSpec::new(
        draw.covariance.matrix.clone(),
        draw.steering.clone(),
        vec![
            PenaltyTerm::new(split.mainlobe.clone(), PenaltyKind::QuarticUnit, gamma).unwrap(),
            PenaltyTerm::new(split.sidelobe.clone(), PenaltyKind::SquaredL2, gamma).unwrap(),
        ],
    )
    .unwrap()
}

#[test]
fn smooth_gradient_matches_finite_differences() {
    let mut r = rng(23);
    for i in 0..20 {
        let gamma = 10f64.powf(r.random_range(-2.0..1.0));
        let spec = reference_smooth_spec(&mut r, gamma);
        let p = SmoothProblem::new(&spec).unwrap();
        let z = random_vec(&mut r, p.dim(), 0.05);
        let g = p.gradient(&z);
        let fd = fd_gradient(&|x| p.objective(x), &z, 1e-5);
        let err = rel_err(&g, &fd);
        assert!(err < 1e-5, "instance {i}: relative gradient error {err:e}");
    }
}

#[test]
fn smooth_objective_is_monotone_and_stationary() {
    let mut r = rng(24);
    for _ in 0..5 {
        let spec = reference_smooth_spec(&mut r, 0.1);
        let start = capon_closed_form(
            &beamshape::array::CovarianceEstimate::known(spec.quadratic.clone()).unwrap(),
            &spec.constraint_vector,
        )
        .unwrap()
        .w;
        let opts = Options {
            record_trace: true,
            ..Options::default()
        };
        let res = smooth_solve(&spec, &opts, &start).unwrap();
        let trace = res.trace.as_ref().unwrap();
        for pair in trace.windows(2) {
            assert!(pair[1].objective <= pair[0].objective, "{pair:?}");
        }
        if res.status == SolverStatus::Converged {
            assert!(res.optimality_residual <= opts.smooth_grad_tol);
        }
        assert!(res.objective <= spec.objective(&start) + 1e-9 * spec.objective(&start).abs());
        assert!(res.constraint_residual <= 1e-9);
    }
}

#[test]
fn convex_certificate_dominance_and_feasibility() {
    let mut r = rng(25);
    let opts = Options::default();
    let kinds = [
        PenaltyKind::L1,
        PenaltyKind::Linf,
        PenaltyKind::GroupL2 {
            groups: vec![vec![0, 1], vec![2, 3, 4], vec![5]],
        },
    ];
    let mut converged = 0;
    for i in 0..30 {
        let m = 8;
        let rr = random_hpd(&mut r, m, 20, 0.1);
        let a = random_vec(&mut r, m, 1.0);
        let g = random_operator(&mut r, m, 6);
        let kind = kinds[i % kinds.len()].clone();
        let gamma = 10f64.powf(r.random_range(-2.0..0.5));
        let spec = ProblemSpec::new(
            rr.clone(),
            a.clone(),
            vec![
                PenaltyTerm::new(g, kind, gamma).unwrap(),
                PenaltyTerm::new(CMat::identity(m), PenaltyKind::SquaredL2, 0.01).unwrap(),
            ],
        )
        .unwrap();
        let res = admm_solve(&spec, &opts).unwrap();
        assert!(distortion(&res.w, &a) <= 1e-9);
        let capon = mvdr_oracle(&rr, &a);
        assert!(res.objective <= spec.objective(&capon) + 1e-9, "instance {i}");
        if res.status == SolverStatus::Converged {
            converged += 1;
            assert!(
                res.optimality_residual <= 10.0 * opts.tol_dual,
                "instance {i}: certificate {:e}",
                res.optimality_residual
            );
        }
    }
    assert!(converged >= 25, "only {converged}/30 instances converged");
}

#[test]
fn penalised_objective_grows_with_gamma() {
    // Sparse Capon on the reference draw: the optimal penalised objective is
    // nondecreasing in γ and ‖Aᴴw‖₁ is nonincreasing.
    let s = Scenario::reference();
    let manifold = GridSpec::default().build::<f64>(&s).unwrap();
    let draw = Draw::new(&s).unwrap();
    let opts = Options::default();
    let mut last_obj = f64::NEG_INFINITY;
    let mut last_l1 = f64::INFINITY;
    for gamma in [0.01, 0.1, 1.0, 10.0] {
        let spec = ProblemSpec::new(
            draw.covariance.matrix.clone(),
            draw.steering.clone(),
            vec![PenaltyTerm::new(manifold.matrix.clone(), PenaltyKind::L1, gamma).unwrap()],
        )
        .unwrap();
        let res = admm_solve(&spec, &opts).unwrap();
        assert!(res.objective >= last_obj, "gamma {gamma}: {} < {last_obj}", res.objective);
        last_obj = res.objective;

        if gamma <= 1.0 {
            let w = sparse_capon(&draw.covariance, &manifold, &draw.steering, gamma, &opts).unwrap();
            let l1_gain = l1(&manifold.gains(&w.w));
            assert!(l1_gain <= last_l1 * (1.0 + 1e-6), "gamma {gamma}: {l1_gain} > {last_l1}");
            last_l1 = l1_gain;
        }
    }
}
