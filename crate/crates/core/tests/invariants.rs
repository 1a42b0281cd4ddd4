//! Solver, analysis and catalog invariants on the canned problems.

mod common;

use common::{rng, v};
use fwheb::analysis::{
    envelope_check, fit_rate, lemma1_check, lemma2_check, theorem_constants, HebSpec, OptSet, RateModel, RATE_FLOOR,
};
use fwheb::geometry::{FeasibleSet, MEMBERSHIP_TOL};
use fwheb::harness::problem_envelope;
use fwheb::objectives::Objective;
use fwheb::problems::{kkt_report, make_problem, GroundTruth, Problem, ProblemKind};
use fwheb::solver::{fw_solve, SolverConfig, StepRule, Trace};
use fwheb::Vector;

fn run(problem: &Problem, rule: StepRule, iters: usize) -> Trace {
    fw_solve(problem, &SolverConfig::new(rule, iters).record_points(true), None).unwrap()
}

fn all_problems(dim: usize) -> Vec<Problem> {
    ProblemKind::ALL
        .iter()
        .map(|k| make_problem(*k, dim.max(k.default_dim()), 0).unwrap())
        .collect()
}

#[test]
fn iterates_stay_feasible_and_descend() {
    for dim in [2, 5, 20] {
        for problem in all_problems(dim) {
            for rule in [StepRule::OptionI, StepRule::OptionII] {
                let trace = run(&problem, rule, 2000);
                for x in trace.points.as_ref().unwrap() {
                    assert!(problem.set.contains(x, MEMBERSHIP_TOL).unwrap());
                }
                for w in trace.records.windows(2) {
                    assert!(
                        w[1].f <= w[0].f + 1e-12 * (1.0 + w[0].f.abs()),
                        "{:?} {rule}: ascent at t = {}",
                        problem.name,
                        w[1].t
                    );
                }
            }
        }
    }
}

#[test]
fn smoothness_model_bounds_every_step() {
    for problem in all_problems(3) {
        let l_f = problem.smoothness_bound();
        for rule in [StepRule::OptionI, StepRule::OptionII, StepRule::Fixed] {
            let trace = run(&problem, rule, 2000);
            for w in trace.records.windows(2) {
                let (now, next) = (&w[0], &w[1]);
                let model = now.f - now.eta * now.dual_gap + 0.5 * now.eta * now.eta * l_f * now.dir_sq_norm;
                assert!(
                    next.f <= model + 1e-9 * (1.0 + now.f.abs()),
                    "{:?} {rule} t = {}",
                    problem.name,
                    now.t
                );
            }
        }
    }
}

#[test]
fn dual_gap_certifies_and_base_case_holds() {
    for problem in all_problems(4) {
        let gt = problem.ground_truth.clone().unwrap();
        for rule in [StepRule::OptionI, StepRule::OptionII] {
            let trace = run(&problem, rule, 500);
            let scale = 1.0 + trace.records[0].f.abs();
            for r in &trace.records {
                assert!(r.dual_gap >= r.h.unwrap() - 1e-9 * scale);
            }
            let h1 = trace.records[1].h.unwrap();
            assert!(h1 <= gt.l_f * gt.diameter * gt.diameter / 2.0 + 1e-9 * scale);
        }
    }
}

#[test]
fn options_agree_on_quadratics() {
    for kind in [
        ProblemKind::GradBelow,
        ProblemKind::ScInterior,
        ProblemKind::LevelsetKkt,
    ] {
        let problem = make_problem(kind, kind.default_dim(), 0).unwrap();
        let to_tol = |rule| {
            let trace = fw_solve(&problem, &SolverConfig::new(rule, 1_000_000).stop_gap(1e-8), None).unwrap();
            assert!(trace.final_gap() < 1e-8);
            trace.iterations().max(1) as f64
        };
        let (n1, n2) = (to_tol(StepRule::OptionI), to_tol(StepRule::OptionII));
        assert!(n1 / n2 <= 4.0 && n2 / n1 <= 4.0, "{kind}: {n1} vs {n2}");
    }
}

#[test]
fn linear_objective_finishes_in_one_step() {
    let problem = Problem::new(
        Objective::linear(vec![1.0, 0.0]).unwrap(),
        FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap(),
        None,
    )
    .unwrap();
    let trace = fw_solve(&problem, &SolverConfig::new(StepRule::OptionI, 10), None).unwrap();
    assert_eq!(trace.records[0].eta, 1.0);
    assert!((&trace.final_point - v(&[-1.0, 0.0])).norm() < 1e-15);
    assert!(trace.records[1].dual_gap.abs() < 1e-15);
}

#[test]
fn grad_below_contracts_geometrically() {
    let problem = make_problem(ProblemKind::GradBelow, 2, 0).unwrap();
    let trace = run(&problem, StepRule::OptionI, 200);
    for w in trace.records.windows(2) {
        let (h0, h1) = (w[0].h.unwrap(), w[1].h.unwrap());
        if h0 > 0.0 {
            assert!(h1 / h0 <= 0.875 + 1e-9, "t = {}: ratio {}", w[1].t, h1 / h0);
        } else {
            assert!(h1 <= 1e-15);
        }
    }
    let ii = fw_solve(
        &problem,
        &SolverConfig::new(StepRule::OptionII, 400).stop_gap(1e-10),
        None,
    )
    .unwrap();
    assert!(ii.final_gap() < 1e-10 && ii.iterations() < 400);
}

#[test]
fn contraction_check_passes_on_strongly_convex_instances() {
    for problem in all_problems(2).into_iter().filter(|p| p.alpha() > 0.0) {
        let gt = problem.ground_truth.clone().unwrap();
        for rule in [StepRule::OptionI, StepRule::OptionII] {
            let trace = run(&problem, rule, 2000);
            let report = lemma2_check(&trace, gt.alpha, gt.l_f, None).unwrap();
            assert!(report.passed(), "{:?} {rule}: {report:?}", problem.name);
        }
    }
}

#[test]
fn envelope_holds_on_every_canned_problem() {
    for problem in all_problems(3) {
        let Some(env) = problem_envelope(&problem).unwrap() else {
            assert_eq!(problem.alpha(), 0.0);
            continue;
        };
        for rule in [StepRule::OptionI, StepRule::OptionII] {
            let report = envelope_check(&run(&problem, rule, 5000), &env).unwrap();
            assert!(report.passed(), "{:?} {rule}: {report:?}", problem.name);
        }
    }
}

#[test]
fn theorem_constants_on_theta_grid() {
    let mut last_first_term = -1.0;
    for i in 0..10 {
        let theta = i as f64 / 10.0;
        let tc = theorem_constants(theta, 1.0, 1.0, 1.0, 2.0).unwrap();
        let beta = 1.0 - theta;
        let first = (2.0 - 2f64.powf(beta)) / (2f64.powf(beta) - 1.0);
        assert!(tc.c_prime > 0.0);
        if theta > 0.0 {
            assert!(tc.k >= tc.c_prime && tc.c_prime > 1.0);
        } else {
            assert_eq!(tc.k, 1.0);
        }
        assert!(first > last_first_term);
        last_first_term = first;
    }
}

#[test]
fn gradient_bound_check_is_invariant_under_rescaling() {
    let base = make_problem(ProblemKind::ScInterior, 3, 0).unwrap();
    let mut r = rng(3);
    let points: Vec<Vector> = (0..2000).map(|_| base.set.sample_feasible(&mut r)).collect();
    let z = v(&[0.3, 0.0, 0.0]);
    for (theta, c) in [(0.5, std::f64::consts::SQRT_2), (0.5, 1.0), (0.3, 1.0)] {
        let heb = HebSpec::new(
            theta,
            c,
            OptSet::Point {
                x: z.as_slice().to_vec(),
            },
            0.0,
        )
        .unwrap();
        let reference = lemma1_check(&points, &heb, &base).unwrap().violations;
        for lambda in [0.25, 4.0] {
            let a: Vec<Vec<f64>> = (0..3)
                .map(|i| (0..3).map(|j| if i == j { lambda } else { 0.0 }).collect())
                .collect();
            let b: Vec<f64> = z.iter().map(|zi| -lambda * zi).collect();
            let scaled = Problem::new(Objective::quadratic(a, b).unwrap(), base.set.clone(), None).unwrap();
            let shift = 0.5 * lambda * z.norm_squared();
            let heb_scaled = HebSpec::new(
                theta,
                c * lambda.powf(-theta),
                OptSet::Point {
                    x: z.as_slice().to_vec(),
                },
                -shift,
            )
            .unwrap();
            let count = lemma1_check(&points, &heb_scaled, &scaled).unwrap().violations;
            assert_eq!(count, reference, "theta {theta} c {c} lambda {lambda}");
        }
    }
}

#[test]
fn gradient_bound_check_examples() {
    let levelset = make_problem(ProblemKind::LevelsetKkt, 2, 0).unwrap();
    let heb = levelset.heb().unwrap();
    let origin = lemma1_check(&[v(&[0.0, 0.0])], &heb, &levelset).unwrap();
    assert!(origin.passed());
    // |grad| = 2 against 1.5^(1/2)
    assert!((origin.worst - (1.5f64.sqrt() - 2.0)).abs() < 1e-12);
    let at_opt = lemma1_check(&[v(&[1.0, 0.0])], &heb, &levelset).unwrap();
    assert!(at_opt.passed());
}

#[test]
fn simplex_zigzag_fits_an_inverse_t_rate() {
    let problem = make_problem(ProblemKind::SimplexControl, 3, 0).unwrap();
    let fit = fit_rate(&run(&problem, StepRule::OptionI, 10_000), 0.5, RATE_FLOOR).unwrap();
    assert_eq!(fit.model, RateModel::Power);
    assert!((-1.4..=-0.7).contains(&fit.power_exponent));
}

#[test]
fn canned_ground_truth_is_consistent() {
    for problem in all_problems(3) {
        let gt: GroundTruth = problem.ground_truth.clone().unwrap();
        let x_star = Vector::from_vec(match &gt.optset {
            OptSet::Point { x } => x.clone(),
        });
        assert!(problem.set.contains(&x_star, MEMBERSHIP_TOL).unwrap());
        assert!((problem.objective.value(&x_star).unwrap() - gt.f_star).abs() <= 1e-9);
        let mut r = rng(17);
        let mut min_grad = f64::INFINITY;
        for _ in 0..10_000 {
            let x = problem.set.sample_feasible(&mut r);
            assert!(problem.objective.value(&x).unwrap() >= gt.f_star - 1e-9);
            min_grad = min_grad.min(problem.objective.gradient(&x).unwrap().norm());
        }
        if let Some(g) = gt.grad_min {
            assert!(min_grad >= g - 1e-9, "{:?}: {min_grad}", problem.name);
        }
        if gt.alpha > 0.0 {
            assert!(problem.set.certify_strong_convexity(gt.alpha, 10_000, 1).unwrap().pass);
        }
        assert!(gt.l_f >= problem.objective.smoothness_bound(&problem.set) - 1e-12);
    }
    let kkt = kkt_report(&make_problem(ProblemKind::LevelsetKkt, 2, 0).unwrap()).unwrap();
    assert_eq!(kkt.lambda_star, 0.5);
    assert!(kkt.complementary_slackness.abs() <= 1e-12);
    assert!(kkt.stationarity_residual <= 1e-12);
}
