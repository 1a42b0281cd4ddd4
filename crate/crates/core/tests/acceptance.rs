//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! per-criterion lines always reach the output.

mod common;

use std::fs;
use std::process::ExitCode;

use common::{random_set, rng, SET_KINDS};
use fwheb::analysis::{
    envelope_check, estimate_heb, fit_rate_between, least_squares, lemma1_check, lemma2_check, theorem_constants,
    RATE_FLOOR,
};
use fwheb::geometry::{unit_sphere, FeasibleSet};
use fwheb::harness::{run_suite, SuiteConfig};
use fwheb::problems::{kkt_report, make_problem, Problem, ProblemKind};
use fwheb::solver::{fw_solve, SolverConfig, StepRule, Trace};
use fwheb::Vector;
use rand::Rng;
use rayon::prelude::*;

const REL_TOL: f64 = 1e-9;
const OPTIONS: [StepRule; 2] = [StepRule::OptionI, StepRule::OptionII];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn canned(kind: ProblemKind) -> Problem {
    make_problem(kind, kind.default_dim(), 0).unwrap()
}

fn solve(problem: &Problem, rule: StepRule, iters: usize) -> Trace {
    fw_solve(problem, &SolverConfig::new(rule, iters), None).unwrap()
}

fn gaps(trace: &Trace) -> Vec<f64> {
    trace.records.iter().map(|r| r.h.unwrap()).collect()
}

/// Least-squares slope of `log h` on `log t` over the trailing half of the
/// records with `h` above the noise floor.
fn trailing_power_exponent(trace: &Trace) -> (f64, usize) {
    let usable: Vec<(f64, f64)> = trace
        .records
        .iter()
        .filter(|r| r.t >= 1 && r.h.unwrap() > RATE_FLOOR)
        .map(|r| ((r.t as f64).ln(), r.h.unwrap().ln()))
        .collect();
    let tail = &usable[usable.len() / 2..];
    if tail.len() < 2 {
        return (f64::NAN, tail.len());
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail.iter().copied().unzip();
    (least_squares(&xs, &ys).0, tail.len())
}

fn per_step_contraction() -> Outcome {
    let mut violations = 0;
    let mut runs = 0;
    for kind in ProblemKind::ALL {
        let problem = canned(kind);
        let gt = problem.ground_truth.clone().unwrap();
        if gt.alpha <= 0.0 {
            continue;
        }
        for rule in OPTIONS {
            let report = lemma2_check(&solve(&problem, rule, 10_000), gt.alpha, gt.l_f, None).unwrap();
            violations += report.violations;
            runs += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over {runs} runs of 10^4 iterations"),
    )
}

fn linear_branch() -> Outcome {
    let trace = solve(&canned(ProblemKind::GradBelow), StepRule::OptionI, 200);
    let h = gaps(&trace);
    let worst = h
        .iter()
        .enumerate()
        .map(|(t, ht)| ht - 0.875f64.powi(t as i32) * h[0] * (1.0 + REL_TOL))
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        worst <= 0.0,
        format!("max of h_t - 0.875^t h_0 (1 + 1e-9) over t <= 200: {worst:.3e}"),
    )
}

fn sublinear_envelope(kind: ProblemKind, theta: f64, c: f64, l_f: f64, max_exponent: f64) -> Outcome {
    let problem = canned(kind);
    let tc = theorem_constants(theta, c, 1.0, l_f, 2.0).unwrap();
    let envelope = tc.envelope();
    let mut pass = true;
    let mut parts = vec![format!("C = {:.4}, k = {:.4}", tc.c, tc.k)];
    for rule in OPTIONS {
        let trace = solve(&problem, rule, 100_000);
        let report = envelope_check(&trace, &envelope).unwrap();
        let (exponent, points) = trailing_power_exponent(&trace);
        pass &= report.passed() && exponent <= max_exponent;
        parts.push(format!(
            "{rule}: {} envelope violations, fitted exponent {exponent:.3} on {points} trailing points",
            report.violations
        ));
    }
    outcome(pass, parts.join("; "))
}

fn level_set_construction() -> Outcome {
    let problem = canned(ProblemKind::LevelsetKkt);
    let heb = problem.heb().unwrap();
    let mut r = rng(5);
    let points: Vec<Vector> = (0..10_000)
        .map(|i| {
            if i % 2 == 0 {
                problem.set.sample_boundary(&mut r)
            } else {
                problem.set.sample_feasible(&mut r)
            }
        })
        .collect();
    let report = lemma1_check(&points, &heb, &problem).unwrap();
    let kkt = kkt_report(&problem).unwrap();
    let pass = report.passed() && kkt.complementary_slackness.abs() <= 1e-12;
    outcome(
        pass,
        format!(
            "{} gradient-bound violations over 10^4 points; lambda* (g(x*) - r) = {:.1e}",
            report.violations, kkt.complementary_slackness
        ),
    )
}

fn heb_recovery() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [ProblemKind::ScInterior, ProblemKind::QuarticInterior] {
        let problem = canned(kind);
        let truth = problem.heb().unwrap();
        let est = estimate_heb(&problem, 10_000, 2024).unwrap();
        pass &= (est.theta_hat - truth.theta).abs() <= 0.05 && (est.c_hat - truth.c).abs() <= 0.1 * truth.c;
        parts.push(format!(
            "{kind}: theta_hat {:.4} (theta {}), c_hat {:.4} (c {:.4})",
            est.theta_hat, truth.theta, est.c_hat, truth.c
        ));
    }
    outcome(pass, parts.join("; "))
}

fn lmo_equivalence() -> Outcome {
    const GRADIENTS: usize = 1000;
    const SAMPLES: usize = 10_000;
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for kind in SET_KINDS {
        for dim in 2..=5 {
            let set = random_set(kind, dim, 31 * dim as u64);
            let d = set.diameter();
            let excess: Vec<f64> = (0..GRADIENTS)
                .into_par_iter()
                .map(|i| {
                    let mut r = rng(i as u64);
                    let g = unit_sphere(dim, &mut r).scale(r.random_range(0.01..100.0));
                    let y = set.lmo(&g).unwrap();
                    let brute = set.lmo_bruteforce(&g, SAMPLES, i as u64).unwrap();
                    (g.dot(&y) - g.dot(&brute)) / (g.norm() * d)
                })
                .collect();
            for e in excess {
                worst = worst.max(e);
                if e > 1e-9 {
                    failures += 1;
                }
            }
        }
    }
    outcome(
        failures == 0,
        format!("{failures} failures; worst normalised excess {worst:.3e} ({GRADIENTS} gradients x {SAMPLES} samples, 5 kinds, dims 2-5)"),
    )
}

fn certificate() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, set) in [
        ("ball", FeasibleSet::ball(vec![0.0; 3], 1.0).unwrap()),
        ("ellipsoid", random_set("ellipsoid", 3, 1)),
        ("level_set_quadratic", random_set("level_set_quadratic", 3, 2)),
        ("lp_ball", random_set("lp_ball", 3, 3)),
    ] {
        let alpha = set.strong_convexity_param();
        let ok = set.certify_strong_convexity(alpha, 10_000, 9).unwrap().pass;
        pass &= ok;
        parts.push(format!(
            "{name} alpha {alpha:.4} {}",
            if ok { "certified" } else { "rejected" }
        ));
    }
    let ball = FeasibleSet::ball(vec![0.0; 3], 1.0).unwrap();
    let over = ball.certify_strong_convexity(4.0, 10_000, 9).unwrap();
    let antipodal = over
        .counterexample
        .as_ref()
        .is_some_and(|p| (&p.x + &p.y).norm() < 1e-12);
    pass &= !over.pass && antipodal;
    parts.push(format!(
        "ball at 4 alpha: {}, antipodal counterexample {antipodal}",
        if over.pass { "passed" } else { "rejected" }
    ));
    outcome(pass, parts.join("; "))
}

fn descent_and_smoothness() -> Outcome {
    let (mut ascents, mut model_breaks, mut base_breaks) = (0, 0, 0);
    for kind in ProblemKind::ALL {
        let problem = canned(kind);
        let gt = problem.ground_truth.clone().unwrap();
        for rule in OPTIONS {
            let trace = solve(&problem, rule, 10_000);
            for w in trace.records.windows(2) {
                let (now, next) = (&w[0], &w[1]);
                let scale = 1.0 + now.f.abs();
                if next.f > now.f + 1e-12 * scale {
                    ascents += 1;
                }
                let model = now.f - now.eta * now.dual_gap + 0.5 * now.eta * now.eta * gt.l_f * now.dir_sq_norm;
                if next.f > model + REL_TOL * scale {
                    model_breaks += 1;
                }
            }
            let h1 = trace.records[1].h.unwrap();
            if h1 > gt.l_f * gt.diameter * gt.diameter / 2.0 + REL_TOL {
                base_breaks += 1;
            }
        }
    }
    outcome(
        ascents + model_breaks + base_breaks == 0,
        format!(
            "{ascents} ascents, {model_breaks} smoothness-model breaks, {base_breaks} base-case breaks over 10 runs"
        ),
    )
}

fn simplex_contrast() -> Outcome {
    let problem = canned(ProblemKind::SimplexControl);
    let mut pass = true;
    let mut parts = Vec::new();
    for rule in OPTIONS {
        let fit = fit_rate_between(&solve(&problem, rule, 10_000), 100, 10_000, RATE_FLOOR).unwrap();
        pass &= (-1.4..=-0.7).contains(&fit.power_exponent);
        parts.push(format!("{rule}: exponent {:.3}", fit.power_exponent));
    }
    outcome(pass, parts.join("; "))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = SuiteConfig::default_suite();
    let a = run_suite(&config, &dir.path().join("a"), 1, 0).unwrap();
    let b = run_suite(&config, &dir.path().join("b"), 4, 0).unwrap();
    let mut identical = 0;
    for e in &a.entries {
        let name = e.trace.as_ref().unwrap();
        if fs::read(dir.path().join("a").join(name)).unwrap() == fs::read(dir.path().join("b").join(name)).unwrap() {
            identical += 1;
        }
    }
    let pass = a.all_ok && b.all_ok && identical == a.entries.len();
    outcome(
        pass,
        format!(
            "{identical}/{} traces byte-identical across two suite runs",
            a.entries.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("per-step contraction", per_step_contraction),
        ("linear-rate branch on grad_below", linear_branch),
        ("theta = 1/2 envelope on sc_interior", || {
            sublinear_envelope(ProblemKind::ScInterior, 0.5, std::f64::consts::SQRT_2, 1.0, -1.7)
        }),
        ("theta = 1/4 envelope on quartic_interior", || {
            sublinear_envelope(ProblemKind::QuarticInterior, 0.25, 1.0, 27.0, -1.2)
        }),
        ("level-set construction", level_set_construction),
        ("error-bound estimator recovery", heb_recovery),
        ("LMO oracle equivalence", lmo_equivalence),
        ("strong-convexity certificate", certificate),
        ("descent and smoothness", descent_and_smoothness),
        ("simplex contrast", simplex_contrast),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let result = check();
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
