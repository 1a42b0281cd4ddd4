//! Problem-spec files, experiment runs, check batteries and suites.
//!
//! This is the library side of the `fwheb` command line; [`crate::cli`] only
//! parses arguments and maps errors to exit codes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    self, envelope_check, estimate_heb, fit_rate, lemma1_check, lemma2_check, linear_rate, theorem_constants,
    CheckReport, Envelope, RateFit, RATE_FLOOR,
};
use crate::error::{Error, Result};
use crate::geometry::{unit_sphere, FeasibleSet, SetSpec, MEMBERSHIP_TOL};
use crate::objectives::{Objective, ObjectiveSpec};
use crate::problems::{make_problem, GroundTruth, Problem, ProblemKind};
use crate::solver::{fw_solve, SolverConfig, StepRule, Trace};
use crate::Vector;

/// Environment variable consulted when no seed flag is given.
pub const SEED_ENV: &str = "FWHEB_SEED";

/// On-disk problem description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpecFile {
    pub dim: usize,
    pub objective: ObjectiveSpec,
    pub set: SetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
    #[serde(default)]
    pub seed: u64,
}

impl ProblemSpecFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec files always serialize")
    }

    pub fn from_problem(problem: &Problem) -> Self {
        ProblemSpecFile {
            dim: problem.dim(),
            objective: problem.objective.spec().clone(),
            set: problem.set.spec().clone(),
            ground_truth: problem.ground_truth.clone(),
            seed: problem.seed,
        }
    }

    pub fn into_problem(self) -> Result<Problem> {
        let set = FeasibleSet::from_spec(self.set)?;
        let objective = Objective::from_spec(self.objective)?;
        if set.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: set.dim(),
            });
        }
        Ok(Problem::new(objective, set, self.ground_truth)?.with_seed(self.seed))
    }
}

/// Resolves a canned problem name or a path to a spec file.
pub fn resolve_problem(name_or_path: &str, dim: Option<usize>, seed: u64) -> Result<Problem> {
    if let Ok(kind) = name_or_path.parse::<ProblemKind>() {
        return make_problem(kind, dim.unwrap_or_else(|| kind.default_dim()), seed);
    }
    let path = Path::new(name_or_path);
    if !path.is_file() {
        return Err(Error::InvalidInput(format!(
            "`{name_or_path}` is neither a canned problem nor a spec file"
        )));
    }
    let text = fs::read_to_string(path)?;
    let spec = ProblemSpecFile::from_json(&text)?;
    let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("spec").to_string();
    Ok(spec.into_problem()?.with_name(label))
}

/// Seed from an explicit flag, then `FWHEB_SEED`, then zero.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("{SEED_ENV} is not an unsigned integer: `{v}`"))),
        Err(_) => Ok(0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub step_rule: StepRule,
    pub termination: String,
    pub iters: usize,
    pub final_gap: f64,
    pub fit: Option<RateFit>,
}

pub fn summarize(problem: &Problem, rule: StepRule, trace: &Trace) -> RunSummary {
    RunSummary {
        problem: problem.name.clone().unwrap_or_default(),
        step_rule: rule,
        termination: trace.termination.to_string(),
        iters: trace.iterations(),
        final_gap: trace.final_gap(),
        fit: fit_rate(trace, 0.5, RATE_FLOOR).ok(),
    }
}

/// Names accepted by `check --checks`.
pub const CHECK_NAMES: [&str; 7] = ["lmo", "set_sc", "grad", "heb", "lemma1", "lemma2", "envelope"];

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub seed: u64,
    /// Modulus to certify instead of the problem's own.
    pub alpha_claim: Option<f64>,
    /// Solver iterations for the trace-based checks.
    pub iters: usize,
    /// Sample count for the sampling-based checks.
    pub samples: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            seed: 0,
            alpha_claim: None,
            iters: 10_000,
            samples: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub status: CheckStatus,
    #[serde(flatten)]
    pub report: CheckReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckOutcome {
    fn from_report(report: CheckReport) -> Self {
        let status = if report.passed() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        CheckOutcome {
            status,
            report,
            note: None,
        }
    }

    fn skipped(name: &str, why: impl Into<String>) -> Self {
        CheckOutcome {
            status: CheckStatus::Skipped,
            report: CheckReport {
                check: name.to_string(),
                violations: 0,
                worst: f64::NAN,
                first_violation_t: None,
                params: BTreeMap::new(),
            },
            note: Some(why.into()),
        }
    }

    fn merged(name: &str, parts: Vec<CheckReport>) -> Self {
        let mut report = CheckReport {
            check: name.to_string(),
            violations: 0,
            worst: f64::NEG_INFINITY,
            first_violation_t: None,
            params: BTreeMap::new(),
        };
        for (i, part) in parts.into_iter().enumerate() {
            report.violations += part.violations;
            report.worst = report.worst.max(part.worst);
            if report.first_violation_t.is_none() {
                report.first_violation_t = part.first_violation_t;
            }
            for (k, v) in part.params {
                report.params.insert(format!("run{i}.{k}"), v);
            }
        }
        Self::from_report(report)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckBatteryReport {
    pub problem: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<CheckOutcome>,
}

fn report(name: &str) -> CheckReport {
    CheckReport {
        check: name.to_string(),
        violations: 0,
        worst: f64::NEG_INFINITY,
        first_violation_t: None,
        params: BTreeMap::new(),
    }
}

fn observe(r: &mut CheckReport, i: usize, excess: f64, tol: f64) {
    r.worst = r.worst.max(excess);
    if !(excess <= tol) {
        r.violations += 1;
        r.first_violation_t.get_or_insert(i);
    }
}

/// Closed-form oracle against the Monte-Carlo oracle on random gradients.
pub fn check_lmo(set: &FeasibleSet, n_gradients: usize, n_samples: usize, seed: u64) -> Result<CheckReport> {
    let mut r = report("lmo");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diameter = set.diameter();
    for i in 0..n_gradients {
        let g = unit_sphere(set.dim(), &mut rng).scale(10f64.powf(rand::Rng::random_range(&mut rng, -2.0..2.0)));
        let y = set.lmo(&g)?;
        let brute = set.lmo_bruteforce(&g, n_samples, seed.wrapping_add(i as u64 + 1))?;
        let tol = 1e-9 * g.norm() * diameter;
        observe(&mut r, i, g.dot(&y) - g.dot(&brute), tol);
        observe(&mut r, i, set.slack(&y), MEMBERSHIP_TOL);
    }
    r.params.insert("gradients".into(), n_gradients as f64);
    r.params.insert("samples".into(), n_samples as f64);
    Ok(r)
}

/// Central-difference gradient check at seeded feasible points.
pub fn check_gradient(problem: &Problem, n_points: usize, seed: u64) -> Result<CheckReport> {
    let mut r = report("grad");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n_points {
        let x = problem.set.sample_feasible(&mut rng);
        let err = problem.objective.gradient_check(&x, 1e-5)?;
        observe(&mut r, i, err - 1e-6, 0.0);
    }
    r.params.insert("points".into(), n_points as f64);
    Ok(r)
}

/// The envelope that applies to a problem, if any: sublinear from the error
/// bound when `theta < 1`, linear from a gradient lower bound otherwise.
pub fn problem_envelope(problem: &Problem) -> Result<Option<Envelope>> {
    let Some(gt) = &problem.ground_truth else {
        return Ok(None);
    };
    if gt.alpha <= 0.0 {
        return Ok(None);
    }
    if let Some(heb) = gt.heb.filter(|h| h.theta < 1.0) {
        let tc = theorem_constants(heb.theta, heb.c, gt.alpha, gt.l_f, gt.diameter)?;
        return Ok(Some(tc.envelope()));
    }
    if let Some(g_min) = gt.grad_min.filter(|g| *g > 0.0) {
        return Ok(Some(Envelope::Linear {
            rho: linear_rate(gt.alpha, 1.0 / g_min, gt.l_f),
        }));
    }
    Ok(None)
}

fn run_one_check(problem: &Problem, name: &str, opts: &CheckOptions) -> Result<CheckOutcome> {
    let gt = problem.ground_truth.as_ref();
    Ok(match name {
        "lmo" => CheckOutcome::from_report(check_lmo(&problem.set, 200, 20_000, opts.seed)?),
        "set_sc" => {
            let alpha = opts.alpha_claim.unwrap_or_else(|| problem.alpha());
            let cert = problem.set.certify_strong_convexity(alpha, opts.samples, opts.seed)?;
            let mut r = report("set_sc");
            r.worst = cert.worst_violation;
            if !cert.pass {
                r.violations = 1;
            }
            r.params.insert("alpha_claim".into(), alpha);
            r.params.insert("probes".into(), cert.probes_checked as f64);
            let mut out = CheckOutcome::from_report(r);
            if let Some(ce) = cert.counterexample {
                out.note = Some(format!(
                    "counterexample x={:?} y={:?} gamma={} z={:?}",
                    ce.x.as_slice(),
                    ce.y.as_slice(),
                    ce.gamma,
                    ce.z.as_slice()
                ));
            }
            out
        }
        "grad" => CheckOutcome::from_report(check_gradient(problem, 100, opts.seed)?),
        "heb" => {
            let Some(heb) = gt.and_then(|g| g.heb) else {
                return Ok(CheckOutcome::skipped(name, "no analytic error bound"));
            };
            let est = estimate_heb(problem, opts.samples, opts.seed)?;
            let mut r = report("heb");
            let theta_err = (est.theta_hat - heb.theta).abs();
            let c_err = (est.c_hat - heb.c).abs() / heb.c;
            observe(&mut r, 0, theta_err - 0.05, 0.0);
            observe(&mut r, 1, c_err - 0.10, 0.0);
            r.params.insert("theta".into(), heb.theta);
            r.params.insert("c".into(), heb.c);
            r.params.insert("theta_hat".into(), est.theta_hat);
            r.params.insert("c_hat".into(), est.c_hat);
            CheckOutcome::from_report(r)
        }
        "lemma1" => {
            let Some(heb) = problem.heb() else {
                return Ok(CheckOutcome::skipped(name, "no analytic error bound"));
            };
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let points: Vec<Vector> = (0..opts.samples)
                .map(|i| {
                    if i % 2 == 0 {
                        problem.set.sample_boundary(&mut rng)
                    } else {
                        problem.set.sample_feasible(&mut rng)
                    }
                })
                .collect();
            CheckOutcome::from_report(lemma1_check(&points, &heb, problem)?)
        }
        "lemma2" => {
            let Some(gt) = gt else {
                return Ok(CheckOutcome::skipped(name, "optimal value unknown"));
            };
            let mut parts = Vec::new();
            for rule in [StepRule::OptionI, StepRule::OptionII] {
                let trace = fw_solve(problem, &SolverConfig::new(rule, opts.iters), None)?;
                parts.push(lemma2_check(&trace, gt.alpha, gt.l_f, Some(gt.f_star))?);
            }
            CheckOutcome::merged(name, parts)
        }
        "envelope" => {
            let Some(env) = problem_envelope(problem)? else {
                return Ok(CheckOutcome::skipped(name, "no rate envelope for this problem"));
            };
            let mut parts = Vec::new();
            for rule in [StepRule::OptionI, StepRule::OptionII] {
                let trace = fw_solve(problem, &SolverConfig::new(rule, opts.iters), None)?;
                parts.push(envelope_check(&trace, &env)?);
            }
            CheckOutcome::merged(name, parts)
        }
        other => return Err(Error::InvalidInput(format!("unknown check `{other}`"))),
    })
}

pub fn run_checks(problem: &Problem, checks: &[String], opts: &CheckOptions) -> Result<CheckBatteryReport> {
    if let Some(bad) = checks.iter().find(|c| !CHECK_NAMES.contains(&c.as_str())) {
        return Err(Error::InvalidInput(format!("unknown check `{bad}`")));
    }
    let outcomes = checks
        .iter()
        .map(|c| run_one_check(problem, c, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckBatteryReport {
        problem: problem.name.clone().unwrap_or_default(),
        seed: opts.seed,
        pass: outcomes.iter().all(|o| o.status != CheckStatus::Fail),
        checks: outcomes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub problem: String,
    pub step_rule: StepRule,
    pub max_iters: usize,
    #[serde(default)]
    pub stop_gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub entries: Vec<SuiteEntry>,
}

impl SuiteConfig {
    /// Every canned problem under both line-search rules.
    pub fn default_suite() -> Self {
        let entries = ProblemKind::ALL
            .iter()
            .flat_map(|k| {
                [StepRule::OptionI, StepRule::OptionII].map(|rule| SuiteEntry {
                    problem: k.as_str().to_string(),
                    step_rule: rule,
                    max_iters: 10_000,
                    stop_gap: 0.0,
                    dim: None,
                    seed: None,
                })
            })
            .collect();
        SuiteConfig { entries }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteIndexEntry {
    pub problem: String,
    pub step_rule: StepRule,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub trace: Option<String>,
    pub summary: Option<String>,
    pub termination: Option<String>,
    pub iters: Option<usize>,
    pub final_gap: Option<f64>,
    pub fitted_model: Option<analysis::RateModel>,
    pub fitted_exponent: Option<f64>,
    pub predicted_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteIndex {
    pub all_ok: bool,
    pub entries: Vec<SuiteIndexEntry>,
}

/// `-1/(1 - theta)` for instances with an error bound and `theta < 1`.
pub fn predicted_exponent(problem: &Problem) -> Option<f64> {
    let gt = problem.ground_truth.as_ref()?;
    if gt.alpha <= 0.0 {
        return None;
    }
    gt.heb.filter(|h| h.theta < 1.0).map(|h| -1.0 / (1.0 - h.theta))
}

fn file_label(problem: &str) -> String {
    Path::new(problem)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(problem)
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn run_suite_entry(idx: usize, entry: &SuiteEntry, out: &Path, default_seed: u64) -> SuiteIndexEntry {
    let mut index = SuiteIndexEntry {
        problem: entry.problem.clone(),
        step_rule: entry.step_rule,
        status: "ok".into(),
        error: None,
        trace: None,
        summary: None,
        termination: None,
        iters: None,
        final_gap: None,
        fitted_model: None,
        fitted_exponent: None,
        predicted_exponent: None,
    };
    let result = (|| -> Result<()> {
        let problem = resolve_problem(&entry.problem, entry.dim, entry.seed.unwrap_or(default_seed))?;
        index.predicted_exponent = predicted_exponent(&problem);
        let config = SolverConfig::new(entry.step_rule, entry.max_iters).stop_gap(entry.stop_gap);
        let trace = fw_solve(&problem, &config, None)?;
        let stem = format!("{idx:02}_{}_{}", file_label(&entry.problem), entry.step_rule);
        let trace_name = format!("{stem}.csv");
        let summary_name = format!("{stem}.json");
        fs::write(out.join(&trace_name), trace.to_csv_string())?;
        let summary = summarize(&problem, entry.step_rule, &trace);
        fs::write(out.join(&summary_name), serde_json::to_string_pretty(&summary)?)?;
        index.trace = Some(trace_name);
        index.summary = Some(summary_name);
        index.termination = Some(summary.termination.clone());
        index.iters = Some(summary.iters);
        index.final_gap = Some(summary.final_gap);
        if let Some(fit) = summary.fit {
            index.fitted_model = Some(fit.model);
            index.fitted_exponent = Some(fit.power_exponent);
        }
        Ok(())
    })();
    if let Err(e) = result {
        index.status = "error".into();
        index.error = Some(e.to_string());
    }
    index
}

/// Runs every suite entry, `jobs` at a time, and writes traces, summaries
/// and `index.json` into `out`. Entry order in the index follows the config.
pub fn run_suite(config: &SuiteConfig, out: &Path, jobs: usize, seed: u64) -> Result<SuiteIndex> {
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let entries: Vec<SuiteIndexEntry> = pool.install(|| {
        config
            .entries
            .par_iter()
            .enumerate()
            .map(|(i, e)| run_suite_entry(i, e, out, seed))
            .collect()
    });
    let index = SuiteIndex {
        all_ok: entries.iter().all(|e| e.status == "ok"),
        entries,
    };
    fs::write(out.join("index.json"), serde_json::to_string_pretty(&index)?)?;
    Ok(index)
}

pub fn load_suite(path: &Path) -> Result<SuiteConfig> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn default_out_dir() -> PathBuf {
    PathBuf::from("fwheb-suite")
}
