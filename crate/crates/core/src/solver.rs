//! The Frank-Wolfe iteration.
//!
//! Each step calls the set's linear minimization oracle at the current
//! gradient, picks a step size on the segment towards the oracle point and
//! moves there. Two step rules minimise along the segment (exact line search,
//! or the quadratic upper model built from the smoothness bound); a third,
//! open-loop `2/(t+2)` rule is kept as a baseline.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::MEMBERSHIP_TOL;
use crate::objectives::{LineFunction, LineModel};
use crate::problems::Problem;
use crate::Vector;

/// Exact CSV header of a serialized [`Trace`].
pub const TRACE_CSV_HEADER: &str = "t,f,h,dual_gap,grad_norm,eta,lemma2_bound";

const GOLDEN_MAX_ITERS: usize = 200;
const ASCENT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepRule {
    /// Exact line search over `[0, 1]`.
    #[serde(rename = "option_I", alias = "I")]
    OptionI,
    /// Minimiser of the smoothness upper model on `[0, 1]`.
    #[serde(rename = "option_II", alias = "II")]
    OptionII,
    /// Open-loop `2/(t+2)`.
    #[serde(rename = "fixed_2_over_t_plus_2", alias = "fixed")]
    Fixed,
}

impl StepRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepRule::OptionI => "option_I",
            StepRule::OptionII => "option_II",
            StepRule::Fixed => "fixed_2_over_t_plus_2",
        }
    }
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "option_I" => Ok(StepRule::OptionI),
            "II" | "option_II" => Ok(StepRule::OptionII),
            "fixed" | "fixed_2_over_t_plus_2" => Ok(StepRule::Fixed),
            other => Err(Error::Config(format!("unknown step rule `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub step_rule: StepRule,
    /// Number of steps `T`; the trace holds records `t = 0..=T`.
    pub max_iters: usize,
    /// Stop once the duality gap is at most this.
    pub stop_gap: f64,
    /// Interval width for the golden-section line search.
    pub line_search_tol: f64,
    /// Keep every iterate in the trace.
    pub record_points: bool,
}

impl SolverConfig {
    pub fn new(step_rule: StepRule, max_iters: usize) -> Self {
        SolverConfig {
            step_rule,
            max_iters,
            stop_gap: 0.0,
            line_search_tol: 1e-12,
            record_points: false,
        }
    }

    pub fn stop_gap(mut self, gap: f64) -> Self {
        self.stop_gap = gap;
        self
    }

    pub fn record_points(mut self, yes: bool) -> Self {
        self.record_points = yes;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.stop_gap >= 0.0) {
            return Err(Error::Config(format!(
                "stop_gap must be non-negative, got {}",
                self.stop_gap
            )));
        }
        if !(self.line_search_tol > 0.0) {
            return Err(Error::Config("line-search tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// State of one iterate `x_t` and the step taken from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub t: usize,
    pub f: f64,
    /// `f(x_t) - f_*` when the optimum is known.
    pub h: Option<f64>,
    /// `grad f(x_t)^T (x_t - y_t)`.
    pub dual_gap: f64,
    pub grad_norm: f64,
    /// Step applied to reach `x_{t+1}`; zero on the final record.
    pub eta: f64,
    /// `max{1/2, 1 - alpha |grad f(x_t)| / (8 L_f)}` when `L_f > 0`.
    pub lemma2_bound: Option<f64>,
    /// `|y_t - x_t|^2`.
    pub dir_sq_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GapReached,
    MaxIters,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::GapReached => "gap_reached",
            Termination::MaxIters => "max_iters",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub records: Vec<IterRecord>,
    pub final_point: Vector,
    pub termination: Termination,
    /// Iterates `x_0, x_1, ...` when requested in the config.
    pub points: Option<Vec<Vector>>,
    /// Smoothness bound used for the records and Option II.
    pub smoothness: f64,
    /// Strong-convexity modulus of the set used for the records.
    pub alpha: f64,
}

impl Trace {
    /// Index of the final record (number of steps taken).
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.t)
    }

    pub fn final_gap(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.dual_gap)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.t,
                fmt_f64(r.f),
                r.h.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.dual_gap),
                fmt_f64(r.grad_norm),
                fmt_f64(r.eta),
                r.lemma2_bound.map(fmt_f64).unwrap_or_default(),
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// 17 significant digits.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `grad^T (x - y)`; an upper bound on `f(x) - f_*` when `y` is the oracle
/// point for `grad` at `x`.
pub fn duality_gap(grad: &Vector, x: &Vector, y: &Vector) -> f64 {
    grad.dot(&(x - y))
}

/// Exact line search on `[0, 1]`.
///
/// Uses the closed-form model when the restriction reports one, otherwise
/// golden-section search down to an interval of width `tol`. The returned
/// step is never worse than either endpoint.
pub fn step_option1<L: LineFunction + ?Sized>(phi: &L, tol: f64) -> f64 {
    match phi.model() {
        Some(LineModel::Parabola { minimizer }) => minimizer.clamp(0.0, 1.0),
        Some(LineModel::Affine { slope }) => {
            if slope < 0.0 {
                1.0
            } else {
                0.0
            }
        }
        None => {
            let mid = golden_section(|e| phi.eval(e), 0.0, 1.0, tol, GOLDEN_MAX_ITERS);
            let mut best = (mid, phi.eval(mid));
            for end in [0.0, 1.0] {
                let v = phi.eval(end);
                if v < best.1 {
                    best = (end, v);
                }
            }
            best.0
        }
    }
}

/// Golden-section search for the minimiser of a unimodal `f` on `[lo, hi]`;
/// returns the midpoint of the final bracket.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64, max_iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..max_iters {
        if hi - lo <= tol {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Minimiser over `[0, 1]` of `eta gd + eta^2 L_f dsq / 2` where
/// `gd = grad^T (y - x)` and `dsq = |y - x|^2`.
pub fn step_option2(gd: f64, dsq: f64, l_f: f64) -> Result<f64> {
    if gd > ASCENT_TOL {
        return Err(Error::Invariant(format!(
            "Frank-Wolfe direction is an ascent direction (slope {gd:e})"
        )));
    }
    if !(l_f > 0.0 && l_f.is_finite()) {
        return Err(Error::Config(format!(
            "Option II needs a finite positive smoothness bound, got {l_f}"
        )));
    }
    if dsq == 0.0 {
        return Ok(0.0);
    }
    Ok((-gd / (l_f * dsq)).clamp(0.0, 1.0))
}

/// Deterministic start point: the oracle point for the fixed functional
/// `-(1, 2, ..., n)`. It lies on the boundary and off the coordinate axes,
/// so it is not aligned with the axis-symmetric canned instances.
pub fn default_start(problem: &Problem) -> Vector {
    let n = problem.set.dim();
    let g = Vector::from_fn(n, |i, _| -((i + 1) as f64));
    problem.set.lmo_unchecked(&g)
}

/// Runs Frank-Wolfe on `problem` from `x0` (or [`default_start`]).
pub fn fw_solve(problem: &Problem, config: &SolverConfig, x0: Option<&Vector>) -> Result<Trace> {
    config.validate()?;
    let set = &problem.set;
    let obj = &problem.objective;
    let l_f = problem.smoothness_bound();
    let alpha = problem.alpha();
    let f_star = problem.f_star();
    if config.step_rule == StepRule::OptionII && !(l_f > 0.0 && l_f.is_finite()) {
        return Err(Error::Config(format!(
            "Option II needs a finite positive smoothness bound, got {l_f}"
        )));
    }

    let mut x = match x0 {
        Some(x0) => {
            check_dim(set.dim(), x0.len())?;
            if !set.contains(x0, MEMBERSHIP_TOL)? {
                return Err(Error::InvalidInput("start point is not feasible".into()));
            }
            x0.clone()
        }
        None => default_start(problem),
    };

    let lemma2_of =
        |grad_norm: f64| (l_f > 0.0 && l_f.is_finite()).then(|| (1.0 - alpha * grad_norm / (8.0 * l_f)).max(0.5));

    let mut records = Vec::with_capacity(config.max_iters.min(1 << 20) + 1);
    let mut points = config.record_points.then(Vec::new);
    let termination;
    let mut t = 0;
    loop {
        let f = obj.eval(&x);
        let grad = obj.grad(&x);
        if grad.iter().any(|v| !v.is_finite()) || !f.is_finite() {
            return Err(Error::Invariant(format!("non-finite objective or gradient at t = {t}")));
        }
        let y = set.lmo_unchecked(&grad);
        let d = &y - &x;
        let gap = -grad.dot(&d);
        let grad_norm = grad.norm();
        let mut record = IterRecord {
            t,
            f,
            h: f_star.map(|fs| f - fs),
            dual_gap: gap,
            grad_norm,
            eta: 0.0,
            lemma2_bound: lemma2_of(grad_norm),
            dir_sq_norm: d.norm_squared(),
        };
        if let Some(p) = points.as_mut() {
            p.push(x.clone());
        }
        if gap < config.stop_gap {
            records.push(record);
            termination = Termination::GapReached;
            break;
        }
        if t == config.max_iters {
            records.push(record);
            termination = Termination::MaxIters;
            break;
        }
        let eta = match config.step_rule {
            StepRule::OptionI => step_option1(&obj.restrict(&x, &d), config.line_search_tol),
            StepRule::OptionII => step_option2(-gap, record.dir_sq_norm, l_f)?,
            StepRule::Fixed => 2.0 / (t as f64 + 2.0),
        };
        record.eta = eta;
        records.push(record);
        if eta != 0.0 {
            x += d.scale(eta);
        }
        t += 1;
    }

    Ok(Trace {
        records,
        final_point: x,
        termination,
        points,
        smoothness: l_f,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::FnLine;

    #[test]
    fn option2_examples() {
        assert_eq!(step_option2(-4.0, 4.0, 2.0).unwrap(), 0.5);
        assert_eq!(step_option2(-4.0, 1.0, 2.0).unwrap(), 1.0);
        assert_eq!(step_option2(0.0, 3.0, 2.0).unwrap(), 0.0);
        assert_eq!(step_option2(-1.0, 0.0, 2.0).unwrap(), 0.0);
        assert!(matches!(step_option2(1e-6, 1.0, 1.0), Err(Error::Invariant(_))));
        assert!(matches!(step_option2(-1.0, 1.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn option1_closed_form_and_clamp() {
        let f = crate::objectives::Objective::shifted_sq_norm(vec![2.0, 0.0]).unwrap();
        let x = Vector::zeros(2);
        assert_eq!(
            step_option1(&f.restrict(&x, &Vector::from_vec(vec![4.0, 0.0])), 1e-12),
            0.5
        );
        assert_eq!(
            step_option1(&f.restrict(&x, &Vector::from_vec(vec![1.0, 0.0])), 1e-12),
            1.0
        );
    }

    #[test]
    fn option1_golden_section() {
        let eta = step_option1(&FnLine(|e: f64| (e - 0.3).powi(2)), 1e-10);
        assert!((eta - 0.3).abs() <= 1e-10, "{eta}");
        // monotone on [0, 1]: endpoint wins
        assert_eq!(step_option1(&FnLine(|e: f64| -e), 1e-10), 1.0);
        assert_eq!(step_option1(&FnLine(|e: f64| (e + 1.0).powi(2)), 1e-10), 0.0);
    }

    #[test]
    fn gap_examples() {
        let v = |a: f64, b: f64| Vector::from_vec(vec![a, b]);
        assert_eq!(duality_gap(&v(-2.0, 0.0), &v(0.0, 0.0), &v(1.0, 0.0)), 2.0);
        assert_eq!(duality_gap(&v(-1.0, 0.0), &v(1.0, 0.0), &v(1.0, 0.0)), 0.0);
        assert_eq!(duality_gap(&v(3.0, -7.0), &v(0.2, 0.1), &v(0.2, 0.1)), 0.0);
    }

    #[test]
    fn step_rule_parsing() {
        assert_eq!("I".parse::<StepRule>().unwrap(), StepRule::OptionI);
        assert_eq!("II".parse::<StepRule>().unwrap(), StepRule::OptionII);
        assert_eq!("fixed".parse::<StepRule>().unwrap(), StepRule::Fixed);
        assert!("III".parse::<StepRule>().is_err());
        let r: StepRule = serde_json::from_str("\"option_II\"").unwrap();
        assert_eq!(r, StepRule::OptionII);
        let r: StepRule = serde_json::from_str("\"I\"").unwrap();
        assert_eq!(r, StepRule::OptionI);
    }

    #[test]
    fn csv_number_format() {
        assert_eq!(fmt_f64(1.5), "1.5000000000000000e0");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
