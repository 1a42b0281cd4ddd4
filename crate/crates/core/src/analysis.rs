//! Rate constants, inequality checkers, error-bound estimation and rate
//! fitting.
//!
//! The checkers replay inequalities over solver traces or sampled points and
//! count violations. They use the absolute slack `1e-9 (1 + |h_0|)` unless a
//! caller asks for something else; the inequalities are exact in theory, so
//! the slack only absorbs round-off.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::unit_sphere;
use crate::problems::Problem;
use crate::solver::Trace;
use crate::Vector;

/// Relative slack used by the trace checkers.
pub const CHECK_REL_TOL: f64 = 1e-9;

/// Noise floor below which optimality gaps are ignored by the rate fit.
pub const RATE_FLOOR: f64 = 1e-12;

const HEB_BINS: usize = 20;
const HEB_MIN_GAP: f64 = 1e-14;
const MIN_FIT_POINTS: usize = 20;

/// Analytic description of the optimal set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptSet {
    Point { x: Vec<f64> },
}

impl OptSet {
    pub fn dim(&self) -> usize {
        match self {
            OptSet::Point { x } => x.len(),
        }
    }

    /// A representative optimal point.
    pub fn point(&self) -> Vector {
        match self {
            OptSet::Point { x } => Vector::from_column_slice(x),
        }
    }

    pub fn distance(&self, x: &Vector) -> f64 {
        match self {
            OptSet::Point { x: p } => x.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        }
    }
}

/// Error-bound exponent and constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HebParams {
    pub theta: f64,
    pub c: f64,
}

/// A Hölderian error bound `dist(x, opt) <= c (f(x) - f_*)^theta` together
/// with the optimal set and value it refers to.
#[derive(Clone, Debug, PartialEq)]
pub struct HebSpec {
    pub theta: f64,
    pub c: f64,
    pub optset: OptSet,
    pub f_star: f64,
}

impl HebSpec {
    pub fn new(theta: f64, c: f64, optset: OptSet, f_star: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidInput(format!("theta must lie in [0, 1], got {theta}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!("c must be finite and positive, got {c}")));
        }
        Ok(HebSpec {
            theta,
            c,
            optset,
            f_star,
        })
    }
}

/// Constants of the sublinear and linear rate bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub beta: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub c_prime: f64,
    pub k: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub rho: f64,
}

/// `rho = max{1/2, 1 - alpha / (8 c L_f)}`.
pub fn linear_rate(alpha: f64, c: f64, l_f: f64) -> f64 {
    (1.0 - alpha / (8.0 * c * l_f)).max(0.5)
}

/// `C' = 1 / (beta - (1 - beta)(2^beta - 1))`, the same constant written in
/// terms of `beta = 1 - theta`.
pub fn c_prime_from_beta(beta: f64) -> f64 {
    1.0 / (beta - (1.0 - beta) * (2f64.powf(beta) - 1.0))
}

/// Constants for the bound `h_t <= C / (t + k)^(1/(1-theta))`, `theta in [0, 1)`.
pub fn theorem_constants(theta: f64, c: f64, alpha: f64, l_f: f64, diameter: f64) -> Result<TheoremConstants> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::InvalidInput(format!("theta must lie in [0, 1), got {theta}")));
    }
    for (name, v) in [("c", c), ("alpha", alpha), ("L_f", l_f), ("D", diameter)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "{name} must be finite and positive, got {v}"
            )));
        }
    }
    let beta = 1.0 - theta;
    let two_beta = 2f64.powf(beta);
    let denom = 1.0 - theta - theta * (two_beta - 1.0);
    if !(denom > 0.0) {
        return Err(Error::DegenerateConstant(format!(
            "C' denominator 1 - theta - theta (2^(1-theta) - 1) = {denom} at theta = {theta}"
        )));
    }
    let c_prime = 1.0 / denom;
    let m = alpha / (8.0 * c * l_f);
    let k = ((2.0 - two_beta) / (two_beta - 1.0)).max(c_prime);
    let base = l_f * diameter * diameter * (1.0 + k).powf(1.0 / beta) / 2.0;
    let big_c = base.max(2.0 * (c_prime / m).powf(1.0 / beta));
    Ok(TheoremConstants {
        beta,
        m,
        c_prime,
        k,
        c: big_c,
        rho: linear_rate(alpha, c, l_f),
    })
}

impl TheoremConstants {
    pub fn envelope(&self) -> Envelope {
        Envelope::Sublinear {
            c: self.c,
            k: self.k,
            beta: self.beta,
        }
    }

    /// Value of `C / (t + k)^(1/beta)`.
    pub fn bound_at(&self, t: f64) -> f64 {
        self.c / (t + self.k).powf(1.0 / self.beta)
    }
}

/// Upper envelope on the optimality gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Envelope {
    /// `h_t <= c / (t + k)^(1/beta)` for `t >= 1`.
    Sublinear { c: f64, k: f64, beta: f64 },
    /// `h_t <= rho^t h_0`.
    Linear { rho: f64 },
}

/// Outcome of one check, in the report JSON layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub violations: usize,
    /// Largest excess of the left-hand side over the bound (negative when
    /// every instance holds with room to spare).
    pub worst: f64,
    pub first_violation_t: Option<usize>,
    pub params: BTreeMap<String, f64>,
}

impl CheckReport {
    fn new(check: &str) -> Self {
        CheckReport {
            check: check.to_string(),
            violations: 0,
            worst: f64::NEG_INFINITY,
            first_violation_t: None,
            params: BTreeMap::new(),
        }
    }

    fn observe(&mut self, t: usize, excess: f64, tol: f64) {
        self.worst = self.worst.max(excess);
        if !(excess <= tol) {
            self.violations += 1;
            self.first_violation_t.get_or_insert(t);
        }
    }

    fn param(mut self, key: &str, v: f64) -> Self {
        self.params.insert(key.to_string(), v);
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn trace_gaps(trace: &Trace, f_star: Option<f64>) -> Option<Vec<f64>> {
    trace
        .records
        .iter()
        .map(|r| r.h.or_else(|| f_star.map(|fs| r.f - fs)))
        .collect()
}

/// Gradient lower bound from the error bound:
/// `|grad f(x)| >= (1/c) (f(x) - f_*)^(1 - theta)` at every point.
/// `first_violation_t` is the index of the first violating point.
pub fn lemma1_check(points: &[Vector], heb: &HebSpec, problem: &Problem) -> Result<CheckReport> {
    let mut report = CheckReport::new("lemma1")
        .param("theta", heb.theta)
        .param("c", heb.c)
        .param("points", points.len() as f64);
    for (i, x) in points.iter().enumerate() {
        let f = problem.objective.value(x)?;
        let grad_norm = problem.objective.gradient(x)?.norm();
        let gap = (f - heb.f_star).max(0.0);
        let rhs = gap.powf(1.0 - heb.theta) / heb.c;
        report.observe(i, rhs - grad_norm, CHECK_REL_TOL * (1.0 + rhs));
    }
    Ok(report)
}

/// Per-step contraction `h_{t+1} <= h_t max{1/2, 1 - alpha |grad f(x_t)| / (8 L_f)}`.
pub fn lemma2_check(trace: &Trace, alpha: f64, l_f: f64, f_star: Option<f64>) -> Result<CheckReport> {
    let h = trace_gaps(trace, f_star)
        .ok_or_else(|| Error::NotApplicable("contraction check needs the optimal value".into()))?;
    let mut report = CheckReport::new("lemma2").param("alpha", alpha).param("L_f", l_f);
    let tol = CHECK_REL_TOL * (1.0 + h.first().map_or(0.0, |v| v.abs()));
    for (w, rec) in trace.records.windows(2).zip(h.windows(2)) {
        let factor = (1.0 - alpha * w[0].grad_norm / (8.0 * l_f)).max(0.5);
        report.observe(w[1].t, rec[1] - rec[0] * factor, tol);
    }
    Ok(report)
}

/// Replays an [`Envelope`] over the trace's optimality gaps.
pub fn envelope_check(trace: &Trace, envelope: &Envelope) -> Result<CheckReport> {
    let h =
        trace_gaps(trace, None).ok_or_else(|| Error::NotApplicable("envelope check needs h in the trace".into()))?;
    let h0 = h.first().copied().unwrap_or(0.0);
    let tol = CHECK_REL_TOL * (1.0 + h0.abs());
    let mut report = CheckReport::new("envelope");
    match *envelope {
        Envelope::Sublinear { c, k, beta } => {
            report = report.param("C", c).param("k", k).param("beta", beta);
            for (rec, &ht) in trace.records.iter().zip(&h).filter(|(r, _)| r.t >= 1) {
                let bound = c / (rec.t as f64 + k).powf(1.0 / beta);
                report.observe(rec.t, ht - bound, tol);
            }
        }
        Envelope::Linear { rho } => {
            report = report.param("rho", rho);
            for (rec, &ht) in trace.records.iter().zip(&h) {
                let bound = rho.powf(rec.t as f64) * h0;
                report.observe(rec.t, ht - bound, tol);
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `h_t ~ a t^exponent`
    Power,
    /// `h_t ~ a ratio^t`
    Geometric,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    /// Exponent for the power model, ratio for the geometric one.
    pub exponent_or_ratio: f64,
    pub residual: f64,
    pub power_exponent: f64,
    pub power_residual: f64,
    pub geometric_ratio: f64,
    pub geometric_residual: f64,
    pub points: usize,
}

/// Least-squares line `y = slope x + intercept`; returns
/// `(slope, intercept, rms residual)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Fits power and geometric decay to `(t, h)` pairs with `t >= 1` and
/// `h > floor`, over the trailing `window` fraction of the usable pairs.
/// The model with the smaller residual is reported.
pub fn fit_rate_series(ts: &[f64], hs: &[f64], window: f64, floor: f64) -> Result<RateFit> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidInput(format!("window must lie in (0, 1], got {window}")));
    }
    let usable: Vec<(f64, f64)> = ts
        .iter()
        .zip(hs)
        .filter(|(t, h)| **t >= 1.0 && **h > floor && h.is_finite())
        .map(|(t, h)| (*t, *h))
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            have: usable.len(),
        });
    }
    let keep = ((usable.len() as f64 * window).ceil() as usize).max(2);
    let tail = &usable[usable.len() - keep.min(usable.len())..];
    let log_h: Vec<f64> = tail.iter().map(|(_, h)| h.ln()).collect();
    let log_t: Vec<f64> = tail.iter().map(|(t, _)| t.ln()).collect();
    let lin_t: Vec<f64> = tail.iter().map(|(t, _)| *t).collect();
    let (p_slope, _, p_res) = least_squares(&log_t, &log_h);
    let (g_slope, _, g_res) = least_squares(&lin_t, &log_h);
    let ratio = g_slope.exp();
    let (model, value, residual) = if p_res <= g_res {
        (RateModel::Power, p_slope, p_res)
    } else {
        (RateModel::Geometric, ratio, g_res)
    };
    Ok(RateFit {
        model,
        exponent_or_ratio: value,
        residual,
        power_exponent: p_slope,
        power_residual: p_res,
        geometric_ratio: ratio,
        geometric_residual: g_res,
        points: tail.len(),
    })
}

/// [`fit_rate_series`] over a trace's optimality gaps.
pub fn fit_rate(trace: &Trace, window: f64, floor: f64) -> Result<RateFit> {
    let h = trace_gaps(trace, None).ok_or_else(|| Error::NotApplicable("rate fit needs h in the trace".into()))?;
    let ts: Vec<f64> = trace.records.iter().map(|r| r.t as f64).collect();
    fit_rate_series(&ts, &h, window, floor)
}

/// [`fit_rate_series`] restricted to records with `t_lo <= t <= t_hi`, using
/// all of them.
pub fn fit_rate_between(trace: &Trace, t_lo: usize, t_hi: usize, floor: f64) -> Result<RateFit> {
    let h = trace_gaps(trace, None).ok_or_else(|| Error::NotApplicable("rate fit needs h in the trace".into()))?;
    let (ts, hs): (Vec<f64>, Vec<f64>) = trace
        .records
        .iter()
        .zip(h)
        .filter(|(r, _)| r.t >= t_lo && r.t <= t_hi)
        .map(|(r, h)| (r.t as f64, h))
        .unzip();
    fit_rate_series(&ts, &hs, 1.0, floor)
}

/// Euclidean distance from `x` to the problem's analytic optimal set.
pub fn distance_to_optset(problem: &Problem, x: &Vector) -> Result<f64> {
    let gt = problem
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::NotApplicable("problem has no analytic optimal set".into()))?;
    crate::error::check_dim(gt.optset.dim(), x.len())?;
    Ok(gt.optset.distance(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HebEstimate {
    pub theta_hat: f64,
    pub c_hat: f64,
    pub fit_residual: f64,
    pub pairs: usize,
    pub bins: usize,
}

/// Upper-envelope estimate of the error-bound exponent and constant from
/// `(f(x) - f_*, dist(x, opt))` pairs.
///
/// Samples rotate between uniform boundary points, points on segments from
/// the optimum to boundary points at log-uniform fractions, and boundary
/// points whose direction from the center is a log-uniform perturbation of
/// the optimum's. Pairs are binned by
/// log gap; the largest log distance in each bin feeds a least-squares line
/// `log dist = theta log gap + log c`.
pub fn estimate_heb(problem: &Problem, n_samples: usize, seed: u64) -> Result<HebEstimate> {
    let gt = problem
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::NotApplicable("error-bound estimation needs an analytic optimal set".into()))?;
    let x_star = gt.optset.point();
    let center = problem.set.center();
    // boundary points clustered around the direction of x*, which is where a
    // boundary optimum is approached most slowly
    let toward = (&x_star - &center).try_normalize(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let x = match (i % 3, &toward) {
            (1, _) => {
                let b = problem.set.sample_boundary(&mut rng);
                let s = 10f64.powf(-6.0 * rng.random::<f64>());
                &x_star + (b - &x_star).scale(s)
            }
            (2, Some(u)) => {
                let s = 10f64.powf(-4.0 * rng.random::<f64>());
                let w = unit_sphere(x_star.len(), &mut rng);
                problem.set.boundary_point(&(u + w.scale(s)))
            }
            _ => problem.set.sample_boundary(&mut rng),
        };
        let gap = problem.objective.eval(&x) - gt.f_star;
        let dist = gt.optset.distance(&x);
        if gap > HEB_MIN_GAP && dist > 0.0 {
            pairs.push((gap.ln(), dist.ln()));
        }
    }
    if pairs.len() < 2 {
        return Err(Error::DegenerateSampling(format!(
            "{} usable (gap, distance) pairs out of {n_samples} samples",
            pairs.len()
        )));
    }
    let lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / HEB_BINS as f64;
    let mut maxima: Vec<Option<(f64, f64)>> = vec![None; HEB_BINS];
    for &(lg, ld) in &pairs {
        let bin = if width > 0.0 {
            (((lg - lo) / width) as usize).min(HEB_BINS - 1)
        } else {
            0
        };
        if maxima[bin].is_none_or(|(_, best)| ld > best) {
            maxima[bin] = Some((lg, ld));
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = maxima.into_iter().flatten().unzip();
    if xs.len() < 2 {
        return Err(Error::DegenerateSampling("all usable gaps fall into one bin".into()));
    }
    let (theta_hat, intercept, fit_residual) = least_squares(&xs, &ys);
    Ok(HebEstimate {
        theta_hat,
        c_hat: intercept.exp(),
        fit_residual,
        pairs: pairs.len(),
        bins: xs.len(),
    })
}
