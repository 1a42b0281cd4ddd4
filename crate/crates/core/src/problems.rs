//! Problem instances and the canned catalog with analytic ground truth.
//!
//! Every canned instance is a two-dimensional core (three for the simplex)
//! embedded in the leading coordinates of `R^dim`, so the ground truth stays
//! hand-derivable at any dimension.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{HebParams, HebSpec, OptSet};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{FeasibleSet, MatrixSpec};
use crate::objectives::{Objective, ObjectiveKind};
use crate::Vector;

/// Analytic facts about a problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub f_star: f64,
    pub optset: OptSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heb: Option<HebParams>,
    pub alpha: f64,
    pub l_f: f64,
    pub diameter: f64,
    /// Lower bound on `|grad f|` over the set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_min: Option<f64>,
    /// Multiplier of the level-set constraint at the optimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub name: Option<String>,
    pub objective: Objective,
    pub set: FeasibleSet,
    pub ground_truth: Option<GroundTruth>,
    pub seed: u64,
}

impl Problem {
    pub fn new(objective: Objective, set: FeasibleSet, ground_truth: Option<GroundTruth>) -> Result<Self> {
        check_dim(set.dim(), objective.dim())?;
        if let Some(gt) = &ground_truth {
            check_dim(set.dim(), gt.optset.dim())?;
        }
        Ok(Problem {
            name: None,
            objective,
            set,
            ground_truth,
            seed: 0,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn f_star(&self) -> Option<f64> {
        self.ground_truth.as_ref().map(|g| g.f_star)
    }

    /// Smoothness constant: the analytic value when known, otherwise the
    /// objective's bound over the set.
    pub fn smoothness_bound(&self) -> f64 {
        match &self.ground_truth {
            Some(gt) => gt.l_f,
            None => self.objective.smoothness_bound(&self.set),
        }
    }

    pub fn alpha(&self) -> f64 {
        match &self.ground_truth {
            Some(gt) => gt.alpha,
            None => self.set.strong_convexity_param(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.ground_truth {
            Some(gt) => gt.diameter,
            None => self.set.diameter(),
        }
    }

    pub fn heb(&self) -> Option<HebSpec> {
        let gt = self.ground_truth.as_ref()?;
        let p = gt.heb?;
        HebSpec::new(p.theta, p.c, gt.optset.clone(), gt.f_star).ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `1/2 |x - 2 e_1|^2` over the unit ball: gradient bounded below, linear rate.
    GradBelow,
    /// `1/2 |x - 0.3 e_1|^2` over the unit ball: interior optimum, error-bound exponent 1/2.
    ScInterior,
    /// `|x|^4` over the unit ball centred at `0.5 e_1`: exponent 1/4.
    QuarticInterior,
    /// `1/2 |x - 2 e_1|^2` over `{|x|^2 <= 1}` with the constraint's multiplier known.
    LevelsetKkt,
    /// `1/2 |x - z|^2` over the simplex with `z` off an edge: optimum on a face.
    SimplexControl,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [
        ProblemKind::GradBelow,
        ProblemKind::ScInterior,
        ProblemKind::QuarticInterior,
        ProblemKind::LevelsetKkt,
        ProblemKind::SimplexControl,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::GradBelow => "grad_below",
            ProblemKind::ScInterior => "sc_interior",
            ProblemKind::QuarticInterior => "quartic_interior",
            ProblemKind::LevelsetKkt => "levelset_kkt",
            ProblemKind::SimplexControl => "simplex_control",
        }
    }

    /// Smallest dimension carrying the instance's structure.
    pub fn default_dim(&self) -> usize {
        match self {
            ProblemKind::SimplexControl => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown problem kind `{s}`")))
    }
}

fn axis(dim: usize, value: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[0] = value;
    v
}

/// Builds a canned instance. `seed` is recorded on the problem; the
/// instances themselves are deterministic.
pub fn make_problem(kind: ProblemKind, dim: usize, seed: u64) -> Result<Problem> {
    if dim < 2 {
        return Err(Error::InvalidInput(format!("canned problems need dim >= 2, got {dim}")));
    }
    let problem = match kind {
        ProblemKind::GradBelow => {
            let objective = Objective::shifted_sq_norm(axis(dim, 2.0))?;
            let set = FeasibleSet::ball(vec![0.0; dim], 1.0)?;
            let gt = GroundTruth {
                f_star: 0.5,
                optset: OptSet::Point { x: axis(dim, 1.0) },
                heb: None,
                alpha: 1.0,
                l_f: 1.0,
                diameter: 2.0,
                // |x - 2 e_1| >= 2 - |x| >= 1 on the unit ball
                grad_min: Some(1.0),
                lambda_star: None,
            };
            Problem::new(objective, set, Some(gt))?
        }
        ProblemKind::ScInterior => {
            let objective = Objective::shifted_sq_norm(axis(dim, 0.3))?;
            let set = FeasibleSet::ball(vec![0.0; dim], 1.0)?;
            let gt = GroundTruth {
                f_star: 0.0,
                optset: OptSet::Point { x: axis(dim, 0.3) },
                // dist = |x - z| = sqrt(2 gap)
                heb: Some(HebParams {
                    theta: 0.5,
                    c: std::f64::consts::SQRT_2,
                }),
                alpha: 1.0,
                l_f: 1.0,
                diameter: 2.0,
                grad_min: None,
                lambda_star: None,
            };
            Problem::new(objective, set, Some(gt))?
        }
        ProblemKind::QuarticInterior => {
            let objective = Objective::power_norm(vec![0.0; dim], 2)?;
            let set = FeasibleSet::ball(axis(dim, 0.5), 1.0)?;
            let gt = GroundTruth {
                f_star: 0.0,
                optset: OptSet::Point { x: vec![0.0; dim] },
                // dist = |x| = gap^(1/4)
                heb: Some(HebParams { theta: 0.25, c: 1.0 }),
                alpha: 1.0,
                // 12 |x|^2 with |x| <= 1.5 on the set
                l_f: 27.0,
                diameter: 2.0,
                grad_min: None,
                lambda_star: None,
            };
            Problem::new(objective, set, Some(gt))?
        }
        ProblemKind::LevelsetKkt => {
            let objective = Objective::shifted_sq_norm(axis(dim, 2.0))?;
            let set = FeasibleSet::level_set_quadratic(vec![0.0; dim], MatrixSpec::Diagonal(vec![1.0; dim]), 1.0)?;
            // (x* - z) + 2 lambda x* = 0 at x* = e_1 gives lambda = 1/2;
            // f + lambda (g - 1) is 2-strongly convex, so gap >= |x - x*|^2 on the set
            let gt = GroundTruth {
                f_star: 0.5,
                optset: OptSet::Point { x: axis(dim, 1.0) },
                heb: Some(HebParams { theta: 0.5, c: 1.0 }),
                alpha: 1.0,
                l_f: 1.0,
                diameter: 2.0,
                grad_min: Some(1.0),
                lambda_star: Some(0.5),
            };
            let problem = Problem::new(objective, set, Some(gt))?;
            let kkt = kkt_report(&problem)?;
            if !(kkt.unconstrained_level > kkt.level && kkt.interior_level < kkt.level) {
                return Err(Error::Invariant(
                    "level-set instance violates its constraint qualification".into(),
                ));
            }
            if kkt.stationarity_residual > 1e-12 {
                return Err(Error::Invariant(format!(
                    "KKT stationarity residual {} at the stated optimum",
                    kkt.stationarity_residual
                )));
            }
            problem
        }
        ProblemKind::SimplexControl => {
            if dim < 3 {
                return Err(Error::InvalidInput(format!(
                    "simplex_control needs dim >= 3, got {dim}"
                )));
            }
            // midpoint of the edge e_1 e_2, pushed off the face in the remaining coordinates
            let mut z = vec![-0.2; dim];
            z[0] = 0.5;
            z[1] = 0.5;
            let mut x_star = vec![0.0; dim];
            x_star[0] = 0.5;
            x_star[1] = 0.5;
            let objective = Objective::shifted_sq_norm(z)?;
            let set = FeasibleSet::simplex(dim)?;
            let gt = GroundTruth {
                f_star: 0.02 * (dim - 2) as f64,
                optset: OptSet::Point { x: x_star },
                heb: None,
                alpha: 0.0,
                l_f: 1.0,
                diameter: std::f64::consts::SQRT_2,
                grad_min: None,
                lambda_star: None,
            };
            Problem::new(objective, set, Some(gt))?
        }
    };
    Ok(problem.with_name(kind.as_str()).with_seed(seed))
}

/// Optimality conditions of a level-set constrained instance at its stated
/// optimum and multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KktReport {
    pub lambda_star: f64,
    /// `|grad f(x*) + lambda* grad g(x*)|`.
    pub stationarity_residual: f64,
    /// `lambda* (g(x*) - level)`.
    pub complementary_slackness: f64,
    /// `g` at the unconstrained minimiser of `f`.
    pub unconstrained_level: f64,
    /// `g` at the set's center, a strictly feasible point.
    pub interior_level: f64,
    pub level: f64,
}

pub fn kkt_report(problem: &Problem) -> Result<KktReport> {
    let gt = problem
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::NotApplicable("no ground truth".into()))?;
    let lambda = gt
        .lambda_star
        .ok_or_else(|| Error::NotApplicable("no constraint multiplier recorded".into()))?;
    let x_star = gt.optset.point();
    let (g_star, grad_g, level) = problem
        .set
        .level_function(&x_star)
        .ok_or_else(|| Error::NotApplicable("set is not a quadratic level set".into()))?;
    let grad_f = problem.objective.gradient(&x_star)?;
    let unconstrained: Vector = match (problem.objective.kind(), problem.objective.spec()) {
        (ObjectiveKind::ShiftedSqNorm, crate::objectives::ObjectiveSpec::ShiftedSqNorm { z })
        | (ObjectiveKind::PowerNorm, crate::objectives::ObjectiveSpec::PowerNorm { z, .. }) => {
            Vector::from_column_slice(z)
        }
        _ => {
            return Err(Error::NotApplicable(
                "unconstrained minimiser not available in closed form".into(),
            ))
        }
    };
    let center = problem.set.center();
    Ok(KktReport {
        lambda_star: lambda,
        stationarity_residual: (grad_f + grad_g.scale(lambda)).norm(),
        complementary_slackness: lambda * (g_star - level),
        unconstrained_level: problem.set.level_function(&unconstrained).map_or(f64::NAN, |g| g.0),
        interior_level: problem.set.level_function(&center).map_or(f64::NAN, |g| g.0),
        level,
    })
}
