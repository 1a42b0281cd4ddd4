//! Smooth convex objectives.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::geometry::FeasibleSet;
use crate::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Linear,
    Quadratic,
    ShiftedSqNorm,
    PowerNorm,
}

/// Serializable description of an objective (the `"objective"` field of a
/// problem-spec file).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `b^T x`
    Linear { b: Vec<f64> },
    /// `1/2 x^T A x + b^T x` with `A` symmetric positive semidefinite.
    Quadratic { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// `1/2 |x - z|^2`
    ShiftedSqNorm { z: Vec<f64> },
    /// `|x - z|^(2m)`
    PowerNorm { z: Vec<f64>, m: u32 },
}

#[derive(Clone, Debug)]
enum Repr {
    Linear { b: Vector },
    Quadratic { a: DMatrix<f64>, b: Vector, eig_max: f64 },
    ShiftedSqNorm { z: Vector },
    PowerNorm { z: Vector, m: u32 },
}

#[derive(Clone, Debug)]
pub struct Objective {
    spec: ObjectiveSpec,
    repr: Repr,
}

impl PartialEq for Objective {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

fn finite_vec(xs: &[f64], what: &str) -> Result<Vector> {
    if xs.is_empty() {
        return Err(Error::InvalidInput(format!("{what} is empty")));
    }
    let v = Vector::from_column_slice(xs);
    check_finite(&v, what)?;
    Ok(v)
}

impl Objective {
    pub fn linear(b: Vec<f64>) -> Result<Self> {
        Self::from_spec(ObjectiveSpec::Linear { b })
    }

    pub fn quadratic(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        Self::from_spec(ObjectiveSpec::Quadratic { a, b })
    }

    pub fn shifted_sq_norm(z: Vec<f64>) -> Result<Self> {
        Self::from_spec(ObjectiveSpec::ShiftedSqNorm { z })
    }

    pub fn power_norm(z: Vec<f64>, m: u32) -> Result<Self> {
        Self::from_spec(ObjectiveSpec::PowerNorm { z, m })
    }

    pub fn from_spec(spec: ObjectiveSpec) -> Result<Self> {
        let repr = match &spec {
            ObjectiveSpec::Linear { b } => Repr::Linear { b: finite_vec(b, "b")? },
            ObjectiveSpec::Quadratic { a, b } => {
                let b = finite_vec(b, "b")?;
                let n = b.len();
                if a.len() != n || a.iter().any(|row| row.len() != n) {
                    return Err(Error::InvalidInput(format!("A must be {n}x{n}")));
                }
                let a = DMatrix::from_fn(n, n, |i, j| a[i][j]);
                if a.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("A has non-finite entries".into()));
                }
                let scale = a.amax().max(f64::MIN_POSITIVE);
                if (&a - a.transpose()).amax() > 1e-12 * scale {
                    return Err(Error::InvalidInput("A is not symmetric".into()));
                }
                let eig = SymmetricEigen::new(a.clone()).eigenvalues;
                let eig_min = eig.min();
                if eig_min < -1e-12 * scale {
                    return Err(Error::InvalidInput(format!(
                        "A is not positive semidefinite (smallest eigenvalue {eig_min})"
                    )));
                }
                Repr::Quadratic {
                    a,
                    b,
                    eig_max: eig.max().max(0.0),
                }
            }
            ObjectiveSpec::ShiftedSqNorm { z } => Repr::ShiftedSqNorm { z: finite_vec(z, "z")? },
            ObjectiveSpec::PowerNorm { z, m } => {
                if *m < 2 {
                    return Err(Error::InvalidInput(format!("power_norm needs m >= 2, got {m}")));
                }
                Repr::PowerNorm {
                    z: finite_vec(z, "z")?,
                    m: *m,
                }
            }
        };
        Ok(Objective { spec, repr })
    }

    pub fn spec(&self) -> &ObjectiveSpec {
        &self.spec
    }

    pub fn kind(&self) -> ObjectiveKind {
        match self.repr {
            Repr::Linear { .. } => ObjectiveKind::Linear,
            Repr::Quadratic { .. } => ObjectiveKind::Quadratic,
            Repr::ShiftedSqNorm { .. } => ObjectiveKind::ShiftedSqNorm,
            Repr::PowerNorm { .. } => ObjectiveKind::PowerNorm,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Linear { b } | Repr::Quadratic { b, .. } => b.len(),
            Repr::ShiftedSqNorm { z } | Repr::PowerNorm { z, .. } => z.len(),
        }
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        check_finite(x, "x")?;
        Ok(self.eval(x))
    }

    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        check_finite(x, "x")?;
        Ok(self.grad(x))
    }

    pub(crate) fn eval(&self, x: &Vector) -> f64 {
        match &self.repr {
            Repr::Linear { b } => b.dot(x),
            Repr::Quadratic { a, b, .. } => 0.5 * x.dot(&(a * x)) + b.dot(x),
            Repr::ShiftedSqNorm { z } => 0.5 * (x - z).norm_squared(),
            Repr::PowerNorm { z, m } => (x - z).norm_squared().powi(*m as i32),
        }
    }

    /// `f(a) - f(b)` written so the linear part cancels exactly.
    fn eval_diff(&self, a: &Vector, b: &Vector) -> f64 {
        let d = a - b;
        match &self.repr {
            Repr::Linear { b: lin } => lin.dot(&d),
            Repr::Quadratic { a: q, b: lin, .. } => 0.5 * d.dot(&(q * (a + b))) + lin.dot(&d),
            Repr::ShiftedSqNorm { z } => 0.5 * d.dot(&(a + b - z.scale(2.0))),
            Repr::PowerNorm { .. } => self.eval(a) - self.eval(b),
        }
    }

    pub(crate) fn grad(&self, x: &Vector) -> Vector {
        match &self.repr {
            Repr::Linear { b } => b.clone(),
            Repr::Quadratic { a, b, .. } => a * x + b,
            Repr::ShiftedSqNorm { z } => x - z,
            Repr::PowerNorm { z, m } => {
                // grad |u|^(2m) = 2m |u|^(2m-2) u
                let u = x - z;
                let s = u.norm_squared().powi(*m as i32 - 1);
                u.scale(2.0 * f64::from(*m) * s)
            }
        }
    }

    /// Upper bound on the Hessian operator norm over `set`.
    ///
    /// Exact for the quadratic kinds. For `|x - z|^(2m)` the Hessian norm at
    /// `u = x - z` is `2m(2m-1)|u|^(2m-2)`, bounded with the largest distance
    /// from `z` to the set.
    pub fn smoothness_bound(&self, set: &FeasibleSet) -> f64 {
        match &self.repr {
            Repr::Linear { .. } => 0.0,
            Repr::Quadratic { eig_max, .. } => *eig_max,
            Repr::ShiftedSqNorm { .. } => 1.0,
            Repr::PowerNorm { z, m } => {
                let m = f64::from(*m);
                let r_max = set.max_distance_from(z);
                2.0 * m * (2.0 * m - 1.0) * r_max.powf(2.0 * m - 2.0)
            }
        }
    }

    /// Restriction of the objective to the line `eta -> x + eta d`.
    pub fn restrict<'a>(&'a self, x: &Vector, d: &Vector) -> Restriction<'a> {
        let model = match &self.repr {
            Repr::Linear { b } => Some(LineModel::Affine { slope: b.dot(d) }),
            Repr::Quadratic { a, b, .. } => {
                let slope = (a * x + b).dot(d);
                let curvature = d.dot(&(a * d));
                Some(if curvature > 0.0 {
                    LineModel::Parabola {
                        minimizer: -slope / curvature,
                    }
                } else {
                    LineModel::Affine { slope }
                })
            }
            Repr::ShiftedSqNorm { z } => {
                let slope = (x - z).dot(d);
                let curvature = d.norm_squared();
                Some(if curvature > 0.0 {
                    LineModel::Parabola {
                        minimizer: -slope / curvature,
                    }
                } else {
                    LineModel::Affine { slope }
                })
            }
            Repr::PowerNorm { .. } => None,
        };
        Restriction {
            objective: self,
            x: x.clone(),
            d: d.clone(),
            model,
        }
    }

    /// Largest per-coordinate relative error `|fd_i - grad_i| / (1 + |grad_i|)`
    /// of the analytic gradient against central differences of step `h`.
    pub fn gradient_check(&self, x: &Vector, h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
        }
        let grad = self.gradient(x)?;
        let mut worst: f64 = 0.0;
        let (mut xp, mut xm) = (x.clone(), x.clone());
        for i in 0..x.len() {
            let xi = x[i];
            // divide by the step actually realised in floating point
            let (up, down) = (xi + h, xi - h);
            xp[i] = up;
            xm[i] = down;
            let fd = self.eval_diff(&xp, &xm) / (up - down);
            xp[i] = xi;
            xm[i] = xi;
            worst = worst.max((fd - grad[i]).abs() / (1.0 + grad[i].abs()));
        }
        Ok(worst)
    }
}

/// Closed-form shape of a 1-D restriction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LineModel {
    /// Strictly convex parabola with unconstrained minimizer `minimizer`.
    Parabola { minimizer: f64 },
    /// Affine function with the given slope.
    Affine { slope: f64 },
}

/// A scalar function on `[0, 1]` to be minimized by the line search.
pub trait LineFunction {
    fn eval(&self, eta: f64) -> f64;

    fn model(&self) -> Option<LineModel> {
        None
    }
}

/// `phi(eta) = f(x + eta d)`.
#[derive(Clone, Debug)]
pub struct Restriction<'a> {
    objective: &'a Objective,
    x: Vector,
    d: Vector,
    model: Option<LineModel>,
}

impl Restriction<'_> {
    /// Exact unconstrained minimizer when the restriction is a strictly
    /// convex parabola.
    pub fn exact_minimizer(&self) -> Option<f64> {
        match self.model {
            Some(LineModel::Parabola { minimizer }) => Some(minimizer),
            _ => None,
        }
    }
}

impl LineFunction for Restriction<'_> {
    fn eval(&self, eta: f64) -> f64 {
        self.objective.eval(&(&self.x + self.d.scale(eta)))
    }

    fn model(&self) -> Option<LineModel> {
        self.model
    }
}

/// Adapter turning a closure into a [`LineFunction`] without a model.
pub struct FnLine<F>(pub F);

impl<F: Fn(f64) -> f64> LineFunction for FnLine<F> {
    fn eval(&self, eta: f64) -> f64 {
        (self.0)(eta)
    }
}
