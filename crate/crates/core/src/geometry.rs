//! Feasible sets with closed-form linear minimization oracles.
//!
//! Every set is a bounded convex body in Euclidean space. Besides the oracle
//! each set reports its diameter, a strong-convexity modulus and a membership
//! test, and can draw boundary-biased samples. The modulus is only a claim;
//! [`FeasibleSet::certify_strong_convexity`] tests it against the chord
//! definition directly.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::Vector;

/// Absolute slack allowed on a set's defining inequality.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

const MAX_SAMPLE_RETRIES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Ball,
    Ellipsoid,
    LpBall,
    LevelSetQuadratic,
    Simplex,
}

/// A symmetric matrix given either by its diagonal or in full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Diagonal(Vec<f64>),
    Dense(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn dim(&self) -> usize {
        match self {
            MatrixSpec::Diagonal(d) => d.len(),
            MatrixSpec::Dense(rows) => rows.len(),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        match self {
            MatrixSpec::Diagonal(d) => Ok(DMatrix::from_diagonal(&Vector::from_column_slice(d))),
            MatrixSpec::Dense(rows) => {
                let n = rows.len();
                if let Some(bad) = rows.iter().find(|r| r.len() != n) {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not square: row of length {} in a {n}-row matrix",
                        bad.len()
                    )));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
        }
    }
}

/// Serializable description of a feasible set (the `"set"` field of a
/// problem-spec file).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `{x : (x - center)^T q (x - center) <= level}`
    Ellipsoid {
        center: Vec<f64>,
        q: MatrixSpec,
        level: f64,
    },
    LpBall {
        dim: usize,
        radius: f64,
        p: f64,
    },
    /// Sublevel set of the quadratic `g(x) = (x - center)^T q (x - center)`.
    /// Same body as [`SetSpec::Ellipsoid`], kept separate because its modulus
    /// is derived from `g`.
    LevelSetQuadratic {
        center: Vec<f64>,
        q: MatrixSpec,
        level: f64,
    },
    /// Standard probability simplex.
    Simplex {
        dim: usize,
    },
}

#[derive(Clone, Debug)]
struct Quadric {
    center: Vector,
    q: DMatrix<f64>,
    q_inv: DMatrix<f64>,
    level: f64,
    // ascending, with matching unit eigenvectors as columns of `axes`
    eigvals: Vector,
    axes: DMatrix<f64>,
}

impl Quadric {
    fn new(center: &[f64], q: &MatrixSpec, level: f64) -> Result<Self> {
        let n = center.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty center".into()));
        }
        check_dim(n, q.dim())?;
        if !(level.is_finite() && level > 0.0) {
            return Err(Error::InvalidInput(format!("level must be positive, got {level}")));
        }
        let center = Vector::from_column_slice(center);
        check_finite(&center, "center")?;
        let q = q.to_matrix()?;
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let scale = q.amax().max(f64::MIN_POSITIVE);
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidInput("matrix is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(q.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigvals = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        if eigvals[0] <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "matrix is not positive definite (smallest eigenvalue {})",
                eigvals[0]
            )));
        }
        let axes = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        let inv_diag = DMatrix::from_diagonal(&eigvals.map(|l| 1.0 / l));
        let q_inv = &axes * inv_diag * axes.transpose();
        Ok(Quadric {
            center,
            q,
            q_inv,
            level,
            eigvals,
            axes,
        })
    }

    fn eig_min(&self) -> f64 {
        self.eigvals[0]
    }

    fn eig_max(&self) -> f64 {
        self.eigvals[self.eigvals.len() - 1]
    }

    fn form(&self, x: &Vector) -> f64 {
        let v = x - &self.center;
        v.dot(&(&self.q * &v))
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Ball { center: Vector, radius: f64 },
    Quadric(Box<Quadric>),
    LpBall { dim: usize, radius: f64, p: f64 },
    Simplex { dim: usize },
}

/// A bounded convex body with a closed-form linear minimization oracle.
#[derive(Clone, Debug)]
pub struct FeasibleSet {
    kind: SetKind,
    spec: SetSpec,
    shape: Shape,
}

impl PartialEq for FeasibleSet {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl FeasibleSet {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::from_spec(SetSpec::Ball { center, radius })
    }

    pub fn ellipsoid(center: Vec<f64>, q: MatrixSpec, level: f64) -> Result<Self> {
        Self::from_spec(SetSpec::Ellipsoid { center, q, level })
    }

    pub fn level_set_quadratic(center: Vec<f64>, q: MatrixSpec, level: f64) -> Result<Self> {
        Self::from_spec(SetSpec::LevelSetQuadratic { center, q, level })
    }

    pub fn lp_ball(dim: usize, radius: f64, p: f64) -> Result<Self> {
        Self::from_spec(SetSpec::LpBall { dim, radius, p })
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        Self::from_spec(SetSpec::Simplex { dim })
    }

    pub fn from_spec(spec: SetSpec) -> Result<Self> {
        let (kind, shape) = match &spec {
            SetSpec::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(Error::InvalidInput("empty center".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
                }
                let center = Vector::from_column_slice(center);
                check_finite(&center, "center")?;
                (
                    SetKind::Ball,
                    Shape::Ball {
                        center,
                        radius: *radius,
                    },
                )
            }
            SetSpec::Ellipsoid { center, q, level } => (
                SetKind::Ellipsoid,
                Shape::Quadric(Box::new(Quadric::new(center, q, *level)?)),
            ),
            SetSpec::LevelSetQuadratic { center, q, level } => (
                SetKind::LevelSetQuadratic,
                Shape::Quadric(Box::new(Quadric::new(center, q, *level)?)),
            ),
            SetSpec::LpBall { dim, radius, p } => {
                if *dim == 0 {
                    return Err(Error::InvalidInput("dimension must be positive".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
                }
                if !(*p > 1.0 && *p <= 2.0) {
                    return Err(Error::InvalidInput(format!(
                        "lp_ball exponent must lie in (1, 2], got {p}"
                    )));
                }
                (
                    SetKind::LpBall,
                    Shape::LpBall {
                        dim: *dim,
                        radius: *radius,
                        p: *p,
                    },
                )
            }
            SetSpec::Simplex { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidInput("dimension must be positive".into()));
                }
                (SetKind::Simplex, Shape::Simplex { dim: *dim })
            }
        };
        Ok(FeasibleSet { kind, spec, shape })
    }

    pub fn spec(&self) -> &SetSpec {
        &self.spec
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Ball { center, .. } => center.len(),
            Shape::Quadric(q) => q.center.len(),
            Shape::LpBall { dim, .. } | Shape::Simplex { dim } => *dim,
        }
    }

    /// Center of the body; the barycenter for the simplex.
    pub fn center(&self) -> Vector {
        match &self.shape {
            Shape::Ball { center, .. } => center.clone(),
            Shape::Quadric(q) => q.center.clone(),
            Shape::LpBall { dim, .. } => Vector::zeros(*dim),
            Shape::Simplex { dim } => Vector::from_element(*dim, 1.0 / *dim as f64),
        }
    }

    /// Linear minimization oracle: a minimizer of `g^T y` over the set.
    ///
    /// A zero functional returns [`FeasibleSet::center`].
    pub fn lmo(&self, g: &Vector) -> Result<Vector> {
        check_dim(self.dim(), g.len())?;
        check_finite(g, "gradient")?;
        Ok(self.lmo_unchecked(g))
    }

    pub(crate) fn lmo_unchecked(&self, g: &Vector) -> Vector {
        let amax = g.amax();
        if amax == 0.0 {
            return self.center();
        }
        if let Shape::Simplex { dim } = &self.shape {
            let mut best = 0;
            for i in 1..*dim {
                if g[i] < g[best] {
                    best = i;
                }
            }
            let mut y = Vector::zeros(*dim);
            y[best] = 1.0;
            return y;
        }
        // Work with the max-normalised functional; the argmin is scale free.
        let h = g / amax;
        match &self.shape {
            Shape::Ball { center, radius } => center - h.scale(radius / h.norm()),
            Shape::Quadric(q) => {
                let w = &q.q_inv * &h;
                let denom = h.dot(&w).sqrt();
                &q.center - w.scale(q.level.sqrt() / denom)
            }
            Shape::LpBall { radius, p, .. } => {
                let q = p / (p - 1.0);
                let norm_q = h.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q);
                let denom = norm_q.powf(q - 1.0);
                h.map(|v| -radius * v.signum() * v.abs().powf(q - 1.0) / denom)
            }
            Shape::Simplex { .. } => unreachable!(),
        }
    }

    /// Value of the defining inequality minus its bound; non-positive inside.
    /// For the simplex this is the larger of the most negative coordinate's
    /// magnitude and the deviation of the coordinate sum from one.
    pub fn slack(&self, x: &Vector) -> f64 {
        match &self.shape {
            Shape::Ball { center, radius } => (x - center).norm() - radius,
            Shape::Quadric(q) => q.form(x) - q.level,
            Shape::LpBall { radius, p, .. } => lp_norm(x, *p) - radius,
            Shape::Simplex { .. } => {
                let min = x.iter().copied().fold(f64::INFINITY, f64::min);
                let sum: f64 = x.iter().sum();
                (-min).max((sum - 1.0).abs())
            }
        }
    }

    /// Membership with absolute slack `tol` on the defining inequality.
    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        if !(tol >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be non-negative, got {tol}"
            )));
        }
        check_dim(self.dim(), x.len())?;
        Ok(self.slack(x) <= tol)
    }

    /// Exact Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius, .. } => 2.0 * radius,
            Shape::Quadric(q) => 2.0 * (q.level / q.eig_min()).sqrt(),
            // for p <= 2 the l2-farthest points are the +-axis vertices
            Shape::LpBall { radius, .. } => 2.0 * radius,
            Shape::Simplex { dim } => {
                if *dim >= 2 {
                    std::f64::consts::SQRT_2
                } else {
                    0.0
                }
            }
        }
    }

    /// A pair of feasible points at distance [`FeasibleSet::diameter`].
    pub fn diameter_pair(&self) -> (Vector, Vector) {
        let n = self.dim();
        match &self.shape {
            Shape::Ball { center, radius } => {
                let e = unit(n, 0).scale(*radius);
                (center + &e, center - &e)
            }
            Shape::Quadric(q) => {
                let a = q.axes.column(0).scale((q.level / q.eig_min()).sqrt());
                (&q.center + &a, &q.center - &a)
            }
            Shape::LpBall { radius, .. } => {
                let e = unit(n, 0).scale(*radius);
                (e.clone(), -e)
            }
            Shape::Simplex { .. } => (unit(n, 0), unit(n, 1.min(n - 1))),
        }
    }

    /// Claimed strong-convexity modulus; zero for the simplex.
    ///
    /// Ball: `1/r`. Quadric level sets: `sigma_g / G` where `sigma_g = 2 lambda_min`
    /// is the modulus of `g` and `G = 2 sqrt(level lambda_max)` bounds `|grad g|` on
    /// the boundary. lp ball (`1 < p <= 2`): `(p - 1)/r`.
    pub fn strong_convexity_param(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius, .. } => 1.0 / radius,
            Shape::Quadric(q) => {
                let sigma = 2.0 * q.eig_min();
                let grad_bound = 2.0 * (q.level * q.eig_max()).sqrt();
                sigma / grad_bound
            }
            Shape::LpBall { radius, p, .. } => (p - 1.0) / radius,
            Shape::Simplex { .. } => 0.0,
        }
    }

    /// For quadric level sets, `(g(x), grad g(x), level)` with
    /// `g(x) = (x - center)^T q (x - center)`.
    pub fn level_function(&self, x: &Vector) -> Option<(f64, Vector, f64)> {
        match &self.shape {
            Shape::Quadric(q) => {
                let v = x - &q.center;
                let qv = &q.q * &v;
                Some((v.dot(&qv), qv.scale(2.0), q.level))
            }
            _ => None,
        }
    }

    /// Largest Euclidean distance from `z` to a point of the set.
    pub fn max_distance_from(&self, z: &Vector) -> f64 {
        match &self.shape {
            Shape::Ball { center, radius } => (center - z).norm() + radius,
            Shape::Quadric(q) => (&q.center - z).norm() + (q.level / q.eig_min()).sqrt(),
            Shape::LpBall { radius, .. } => z.norm() + radius,
            Shape::Simplex { dim } => (0..*dim).map(|i| (unit(*dim, i) - z).norm()).fold(0.0, f64::max),
        }
    }

    /// Point where the ray from the center along `u` leaves the set.
    pub fn boundary_point(&self, u: &Vector) -> Vector {
        match &self.shape {
            Shape::Ball { center, radius } => center + u.scale(radius / u.norm()),
            Shape::Quadric(q) => {
                let t = (q.level / u.dot(&(&q.q * u))).sqrt();
                &q.center + u.scale(t)
            }
            Shape::LpBall { radius, p, .. } => u.scale(radius / lp_norm(u, *p)),
            Shape::Simplex { dim } => {
                let b = self.center();
                let mean = u.sum() / *dim as f64;
                let d = u.map(|v| v - mean);
                let mut t = f64::INFINITY;
                for i in 0..*dim {
                    if d[i] < 0.0 {
                        t = t.min(-b[i] / d[i]);
                    }
                }
                if !t.is_finite() {
                    return unit(*dim, 0);
                }
                let mut y = &b + d.scale(t);
                // the exit coordinate is zero by construction
                y.iter_mut().for_each(|v| *v = v.max(0.0));
                let s = y.sum();
                y / s
            }
        }
    }

    /// Unit outward normal at a boundary point (not defined for the simplex).
    fn outward_normal(&self, x: &Vector) -> Option<Vector> {
        let n = match &self.shape {
            Shape::Ball { center, .. } => x - center,
            Shape::Quadric(q) => &q.q * (x - &q.center),
            Shape::LpBall { p, .. } => x.map(|v| v.signum() * v.abs().powf(p - 1.0)),
            Shape::Simplex { .. } => return None,
        };
        let norm = n.norm();
        (norm > 0.0).then(|| n / norm)
    }

    /// Random boundary point. Ray sampling with a uniform direction for the
    /// smooth bodies; for the simplex a random face with Dirichlet weights.
    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let n = self.dim();
        match &self.shape {
            Shape::Simplex { dim } => {
                let k = rng.random_range(1..=(*dim - 1).max(1));
                let idx = sample_indices(rng, *dim, k);
                let mut y = Vector::zeros(*dim);
                for i in idx.iter() {
                    y[i] = rng.sample::<f64, _>(Exp1) + 1e-300;
                }
                let s = y.sum();
                y / s
            }
            _ => self.boundary_point(&unit_sphere(n, rng)),
        }
    }

    /// Random feasible point, drawn along a random ray from the center.
    pub fn sample_feasible<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let c = self.center();
        let b = self.sample_boundary(rng);
        let s: f64 = rng.random::<f64>().powf(1.0 / self.dim() as f64);
        &c + (b - &c).scale(s)
    }

    /// Monte-Carlo oracle: the best of `n_samples` boundary-biased feasible
    /// points by `g^T y`. A test oracle only.
    pub fn lmo_bruteforce(&self, g: &Vector, n_samples: usize, seed: u64) -> Result<Vector> {
        check_dim(self.dim(), g.len())?;
        check_finite(g, "gradient")?;
        if n_samples == 0 {
            return Err(Error::InvalidInput("n_samples must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: Option<(f64, Vector)> = None;
        for _ in 0..n_samples {
            let y = self.sample_boundary(&mut rng);
            if y.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let val = g.dot(&y);
            if best.as_ref().is_none_or(|(b, _)| val < *b) {
                best = Some((val, y));
            }
        }
        best.map(|(_, y)| y)
            .ok_or_else(|| Error::OracleFailure("no finite sample produced".into()))
    }

    /// Slack of the perturbed chord point of `probe` at modulus `alpha`.
    pub fn probe_slack(&self, probe: &StrongConvexityProbe, alpha: f64) -> f64 {
        self.slack(&probe.perturbed_point(alpha))
    }

    /// Randomized certificate of the chord definition of strong convexity at
    /// modulus `alpha_claim`.
    ///
    /// Deterministic antipodal and colinear probes along the principal axes
    /// run first, followed by `n_probes` seeded random probes. Random probes use
    /// boundary endpoints, half of them short chords, and alternate between a
    /// uniform `z` and the outward normal near the chord.
    pub fn certify_strong_convexity(&self, alpha_claim: f64, n_probes: usize, seed: u64) -> Result<CertificateReport> {
        if n_probes == 0 {
            return Err(Error::InvalidInput("n_probes must be at least 1".into()));
        }
        let mut report = CertificateReport {
            pass: true,
            worst_violation: f64::NEG_INFINITY,
            counterexample: None,
            probes_checked: 0,
        };
        let record = |probe: StrongConvexityProbe, report: &mut CertificateReport| {
            let s = self.probe_slack(&probe, alpha_claim);
            report.probes_checked += 1;
            report.worst_violation = report.worst_violation.max(s);
            if !(s <= MEMBERSHIP_TOL) {
                report.pass = false;
                if report.counterexample.is_none() {
                    report.counterexample = Some(probe);
                }
            }
        };
        for probe in self.deterministic_probes() {
            record(probe, &mut report);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n_probes {
            let probe = self.random_probe(&mut rng, i % 2 == 1);
            record(probe, &mut report);
        }
        Ok(report)
    }

    fn deterministic_probes(&self) -> Vec<StrongConvexityProbe> {
        let n = self.dim();
        let mut out = Vec::new();
        if let Shape::Simplex { .. } = &self.shape {
            let bary = self.center();
            for i in 0..n {
                for j in (i + 1)..n {
                    let (x, y) = (unit(n, i), unit(n, j));
                    let mid = (&x + &y).scale(0.5);
                    let mut dirs = vec![(&x - &y).normalize()];
                    if n > 2 {
                        dirs.push((mid - &bary).normalize());
                    }
                    dirs.extend((0..n).map(|k| unit(n, k)));
                    for z in dirs {
                        out.push(StrongConvexityProbe::new_unchecked(x.clone(), y.clone(), 0.5, z));
                    }
                }
            }
            return out;
        }
        let c = self.center();
        let (half_axes, dirs): (Vec<Vector>, Vec<Vector>) = match &self.shape {
            Shape::Ball { radius, .. } => (0..n).map(|i| (unit(n, i).scale(*radius), unit(n, i))).unzip(),
            Shape::Quadric(q) => (0..n)
                .map(|i| {
                    let v: Vector = q.axes.column(i).into_owned();
                    (v.scale((q.level / q.eigvals[i]).sqrt()), v)
                })
                .unzip(),
            Shape::LpBall { radius, .. } => (0..n).map(|i| (unit(n, i).scale(*radius), unit(n, i))).unzip(),
            Shape::Simplex { .. } => unreachable!(),
        };
        for i in 0..n {
            let x = &c + &half_axes[i];
            let y = &c - &half_axes[i];
            for (j, d) in dirs.iter().enumerate() {
                if j == i {
                    continue;
                }
                out.push(StrongConvexityProbe::new_unchecked(
                    x.clone(),
                    y.clone(),
                    0.5,
                    d.clone(),
                ));
                out.push(StrongConvexityProbe::new_unchecked(x.clone(), y.clone(), 0.5, -d));
            }
            // colinear
            for gamma in [0.5, 0.25] {
                out.push(StrongConvexityProbe::new_unchecked(
                    x.clone(),
                    y.clone(),
                    gamma,
                    dirs[i].clone(),
                ));
            }
        }
        if n >= 2 {
            // antipodal pair along the diagonal, perturbed across it
            let ones = Vector::from_element(n, 1.0);
            let x = self.boundary_point(&ones);
            let y = self.boundary_point(&-&ones);
            let mut z = unit(n, 0) - unit(n, 1);
            z /= z.norm();
            out.push(StrongConvexityProbe::new_unchecked(x, y, 0.5, z));
        }
        out
    }

    fn random_probe<R: Rng + ?Sized>(&self, rng: &mut R, normal_z: bool) -> StrongConvexityProbe {
        let n = self.dim();
        let x = self.sample_boundary(rng);
        let simplex = matches!(self.shape, Shape::Simplex { .. });
        let y = if !simplex && rng.random::<bool>() {
            // short chord: nearby ray
            let c = self.center();
            let u = (&x - &c).normalize();
            let eps = 10f64.powf(-3.0 * rng.random::<f64>()) * 0.5;
            self.boundary_point(&(u + unit_sphere(n, rng).scale(eps)))
        } else {
            self.sample_boundary(rng)
        };
        let gamma: f64 = rng.random();
        let mut z = unit_sphere(n, rng);
        if normal_z && !simplex {
            let base = x.scale(gamma) + y.scale(1.0 - gamma);
            let c = self.center();
            let dir = &base - &c;
            if dir.norm() > 0.0 {
                if let Some(nrm) = self.outward_normal(&self.boundary_point(&dir)) {
                    z = nrm;
                }
            }
        }
        StrongConvexityProbe::new_unchecked(x, y, gamma, z)
    }
}

/// One evaluation of the chord definition: the point
/// `gamma x + (1 - gamma) y + gamma (1 - gamma) (alpha/2) |x - y|^2 z`
/// must stay in the set.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongConvexityProbe {
    pub x: Vector,
    pub y: Vector,
    pub gamma: f64,
    pub z: Vector,
}

impl StrongConvexityProbe {
    /// Validated constructor: `z` must have unit norm within 1e-12, `gamma`
    /// must lie in `[0, 1]` and both endpoints must be members of `set`.
    pub fn new(set: &FeasibleSet, x: Vector, y: Vector, gamma: f64, z: Vector) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidInput(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        if ((z.norm()) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput("z must be a unit vector".into()));
        }
        if !set.contains(&x, MEMBERSHIP_TOL)? || !set.contains(&y, MEMBERSHIP_TOL)? {
            return Err(Error::InvalidInput("probe endpoints must be feasible".into()));
        }
        check_dim(x.len(), z.len())?;
        Ok(Self::new_unchecked(x, y, gamma, z))
    }

    fn new_unchecked(x: Vector, y: Vector, gamma: f64, z: Vector) -> Self {
        StrongConvexityProbe { x, y, gamma, z }
    }

    pub fn perturbed_point(&self, alpha: f64) -> Vector {
        let g = self.gamma;
        let d2 = (&self.x - &self.y).norm_squared();
        self.x.scale(g) + self.y.scale(1.0 - g) + self.z.scale(g * (1.0 - g) * 0.5 * alpha * d2)
    }
}

#[derive(Clone, Debug)]
pub struct CertificateReport {
    pub pass: bool,
    /// Largest slack seen over all probes; positive values above
    /// [`MEMBERSHIP_TOL`] are violations.
    pub worst_violation: f64,
    /// First violating probe in probe order.
    pub counterexample: Option<StrongConvexityProbe>,
    pub probes_checked: usize,
}

pub(crate) fn unit(n: usize, i: usize) -> Vector {
    let mut e = Vector::zeros(n);
    e[i] = 1.0;
    e
}

pub(crate) fn lp_norm(x: &Vector, p: f64) -> f64 {
    let amax = x.amax();
    if amax == 0.0 {
        return 0.0;
    }
    amax * x.iter().map(|v| (v.abs() / amax).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Uniform direction on the unit sphere.
pub fn unit_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    for _ in 0..MAX_SAMPLE_RETRIES {
        let v = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-150 {
            return v / norm;
        }
    }
    unit(n, 0)
}
