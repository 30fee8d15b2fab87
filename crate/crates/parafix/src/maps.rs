//! The paracontraction operator catalog and a sampling-based property
//! checker.
//!
//! A map `M` is a paracontraction with respect to a norm when
//! `||M(x) - y|| < ||x - y||` for every non-fixed `x` and every fixed point
//! `y`. The catalog is closed-form only: every operator is exactly
//! evaluable, so property tests are never confounded by inner-loop error.

use std::fmt;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{weighted_sum, LinalgError, NormOrder, VecN};
use crate::rng::{gaussian_vec, seeded_rng};

/// Default tolerance for fixed-point membership, in the experiment's p-norm.
pub const FIXED_POINT_TOL: f64 = 1e-10;
/// Slack separating genuine expansion from floating-point noise.
pub const NONEXPANSION_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("input has dimension {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("input contains a non-finite entry")]
    NonFiniteInput,
    #[error("rows are not linearly independent (pivot below 1e-12 of scale)")]
    RankDeficient,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{0}")]
    Linalg(#[from] LinalgError),
    #[error("supplied point is not a fixed point (defect {defect:.3e})")]
    NotAFixedPoint { defect: f64 },
}

/// A map `M : R^n -> R^n` intended to be a paracontraction.
///
/// `is_verified` distinguishes catalog maps, whose construction guarantees
/// the property, from user-supplied maps, which must pass
/// [`check_paracontraction`] before experiments trust them.
pub trait Paracontraction: Send + Sync {
    fn dim(&self) -> usize;

    /// Evaluates `M(x)`. Deterministic; finite output for finite input on
    /// every catalog map.
    fn apply(&self, x: &VecN) -> Result<VecN, MapError>;

    /// A point known to satisfy `M(y) = y`, when the construction provides
    /// one. Used to seed tests and diagnostics.
    fn known_fixed_point(&self) -> Option<VecN> {
        None
    }

    fn is_verified(&self) -> bool {
        true
    }

    fn describe(&self) -> String;
}

/// `||M(x) - x||_p <= tol`.
pub fn is_fixed_point(
    map: &dyn Paracontraction,
    x: &VecN,
    tol: f64,
    p: NormOrder,
) -> Result<bool, MapError> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(MapError::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let fx = map.apply(x)?;
    Ok(fx.sub(x).p_norm(p) <= tol)
}

fn ensure_input(dim: usize, x: &VecN) -> Result<(), MapError> {
    if x.dim() != dim {
        return Err(MapError::DimensionMismatch {
            got: x.dim(),
            expected: dim,
        });
    }
    if !x.is_finite() {
        return Err(MapError::NonFiniteInput);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Affine least-squares map
// ---------------------------------------------------------------------------

/// Dense Cholesky factor of a symmetric positive definite Gram matrix.
/// Construction fails when a pivot falls below 1e-12 of the diagonal scale,
/// which is how rank deficiency of the generating rows surfaces.
#[derive(Debug, Clone)]
struct Cholesky {
    k: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    fn factor(gram: &[f64], k: usize) -> Result<Self, MapError> {
        let scale = (0..k).map(|i| gram[i * k + i]).fold(0.0f64, f64::max);
        if scale.is_nan() || scale <= 0.0 {
            return Err(MapError::RankDeficient);
        }
        let mut lower = vec![0.0; k * k];
        for j in 0..k {
            let mut pivot = gram[j * k + j];
            for t in 0..j {
                pivot -= lower[j * k + t] * lower[j * k + t];
            }
            if !pivot.is_finite() || pivot <= scale * 1e-12 {
                return Err(MapError::RankDeficient);
            }
            let diag = pivot.sqrt();
            lower[j * k + j] = diag;
            for i in (j + 1)..k {
                let mut s = gram[i * k + j];
                for t in 0..j {
                    s -= lower[i * k + t] * lower[j * k + t];
                }
                lower[i * k + j] = s / diag;
            }
        }
        Ok(Cholesky { k, lower })
    }

    /// Solves `G w = rhs` via the factor: forward then backward substitution.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut y = rhs.to_vec();
        for i in 0..k {
            for t in 0..i {
                y[i] -= self.lower[i * k + t] * y[t];
            }
            y[i] /= self.lower[i * k + i];
        }
        for i in (0..k).rev() {
            for t in (i + 1)..k {
                y[i] -= self.lower[t * k + i] * y[t];
            }
            y[i] /= self.lower[i * k + i];
        }
        y
    }
}

/// `x -> x - A'(AA')^-1 (Ax - b)`: one application lands on the solution
/// set `{y : Ay = b}`, which is exactly the fixed-point set. Rows of `A`
/// must be linearly independent; `AA'` is factored once at construction.
#[derive(Debug, Clone)]
pub struct AffineLeastSquares {
    rows: Vec<VecN>,
    rhs: Vec<f64>,
    chol: Cholesky,
    dim: usize,
    fixed_point: VecN,
}

impl AffineLeastSquares {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self, MapError> {
        if a.is_empty() {
            return Err(MapError::InvalidParameter("A needs at least one row".into()));
        }
        if b.len() != a.len() {
            return Err(MapError::InvalidParameter(format!(
                "b has {} entries for {} rows",
                b.len(),
                a.len()
            )));
        }
        let rows: Vec<VecN> = a
            .into_iter()
            .map(VecN::new)
            .collect::<Result<_, _>>()
            .map_err(MapError::Linalg)?;
        let dim = rows[0].dim();
        for row in &rows {
            if row.dim() != dim {
                return Err(MapError::DimensionMismatch {
                    got: row.dim(),
                    expected: dim,
                });
            }
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(MapError::NonFiniteInput);
        }
        let k = rows.len();
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                gram[i * k + j] = rows[i].dot(&rows[j]);
            }
        }
        let chol = Cholesky::factor(&gram, k)?;
        let mut map = AffineLeastSquares {
            rows,
            rhs: b,
            chol,
            dim,
            fixed_point: VecN::zeros(dim),
        };
        // Applying once from anywhere lands on the solution set; from the
        // origin it yields the least-norm solution.
        map.fixed_point = map.apply(&VecN::zeros(dim))?;
        Ok(map)
    }

    /// `max_i |<a_i, x> - b_i|`.
    pub fn constraint_residual_inf(&self, x: &VecN) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, bi)| (row.dot(x) - bi).abs())
            .fold(0.0, f64::max)
    }
}

impl Paracontraction for AffineLeastSquares {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &VecN) -> Result<VecN, MapError> {
        ensure_input(self.dim, x)?;
        let residual: Vec<f64> = self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, bi)| row.dot(x) - bi)
            .collect();
        let weights = self.chol.solve(&residual);
        let correction = weighted_sum(self.dim, weights.iter().copied().zip(self.rows.iter()));
        Ok(x.sub(&correction))
    }

    fn known_fixed_point(&self) -> Option<VecN> {
        Some(self.fixed_point.clone())
    }

    fn describe(&self) -> String {
        format!(
            "affine-least-squares(rows={}, n={})",
            self.rows.len(),
            self.dim
        )
    }
}

// ---------------------------------------------------------------------------
// Convex projections
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum ConvexSet {
    Box { lower: VecN, upper: VecN },
    Ball { center: VecN, radius: f64 },
    Halfspace { normal: VecN, offset: f64, norm_sq: f64 },
    AffineSubspace(AffineLeastSquares),
}

/// Euclidean orthogonal projection onto a nonempty closed convex set.
/// Closed form for every supported descriptor, and exactly idempotent:
/// a projected point always passes its own membership test, so projecting
/// it again returns it unchanged.
#[derive(Debug, Clone)]
pub struct ConvexProjection {
    set: ConvexSet,
    dim: usize,
}

impl ConvexProjection {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, MapError> {
        let lower = VecN::new(lower).map_err(MapError::Linalg)?;
        let upper = VecN::new(upper).map_err(MapError::Linalg)?;
        if upper.dim() != lower.dim() {
            return Err(MapError::DimensionMismatch {
                got: upper.dim(),
                expected: lower.dim(),
            });
        }
        if lower
            .entries()
            .iter()
            .zip(upper.entries())
            .any(|(lo, hi)| lo > hi)
        {
            return Err(MapError::InvalidParameter(
                "box needs lower <= upper in every coordinate".into(),
            ));
        }
        let dim = lower.dim();
        Ok(ConvexProjection {
            set: ConvexSet::Box { lower, upper },
            dim,
        })
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self, MapError> {
        let center = VecN::new(center).map_err(MapError::Linalg)?;
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(MapError::InvalidParameter(format!(
                "ball radius must be finite and nonnegative, got {radius}"
            )));
        }
        let dim = center.dim();
        Ok(ConvexProjection {
            set: ConvexSet::Ball { center, radius },
            dim,
        })
    }

    /// The halfspace `{x : <normal, x> <= offset}`.
    pub fn new_halfspace(normal: Vec<f64>, offset: f64) -> Result<Self, MapError> {
        let normal = VecN::new(normal).map_err(MapError::Linalg)?;
        if !offset.is_finite() {
            return Err(MapError::InvalidParameter("offset must be finite".into()));
        }
        let norm_sq = normal.dot(&normal);
        if norm_sq == 0.0 {
            return Err(MapError::InvalidParameter(
                "halfspace normal must be nonzero".into(),
            ));
        }
        let dim = normal.dim();
        Ok(ConvexProjection {
            set: ConvexSet::Halfspace {
                normal,
                offset,
                norm_sq,
            },
            dim,
        })
    }

    /// The affine subspace `{x : Ax = b}` with independent rows.
    pub fn new_affine_subspace(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self, MapError> {
        let inner = AffineLeastSquares::new(a, b)?;
        let dim = inner.dim();
        Ok(ConvexProjection {
            set: ConvexSet::AffineSubspace(inner),
            dim,
        })
    }

    /// The Euclidean-nearest point of the set; idempotent.
    pub fn project(&self, x: &VecN) -> Result<VecN, MapError> {
        ensure_input(self.dim, x)?;
        match &self.set {
            ConvexSet::Box { lower, upper } => Ok(VecN::new(
                x.entries()
                    .iter()
                    .zip(lower.entries().iter().zip(upper.entries()))
                    .map(|(&v, (&lo, &hi))| {
                        if v < lo {
                            lo
                        } else if v > hi {
                            hi
                        } else {
                            v
                        }
                    })
                    .collect(),
            )
            .expect("clamped values are finite")),
            ConvexSet::Ball { center, radius } => {
                let offset = x.sub(center);
                let dist = offset.p_norm(NormOrder::euclidean());
                if dist <= *radius {
                    return Ok(x.clone());
                }
                // Rounding can leave the rescaled point a few ulps outside;
                // shrink until it passes its own membership test so the
                // second projection is the identity bit-for-bit.
                let mut scale = radius / dist;
                for _ in 0..64 {
                    let candidate = center.add(&offset.scale(scale));
                    if candidate.sub(center).p_norm(NormOrder::euclidean()) <= *radius {
                        return Ok(candidate);
                    }
                    scale *= 1.0 - 2.0 * f64::EPSILON;
                }
                Ok(center.add(&offset.scale(scale)))
            }
            ConvexSet::Halfspace {
                normal,
                offset,
                norm_sq,
            } => {
                let slack = normal.dot(x) - offset;
                if slack <= 0.0 {
                    return Ok(x.clone());
                }
                let mut step = slack / norm_sq;
                for _ in 0..64 {
                    let candidate = x.sub(&normal.scale(step));
                    if normal.dot(&candidate) <= *offset {
                        return Ok(candidate);
                    }
                    step *= 1.0 + 2.0 * f64::EPSILON;
                }
                Ok(x.sub(&normal.scale(step)))
            }
            ConvexSet::AffineSubspace(inner) => inner.apply(x),
        }
    }
}

impl Paracontraction for ConvexProjection {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &VecN) -> Result<VecN, MapError> {
        self.project(x)
    }

    fn known_fixed_point(&self) -> Option<VecN> {
        match &self.set {
            ConvexSet::Ball { center, .. } => Some(center.clone()),
            ConvexSet::AffineSubspace(inner) => inner.known_fixed_point(),
            // Projecting the origin yields a member of the set.
            _ => self.project(&VecN::zeros(self.dim)).ok(),
        }
    }

    fn describe(&self) -> String {
        match &self.set {
            ConvexSet::Box { .. } => format!("projection(box, n={})", self.dim),
            ConvexSet::Ball { radius, .. } => {
                format!("projection(ball, r={radius}, n={})", self.dim)
            }
            ConvexSet::Halfspace { offset, .. } => {
                format!("projection(halfspace, c={offset}, n={})", self.dim)
            }
            ConvexSet::AffineSubspace(inner) => {
                format!("projection(affine-subspace of {})", inner.describe())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Gradient step
// ---------------------------------------------------------------------------

/// `x -> x - alpha * grad_f(x)` for a convex `f` whose gradient is
/// `lambda`-Lipschitz, with `0 < alpha < 2/lambda` enforced at
/// construction. Fixed points are the minimizers of `f`.
pub struct GradientStep {
    grad: Box<dyn Fn(&VecN) -> VecN + Send + Sync>,
    lipschitz: f64,
    step: f64,
    dim: usize,
    fixed_point_hint: Option<VecN>,
    verified: bool,
    label: String,
}

impl fmt::Debug for GradientStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradientStep")
            .field("lipschitz", &self.lipschitz)
            .field("step", &self.step)
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish()
    }
}

impl GradientStep {
    /// A user-supplied gradient oracle. Convexity and the Lipschitz claim
    /// cannot be checked here, so the map is flagged unverified.
    pub fn new(
        dim: usize,
        grad: impl Fn(&VecN) -> VecN + Send + Sync + 'static,
        lipschitz: f64,
        step: f64,
        fixed_point_hint: Option<VecN>,
    ) -> Result<Self, MapError> {
        Self::build(
            dim,
            Box::new(grad),
            lipschitz,
            step,
            fixed_point_hint,
            false,
            "gradient-step(custom oracle)".into(),
        )
    }

    /// Diagonal convex quadratic `f(x) = 1/2 sum_k w_k (x_k - c_k)^2` with
    /// nonnegative weights; `lambda = max w` (or 1 when all weights vanish
    /// and the map is the identity). `alpha` defaults to `1/lambda`.
    pub fn quadratic(
        weights: Vec<f64>,
        center: Vec<f64>,
        alpha: Option<f64>,
    ) -> Result<Self, MapError> {
        let weights = VecN::new(weights).map_err(MapError::Linalg)?;
        let center = VecN::new(center).map_err(MapError::Linalg)?;
        if weights.dim() != center.dim() {
            return Err(MapError::DimensionMismatch {
                got: weights.dim(),
                expected: center.dim(),
            });
        }
        if weights.entries().iter().any(|w| *w < 0.0) {
            return Err(MapError::InvalidParameter(
                "quadratic weights must be nonnegative".into(),
            ));
        }
        let lipschitz = weights.entries().iter().copied().fold(0.0f64, f64::max);
        let lipschitz = if lipschitz > 0.0 { lipschitz } else { 1.0 };
        let step = alpha.unwrap_or(1.0 / lipschitz);
        let dim = weights.dim();
        let label = format!("gradient-step(quadratic, n={dim})");
        let hint = center.clone();
        let w = weights.clone();
        let c = center;
        Self::build(
            dim,
            Box::new(move |x: &VecN| {
                VecN::from_raw(
                    x.entries()
                        .iter()
                        .zip(w.entries().iter().zip(c.entries()))
                        .map(|(&v, (&wk, &ck))| wk * (v - ck))
                        .collect(),
                )
            }),
            lipschitz,
            step,
            Some(hint),
            true,
            label,
        )
    }

    /// The identity map (zero gradient); every point is fixed.
    pub fn identity(dim: usize) -> Self {
        Self::quadratic(vec![0.0; dim], vec![0.0; dim], None)
            .expect("identity parameters are valid")
    }

    fn build(
        dim: usize,
        grad: Box<dyn Fn(&VecN) -> VecN + Send + Sync>,
        lipschitz: f64,
        step: f64,
        fixed_point_hint: Option<VecN>,
        verified: bool,
        label: String,
    ) -> Result<Self, MapError> {
        if dim == 0 {
            return Err(MapError::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(MapError::InvalidParameter(format!(
                "Lipschitz parameter must be positive and finite, got {lipschitz}"
            )));
        }
        if !(step > 0.0 && step < 2.0 / lipschitz) {
            return Err(MapError::InvalidParameter(format!(
                "step {step} outside (0, {})",
                2.0 / lipschitz
            )));
        }
        Ok(GradientStep {
            grad,
            lipschitz,
            step,
            dim,
            fixed_point_hint,
            verified,
            label,
        })
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

impl Paracontraction for GradientStep {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &VecN) -> Result<VecN, MapError> {
        ensure_input(self.dim, x)?;
        let g = (self.grad)(x);
        if g.dim() != self.dim {
            return Err(MapError::DimensionMismatch {
                got: g.dim(),
                expected: self.dim,
            });
        }
        Ok(x.sub(&g.scale(self.step)))
    }

    fn known_fixed_point(&self) -> Option<VecN> {
        self.fixed_point_hint.clone()
    }

    fn is_verified(&self) -> bool {
        self.verified
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

// ---------------------------------------------------------------------------
// Proximal maps
// ---------------------------------------------------------------------------

/// `sign(v) * max(|v| - w, 0)`: the proximal map of `w |.|` in one
/// coordinate.
pub fn soft_threshold(v: f64, w: f64) -> f64 {
    if v > w {
        v - w
    } else if v < -w {
        v + w
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
enum ProximalKind {
    /// `w ||u||_1`: coordinatewise soft-thresholding, fixed point 0.
    L1 { weight: f64 },
    /// `(c/2) ||u - v||^2`: `prox(x) = (x + c v) / (1 + c)`, fixed point v.
    Quadratic { weight: f64, center: VecN },
    /// Indicator of a supported convex set: reduces to the projection.
    Indicator(ConvexProjection),
}

/// The proximal map `x -> argmin_u f(u) + 1/2 ||u - x||^2` for the
/// supported closed proper convex `f`. Fixed points are the minimizers
/// of `f`.
#[derive(Debug, Clone)]
pub struct Proximal {
    kind: ProximalKind,
    dim: usize,
}

impl Proximal {
    pub fn l1(dim: usize, weight: f64) -> Result<Self, MapError> {
        if dim == 0 {
            return Err(MapError::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(MapError::InvalidParameter(format!(
                "l1 weight must be positive, got {weight}"
            )));
        }
        Ok(Proximal {
            kind: ProximalKind::L1 { weight },
            dim,
        })
    }

    pub fn quadratic(center: Vec<f64>, weight: f64) -> Result<Self, MapError> {
        let center = VecN::new(center).map_err(MapError::Linalg)?;
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(MapError::InvalidParameter(format!(
                "quadratic weight must be positive, got {weight}"
            )));
        }
        let dim = center.dim();
        Ok(Proximal {
            kind: ProximalKind::Quadratic { weight, center },
            dim,
        })
    }

    pub fn indicator(projection: ConvexProjection) -> Self {
        let dim = projection.dim();
        Proximal {
            kind: ProximalKind::Indicator(projection),
            dim,
        }
    }
}

impl Paracontraction for Proximal {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &VecN) -> Result<VecN, MapError> {
        ensure_input(self.dim, x)?;
        match &self.kind {
            ProximalKind::L1 { weight } => Ok(VecN::from_raw(
                x.entries()
                    .iter()
                    .map(|&v| soft_threshold(v, *weight))
                    .collect(),
            )),
            ProximalKind::Quadratic { weight, center } => {
                Ok(x.add(&center.scale(*weight)).scale(1.0 / (1.0 + weight)))
            }
            ProximalKind::Indicator(projection) => projection.project(x),
        }
    }

    fn known_fixed_point(&self) -> Option<VecN> {
        match &self.kind {
            ProximalKind::L1 { .. } => Some(VecN::zeros(self.dim)),
            ProximalKind::Quadratic { center, .. } => Some(center.clone()),
            ProximalKind::Indicator(projection) => projection.known_fixed_point(),
        }
    }

    fn describe(&self) -> String {
        match &self.kind {
            ProximalKind::L1 { weight } => format!("prox(l1, w={weight}, n={})", self.dim),
            ProximalKind::Quadratic { weight, .. } => {
                format!("prox(quadratic, c={weight}, n={})", self.dim)
            }
            ProximalKind::Indicator(projection) => {
                format!("prox(indicator of {})", projection.describe())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Custom linear map (unverified)
// ---------------------------------------------------------------------------

/// `x -> Gx` for an arbitrary square matrix: a user-supplied map with no
/// paracontraction guarantee. The origin is a fixed point of every linear
/// map, so the property checker always has a point to test against.
#[derive(Debug, Clone)]
pub struct LinearMap {
    rows: Vec<VecN>,
    dim: usize,
}

impl LinearMap {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self, MapError> {
        let rows: Vec<VecN> = matrix
            .into_iter()
            .map(VecN::new)
            .collect::<Result<_, _>>()
            .map_err(MapError::Linalg)?;
        if rows.is_empty() {
            return Err(MapError::InvalidParameter("matrix must be nonempty".into()));
        }
        let dim = rows.len();
        for row in &rows {
            if row.dim() != dim {
                return Err(MapError::DimensionMismatch {
                    got: row.dim(),
                    expected: dim,
                });
            }
        }
        Ok(LinearMap { rows, dim })
    }

    /// Uniform scaling `x -> s x`.
    pub fn scaling(dim: usize, s: f64) -> Result<Self, MapError> {
        let mut matrix = vec![vec![0.0; dim]; dim];
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = s;
        }
        Self::new(matrix)
    }
}

impl Paracontraction for LinearMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &VecN) -> Result<VecN, MapError> {
        ensure_input(self.dim, x)?;
        Ok(VecN::from_raw(
            self.rows.iter().map(|row| row.dot(x)).collect(),
        ))
    }

    fn known_fixed_point(&self) -> Option<VecN> {
        Some(VecN::zeros(self.dim))
    }

    fn is_verified(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        format!("linear(n={}, unverified)", self.dim)
    }
}

// ---------------------------------------------------------------------------
// Paracontraction property checker
// ---------------------------------------------------------------------------

/// Outcome of sampling the paracontraction inequality around a fixed point.
/// `worst_margin` is the largest observed `||M(x)-y||_p - ||x-y||_p` over
/// non-fixed samples (`None` when nothing was tested); any margin beyond
/// [`NONEXPANSION_SLACK`] counts as a violation.
#[derive(Debug, Clone, Serialize)]
pub struct ParacontractionReport {
    pub samples_tested: usize,
    pub violations: usize,
    pub worst_margin: Option<f64>,
}

/// Samples `x` from a ball of radius 10 around the fixed point `y` (plus a
/// few scaled copies of `y`, probing the colinear case) and checks that
/// every non-fixed sample moves strictly closer to `y`.
///
/// Errors if `y` is not a fixed point of `map` within [`FIXED_POINT_TOL`].
/// With `samples == 0` nothing is drawn and the report is empty.
pub fn check_paracontraction(
    map: &dyn Paracontraction,
    y: &VecN,
    samples: usize,
    p: NormOrder,
    seed: u64,
) -> Result<ParacontractionReport, MapError> {
    let defect = map.apply(y)?.sub(y).p_norm(p);
    if defect.is_nan() || defect > FIXED_POINT_TOL {
        return Err(MapError::NotAFixedPoint { defect });
    }
    let mut report = ParacontractionReport {
        samples_tested: 0,
        violations: 0,
        worst_margin: None,
    };
    if samples == 0 {
        return Ok(report);
    }

    let mut probe = |x: &VecN| -> Result<(), MapError> {
        let fx = map.apply(x)?;
        if !fx.is_finite() {
            report.samples_tested += 1;
            report.violations += 1;
            report.worst_margin = Some(f64::INFINITY);
            return Ok(());
        }
        if fx.sub(x).p_norm(p) <= FIXED_POINT_TOL {
            return Ok(()); // fixed point; the inequality does not apply
        }
        let margin = fx.sub(y).p_norm(p) - x.sub(y).p_norm(p);
        report.samples_tested += 1;
        if margin > NONEXPANSION_SLACK {
            report.violations += 1;
        }
        report.worst_margin = Some(report.worst_margin.map_or(margin, |w| w.max(margin)));
        Ok(())
    };

    for lambda in [-1.0, -0.5, 0.0, 0.5, 1.5, 2.0] {
        probe(&y.scale(lambda))?;
    }
    let mut rng = seeded_rng(seed);
    let n = map.dim();
    for _ in 0..samples {
        let direction = gaussian_vec(&mut rng, n);
        let len = direction.p_norm(NormOrder::euclidean());
        let radius = 10.0 * rng.gen::<f64>();
        let x = if len > 0.0 {
            y.add(&direction.scale(radius / len))
        } else {
            y.clone()
        };
        probe(&x)?;
    }
    Ok(report)
}
