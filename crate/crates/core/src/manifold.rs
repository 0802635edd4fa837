//! Geometry of the Poincaré ball `{x : ‖x‖ < 1}` with curvature −1.
//!
//! The metric is conformal to the Euclidean one, `g_x = λ(x)² g_E` with
//! `λ(x) = 2 / (1 − ‖x‖²)`, and the distance is
//!
//! ```text
//! d(u, v) = arcosh(1 + 2‖u − v‖² / ((1 − ‖u‖²)(1 − ‖v‖²)))
//! ```
//!
//! Points are kept at Euclidean norm at most `1 − ε`. Every operation validates its
//! inputs against that margin and reports a [`GeometryError`] instead of producing
//! infinities near the boundary.

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default containment margin ε.
pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point has norm {norm} but the ball admits at most {max}")]
    OutsideBall { norm: f64, max: f64 },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("distance gradient is undefined for coincident points")]
    CoincidentPoints,
    #[error("containment margin must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

/// `ln(z + sqrt(z² − 1))` with `z` clamped to `≥ 1`.
#[inline]
pub fn arcosh(z: f64) -> f64 {
    let z = z.max(1.0);
    (z + (z * z - 1.0).sqrt()).ln()
}

/// `0.5 · ln((1 + r) / (1 − r))`.
#[inline]
pub fn artanh(r: f64) -> f64 {
    0.5 * ((1.0 + r) / (1.0 - r)).ln()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn sq_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A point of the ball. Construction goes through [`PoincareBall::point`] or
/// [`PoincareBall::project_to_ball`], both of which enforce the margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareVector(Vec<f64>);

impl PoincareVector {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for PoincareVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A tangent vector at the origin; any finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector(pub Vec<f64>);

impl TangentVector {
    pub fn norm(&self) -> f64 {
        sq_norm(&self.0).sqrt()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for TangentVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// The unit ball with containment margin ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareBall {
    epsilon: f64,
}

impl Default for PoincareBall {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl PoincareBall {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(GeometryError::InvalidEpsilon(epsilon));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Largest admissible Euclidean norm, `1 − ε`.
    pub fn max_norm(&self) -> f64 {
        1.0 - self.epsilon
    }

    /// Validates `x` and returns its squared norm.
    #[inline]
    pub fn check(&self, x: &[f64]) -> Result<f64> {
        let sq = sq_norm(x);
        if !sq.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let norm = sq.sqrt();
        if norm > self.max_norm() {
            return Err(GeometryError::OutsideBall {
                norm,
                max: self.max_norm(),
            });
        }
        Ok(sq)
    }

    pub fn point(&self, coords: Vec<f64>) -> Result<PoincareVector> {
        self.check(&coords)?;
        Ok(PoincareVector(coords))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check(x).is_ok()
    }

    pub fn distance(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(GeometryError::DimensionMismatch(u.len(), v.len()));
        }
        let alpha = 1.0 - self.check(u)?;
        let beta = 1.0 - self.check(v)?;
        let t = 2.0 * sq_dist(u, v) / (alpha * beta);
        Ok(arcosh(1.0 + t))
    }

    /// Conformal factor `(2 / (1 − ‖x‖²))²`.
    pub fn metric_scale(&self, x: &[f64]) -> Result<f64> {
        let lambda = 2.0 / (1.0 - self.check(x)?);
        Ok(lambda * lambda)
    }

    /// Euclidean gradients of `d(u, v)` with respect to `u` and `v`.
    pub fn distance_grad(&self, u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut gu = vec![0.0; u.len()];
        let mut gv = vec![0.0; v.len()];
        self.distance_and_grad_into(u, v, 1.0, &mut gu, &mut gv)?;
        Ok((gu, gv))
    }

    /// Computes `d(u, v)` and accumulates `scale · ∂d/∂u` into `gu` and
    /// `scale · ∂d/∂v` into `gv`.
    pub fn distance_and_grad_into(
        &self,
        u: &[f64],
        v: &[f64],
        scale: f64,
        gu: &mut [f64],
        gv: &mut [f64],
    ) -> Result<f64> {
        let n = u.len();
        if v.len() != n || gu.len() != n || gv.len() != n {
            return Err(GeometryError::DimensionMismatch(n, v.len()));
        }
        let uu = self.check(u)?;
        let vv = self.check(v)?;
        let alpha = 1.0 - uu;
        let beta = 1.0 - vv;
        let diff = sq_dist(u, v);
        if diff == 0.0 {
            return Err(GeometryError::CoincidentPoints);
        }
        let uv = dot(u, v);
        let t = 2.0 * diff / (alpha * beta);
        let gamma = 1.0 + t;
        // γ² − 1 = t(t + 2), without cancellation for nearby points.
        let denom = (t * (t + 2.0)).sqrt();
        let cu = 4.0 / (beta * denom);
        let cv = 4.0 / (alpha * denom);
        let au = (vv - 2.0 * uv + 1.0) / (alpha * alpha);
        let av = (uu - 2.0 * uv + 1.0) / (beta * beta);
        for i in 0..n {
            gu[i] += scale * cu * (au * u[i] - v[i] / alpha);
            gv[i] += scale * cv * (av * v[i] - u[i] / beta);
        }
        Ok(arcosh(gamma))
    }

    /// Applies the inverse metric: `((1 − ‖x‖²)² / 4) · grad`.
    pub fn riemannian_rescale(&self, x: &[f64], euclidean_grad: &[f64]) -> Result<Vec<f64>> {
        if x.len() != euclidean_grad.len() {
            return Err(GeometryError::DimensionMismatch(
                x.len(),
                euclidean_grad.len(),
            ));
        }
        let a = 1.0 - self.check(x)?;
        let factor = a * a / 4.0;
        Ok(euclidean_grad.iter().map(|g| factor * g).collect())
    }

    /// Radially shrinks `x` onto the sphere of radius `1 − ε` if it lies outside it.
    pub fn project_to_ball(&self, x: &[f64]) -> Result<PoincareVector> {
        let mut coords = x.to_vec();
        self.project_in_place(&mut coords)?;
        Ok(PoincareVector(coords))
    }

    /// In-place projection; returns the resulting norm.
    pub fn project_in_place(&self, x: &mut [f64]) -> Result<f64> {
        let mut norm = sq_norm(x).sqrt();
        if !norm.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let max = self.max_norm();
        if norm <= max {
            return Ok(norm);
        }
        let mut scale = max / norm;
        // Rounding can leave the result an ulp outside; nudge until it is admissible.
        loop {
            x.iter_mut().for_each(|c| *c *= scale);
            norm = sq_norm(x).sqrt();
            if norm <= max {
                return Ok(norm);
            }
            scale = 1.0 - f64::EPSILON;
        }
    }

    /// `log₀(y) = 2·artanh(‖y‖)·y/‖y‖`, so that `‖log₀(y)‖ = d(0, y)`.
    pub fn log_map_origin(&self, y: &[f64]) -> Result<TangentVector> {
        let norm = self.check(y)?.sqrt();
        if norm == 0.0 {
            return Ok(TangentVector(vec![0.0; y.len()]));
        }
        let factor = 2.0 * artanh(norm) / norm;
        Ok(TangentVector(y.iter().map(|c| factor * c).collect()))
    }
}
