//! Discretized Biot–Savart field of a [`Loop`] and the guidance offsets
//! derived from it.
//!
//! Each segment contributes `Δl × (x − m) / ‖x − m‖³` with `m` its midpoint
//! (midpoint rule). The exact closed form for a finite straight segment would
//! remove the discretization error, but at the loop resolutions used here the
//! midpoint error is far below every tolerance we care about, and the
//! normalized offsets only depend on direction anyway.

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Loop, LoopFrame, Vec3};

/// Closest allowed approach to the conductor.
pub const SINGULARITY_RADIUS: f64 = 1e-6;

/// Smallest field magnitude that still defines a direction.
pub const MIN_FIELD_MAGNITUDE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    /// μ0·I/4π lumped into one constant.
    pub scale: f64,
    /// Offset length per control tick (m).
    pub gamma: f64,
    /// Weight of the in-plane field components.
    pub alpha: f64,
    /// Weight of the normal field component.
    pub beta: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self { scale: 1.0, gamma: 0.01, alpha: 1.0, beta: 1.0 }
    }
}

impl FieldParams {
    pub fn new(scale: f64, gamma: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { scale, gamma, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn with_gamma(gamma: f64) -> Self {
        Self { gamma, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::InvalidParameter("alpha and beta must be >= 0".into()));
        }
        if self.alpha == 0.0 && self.beta == 0.0 {
            return Err(Error::InvalidParameter("alpha and beta cannot both be 0".into()));
        }
        if !self.scale.is_finite() || self.scale == 0.0 {
            return Err(Error::InvalidParameter("field scale must be finite and nonzero".into()));
        }
        Ok(())
    }
}

pub fn field(lp: &Loop, x: &Vec3, params: &FieldParams) -> Result<Vec3> {
    let mut b = Vec3::zeros();
    let mut closest = f64::INFINITY;
    for (a, c) in lp.segments() {
        closest = closest.min(point_segment_distance(x, &a, &c));
        let dl = c - a;
        let r = x - (a + c) * 0.5;
        let d2 = r.norm_squared();
        b += dl.cross(&r) / (d2 * d2.sqrt());
    }
    if closest <= SINGULARITY_RADIUS {
        return Err(Error::Singularity { distance: closest });
    }
    Ok(b * params.scale)
}

pub fn flux_magnitude(lp: &Loop, x: &Vec3, params: &FieldParams) -> Result<f64> {
    field(lp, x, params).map(|b| b.norm())
}

fn normalized(b: Vec3, gamma: f64) -> Result<Vec3> {
    let magnitude = b.norm();
    if !(magnitude > MIN_FIELD_MAGNITUDE) {
        return Err(Error::DegenerateDirection { magnitude });
    }
    Ok(b * (gamma / magnitude))
}

/// `γ · B / ‖B‖`.
pub fn offset(lp: &Loop, x: &Vec3, params: &FieldParams) -> Result<Vec3> {
    normalized(field(lp, x, params)?, params.gamma)
}

/// Re-weight an already computed field: `α` on the in-plane components,
/// `β` on the normal component.
pub fn weight_planar(b: &Vec3, frame: &LoopFrame, params: &FieldParams) -> Vec3 {
    let bp1 = b.dot(&frame.p1);
    let bp2 = b.dot(&frame.p2);
    let bn = b.dot(&frame.normal);
    frame.p1 * (params.alpha * bp1) + frame.p2 * (params.alpha * bp2) + frame.normal * (params.beta * bn)
}

pub fn field_planar(lp: &Loop, frame: &LoopFrame, x: &Vec3, params: &FieldParams) -> Result<Vec3> {
    Ok(weight_planar(&field(lp, x, params)?, frame, params))
}

pub fn offset_planar(lp: &Loop, frame: &LoopFrame, x: &Vec3, params: &FieldParams) -> Result<Vec3> {
    normalized(field_planar(lp, frame, x, params)?, params.gamma)
}

/// Offset computed from a field vector that has already been evaluated.
pub fn offset_from_field(b: &Vec3, frame: Option<&LoopFrame>, params: &FieldParams) -> Result<Vec3> {
    match frame {
        Some(frame) => normalized(weight_planar(b, frame, params), params.gamma),
        None => normalized(*b, params.gamma),
    }
}
