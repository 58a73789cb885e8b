//! Linking number of two closed polylines.
//!
//! Each segment pair contributes the signed solid angle of the quadrilateral
//! it spans, so the result is exact for polygons up to rounding.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{segment_segment_distance, Vec3};

/// Curves closer than this are treated as touching.
pub const MIN_CURVE_SEPARATION: f64 = 1e-6;

fn closed_segments(curve: &[Vec3]) -> impl Iterator<Item = (&Vec3, &Vec3)> {
    let n = curve.len();
    (0..n).map(move |i| (&curve[i], &curve[(i + 1) % n]))
}

fn unit_or_zero(v: Vec3) -> Vec3 {
    let n = v.norm();
    if n > 1e-300 {
        v / n
    } else {
        Vec3::zeros()
    }
}

/// Signed solid-angle contribution of segments `a0 -> a1` and `b0 -> b1`,
/// in units of full turns.
fn pair_contribution(a0: &Vec3, a1: &Vec3, b0: &Vec3, b1: &Vec3) -> f64 {
    let r13 = b0 - a0;
    let r14 = b1 - a0;
    let r23 = b0 - a1;
    let r24 = b1 - a1;
    let n1 = unit_or_zero(r13.cross(&r14));
    let n2 = unit_or_zero(r14.cross(&r24));
    let n3 = unit_or_zero(r24.cross(&r23));
    let n4 = unit_or_zero(r23.cross(&r13));
    let asin = |x: f64| x.clamp(-1.0, 1.0).asin();
    let omega = asin(n1.dot(&n2)) + asin(n2.dot(&n3)) + asin(n3.dot(&n4)) + asin(n4.dot(&n1));
    let orientation = (b1 - b0).cross(&(a1 - a0)).dot(&r13);
    if orientation == 0.0 {
        return 0.0;
    }
    omega.copysign(orientation) / (4.0 * PI)
}

/// Unrounded linking sum; callers normally want [`linking_number`].
pub fn linking_sum(a: &[Vec3], b: &[Vec3]) -> f64 {
    closed_segments(a)
        .map(|(a0, a1)| closed_segments(b).map(|(b0, b1)| pair_contribution(a0, a1, b0, b1)).sum::<f64>())
        .sum()
}

/// Smallest distance between the two closed polylines.
pub fn curve_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    closed_segments(a)
        .flat_map(|(a0, a1)| closed_segments(b).map(move |(b0, b1)| segment_segment_distance(a0, a1, b0, b1)))
        .fold(f64::INFINITY, f64::min)
}

pub fn linking_number(a: &[Vec3], b: &[Vec3]) -> Result<i64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidParameter("curves need at least 2 points".into()));
    }
    let distance = curve_distance(a, b);
    if distance <= MIN_CURVE_SEPARATION {
        return Err(Error::IllConditioned { distance });
    }
    let sum = linking_sum(a, b);
    let rounded = sum.round();
    if (sum - rounded).abs() >= 0.1 {
        return Err(Error::IllConditioned { distance });
    }
    Ok(rounded as i64)
}
