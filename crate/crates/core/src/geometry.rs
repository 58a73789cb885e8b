//! Closed polyline loops and their planar frames.
//!
//! A [`Loop`] is the virtual conductor: an ordered list of vertices joined
//! into a closed polyline (the last vertex connects back to the first; the
//! closing vertex is never duplicated). Vertex order is the direction of the
//! virtual current, so reversing the order flips every field vector.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use nalgebra::{Isometry3, Matrix3, SymmetricEigen, Vector2, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Minimum separation between consecutive vertices.
pub const MIN_VERTEX_SEPARATION: f64 = 1e-9;

/// Relative (to loop diameter) distance from the plane accepted by
/// [`point_inside_planar`].
pub const PLANE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    vertices: Vec<Vec3>,
}

impl Loop {
    pub fn new(vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidLoop(format!("need at least 3 vertices, got {}", vertices.len())));
        }
        let n = vertices.len();
        for i in 0..n {
            let a = &vertices[i];
            let b = &vertices[(i + 1) % n];
            if !a.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidLoop(format!("vertex {i} is not finite")));
            }
            if (b - a).norm() <= MIN_VERTEX_SEPARATION {
                return Err(Error::InvalidLoop(format!("vertices {i} and {} coincide", (i + 1) % n)));
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn into_vertices(self) -> Vec<Vec3> {
        self.vertices
    }

    /// Segments `(start, end)`, including the closing one.
    pub fn segments(&self) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn reversed(&self) -> Loop {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Loop { vertices }
    }

    pub fn centroid(&self) -> Vec3 {
        self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64
    }

    /// Half the sum of `v_i × v_{i+1}` taken about the centroid. Its direction
    /// is the normal about which the loop turns counter-clockwise.
    pub fn area_vector(&self) -> Vec3 {
        let c = self.centroid();
        self.segments().map(|(a, b)| (a - c).cross(&(b - c))).sum::<Vec3>() * 0.5
    }

    pub fn signed_area(&self, normal: &Vec3) -> f64 {
        self.area_vector().dot(normal)
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    /// Largest pairwise vertex distance.
    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut best = 0.0f64;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                best = best.max((v[i] - v[j]).norm_squared());
            }
        }
        best.sqrt()
    }

    /// Mean vertex distance from the centroid.
    pub fn mean_radius(&self) -> f64 {
        let c = self.centroid();
        self.vertices.iter().map(|v| (v - c).norm()).sum::<f64>() / self.len() as f64
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> Loop {
        Loop { vertices: self.vertices.iter().map(|v| iso.transform_point(&(*v).into()).coords).collect() }
    }

    pub fn translated(&self, offset: &Vec3) -> Loop {
        Loop { vertices: self.vertices.iter().map(|v| v + offset).collect() }
    }

    /// Parse the plain-text vertex format: one `x y z` triple per line,
    /// blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Result<Loop> {
        let mut vertices = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected 3 coordinates, found {}", fields.len()),
                });
            }
            let mut xyz = [0.0; 3];
            for (slot, field) in xyz.iter_mut().zip(&fields) {
                *slot = field
                    .parse()
                    .map_err(|_| Error::Parse { line: idx + 1, message: format!("not a number: {field:?}") })?;
            }
            vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
        }
        Loop::new(vertices)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# x y z (m)\n");
        for v in &self.vertices {
            let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
        }
        out
    }
}

/// Orthonormal frame of a (near-)planar loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopFrame {
    pub centroid: Vec3,
    pub normal: Vec3,
    pub p1: Vec3,
    pub p2: Vec3,
}

impl LoopFrame {
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (p - self.centroid).dot(&self.normal)
    }

    /// In-plane coordinates `(p·v_P1, p·v_P2)` relative to the centroid.
    pub fn project(&self, p: &Vec3) -> Vector2<f64> {
        let d = p - self.centroid;
        Vector2::new(d.dot(&self.p1), d.dot(&self.p2))
    }
}

fn orthonormal_basis(normal: &Vec3) -> (Vec3, Vec3) {
    // Anchor the first in-plane axis to +X where possible so that
    // `make_circle(.., +Z)` starts at (r, 0, 0).
    let seed = if normal.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = (seed - normal * seed.dot(normal)).normalize();
    let w = normal.cross(&u);
    (u, w)
}

fn vertex_count(span: f64, step: f64) -> usize {
    // Guard against 2π/(π/2) evaluating to 4.000000000000001.
    (span / step - 1e-9).ceil() as usize
}

/// Circle of `radius` around `center`, counter-clockwise about `normal`.
///
/// Uses `n = ⌈2π / angular_step⌉` vertices spaced evenly at `2πk / n`, so the
/// actual step is at most `angular_step` and the polygon is symmetric.
pub fn make_circle(radius: f64, angular_step: f64, center: Vec3, normal: Vec3) -> Result<Loop> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be > 0, got {radius}")));
    }
    if !(angular_step > 0.0 && angular_step < PI) {
        return Err(Error::InvalidParameter(format!("angular step must be in (0, π), got {angular_step}")));
    }
    let n_norm = normal.norm();
    if !(n_norm > 0.0) || !n_norm.is_finite() {
        return Err(Error::InvalidParameter("normal must be a nonzero vector".into()));
    }
    let normal = normal / n_norm;
    let (u, w) = orthonormal_basis(&normal);
    let n = vertex_count(TAU, angular_step);
    let vertices = (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            center + radius * (a.cos() * u + a.sin() * w)
        })
        .collect();
    Loop::new(vertices)
}

/// Circle in the XY plane (counter-clockwise about +Z) whose `y > 0` half is
/// rotated by `fold_angle` about the X axis.
pub fn make_folded(radius: f64, angular_step: f64, fold_angle: f64) -> Result<Loop> {
    if !(0.0..=PI).contains(&fold_angle) {
        return Err(Error::InvalidParameter(format!("fold angle must be in [0, π], got {fold_angle}")));
    }
    let circle = make_circle(radius, angular_step, Vec3::zeros(), Vec3::z())?;
    let (s, c) = fold_angle.sin_cos();
    let vertices = circle
        .into_vertices()
        .into_iter()
        .map(|v| if v.y > 0.0 { Vec3::new(v.x, v.y * c, v.y * s) } else { v })
        .collect();
    Loop::new(vertices)
}

/// Two turns around +Z rising by `pitch` per turn, closed by a return
/// segment from the top of the second turn to the first vertex. Both turns
/// reuse the angles of [`make_circle`], so `pitch = 0` gives two coincident
/// copies of the same circle.
pub fn make_double(radius: f64, angular_step: f64, pitch: f64) -> Result<Loop> {
    if !(pitch >= 0.0) {
        return Err(Error::InvalidParameter(format!("pitch must be >= 0, got {pitch}")));
    }
    let circle = make_circle(radius, angular_step, Vec3::zeros(), Vec3::z())?;
    let n = circle.len();
    let mut vertices = Vec::with_capacity(2 * n);
    for turn in 0..2 {
        for (k, v) in circle.vertices().iter().enumerate() {
            let frac = k as f64 / n as f64;
            vertices.push(Vec3::new(v.x, v.y, pitch * (turn as f64 + frac)));
        }
    }
    Loop::new(vertices)
}

/// Least-squares plane through the loop vertices.
///
/// The normal is the eigenvector of the smallest eigenvalue of the vertex
/// scatter matrix, signed so the loop has positive area about it. `p1` points
/// from the centroid toward the first vertex (projected into the plane).
pub fn fit_plane_frame(lp: &Loop) -> Result<LoopFrame> {
    let centroid = lp.centroid();
    let mut scatter = Matrix3::zeros();
    for v in lp.vertices() {
        let d = v - centroid;
        scatter += d * d.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[2]];
    let middle = eig.eigenvalues[order[1]];
    if !(largest > 0.0) || middle <= 1e-12 * largest {
        return Err(Error::DegenerateGeometry("loop vertices are collinear".into()));
    }
    let mut normal: Vec3 = eig.eigenvectors.column(order[0]).into_owned().normalize();
    let area = lp.area_vector().dot(&normal);
    if area < 0.0 {
        normal = -normal;
    } else if area == 0.0 {
        return Err(Error::DegenerateGeometry("loop has zero signed area".into()));
    }

    let p1 = lp
        .vertices()
        .iter()
        .map(|v| {
            let d = v - centroid;
            d - normal * d.dot(&normal)
        })
        .find(|d| d.norm() > MIN_VERTEX_SEPARATION)
        .ok_or_else(|| Error::DegenerateGeometry("all vertices project onto the centroid".into()))?
        .normalize();
    let p2 = normal.cross(&p1);
    Ok(LoopFrame { centroid, normal, p1, p2 })
}

/// Plane crossing of the move `p0 -> p1`.
///
/// The move is treated as the half-open interval `(p0, p1]`: ending exactly
/// on the plane counts, starting on it does not, so a trajectory touching
/// the plane at a sample is counted once. The sign is `+1` for motion along
/// `+v_N` and `-1` otherwise.
pub fn plane_crossing(p0: &Vec3, p1: &Vec3, frame: &LoopFrame) -> Option<(Vec3, i8)> {
    let d0 = frame.signed_distance(p0);
    let d1 = frame.signed_distance(p1);
    let crosses = (d0 < 0.0 && d1 >= 0.0) || (d0 > 0.0 && d1 <= 0.0);
    if !crosses {
        return None;
    }
    let t = d0 / (d0 - d1);
    let point = p0 + (p1 - p0) * t;
    Some((point, if d1 > d0 { 1 } else { -1 }))
}

/// Winding number of the closed 2D polygon about `p` (crossing rule with
/// orientation, as in Sunday's algorithm).
pub fn winding_number_2d(polygon: &[Vector2<f64>], p: &Vector2<f64>) -> i32 {
    let n = polygon.len();
    let mut wn = 0;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        let is_left = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if a.y <= p.y {
            if b.y > p.y && is_left > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && is_left < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// True iff the loop, projected into `frame`, winds around `p`.
pub fn point_inside_planar(lp: &Loop, frame: &LoopFrame, p: &Vec3) -> Result<bool> {
    let limit = PLANE_TOLERANCE * lp.diameter();
    let distance = frame.signed_distance(p).abs();
    if distance > limit {
        return Err(Error::OffPlane { distance, limit });
    }
    Ok(winding_about(lp, frame, p) != 0)
}

/// Winding number of the projected loop about the projection of `p`, with no
/// plane-distance precondition.
pub fn winding_about(lp: &Loop, frame: &LoopFrame, p: &Vec3) -> i32 {
    let polygon: Vec<Vector2<f64>> = lp.vertices().iter().map(|v| frame.project(v)).collect();
    winding_number_2d(&polygon, &frame.project(p))
}

/// Closest distance between point `p` and segment `a -> b`.
pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

/// Closest distance between segments `p0 -> p1` and `q0 -> q1`.
pub fn segment_segment_distance(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return r.norm();
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit_circle() -> Loop {
        make_circle(1.0, 0.1, Vec3::zeros(), Vec3::z()).unwrap()
    }

    fn angle_sum_winding(polygon: &[Vector2<f64>], p: &Vector2<f64>) -> f64 {
        let n = polygon.len();
        let mut total = 0.0;
        for i in 0..n {
            let a = polygon[i] - p;
            let b = polygon[(i + 1) % n] - p;
            total += (a.x * b.y - a.y * b.x).atan2(a.dot(&b));
        }
        total / TAU
    }

    #[test]
    fn circle_vertex_count_and_radius() {
        let c = unit_circle();
        assert_eq!(c.len(), 63);
        for v in c.vertices() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        assert!(c.signed_area(&Vec3::z()) > 0.0);
    }

    #[test]
    fn quarter_step_gives_square() {
        let sq = make_circle(1.0, FRAC_PI_2, Vec3::zeros(), Vec3::z()).unwrap();
        assert_eq!(sq.len(), 4);
    }

    #[test]
    fn circle_about_arbitrary_normal_is_ccw() {
        let n = Vec3::new(1.0, -2.0, 0.5).normalize();
        let c = make_circle(0.3, 0.2, Vec3::new(1.0, 2.0, 3.0), n).unwrap();
        assert!(c.signed_area(&n) > 0.0);
        let down = make_circle(1.0, 0.1, Vec3::zeros(), -Vec3::z()).unwrap();
        assert!(down.signed_area(&-Vec3::z()) > 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_circle(0.0, 0.1, Vec3::zeros(), Vec3::z()).is_err());
        assert!(make_circle(-1.0, 0.1, Vec3::zeros(), Vec3::z()).is_err());
        assert!(make_circle(1.0, 0.0, Vec3::zeros(), Vec3::z()).is_err());
        assert!(make_circle(1.0, PI, Vec3::zeros(), Vec3::z()).is_err());
        assert!(make_folded(1.0, 0.1, -0.1).is_err());
        assert!(make_folded(1.0, 0.1, 4.0).is_err());
        assert!(make_double(1.0, 0.1, -0.2).is_err());
        assert!(Loop::new(vec![Vec3::zeros(), Vec3::x()]).is_err());
        assert!(Loop::new(vec![Vec3::zeros(), Vec3::zeros(), Vec3::x()]).is_err());
    }

    #[test]
    fn zero_fold_matches_circle() {
        let f = make_folded(1.0, 0.1, 0.0).unwrap();
        for (a, b) in f.vertices().iter().zip(unit_circle().vertices()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn right_angle_fold_extent() {
        let f = make_folded(1.0, 0.1, FRAC_PI_2).unwrap();
        let zmax = f.vertices().iter().map(|v| v.z).fold(f64::MIN, f64::max);
        let zmin = f.vertices().iter().map(|v| v.z).fold(f64::MAX, f64::min);
        // Highest folded vertex is the one nearest angle π/2: (cos a, 0, sin a).
        let expected = (0..63).map(|k| (TAU * k as f64 / 63.0).sin()).fold(f64::MIN, f64::max);
        assert!((zmax - zmin - expected).abs() < 1e-12);
        assert!((zmax - zmin - 1.0).abs() < 1e-3);
        for v in f.vertices() {
            // distance to the fold axis (X axis)
            assert!((v.y * v.y + v.z * v.z).sqrt() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn double_loop_construction() {
        let d = make_double(1.0, 0.1, 0.2).unwrap();
        assert_eq!(d.len(), 2 * 63);
        let zmax = d.vertices().iter().map(|v| v.z).fold(f64::MIN, f64::max);
        let zmin = d.vertices().iter().map(|v| v.z).fold(f64::MAX, f64::min);
        let expected = 0.2 * (1.0 + 62.0 / 63.0);
        assert!((zmax - zmin - expected).abs() < 1e-12);
        assert!(zmax - zmin <= 0.4);
        let flat = make_double(1.0, 0.1, 0.0).unwrap();
        for k in 0..63 {
            assert_eq!(flat.vertices()[k], flat.vertices()[k + 63]);
        }
    }

    #[test]
    fn frame_of_unit_circle() {
        let f = fit_plane_frame(&unit_circle()).unwrap();
        assert!(f.centroid.norm() < 1e-12);
        assert!((f.normal - Vec3::z()).norm() < 1e-9);
        assert!((f.p1 - Vec3::x()).norm() < 1e-9);
        let r = fit_plane_frame(&unit_circle().reversed()).unwrap();
        assert!((r.normal + Vec3::z()).norm() < 1e-9);
    }

    #[test]
    fn collinear_loop_is_degenerate() {
        let lp = Loop::new(vec![Vec3::zeros(), Vec3::x(), 2.0 * Vec3::x()]).unwrap();
        assert!(matches!(fit_plane_frame(&lp), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn crossing_examples() {
        let frame = fit_plane_frame(&unit_circle()).unwrap();
        let (p, s) = plane_crossing(&Vec3::new(0.0, 0.0, -1.0), &Vec3::new(0.0, 0.0, 1.0), &frame).unwrap();
        assert!(p.norm() < 1e-15);
        assert_eq!(s, 1);
        let (p, s) = plane_crossing(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(0.0, 0.0, -1.0), &frame).unwrap();
        assert!(p.norm() < 1e-15);
        assert_eq!(s, -1);
        assert!(plane_crossing(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(1.0, 0.0, 2.0), &frame).is_none());
        // touching counts once: at the end of a move, not at the start of the next
        let a = Vec3::new(0.0, 0.0, 1.0);
        let b = Vec3::zeros();
        let c = Vec3::new(0.0, 0.0, -1.0);
        assert!(plane_crossing(&a, &b, &frame).is_some());
        assert!(plane_crossing(&b, &c, &frame).is_none());
    }

    #[test]
    fn inside_examples() {
        let lp = unit_circle();
        let frame = fit_plane_frame(&lp).unwrap();
        assert!(point_inside_planar(&lp, &frame, &Vec3::zeros()).unwrap());
        assert!(!point_inside_planar(&lp, &frame, &Vec3::new(2.0, 0.0, 0.0)).unwrap());
        let p = Vec3::new(0.999 * 0.3f64.cos(), 0.999 * 0.3f64.sin(), 0.0);
        let polygon: Vec<_> = lp.vertices().iter().map(|v| frame.project(v)).collect();
        let oracle = angle_sum_winding(&polygon, &frame.project(&p)).round() as i32;
        assert_eq!(oracle, 1);
        assert_eq!(point_inside_planar(&lp, &frame, &p).unwrap(), oracle != 0);
        assert!(matches!(point_inside_planar(&lp, &frame, &Vec3::new(0.0, 0.0, 0.1)), Err(Error::OffPlane { .. })));
    }

    #[test]
    fn winding_matches_angle_sum_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        // star-shaped, non-convex polygon and a doubly wound one
        let star: Vec<Vector2<f64>> = (0..14)
            .map(|k| {
                let a = k as f64 * TAU / 14.0;
                let r = if k % 2 == 0 { 1.0 } else { 0.45 };
                Vector2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let twice: Vec<Vector2<f64>> = (0..40)
            .map(|k| {
                let a = k as f64 * 2.0 * TAU / 40.0 + 0.01;
                let r = 1.0 + 0.05 * (k as f64 / 40.0);
                Vector2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        for poly in [&star, &twice] {
            for _ in 0..1000 {
                let p = Vector2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
                let oracle = angle_sum_winding(poly, &p).round() as i32;
                assert_eq!(winding_number_2d(poly, &p), oracle, "at {p:?}");
            }
        }
    }

    #[test]
    fn text_format_roundtrip() {
        let lp = make_folded(0.7, 0.3, 1.0).unwrap();
        let parsed = Loop::parse(&lp.to_text()).unwrap();
        assert_eq!(parsed, lp);
        let err = Loop::parse("0 0 0\n1 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let lp = Loop::parse("# square\n0 0 0\n1 0 0 # corner\n\n1 1 0\n0 1 0\n").unwrap();
        assert_eq!(lp.len(), 4);
    }

    #[test]
    fn segment_distance_cases() {
        let d = segment_segment_distance(
            &Vec3::new(-1.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(0.0, -1.0, 1.0),
            &Vec3::new(0.0, 1.0, 1.0),
        );
        assert!((d - 1.0).abs() < 1e-15);
        let d =
            segment_segment_distance(&Vec3::zeros(), &Vec3::x(), &Vec3::new(2.0, 0.0, 0.0), &Vec3::new(3.0, 0.0, 0.0));
        assert!((d - 1.0).abs() < 1e-15);
        assert!((point_segment_distance(&Vec3::new(0.5, 2.0, 0.0), &Vec3::zeros(), &Vec3::x()) - 2.0).abs() < 1e-15);
    }
}
