//! Kinematic rope: a chain of equal-length segments dragged by the points
//! that grippers hold.
//!
//! Free tails follow their bound neighbour (follow-the-leader). Sections
//! between two bound points are relaxed with alternating FABRIK passes.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::geometry::{Loop, Vec3};

const LENGTH_TOLERANCE: f64 = 1e-6;
const FABRIK_TOLERANCE: f64 = 1e-10;
const FABRIK_MAX_PASSES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Rope {
    points: Vec<Vec3>,
    segment_length: f64,
}

impl Rope {
    pub fn new(points: Vec<Vec3>, segment_length: f64) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidParameter("rope needs at least 3 points".into()));
        }
        if !(segment_length > 0.0) {
            return Err(Error::InvalidParameter("segment length must be > 0".into()));
        }
        for (k, w) in points.windows(2).enumerate() {
            let d = (w[1] - w[0]).norm();
            if (d - segment_length).abs() > LENGTH_TOLERANCE {
                return Err(Error::InvalidParameter(format!("segment {k} has length {d}, expected {segment_length}")));
            }
        }
        Ok(Self { points, segment_length })
    }

    /// `count` points along `direction` starting at `start`.
    pub fn straight(start: Vec3, direction: Vec3, count: usize, segment_length: f64) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidParameter("rope direction must be nonzero".into()));
        }
        let step = direction / n * segment_length;
        Self::new((0..count).map(|k| start + step * k as f64).collect(), segment_length)
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Vec3 {
        self.points[index]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segment_length(&self) -> f64 {
        self.segment_length
    }

    /// Index of the first end, R0.
    pub fn r0(&self) -> usize {
        0
    }

    /// Index of the last end, Rf.
    pub fn rf(&self) -> usize {
        self.points.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Worst deviation of any segment from the nominal length.
    pub fn length_error(&self) -> f64 {
        self.points.windows(2).map(|w| ((w[1] - w[0]).norm() - self.segment_length).abs()).fold(0.0, f64::max)
    }

    /// Move the `bound` points (rope index, target position) and let the rest
    /// of the rope comply. Leaves the rope untouched on error.
    pub fn update(&mut self, bound: &[(usize, Vec3)]) -> Result<()> {
        if bound.is_empty() {
            return Ok(());
        }
        let mut pins: Vec<(usize, Vec3)> = Vec::with_capacity(bound.len());
        let mut sorted = bound.to_vec();
        sorted.sort_by_key(|(i, _)| *i);
        for (i, p) in sorted {
            if i >= self.points.len() {
                return Err(Error::InvalidParameter(format!("rope index {i} out of range")));
            }
            match pins.last_mut() {
                // Two grippers on one point (hand-over): meet halfway.
                Some((j, q)) if *j == i => *q = (*q + p) * 0.5,
                _ => pins.push((i, p)),
            }
        }
        for w in pins.windows(2) {
            let (i, a) = w[0];
            let (j, b) = w[1];
            let distance = (b - a).norm();
            let length = (j - i) as f64 * self.segment_length;
            if distance > length * (1.0 + 1e-9) {
                return Err(Error::Overstretch { distance, length });
            }
        }

        let seg = self.segment_length;
        let pts = &mut self.points;
        let (first, first_target) = pins[0];
        let (last, last_target) = pins[pins.len() - 1];
        for w in pins.windows(2) {
            relax_section(pts, w[0], w[1], seg);
        }
        pts[first] = first_target;
        for k in (0..first).rev() {
            pts[k] = follow(pts[k + 1], pts[k], seg);
        }
        pts[last] = last_target;
        for k in last + 1..pts.len() {
            pts[k] = follow(pts[k - 1], pts[k], seg);
        }
        Ok(())
    }

    /// Closed polyline used to measure how the rope threads a loop: the rope
    /// from R0 to Rf, continued from Rf along its end tangent, brought around
    /// far from `center` on the `up` side, and back to R0 from a point beyond
    /// R0 as seen from `center`.
    pub fn closed_path(&self, center: &Vec3, up: &Vec3, reach: f64) -> Vec<Vec3> {
        let n = self.points.len();
        let tail = (self.points[n - 1] - self.points[n - 2]).normalize();
        let away = self.points[0] - center;
        let away = if away.norm() > 1e-9 { away.normalize() } else { -tail };
        let up = up.normalize();
        let a = self.points[n - 1] + tail * reach;
        let b = self.points[0] + away * reach;
        let mut path = self.points.clone();
        path.push(a);
        path.push(a + up * (10.0 * reach));
        path.push(b + up * (10.0 * reach));
        path.push(b);
        path
    }
}

/// Place `p` one segment from `leader`, keeping its current direction.
fn follow(leader: Vec3, p: Vec3, seg: f64) -> Vec3 {
    let d = p - leader;
    let n = d.norm();
    if n > 1e-12 {
        leader + d * (seg / n)
    } else {
        leader + Vec3::new(seg, 0.0, 0.0)
    }
}

/// FABRIK between two pinned rope points. Leads with the end that moved
/// further so that the other side of the section stays put where it can.
fn relax_section(pts: &mut [Vec3], (i, ti): (usize, Vec3), (j, tj): (usize, Vec3), seg: f64) {
    let lead_from_i = (ti - pts[i]).norm() >= (tj - pts[j]).norm();
    let forward = |pts: &mut [Vec3]| {
        pts[i] = ti;
        for k in i + 1..=j {
            pts[k] = follow(pts[k - 1], pts[k], seg);
        }
    };
    let backward = |pts: &mut [Vec3]| {
        pts[j] = tj;
        for k in (i..j).rev() {
            pts[k] = follow(pts[k + 1], pts[k], seg);
        }
    };
    for _ in 0..FABRIK_MAX_PASSES {
        if lead_from_i {
            forward(pts);
            if (pts[j] - tj).norm() < FABRIK_TOLERANCE {
                break;
            }
            backward(pts);
            if (pts[i] - ti).norm() < FABRIK_TOLERANCE {
                break;
            }
        } else {
            backward(pts);
            if (pts[i] - ti).norm() < FABRIK_TOLERANCE {
                break;
            }
            forward(pts);
            if (pts[j] - tj).norm() < FABRIK_TOLERANCE {
                break;
            }
        }
    }
    // A section pulled (almost) straight converges slowly; lay it on the chord.
    let chord = tj - ti;
    let length = (j - i) as f64 * seg;
    let drifted = (pts[i] - ti).norm() > LENGTH_TOLERANCE * 0.1 || (pts[j] - tj).norm() > LENGTH_TOLERANCE * 0.1;
    if drifted && chord.norm() >= length * (1.0 - 1e-6) {
        let dir = chord.normalize();
        for (k, p) in pts.iter_mut().enumerate().take(j + 1).skip(i) {
            *p = ti + dir * (seg * (k - i) as f64);
        }
    }
    pts[i] = ti;
    pts[j] = tj;
}

pub fn rope_update(rope: &Rope, bound: &[(usize, Vec3)]) -> Result<Rope> {
    let mut out = rope.clone();
    out.update(bound)?;
    Ok(out)
}

/// A crossing of rope segments `lower -> lower + 1` and `upper -> upper + 1`
/// (`lower < upper`) in projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub lower: usize,
    pub upper: usize,
    /// Segment `upper` lies nearer the viewer.
    pub upper_in_front: bool,
}

fn projector(view: &Vec3) -> impl Fn(&Vec3) -> (Vector2<f64>, f64) {
    let d = view.normalize();
    let seed = if d.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = (seed - d * seed.dot(&d)).normalize();
    let w = d.cross(&u);
    move |p: &Vec3| (Vector2::new(p.dot(&u), p.dot(&w)), p.dot(&d))
}

/// Proper intersection parameters of 2D segments `a0a1` and `b0b1`.
fn segment_intersection(
    a0: &Vector2<f64>,
    a1: &Vector2<f64>,
    b0: &Vector2<f64>,
    b1: &Vector2<f64>,
) -> Option<(f64, f64)> {
    let r = a1 - a0;
    let s = b1 - b0;
    let denom = r.x * s.y - r.y * s.x;
    if denom.abs() < 1e-15 {
        return None;
    }
    let q = b0 - a0;
    let t = (q.x * s.y - q.y * s.x) / denom;
    let u = (q.x * r.y - q.y * r.x) / denom;
    if (0.0..1.0).contains(&t) && (0.0..1.0).contains(&u) {
        Some((t, u))
    } else {
        None
    }
}

/// All self-crossings of the rope seen along `view`, ordered by
/// `(lower, upper)`.
pub fn crossings(points: &[Vec3], view: &Vec3) -> Vec<Crossing> {
    let project = projector(view);
    let proj: Vec<(Vector2<f64>, f64)> = points.iter().map(&project).collect();
    let mut out = Vec::new();
    let n = points.len();
    for i in 0..n.saturating_sub(1) {
        for j in i + 2..n - 1 {
            if let Some((t, u)) = segment_intersection(&proj[i].0, &proj[i + 1].0, &proj[j].0, &proj[j + 1].0) {
                let depth_i = proj[i].1 + t * (proj[i + 1].1 - proj[i].1);
                let depth_j = proj[j].1 + u * (proj[j + 1].1 - proj[j].1);
                // depth grows away from the viewer
                out.push(Crossing { lower: i, upper: j, upper_in_front: depth_j < depth_i });
            }
        }
    }
    out
}

/// The closed loop cut out by a crossing: rope points `lower + 1 ..= upper`
/// closed by the chord between them.
pub fn loop_at_crossing(points: &[Vec3], crossing: &Crossing) -> Result<Loop> {
    Loop::new(points[crossing.lower + 1..=crossing.upper].to_vec())
}

/// Extract the target loop for threading: the crossing whose loop is
/// smallest in rope length (the most recently tightened twist), oriented
/// so that its field at the centre points away from `entry` (the side the
/// carrying gripper approaches from).
pub fn rope_loop_extraction(rope: &Rope, view: &Vec3, entry: &Vec3) -> Result<(Loop, Crossing)> {
    let found = crossings(rope.points(), view);
    let crossing = found
        .iter()
        .filter(|c| c.upper - c.lower >= 3)
        .min_by_key(|c| (c.upper - c.lower, c.lower))
        .copied()
        .ok_or(Error::NoLoop)?;
    let lp = loop_at_crossing(rope.points(), &crossing)?;
    Ok((orient_toward(lp, entry), crossing))
}

/// Reverse `lp` if needed so that its area vector points away from `entry`.
pub fn orient_toward(lp: Loop, entry: &Vec3) -> Loop {
    if lp.area_vector().dot(&(lp.centroid() - entry)) < 0.0 {
        lp.reversed()
    } else {
        lp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five() -> Rope {
        Rope::straight(Vec3::zeros(), Vec3::x(), 5, 1.0).unwrap()
    }

    /// Independent follow-the-leader reference for a single bound end.
    fn ftl_oracle(points: &[Vec3], head: Vec3, seg: f64) -> Vec<Vec3> {
        let mut out = vec![head];
        for p in &points[1..] {
            let prev = *out.last().unwrap();
            out.push(prev + (p - prev).normalize() * seg);
        }
        out
    }

    #[test]
    fn single_end_drag_matches_oracle() {
        let mut rope = five();
        let head = Vec3::new(-1.0, 0.0, 0.0);
        let expected = ftl_oracle(rope.points(), head, 1.0);
        rope.update(&[(0, head)]).unwrap();
        for (a, b) in rope.points().iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12);
        }
        // pulling along the axis drags every point by the same amount
        assert!((rope.point(4) - Vec3::new(3.0, 0.0, 0.0)).norm() < 1e-12);

        let mut rope = five();
        let head = Vec3::new(0.0, 1.0, 0.0);
        let expected = ftl_oracle(rope.points(), head, 1.0);
        rope.update(&[(0, head)]).unwrap();
        for (a, b) in rope.points().iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(rope.length_error() < 1e-12);
    }

    #[test]
    fn no_bound_points_leaves_rope() {
        let mut rope = five();
        rope.update(&[]).unwrap();
        assert_eq!(rope, five());
    }

    #[test]
    fn overstretch_detected() {
        let mut rope = five();
        let err = rope.update(&[(0, Vec3::zeros()), (4, Vec3::new(4.5, 0.0, 0.0))]);
        assert!(matches!(err, Err(Error::Overstretch { .. })));
        assert_eq!(rope, five());
    }

    #[test]
    fn two_pins_keep_lengths() {
        let mut rope = Rope::straight(Vec3::zeros(), Vec3::x(), 21, 0.05).unwrap();
        rope.update(&[(0, Vec3::new(0.2, 0.1, 0.0)), (20, Vec3::new(0.8, -0.1, 0.1))]).unwrap();
        assert!(rope.length_error() < 1e-6);
        assert!((rope.point(0) - Vec3::new(0.2, 0.1, 0.0)).norm() < 1e-12);
        assert!((rope.point(20) - Vec3::new(0.8, -0.1, 0.1)).norm() < 1e-12);

        // pulled exactly taut
        rope.update(&[(0, Vec3::zeros()), (20, Vec3::new(1.0, 0.0, 0.0))]).unwrap();
        assert!(rope.length_error() < 1e-6);
        assert!((rope.point(10) - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-5);
    }

    #[test]
    fn middle_pin_drags_both_tails() {
        let mut rope = Rope::straight(Vec3::zeros(), Vec3::x(), 11, 0.1).unwrap();
        let target = Vec3::new(0.5, 0.3, 0.0);
        rope.update(&[(5, target)]).unwrap();
        assert!(rope.length_error() < 1e-12);
        assert_eq!(rope.point(5), target);
        assert!(rope.point(0).y > 0.0 && rope.point(10).y > 0.0);
    }

    #[test]
    fn straight_rope_has_no_loop() {
        let rope = Rope::straight(Vec3::zeros(), Vec3::y(), 30, 0.02).unwrap();
        assert!(crossings(rope.points(), &Vec3::x()).is_empty());
        assert_eq!(rope_loop_extraction(&rope, &Vec3::x(), &Vec3::zeros()).unwrap_err(), Error::NoLoop);
    }

    /// Nodal cubic (t^2 - 1, t^3 - t) in the YZ plane with a little depth,
    /// resampled to equal segments. Crosses itself once at t = +-1.
    fn curl() -> Rope {
        let seg = 0.01;
        let dense: Vec<Vec3> = (0..=4000)
            .map(|k| {
                let t = -1.6 + 3.2 * k as f64 / 4000.0;
                Vec3::new(0.01 * t, 0.2 * (t * t - 1.0), 0.2 * (t * t * t - t))
            })
            .collect();
        let mut out = vec![dense[0]];
        for p in &dense {
            let last = *out.last().unwrap();
            if (p - last).norm() >= seg {
                out.push(last + (p - last).normalize() * seg);
            }
        }
        Rope::new(out, seg).unwrap()
    }

    #[test]
    fn curl_yields_loop() {
        let rope = curl();
        let found = crossings(rope.points(), &Vec3::x());
        assert_eq!(found.len(), 1, "{found:?}");
        let entry = Vec3::new(-0.5, 0.0, 0.1);
        let (lp, _) = rope_loop_extraction(&rope, &Vec3::x(), &entry).unwrap();
        assert!(lp.len() >= 8);
        let area = lp.area_vector();
        assert!(area.norm() > 0.02);
        // oriented away from the entry side
        assert!(area.dot(&(lp.centroid() - entry)) > 0.0);
    }

    #[test]
    fn closed_path_links_threaded_loop() {
        use crate::geometry::make_circle;
        use crate::linking::linking_number;
        let ring = make_circle(0.1, 0.2, Vec3::zeros(), Vec3::x()).unwrap();
        let threaded = Rope::straight(Vec3::new(-0.5, 0.0, 0.0), Vec3::x(), 40, 0.02).unwrap();
        let path = threaded.closed_path(&Vec3::zeros(), &Vec3::z(), 5.0);
        assert_eq!(linking_number(&path, ring.vertices()).unwrap().abs(), 1);
        let beside = Rope::straight(Vec3::new(-0.5, 0.3, 0.0), Vec3::x(), 40, 0.02).unwrap();
        let path = beside.closed_path(&Vec3::zeros(), &Vec3::z(), 5.0);
        assert_eq!(linking_number(&path, ring.vertices()).unwrap(), 0);
    }
}
