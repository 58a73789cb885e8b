//! Per-tick loop variants: Gaussian vertex noise, travelling cosine waves and
//! rigid motion.

use std::f64::consts::TAU;

use nalgebra::{Isometry3, Translation3, Unit, UnitQuaternion};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{fit_plane_frame, Loop, LoopFrame, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Isotropic,
    Cylindrical,
}

impl NoiseKind {
    pub fn label(&self) -> &'static str {
        match self {
            NoiseKind::Isotropic => "isotropic",
            NoiseKind::Cylindrical => "cylindrical",
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isotropic" | "iso" => Ok(NoiseKind::Isotropic),
            "cylindrical" | "cyl" => Ok(NoiseKind::Cylindrical),
            other => Err(Error::InvalidParameter(format!("unknown noise kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { kind, sigma })
    }
}

/// Draws noisy copies of a fixed nominal loop. The radial directions used by
/// cylindrical noise are computed once from the nominal frame.
#[derive(Debug, Clone)]
pub struct NoisePerturber {
    nominal: Loop,
    spec: NoiseSpec,
    frame: Option<LoopFrame>,
    radial: Vec<Vec3>,
}

impl NoisePerturber {
    pub fn new(nominal: Loop, spec: NoiseSpec) -> Result<Self> {
        let (frame, radial) = match spec.kind {
            NoiseKind::Isotropic => (None, Vec::new()),
            NoiseKind::Cylindrical => {
                let frame = fit_plane_frame(&nominal)?;
                (Some(frame), radial_directions(&nominal, &frame)?)
            }
        };
        Ok(Self { nominal, spec, frame, radial })
    }

    pub fn nominal(&self) -> &Loop {
        &self.nominal
    }

    pub fn spec(&self) -> NoiseSpec {
        self.spec
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Loop {
        if self.spec.sigma == 0.0 {
            return self.nominal.clone();
        }
        let normal = Normal::new(0.0, self.spec.sigma).expect("sigma validated");
        let vertices: Vec<Vec3> = match self.spec.kind {
            NoiseKind::Isotropic => self
                .nominal
                .vertices()
                .iter()
                .map(|v| {
                    let (dx, dy, dz) = (normal.sample(rng), normal.sample(rng), normal.sample(rng));
                    v + Vec3::new(dx, dy, dz)
                })
                .collect(),
            NoiseKind::Cylindrical => {
                let n = self.frame.as_ref().expect("cylindrical frame").normal;
                self.nominal
                    .vertices()
                    .iter()
                    .zip(&self.radial)
                    .map(|(v, r)| {
                        let (dr, dn) = (normal.sample(rng), normal.sample(rng));
                        v + r * dr + n * dn
                    })
                    .collect()
            }
        };
        // Gaussian displacements make coincident neighbours a measure-zero
        // event; fall back to the nominal loop rather than fail a whole run.
        Loop::new(vertices).unwrap_or_else(|_| self.nominal.clone())
    }
}

/// One noisy copy of `nominal`. Prefer [`NoisePerturber`] inside loops.
pub fn perturb<R: Rng + ?Sized>(nominal: &Loop, spec: NoiseSpec, rng: &mut R) -> Result<Loop> {
    Ok(NoisePerturber::new(nominal.clone(), spec)?.sample(rng))
}

/// Unit in-plane directions from the centroid to each vertex.
fn radial_directions(lp: &Loop, frame: &LoopFrame) -> Result<Vec<Vec3>> {
    lp.vertices()
        .iter()
        .map(|v| {
            let d = v - frame.centroid;
            let planar = d - frame.normal * d.dot(&frame.normal);
            let len = planar.norm();
            if len > 1e-12 {
                Ok(planar / len)
            } else {
                Err(Error::DegenerateGeometry("vertex at the loop centroid has no radial direction".into()))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveDirection {
    /// In the loop plane, along each vertex's radial direction.
    Parallel,
    /// Along the loop normal.
    Perpendicular,
}

/// Temporal angular frequency of the wave (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemporalProfile {
    Constant {
        omega: f64,
    },
    /// `omega(t) = omega0 + rate * t`.
    Chirp {
        omega0: f64,
        rate: f64,
    },
}

impl TemporalProfile {
    /// Phase `∫₀ᵗ omega(s) ds`.
    pub fn phase(&self, t: f64) -> f64 {
        match *self {
            TemporalProfile::Constant { omega } => omega * t,
            TemporalProfile::Chirp { omega0, rate } => omega0 * t + 0.5 * rate * t * t,
        }
    }

    pub fn omega(&self, t: f64) -> f64 {
        match *self {
            TemporalProfile::Constant { omega } => omega,
            TemporalProfile::Chirp { omega0, rate } => omega0 + rate * t,
        }
    }
}

impl Default for TemporalProfile {
    fn default() -> Self {
        TemporalProfile::Chirp { omega0: 1.0, rate: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSpec {
    pub amplitude: f64,
    pub direction: WaveDirection,
    /// Wave periods per loop turn.
    pub spatial_frequency: u32,
    pub temporal: TemporalProfile,
    /// Amplitude over the radius of the loop it was built for.
    pub ratio: f64,
}

impl WaveSpec {
    pub fn new(
        amplitude: f64,
        loop_radius: f64,
        direction: WaveDirection,
        spatial_frequency: u32,
        temporal: TemporalProfile,
    ) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!("wave amplitude must be >= 0, got {amplitude}")));
        }
        if !(loop_radius > 0.0) {
            return Err(Error::InvalidParameter(format!("loop radius must be > 0, got {loop_radius}")));
        }
        if spatial_frequency == 0 {
            return Err(Error::InvalidParameter("spatial frequency must be >= 1".into()));
        }
        Ok(Self { amplitude, direction, spatial_frequency, temporal, ratio: amplitude / loop_radius })
    }

    pub fn from_ratio(
        ratio: f64,
        loop_radius: f64,
        direction: WaveDirection,
        spatial_frequency: u32,
        temporal: TemporalProfile,
    ) -> Result<Self> {
        Self::new(ratio * loop_radius, loop_radius, direction, spatial_frequency, temporal)
    }
}

/// Precomputed displacement directions for repeated [`deform_wave`] calls on
/// the same nominal loop.
#[derive(Debug, Clone)]
pub struct WaveDeformer {
    nominal: Loop,
    spec: WaveSpec,
    directions: Vec<Vec3>,
}

impl WaveDeformer {
    pub fn new(nominal: Loop, spec: WaveSpec) -> Result<Self> {
        let frame = fit_plane_frame(&nominal)?;
        let directions = match spec.direction {
            WaveDirection::Parallel => radial_directions(&nominal, &frame)?,
            WaveDirection::Perpendicular => vec![frame.normal; nominal.len()],
        };
        Ok(Self { nominal, spec, directions })
    }

    pub fn spec(&self) -> &WaveSpec {
        &self.spec
    }

    pub fn nominal(&self) -> &Loop {
        &self.nominal
    }

    /// Displacement scalars along each vertex direction at time `t`.
    /// Vertex `i` of `n` sits at loop parameter `2πi/n`.
    pub fn offsets(&self, t: f64) -> Vec<f64> {
        let n = self.nominal.len();
        let phase = self.spec.temporal.phase(t);
        let f = self.spec.spatial_frequency as f64;
        (0..n).map(|i| self.spec.amplitude * (f * TAU * i as f64 / n as f64 + phase).cos()).collect()
    }

    pub fn at(&self, t: f64) -> Result<Loop> {
        if self.spec.amplitude == 0.0 {
            return Ok(self.nominal.clone());
        }
        let vertices = self
            .nominal
            .vertices()
            .iter()
            .zip(&self.directions)
            .zip(self.offsets(t))
            .map(|((v, d), s)| v + d * s)
            .collect();
        Loop::new(vertices)
    }
}

pub fn deform_wave(nominal: &Loop, spec: &WaveSpec, t: f64) -> Result<Loop> {
    WaveDeformer::new(nominal.clone(), *spec)?.at(t)
}

/// Rigid loop trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionPath {
    Static,
    /// Accelerates uniformly from rest to `velocity` over `ramp` seconds,
    /// then drifts at constant velocity.
    Drift {
        velocity: Vec3,
        ramp: f64,
    },
    /// `amplitude * sin(omega t)`.
    Oscillate {
        amplitude: Vec3,
        omega: f64,
    },
    /// Constant-rate rotation about `axis` through `pivot`.
    Spin {
        pivot: Vec3,
        axis: Vec3,
        rate: f64,
    },
}

impl MotionPath {
    pub fn pose(&self, t: f64) -> Isometry3<f64> {
        match *self {
            MotionPath::Static => Isometry3::identity(),
            MotionPath::Drift { velocity, ramp } => {
                let shift = if ramp <= 0.0 {
                    velocity * t
                } else if t < ramp {
                    velocity * (0.5 * t * t / ramp)
                } else {
                    velocity * (t - 0.5 * ramp)
                };
                Isometry3::from_parts(Translation3::from(shift), UnitQuaternion::identity())
            }
            MotionPath::Oscillate { amplitude, omega } => {
                Isometry3::from_parts(Translation3::from(amplitude * (omega * t).sin()), UnitQuaternion::identity())
            }
            MotionPath::Spin { pivot, axis, rate } => {
                let rot = UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), rate * t);
                // x -> pivot + R (x - pivot)
                let shift = pivot - rot * pivot;
                Isometry3::from_parts(Translation3::from(shift), rot)
            }
        }
    }

    /// Largest point speed and acceleration for points within `reach` of the
    /// rotation pivot (ignored for translations).
    pub fn peak_rates(&self, reach: f64) -> (f64, f64) {
        match *self {
            MotionPath::Static => (0.0, 0.0),
            MotionPath::Drift { velocity, ramp } => {
                let v = velocity.norm();
                (
                    v,
                    if ramp > 0.0 {
                        v / ramp
                    } else if v > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    },
                )
            }
            MotionPath::Oscillate { amplitude, omega } => {
                let a = amplitude.norm();
                (a * omega.abs(), a * omega * omega)
            }
            MotionPath::Spin { rate, .. } => (rate.abs() * reach, rate * rate * reach),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSpec {
    pub path: MotionPath,
    pub max_speed: f64,
    pub max_accel: f64,
}

impl MotionSpec {
    /// Checks the path against the bounds for every vertex of `nominal`.
    pub fn new(path: MotionPath, max_speed: f64, max_accel: f64, nominal: &Loop) -> Result<Self> {
        let reach = match path {
            MotionPath::Spin { pivot, axis, .. } => {
                if !(axis.norm() > 0.0) {
                    return Err(Error::InvalidParameter("spin axis must be nonzero".into()));
                }
                nominal.vertices().iter().map(|v| (v - pivot).norm()).fold(0.0, f64::max)
            }
            _ => 0.0,
        };
        let (speed, accel) = path.peak_rates(reach);
        if !(speed <= max_speed * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!("path speed {speed} exceeds bound {max_speed}")));
        }
        if !(accel <= max_accel * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!("path acceleration {accel} exceeds bound {max_accel}")));
        }
        Ok(Self { path, max_speed, max_accel })
    }

    pub fn stationary() -> Self {
        Self { path: MotionPath::Static, max_speed: 0.0, max_accel: 0.0 }
    }
}

pub fn move_loop(nominal: &Loop, spec: &MotionSpec, t: f64) -> Loop {
    nominal.transformed(&spec.path.pose(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_circle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_circle() -> Loop {
        make_circle(1.0, 0.1, Vec3::zeros(), Vec3::z()).unwrap()
    }

    fn sample_std(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    #[test]
    fn zero_sigma_is_identity() {
        let lp = unit_circle();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in [NoiseKind::Isotropic, NoiseKind::Cylindrical] {
            let out = perturb(&lp, NoiseSpec::new(kind, 0.0).unwrap(), &mut rng).unwrap();
            assert_eq!(out, lp);
        }
    }

    #[test]
    fn isotropic_axis_std() {
        let lp = unit_circle();
        let p = NoisePerturber::new(lp.clone(), NoiseSpec::new(NoiseKind::Isotropic, 0.1).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v0 = lp.vertices()[5];
        let mut axes = [Vec::new(), Vec::new(), Vec::new()];
        for _ in 0..10_000 {
            let d = p.sample(&mut rng).vertices()[5] - v0;
            for k in 0..3 {
                axes[k].push(d[k]);
            }
        }
        for a in &axes {
            let s = sample_std(a);
            assert!((0.097..=0.103).contains(&s), "std {s}");
        }
    }

    #[test]
    fn cylindrical_has_no_tangential_component() {
        let lp = unit_circle();
        let p = NoisePerturber::new(lp.clone(), NoiseSpec::new(NoiseKind::Cylindrical, 0.2).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut radial = Vec::new();
        for _ in 0..2000 {
            let noisy = p.sample(&mut rng);
            for (k, (a, b)) in noisy.vertices().iter().zip(lp.vertices()).enumerate() {
                let tangent = Vec3::new(-b.y, b.x, 0.0);
                assert!((a - b).dot(&tangent).abs() < 1e-12);
                if k == 0 {
                    radial.push((a - b).dot(b));
                }
            }
        }
        let s = sample_std(&radial);
        assert!((0.19..=0.21).contains(&s), "radial std {s}");
    }

    #[test]
    fn perturb_is_deterministic_and_streams_decorrelated() {
        let lp = unit_circle();
        let spec = NoiseSpec::new(NoiseKind::Isotropic, 0.1).unwrap();
        let a = perturb(&lp, spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = perturb(&lp, spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);

        let p = NoisePerturber::new(lp.clone(), spec).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(10);
        let mut r2 = ChaCha8Rng::seed_from_u64(11);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for _ in 0..10_000 {
            xs.push(p.sample(&mut r1).vertices()[0].x - 1.0);
            ys.push(p.sample(&mut r2).vertices()[0].x - 1.0);
        }
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        assert!((cov / (vx * vy).sqrt()).abs() < 0.05);
    }

    #[test]
    fn wave_examples() {
        let lp = unit_circle();
        let zero = WaveSpec::new(0.0, 1.0, WaveDirection::Perpendicular, 2, TemporalProfile::default()).unwrap();
        assert_eq!(deform_wave(&lp, &zero, 3.0).unwrap(), lp);

        let spec = WaveSpec::new(0.3, 1.0, WaveDirection::Perpendicular, 2, TemporalProfile::default()).unwrap();
        for t in [0.0, 0.7, 12.5] {
            let w = deform_wave(&lp, &spec, t).unwrap();
            let zsum: f64 = w.vertices().iter().map(|v| v.z).sum();
            assert!(zsum.abs() < 1e-9);
            assert_eq!(w.len(), lp.len());
            for (a, b) in w.vertices().iter().zip(lp.vertices()) {
                assert!((a - b).norm() <= 0.3 + 1e-12);
            }
        }

        let fifth = WaveSpec::new(0.2, 1.0, WaveDirection::Parallel, 3, TemporalProfile::default()).unwrap();
        assert!((fifth.ratio - 0.2).abs() < 1e-15);
        let w = deform_wave(&lp, &fifth, 1.0).unwrap();
        for (a, b) in w.vertices().iter().zip(lp.vertices()) {
            assert!(a.z.abs() < 1e-12);
            // purely radial
            assert!((a - b).cross(b).norm() < 1e-12);
        }
    }

    #[test]
    fn chirp_phase_is_integral_of_frequency() {
        let p = TemporalProfile::Chirp { omega0: 0.5, rate: 0.2 };
        let dt = 1e-4;
        let mut phase = 0.0;
        let mut t = 0.0;
        while t < 3.0 - 1e-12 {
            phase += p.omega(t + 0.5 * dt) * dt;
            t += dt;
        }
        assert!((phase - p.phase(3.0)).abs() < 1e-9);
    }

    #[test]
    fn wave_spec_validation() {
        let prof = TemporalProfile::default();
        assert!(WaveSpec::new(-0.1, 1.0, WaveDirection::Parallel, 1, prof).is_err());
        assert!(WaveSpec::new(0.1, 1.0, WaveDirection::Parallel, 0, prof).is_err());
        assert!(WaveSpec::new(0.1, 0.0, WaveDirection::Parallel, 1, prof).is_err());
        let s = WaveSpec::from_ratio(0.5, 0.1, WaveDirection::Parallel, 1, prof).unwrap();
        assert!((s.amplitude - 0.05).abs() < 1e-15);
    }

    #[test]
    fn move_loop_examples() {
        let lp = unit_circle();
        assert_eq!(move_loop(&lp, &MotionSpec::stationary(), 4.0), lp);

        let drift = MotionSpec::new(
            MotionPath::Drift { velocity: Vec3::new(1.0, 0.0, 0.0), ramp: 0.0 },
            1.0,
            f64::INFINITY,
            &lp,
        )
        .unwrap();
        let moved = move_loop(&lp, &drift, 1.0);
        assert!((moved.centroid() - lp.centroid() - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);

        // a half turn maps the vertex set onto itself only for even counts
        let lp = make_circle(1.0, TAU / 64.0, Vec3::zeros(), Vec3::z()).unwrap();
        let spin = MotionSpec::new(
            MotionPath::Spin { pivot: lp.centroid(), axis: Vec3::z(), rate: std::f64::consts::PI },
            4.0,
            10.0,
            &lp,
        )
        .unwrap();
        let turned = move_loop(&lp, &spin, 1.0);
        for v in turned.vertices() {
            let nearest = lp.vertices().iter().map(|w| (v - w).norm()).fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-9);
        }
    }

    #[test]
    fn motion_bounds_enforced() {
        let lp = unit_circle();
        let fast = MotionPath::Oscillate { amplitude: Vec3::new(0.5, 0.0, 0.0), omega: 2.0 };
        assert!(MotionSpec::new(fast, 0.9, 10.0, &lp).is_err());
        assert!(MotionSpec::new(fast, 1.0, 1.9, &lp).is_err());
        assert!(MotionSpec::new(fast, 1.0, 2.0, &lp).is_ok());

        // numerical speed/accel stay within the declared peaks
        let ramp = MotionPath::Drift { velocity: Vec3::new(0.0, 0.3, 0.0), ramp: 2.0 };
        let spec = MotionSpec::new(ramp, 0.3, 0.15, &lp).unwrap();
        let h = 1e-3;
        let pos = |t: f64| move_loop(&lp, &spec, t).vertices()[0];
        for k in 1..500 {
            let t = k as f64 * 0.01;
            let v = (pos(t + h) - pos(t - h)) / (2.0 * h);
            let a = (pos(t + h) - 2.0 * pos(t) + pos(t - h)) / (h * h);
            assert!(v.norm() <= 0.3 + 1e-6);
            assert!(a.norm() <= 0.15 + 1e-3 || (t - 2.0).abs() < 2.0 * h);
        }
    }
}
