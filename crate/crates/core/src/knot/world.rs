//! Kinematic two-arm robot on a planar base, the rope it handles and the
//! anchoring loop it ties around.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};

use super::rope::Rope;
use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::geometry::{make_circle, Loop, Vec3};
use crate::insertion::StopRule;
use crate::perturbation::{deform_wave, move_loop, MotionSpec, WaveSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    One,
    Two,
}

impl Arm {
    pub fn index(self) -> usize {
        match self {
            Arm::One => 0,
            Arm::Two => 1,
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::One => Arm::Two,
            Arm::Two => Arm::One,
        }
    }

    pub const BOTH: [Arm; 2] = [Arm::One, Arm::Two];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RopeEnd {
    R0,
    Rf,
}

impl RopeEnd {
    pub fn label(self) -> &'static str {
        match self {
            RopeEnd::R0 => "R0",
            RopeEnd::Rf => "Rf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gripper {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn facing(&self) -> Vec3 {
        Vec3::new(self.heading.cos(), self.heading.sin(), 0.0)
    }

    pub fn to_world(&self, local: &Vec3) -> Vec3 {
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), self.heading);
        Vec3::new(self.x, self.y, 0.0) + r * local
    }

    pub fn to_local(&self, world: &Vec3) -> Vec3 {
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), -self.heading);
        r * (world - Vec3::new(self.x, self.y, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmState {
    pub position: Vec3,
    pub gripper: Gripper,
    /// Rope index held by a closed gripper.
    pub binding: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub base: Pose2,
    pub arms: [ArmState; 2],
}

impl RobotState {
    pub fn arm(&self, arm: Arm) -> &ArmState {
        &self.arms[arm.index()]
    }

    pub fn arm_mut(&mut self, arm: Arm) -> &mut ArmState {
        &mut self.arms[arm.index()]
    }

    /// The arm whose closed gripper holds rope point `index`, if any. Arm 1
    /// wins when both do.
    pub fn holder(&self, index: usize) -> Option<Arm> {
        Arm::BOTH.into_iter().find(|a| self.arm(*a).binding == Some(index))
    }

    pub fn bound_points(&self) -> Vec<(usize, Vec3)> {
        self.arms.iter().filter_map(|a| a.binding.map(|i| (i, a.position))).collect()
    }
}

/// Where an arm is driven to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArmTarget {
    /// Fixed in the base frame, so the arm rides along with the base.
    Hold(Vec3),
    World(Vec3),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotLimits {
    /// Reach radius around the shoulder point.
    pub reach: f64,
    pub shoulder_height: f64,
    /// Arm and base steps are `gain * error`, clipped to the max speed.
    pub arm_speed: f64,
    pub arm_gain: f64,
    pub base_speed: f64,
    pub base_turn_rate: f64,
    pub base_gain: f64,
}

impl Default for RobotLimits {
    fn default() -> Self {
        Self {
            reach: 1.0,
            shoulder_height: 0.45,
            arm_speed: 0.05,
            arm_gain: 1.0,
            base_speed: 0.01,
            base_turn_rate: 0.05,
            base_gain: 0.5,
        }
    }
}

/// The anchoring loop: a circle, optionally deformed by a travelling wave and
/// moved rigidly. Time is measured in seconds, `tick * dt`.
#[derive(Debug, Clone)]
pub struct Anchor {
    pub nominal: Loop,
    pub wave: Option<WaveSpec>,
    pub motion: MotionSpec,
}

impl Anchor {
    pub fn circle(radius: f64, angular_step: f64, center: Vec3, normal: Vec3) -> Result<Self> {
        Ok(Self {
            nominal: make_circle(radius, angular_step, center, normal)?,
            wave: None,
            motion: MotionSpec::stationary(),
        })
    }

    pub fn at(&self, t: f64) -> Result<Loop> {
        let shaped = match &self.wave {
            Some(w) => deform_wave(&self.nominal, w, t)?,
            None => self.nominal.clone(),
        };
        Ok(move_loop(&shaped, &self.motion, t))
    }
}

/// Geometry of the loop-forming gripper path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistParams {
    pub radius: f64,
    /// Angle advanced per tick.
    pub angular_step: f64,
    /// Total angle swept; a little over one turn so the rope end passes
    /// over the standing part.
    pub sweep: f64,
    /// Distance the gripper drifts toward the robot over the sweep, so the
    /// crossing is proper and the end finishes on the near side of the loop.
    pub depth: f64,
}

impl Default for TwistParams {
    fn default() -> Self {
        Self { radius: 0.1, angular_step: 0.1, sweep: 2.0 * PI + 0.6, depth: 0.08 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnotConfig {
    pub limits: RobotLimits,
    pub field: FieldParams,
    pub stop: StopRule,
    pub twist: TwistParams,
    pub grasp_tolerance: f64,
    /// Seconds per tick.
    pub dt: f64,
    /// Base distance kept from the anchor centre, measured against its
    /// normal.
    pub standoff: f64,
    pub tracking_tolerance: f64,
    /// Distance in front of a loop where the receiving gripper starts.
    pub receive_offset: f64,
    /// Distance behind a rope loop from which the carrying gripper starts
    /// following the field.
    pub approach_offset: f64,
    pub max_ticks: usize,
    pub rope_points: usize,
    pub rope_segment: f64,
}

impl Default for KnotConfig {
    fn default() -> Self {
        Self {
            limits: RobotLimits::default(),
            field: FieldParams::with_gamma(0.01),
            stop: StopRule::strict(),
            twist: TwistParams::default(),
            grasp_tolerance: 1e-3,
            dt: 0.05,
            standoff: 0.55,
            tracking_tolerance: 0.02,
            receive_offset: 0.15,
            approach_offset: 0.12,
            max_ticks: 20_000,
            rope_points: 161,
            rope_segment: 0.01,
        }
    }
}

impl KnotConfig {
    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        self.stop.validate()?;
        let l = &self.limits;
        for (name, v) in [
            ("reach", l.reach),
            ("arm speed", l.arm_speed),
            ("arm gain", l.arm_gain),
            ("base speed", l.base_speed),
            ("base turn rate", l.base_turn_rate),
            ("base gain", l.base_gain),
            ("twist radius", self.twist.radius),
            ("twist angular step", self.twist.angular_step),
            ("twist sweep", self.twist.sweep),
            ("grasp tolerance", self.grasp_tolerance),
            ("dt", self.dt),
            ("rope segment", self.rope_segment),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.field.gamma > l.arm_speed {
            return Err(Error::InvalidParameter("insertion step gamma exceeds arm speed".into()));
        }
        if self.rope_points < 3 {
            return Err(Error::InvalidParameter("rope needs at least 3 points".into()));
        }
        Ok(())
    }
}

/// Everything the actions act on.
#[derive(Debug, Clone)]
pub struct World {
    pub config: KnotConfig,
    pub tick: usize,
    pub robot: RobotState,
    pub rope: Rope,
    pub anchor: Anchor,
    /// Added to the anchor-facing heading the base tracks; advanced by
    /// turning the base.
    pub heading_offset: f64,
    pub targets: [ArmTarget; 2],
    base_target: Option<Pose2>,
    /// Ticks on which the rope stopped the arms.
    pub blocked_ticks: usize,
    /// Arm that most recently closed on the rope.
    pub last_grasp: Option<Arm>,
    /// Rope-loop crossings threaded so far, by rope index of the loop start.
    pub threaded_loops: Vec<usize>,
    /// Direction the first twist swung out to; later twists reuse it so
    /// all loops wind the same way.
    pub twist_side: Option<Vec3>,
}

impl World {
    /// Robot at the origin facing +X, both grippers open at their rest
    /// points, rope laid out straight from `rope_start` along `rope_dir`.
    pub fn new(config: KnotConfig, anchor: Anchor, rope_start: Vec3, rope_dir: Vec3) -> Result<Self> {
        config.validate()?;
        let rope = Rope::straight(rope_start, rope_dir, config.rope_points, config.rope_segment)?;
        let base = Pose2::new(0.0, 0.0, 0.0);
        let rest = rest_offsets(&config.limits);
        let arm = |p: Vec3| ArmState { position: base.to_world(&p), gripper: Gripper::Open, binding: None };
        Ok(Self {
            robot: RobotState { base, arms: [arm(rest[0]), arm(rest[1])] },
            targets: [ArmTarget::Hold(rest[0]), ArmTarget::Hold(rest[1])],
            config,
            tick: 0,
            rope,
            anchor,
            heading_offset: 0.0,
            base_target: None,
            blocked_ticks: 0,
            last_grasp: None,
            threaded_loops: Vec::new(),
            twist_side: None,
        })
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.config.dt
    }

    pub fn anchor_loop(&self) -> Result<Loop> {
        self.anchor.at(self.time())
    }

    pub fn facing(&self) -> Vec3 {
        self.robot.base.facing()
    }

    pub fn shoulder(&self) -> Vec3 {
        self.robot.base.to_world(&Vec3::new(0.0, 0.0, self.config.limits.shoulder_height))
    }

    pub fn within_reach(&self, p: &Vec3) -> bool {
        (p - self.shoulder()).norm() <= self.config.limits.reach
    }

    pub fn rope_index(&self, end: RopeEnd) -> usize {
        match end {
            RopeEnd::R0 => self.rope.r0(),
            RopeEnd::Rf => self.rope.rf(),
        }
    }

    pub fn set_target(&mut self, arm: Arm, target: ArmTarget) {
        self.targets[arm.index()] = target;
    }

    /// Keep the arm where it is relative to the base.
    pub fn hold(&mut self, arm: Arm) {
        let local = self.robot.base.to_local(&self.robot.arm(arm).position);
        self.targets[arm.index()] = ArmTarget::Hold(local);
    }

    pub fn set_base_target(&mut self, pose: Pose2) {
        self.base_target = Some(pose);
    }

    /// Base pose that faces the anchor from `standoff`, rotated by the
    /// current heading offset.
    pub fn approach_pose(&self) -> Result<Pose2> {
        let lp = self.anchor_loop()?;
        let c = lp.centroid();
        let mut n = lp.area_vector();
        n.z = 0.0;
        if n.norm() < 1e-9 {
            return Err(Error::DegenerateGeometry("anchor normal is vertical".into()));
        }
        n.normalize_mut();
        // stand on the side the robot is already on
        let base = Vec3::new(self.robot.base.x, self.robot.base.y, 0.0);
        if n.dot(&(Vec3::new(c.x, c.y, 0.0) - base)) < 0.0 {
            n = -n;
        }
        let p = c - n * self.config.standoff;
        Ok(Pose2::new(p.x, p.y, n.y.atan2(n.x) + self.heading_offset))
    }

    /// Close `arm` on rope point `index`; the arm snaps onto the point.
    pub fn close_on(&mut self, arm: Arm, index: usize) {
        let p = self.rope.point(index);
        let a = self.robot.arm_mut(arm);
        a.position = p;
        a.gripper = Gripper::Closed;
        a.binding = Some(index);
        self.last_grasp = Some(arm);
        self.hold(arm);
    }

    pub fn open(&mut self, arm: Arm) {
        let a = self.robot.arm_mut(arm);
        a.gripper = Gripper::Open;
        a.binding = None;
    }

    /// Advance controllers, arms and rope by one tick.
    pub fn advance(&mut self) {
        let limits = self.config.limits;
        let saved = (self.robot.clone(), self.rope.clone());

        if let Some(target) = self.base_target {
            let b = &mut self.robot.base;
            let mut d = Vec3::new(target.x - b.x, target.y - b.y, 0.0) * limits.base_gain;
            if d.norm() > limits.base_speed {
                d *= limits.base_speed / d.norm();
            }
            let mut dh = wrap_angle(target.heading - b.heading) * limits.base_gain;
            dh = dh.clamp(-limits.base_turn_rate, limits.base_turn_rate);
            b.x += d.x;
            b.y += d.y;
            b.heading = wrap_angle(b.heading + dh);
        }

        let shoulder = self.shoulder();
        for arm in Arm::BOTH {
            let target = match self.targets[arm.index()] {
                ArmTarget::Hold(local) => self.robot.base.to_world(&local),
                ArmTarget::World(p) => p,
            };
            let a = self.robot.arm_mut(arm);
            let mut d = (target - a.position) * limits.arm_gain;
            if d.norm() > limits.arm_speed {
                d *= limits.arm_speed / d.norm();
            }
            let mut p = a.position + d;
            let r = p - shoulder;
            if r.norm() > limits.reach {
                p = shoulder + r * (limits.reach / r.norm());
            }
            a.position = p;
        }

        let bound = self.robot.bound_points();
        match self.rope.update(&bound) {
            Ok(()) => {
                // both grippers on one point meet where the rope put it
                for arm in Arm::BOTH {
                    if let Some(i) = self.robot.arm(arm).binding {
                        self.robot.arm_mut(arm).position = self.rope.point(i);
                    }
                }
            }
            Err(_) => {
                // taut rope between the grippers: nothing moves this tick
                self.robot = saved.0;
                self.rope = saved.1;
                self.blocked_ticks += 1;
            }
        }
        self.tick += 1;
    }

    /// Worst distance between a closed gripper and its rope point.
    pub fn binding_error(&self) -> f64 {
        self.robot
            .arms
            .iter()
            .filter_map(|a| a.binding.map(|i| (a.position - self.rope.point(i)).norm()))
            .fold(0.0, f64::max)
    }
}

fn rest_offsets(limits: &RobotLimits) -> [Vec3; 2] {
    let h = limits.shoulder_height;
    [Vec3::new(0.3, 0.2, h), Vec3::new(0.3, -0.2, h)]
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}
