//! The basic actions as behavior-tree leaves. Each tick an action reads the
//! world, sets controller targets and reports its switching condition; the
//! world is advanced once per tick after the tree has been ticked.

use std::f64::consts::PI;

use super::bt::{Behavior, Status};
use super::rope::{crossings, loop_at_crossing, Crossing};
use super::world::{Arm, ArmTarget, Gripper, RopeEnd, World};
use crate::error::{Error, Result};
use crate::field::{field, offset_from_field};
use crate::geometry::{fit_plane_frame, plane_crossing, point_inside_planar, winding_about, Loop, Vec3};
use crate::insertion::{default_max_iters, StopDetector};

/// Smallest rope loop accepted as an insertion target, in rope points.
pub const MIN_LOOP_POINTS: usize = 8;

/// Which arm an action uses, resolved when the action starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmSel {
    Fixed(Arm),
    /// The arm holding this rope end.
    Holding(RopeEnd),
    /// The arm with an open gripper.
    Free,
    /// The arm holding this end that did not grasp it most recently (the
    /// giving side of a hand-over).
    Giver(RopeEnd),
}

impl ArmSel {
    pub fn resolve(&self, world: &World) -> Option<Arm> {
        match *self {
            ArmSel::Fixed(a) => Some(a),
            ArmSel::Holding(end) => world.robot.holder(world.rope_index(end)),
            ArmSel::Free => Arm::BOTH.into_iter().find(|a| world.robot.arm(*a).gripper == Gripper::Open),
            ArmSel::Giver(end) => {
                let i = world.rope_index(end);
                Arm::BOTH.into_iter().find(|a| world.robot.arm(*a).binding == Some(i) && world.last_grasp != Some(*a))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopTarget {
    Anchor,
    /// Loop cut out of the rope by a crossing.
    RopeLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    ApproachLoop,
    GraspRope { arm: ArmSel, end: RopeEnd },
    ReleaseRope { arm: ArmSel },
    TwistRope,
    TurnBase,
    Insertion { carrier: RopeEnd, target: LoopTarget },
}

impl ActionKind {
    pub fn label(&self) -> &'static str {
        match self {
            ActionKind::ApproachLoop => "approach",
            ActionKind::GraspRope { .. } => "grasp",
            ActionKind::ReleaseRope { .. } => "release",
            ActionKind::TwistRope => "twist",
            ActionKind::TurnBase => "turn_base",
            ActionKind::Insertion { .. } => "insertion",
        }
    }
}

/// A basic action bound to the program step it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionStep {
    pub step: String,
    pub kind: ActionKind,
}

impl ActionStep {
    pub fn new(step: &str, kind: ActionKind) -> Self {
        Self { step: step.to_string(), kind }
    }
}

/// Gripper path that lays the rope into a loop: one turn (plus a little) of
/// a circle above the gripper in the plane facing the robot, drifting toward
/// the robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopPath {
    center: Vec3,
    radius: f64,
    up: Vec3,
    side: Vec3,
    toward: Vec3,
    sweep: f64,
    depth: f64,
}

impl LoopPath {
    /// Starts at `start`, moving first along `side` (horizontal, away from
    /// the rope).
    pub fn new(start: Vec3, facing: Vec3, rope_dir: Vec3, world: &World) -> Self {
        let t = world.config.twist;
        let up = Vec3::z();
        let lateral = up.cross(&facing);
        let side = match world.twist_side {
            Some(s) => s,
            None if lateral.dot(&rope_dir) > 0.0 => -lateral,
            None => lateral,
        };
        Self {
            center: start + up * t.radius,
            radius: t.radius,
            up,
            side,
            toward: -facing,
            sweep: t.sweep,
            depth: t.depth,
        }
    }

    pub fn at(&self, theta: f64) -> Vec3 {
        let theta = theta.clamp(0.0, self.sweep);
        self.center
            + self.up * (-self.radius * theta.cos())
            + self.side * (self.radius * theta.sin())
            + self.toward * (self.depth * theta / self.sweep)
    }

    pub fn side(&self) -> Vec3 {
        self.side
    }

    pub fn sweep(&self) -> f64 {
        self.sweep
    }
}

/// Per-arm state of a field-following approach.
#[derive(Debug, Clone)]
struct Follower {
    arm: Arm,
    /// Staging point to reach before following, if any.
    staging: bool,
    detector: StopDetector,
    stopped: bool,
    iters: usize,
    /// Where following began. The rope loop wobbles between ticks, so
    /// threading is judged on the whole path against the current loop.
    origin: Option<Vec3>,
    threaded: bool,
}

#[derive(Debug, Clone)]
struct InsertionState {
    carrier: Follower,
    receiver: Option<Follower>,
    /// Unit normal the target loop is oriented along (field direction
    /// through the loop, away from the carrier's side).
    normal: Vec3,
    crossing: Option<Crossing>,
    last_loop: Loop,
    max_iters: usize,
    misses: usize,
}

#[derive(Debug, Clone)]
enum State {
    Idle,
    Approach { reached: bool },
    Grasp { arm: Arm },
    Held { arm: Arm },
    Release { arm: Option<Arm>, opened: bool },
    Twist { arm: Arm, other: Arm, path: LoopPath, k: usize, total: usize },
    Turn { arm: Arm, other: Arm, hold: Vec3, path: LoopPath, k: usize, total: usize, start: f64 },
    Insert(Box<InsertionState>),
    Done(Status),
}

/// Leaf wrapper that executes one [`ActionStep`] in a [`World`].
#[derive(Debug, Clone)]
pub struct Action {
    pub step: ActionStep,
    state: State,
}

impl Action {
    pub fn new(step: ActionStep) -> Self {
        Self { step, state: State::Idle }
    }
}

/// Counters and trace kept by the world while a program runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tally {
    pub insertions: usize,
    pub twists: usize,
    /// Step label of the leaf ticked last.
    pub active: String,
    /// Last action failure, for the run log.
    pub failure: Option<String>,
}

pub struct KnotWorld {
    pub world: World,
    pub tally: Tally,
}

impl Behavior<KnotWorld> for Action {
    fn tick(&mut self, kw: &mut KnotWorld) -> Status {
        kw.tally.active = self.step.step.clone();
        let status = match self.run(kw) {
            Ok(s) => s,
            Err(e) => {
                kw.tally.failure = Some(format!("step {} {}: {e}", self.step.step, self.step.kind.label()));
                self.state = State::Done(Status::Failure);
                Status::Failure
            }
        };
        if status == Status::Failure && kw.tally.failure.is_none() {
            kw.tally.failure = Some(format!("step {} {} failed", self.step.step, self.step.kind.label()));
        }
        status
    }

    fn reset(&mut self) {
        self.state = State::Idle;
    }
}

fn fail(msg: impl Into<String>) -> Result<Status> {
    Err(Error::Action(msg.into()))
}

impl Action {
    fn run(&mut self, kw: &mut KnotWorld) -> Result<Status> {
        if let State::Done(s) = self.state {
            return Ok(s);
        }
        let status = match self.step.kind {
            ActionKind::ApproachLoop => self.approach(&mut kw.world)?,
            ActionKind::GraspRope { arm, end } => self.grasp(&mut kw.world, arm, end)?,
            ActionKind::ReleaseRope { arm } => self.release(&mut kw.world, arm)?,
            ActionKind::TwistRope => self.twist(&mut kw.world)?,
            ActionKind::TurnBase => self.turn(&mut kw.world)?,
            ActionKind::Insertion { carrier, target } => self.insert(&mut kw.world, carrier, target)?,
        };
        if status == Status::Success {
            match self.step.kind {
                ActionKind::TwistRope | ActionKind::TurnBase => kw.tally.twists += 1,
                ActionKind::Insertion { .. } => kw.tally.insertions += 1,
                _ => {}
            }
        }
        // approach keeps tracking and grasps stay conditions after success
        let repeatable = matches!(self.step.kind, ActionKind::ApproachLoop)
            || (status == Status::Success && matches!(self.step.kind, ActionKind::GraspRope { .. }));
        if status != Status::Running && !repeatable {
            self.state = State::Done(status);
        }
        Ok(status)
    }

    /// Not a basic action: keeps the base at the stand-off pose in front of
    /// the anchor for the whole program.
    fn approach(&mut self, world: &mut World) -> Result<Status> {
        let target = world.approach_pose()?;
        world.set_base_target(target);
        let b = world.robot.base;
        let dist = (target.x - b.x).hypot(target.y - b.y);
        let dh = super::world::wrap_angle(target.heading - b.heading).abs();
        let tol = world.config.tracking_tolerance;
        let reached = match &mut self.state {
            State::Approach { reached } => reached,
            _ => {
                self.state = State::Approach { reached: false };
                match &mut self.state {
                    State::Approach { reached } => reached,
                    _ => unreachable!(),
                }
            }
        };
        if !*reached {
            *reached = dist <= tol && dh <= 0.05;
            return Ok(if *reached { Status::Success } else { Status::Running });
        }
        // once there, keep tracking; pause the task while far off
        Ok(if dist <= 5.0 * tol && dh <= 0.5 { Status::Success } else { Status::Running })
    }

    fn grasp(&mut self, world: &mut World, sel: ArmSel, end: RopeEnd) -> Result<Status> {
        let index = world.rope_index(end);
        let arm = match self.state {
            State::Grasp { arm } => arm,
            State::Held { arm } => {
                // re-ticked by a reactive parent: still holding?
                if world.robot.arm(arm).binding == Some(index) {
                    return Ok(Status::Success);
                }
                self.state = State::Grasp { arm };
                arm
            }
            _ => {
                let arm = sel.resolve(world).ok_or_else(|| Error::Action("no arm available to grasp".into()))?;
                let a = world.robot.arm(arm);
                if a.binding == Some(index) {
                    self.state = State::Held { arm };
                    return Ok(Status::Success);
                }
                if a.gripper == Gripper::Closed {
                    return fail(format!("arm {:?} is already holding the rope", arm));
                }
                self.state = State::Grasp { arm };
                arm
            }
        };
        let p = world.rope.point(index);
        if !world.within_reach(&p) {
            return fail(format!("{} is out of reach", end.label()));
        }
        if (world.robot.arm(arm).position - p).norm() <= world.config.grasp_tolerance {
            world.close_on(arm, index);
            self.state = State::Held { arm };
            return Ok(Status::Success);
        }
        world.set_target(arm, ArmTarget::World(p));
        Ok(Status::Running)
    }

    fn release(&mut self, world: &mut World, sel: ArmSel) -> Result<Status> {
        match self.state {
            State::Release { arm: None, .. } => Ok(Status::Success),
            State::Release { arm: Some(_), opened: true } => Ok(Status::Success),
            State::Release { arm: Some(arm), opened: false } => {
                world.open(arm);
                world.hold(arm);
                self.state = State::Release { arm: Some(arm), opened: true };
                Ok(Status::Running)
            }
            _ => {
                let arm = sel.resolve(world).filter(|a| world.robot.arm(*a).gripper == Gripper::Closed);
                match arm {
                    None => Ok(Status::Success),
                    Some(arm) => {
                        // reference stays where it was
                        world.hold(arm);
                        world.open(arm);
                        self.state = State::Release { arm: Some(arm), opened: true };
                        Ok(Status::Running)
                    }
                }
            }
        }
    }

    /// Both grippers must hold the rope; the one on R0 lays the loop.
    fn twist_arms(world: &World) -> Result<(Arm, Arm)> {
        let r0 = world.rope_index(RopeEnd::R0);
        let arm = world.robot.holder(r0).ok_or_else(|| Error::Action("R0 is not held".into()))?;
        let other = arm.other();
        if world.robot.arm(other).binding.is_none() {
            return Err(Error::Action("twist needs both grippers on the rope".into()));
        }
        Ok((arm, other))
    }

    fn loop_path(world: &World, arm: Arm) -> LoopPath {
        let i = world.robot.arm(arm).binding.unwrap_or(0);
        let j = if i == 0 { 1 } else { i - 1 };
        let dir = world.rope.point(j) - world.rope.point(i);
        LoopPath::new(world.robot.arm(arm).position, world.facing(), dir, world)
    }

    fn check_held(world: &World, arm: Arm, other: Arm) -> Result<()> {
        if world.robot.arm(arm).binding.is_none() || world.robot.arm(other).binding.is_none() {
            return Err(Error::Action("rope dropped".into()));
        }
        Ok(())
    }

    fn finish_loop(world: &World) -> Result<Status> {
        let found = crossings(world.rope.points(), &world.facing());
        if found.iter().any(|c| c.upper - c.lower + 1 >= MIN_LOOP_POINTS) {
            Ok(Status::Success)
        } else {
            Err(Error::NoLoop)
        }
    }

    fn twist(&mut self, world: &mut World) -> Result<Status> {
        if matches!(self.state, State::Idle) {
            let (arm, other) = Self::twist_arms(world)?;
            let path = Self::loop_path(world, arm);
            world.twist_side = Some(path.side());
            let total = (path.sweep() / world.config.twist.angular_step - 1e-9).ceil() as usize;
            world.hold(other);
            self.state = State::Twist { arm, other, path, k: 0, total };
        }
        let State::Twist { arm, other, path, k, total } = &mut self.state else { unreachable!() };
        Self::check_held(world, *arm, *other)?;
        if *k >= *total {
            return Self::finish_loop(world);
        }
        *k += 1;
        let theta = *k as f64 * world.config.twist.angular_step;
        world.set_target(*arm, ArmTarget::World(path.at(theta)));
        Ok(Status::Running)
    }

    /// Half a turn of the base. The gripper on R0 is carried around the
    /// same loop-laying path as in a twist, timed by the base rotation; the
    /// other gripper keeps its place.
    fn turn(&mut self, world: &mut World) -> Result<Status> {
        let rate = world.config.limits.base_turn_rate;
        if matches!(self.state, State::Idle) {
            let (arm, other) = Self::twist_arms(world)?;
            let path = Self::loop_path(world, arm);
            world.twist_side = Some(path.side());
            let total = (PI / rate - 1e-9).ceil() as usize;
            let hold = world.robot.arm(other).position;
            self.state = State::Turn { arm, other, hold, path, k: 0, total, start: world.heading_offset };
        }
        let State::Turn { arm, other, hold, path, k, total, start } = &mut self.state else { unreachable!() };
        Self::check_held(world, *arm, *other)?;
        world.set_target(*other, ArmTarget::World(*hold));
        if *k >= *total {
            let target = world.approach_pose()?;
            let dh = super::world::wrap_angle(target.heading - world.robot.base.heading).abs();
            if dh > 1e-3 {
                return Ok(Status::Running);
            }
            return Self::finish_loop(world);
        }
        *k += 1;
        world.heading_offset = *start + (*k as f64 * rate).min(PI);
        let progress = (*k as f64 * rate / PI).min(1.0);
        world.set_target(*arm, ArmTarget::World(path.at(progress * path.sweep())));
        Ok(Status::Running)
    }

    fn target_loop(
        world: &World,
        target: LoopTarget,
        state: Option<&InsertionState>,
    ) -> Result<(Loop, Option<Crossing>)> {
        match target {
            LoopTarget::Anchor => Ok((world.anchor_loop()?, None)),
            LoopTarget::RopeLoop => {
                let pts = world.rope.points();
                let found: Vec<Crossing> = crossings(pts, &world.facing())
                    .into_iter()
                    .filter(|c| c.upper - c.lower + 1 >= MIN_LOOP_POINTS)
                    .filter(|c| !world.threaded_loops.contains(&c.lower))
                    .collect();
                let pick = match state {
                    // follow the loop we started on
                    Some(s) => {
                        let c0 = s.last_loop.centroid();
                        found.iter().min_by(|a, b| {
                            let da = (loop_centroid(pts, a) - c0).norm();
                            let db = (loop_centroid(pts, b) - c0).norm();
                            da.total_cmp(&db)
                        })
                    }
                    // the loop laid last sits nearest R0
                    None => found.iter().min_by_key(|c| (c.lower, c.upper)),
                };
                match pick {
                    Some(c) => Ok((loop_at_crossing(pts, c)?, Some(*c))),
                    None => Err(Error::NoLoop),
                }
            }
        }
    }

    fn insert(&mut self, world: &mut World, carrier_end: RopeEnd, target: LoopTarget) -> Result<Status> {
        if matches!(self.state, State::Idle) {
            let carrier = ArmSel::Holding(carrier_end)
                .resolve(world)
                .ok_or_else(|| Error::Action(format!("{} is not held", carrier_end.label())))?;
            let receiver =
                Arm::BOTH.into_iter().find(|a| *a != carrier && world.robot.arm(*a).gripper == Gripper::Open);
            let (lp, crossing) = Self::target_loop(world, target, None)?;
            let x = world.robot.arm(carrier).position;
            let mut normal = lp.area_vector().normalize();
            if normal.dot(&(lp.centroid() - x)) < 0.0 {
                normal = -normal;
            }
            let rule = world.config.stop;
            let follower = |arm, staging| Follower {
                arm,
                staging,
                detector: StopDetector::new(rule),
                stopped: false,
                iters: 0,
                origin: None,
                threaded: false,
            };
            let max_iters =
                default_max_iters((lp.centroid() - x).norm() + world.config.approach_offset, world.config.field.gamma)
                    + default_max_iters(lp.diameter(), world.config.field.gamma);
            self.state = State::Insert(Box::new(InsertionState {
                carrier: follower(carrier, target == LoopTarget::RopeLoop),
                receiver: receiver.map(|a| follower(a, true)),
                normal,
                crossing,
                last_loop: lp,
                max_iters,
                misses: 0,
            }));
        }
        let State::Insert(st) = &mut self.state else { unreachable!() };
        if world.robot.arm(st.carrier.arm).binding != Some(world.rope_index(carrier_end)) {
            return fail("carrying gripper lost the rope");
        }

        let lp = match Self::target_loop(world, target, Some(st)) {
            Ok((lp, c)) => {
                st.misses = 0;
                st.crossing = c;
                lp
            }
            Err(Error::NoLoop) if st.misses < 20 => {
                st.misses += 1;
                st.last_loop.clone()
            }
            Err(e) => return Err(e),
        };
        let lp = if lp.area_vector().dot(&st.normal) < 0.0 { lp.reversed() } else { lp };
        st.normal = lp.area_vector().normalize();
        st.last_loop = lp.clone();

        let gamma = world.config.field.gamma;
        let offset = world.config.approach_offset;
        let receive = world.config.receive_offset;
        let normal = st.normal;
        let reversed = lp.reversed();
        let max_iters = st.max_iters;

        let carrier_staging = lp.centroid() - normal * offset;
        step_follower(world, &mut st.carrier, &lp, carrier_staging, gamma, max_iters)?;
        if let Some(r) = st.receiver.as_mut() {
            let staging = lp.centroid() + normal * receive;
            step_follower(world, r, &reversed, staging, gamma, max_iters)?;
        }

        let receiver_done = st.receiver.as_ref().is_none_or(|r| r.stopped);
        if st.carrier.stopped && receiver_done {
            if !st.carrier.threaded {
                return fail("carrier stopped without passing through the loop");
            }
            if let Some(c) = st.crossing {
                world.threaded_loops.push(c.lower);
            }
            return Ok(Status::Success);
        }
        Ok(Status::Running)
    }
}

fn loop_centroid(points: &[Vec3], c: &Crossing) -> Vec3 {
    let s = &points[c.lower + 1..=c.upper];
    s.iter().sum::<Vec3>() / s.len() as f64
}

/// One tick of a gripper guided by the field of `lp`: reach the staging
/// point first if asked, then follow the field until the flux drops.
fn step_follower(
    world: &mut World,
    f: &mut Follower,
    lp: &Loop,
    staging: Vec3,
    gamma: f64,
    max_iters: usize,
) -> Result<()> {
    let x = world.robot.arm(f.arm).position;
    if f.stopped {
        world.hold(f.arm);
        return Ok(());
    }
    if f.staging {
        // The staging point moves with the loop, so arrival uses the looser
        // tracking tolerance.
        if (x - staging).norm() <= world.config.tracking_tolerance {
            f.staging = false;
        } else {
            world.set_target(f.arm, ArmTarget::World(staging));
            return Ok(());
        }
    }
    let frame = fit_plane_frame(lp)?;
    let origin = *f.origin.get_or_insert(x);
    if let Some((p, sign)) = plane_crossing(&origin, &x, &frame) {
        f.threaded = sign > 0 && point_inside_planar(lp, &frame, &p).unwrap_or(false);
    } else {
        f.threaded = false;
    }
    let b = field(lp, &x, &world.config.field)?;
    if f.detector.push(b.norm()) {
        f.stopped = true;
        // On a curved loop the flux peak can sit a little before the fitted
        // plane; a stop within the usual 2 gamma of it still counts.
        if !f.threaded {
            let d = frame.signed_distance(&x);
            f.threaded = d <= 0.0 && d >= -2.0 * gamma && winding_about(lp, &frame, &x) != 0;
        }
        world.hold(f.arm);
        return Ok(());
    }
    f.iters += 1;
    if f.iters > max_iters {
        return Err(Error::Action("insertion did not stop".into()));
    }
    let delta = offset_from_field(&b, None, &world.config.field)?;
    debug_assert!((delta.norm() - gamma).abs() < 1e-9);
    world.set_target(f.arm, ArmTarget::World(x + delta));
    Ok(())
}
