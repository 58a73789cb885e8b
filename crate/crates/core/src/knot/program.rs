//! Knot programs: step lists, their behavior trees and the tick loop.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::actions::{Action, ActionKind, ActionStep, ArmSel, KnotWorld, LoopTarget, Tally};
use super::bt::{Node, Status};
use super::world::{Anchor, Arm, KnotConfig, RopeEnd, World};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::linking::linking_number;
use crate::perturbation::{MotionPath, MotionSpec, TemporalProfile, WaveDirection, WaveSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KnotName {
    Unknot,
    Trefoil,
    FigureEight,
    ThreeTwist,
    SevenThree,
}

impl KnotName {
    pub const ALL: [KnotName; 5] =
        [KnotName::Unknot, KnotName::Trefoil, KnotName::FigureEight, KnotName::ThreeTwist, KnotName::SevenThree];

    pub fn label(&self) -> &'static str {
        match self {
            KnotName::Unknot => "unknot",
            KnotName::Trefoil => "3_1",
            KnotName::FigureEight => "4_1",
            KnotName::ThreeTwist => "5_2",
            KnotName::SevenThree => "7_3",
        }
    }

    /// Step numbers in execution order.
    pub fn steps(&self) -> Vec<&'static str> {
        let head = ["1", "2", "3", "4", "5"];
        let tail: &[&str] = match self {
            KnotName::Unknot => &[],
            KnotName::Trefoil => &["6", "7", "8", "9", "10"],
            KnotName::FigureEight => &["6", "6", "7", "8", "9", "10"],
            KnotName::ThreeTwist => &["6", "6", "6", "7", "8", "9", "10"],
            KnotName::SevenThree => &["6", "6", "6", "7", "8", "9", "7", "8", "9", "10"],
        };
        head.iter().chain(tail).copied().collect()
    }
}

impl FromStr for KnotName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KnotName::ALL.into_iter().find(|k| k.label().eq_ignore_ascii_case(s.trim())).ok_or_else(|| {
            Error::InvalidParameter(format!("unknown knot '{s}' (expected unknot, 3_1, 4_1, 5_2 or 7_3)"))
        })
    }
}

/// A named list of step numbers. `6` means "turn the base or twist"
/// (tried in that order); `6.1` and `6.2` pin one of the two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnotProgram {
    pub name: String,
    pub steps: Vec<String>,
}

const STEP_IDS: [&str; 12] = ["1", "2", "3", "4", "5", "6", "6.1", "6.2", "7", "8", "9", "10"];

impl KnotProgram {
    pub fn new(name: &str, steps: Vec<String>) -> Result<Self> {
        let program = Self { name: name.to_string(), steps };
        program.validate()?;
        Ok(program)
    }

    pub fn knot(name: KnotName) -> Self {
        Self { name: name.label().to_string(), steps: name.steps().into_iter().map(String::from).collect() }
    }

    /// Same program with every `6` replaced by `replacement`.
    pub fn with_step6(&self, replacement: &str) -> Result<Self> {
        let steps = self.steps.iter().map(|s| if s == "6" { replacement.to_string() } else { s.clone() }).collect();
        Self::new(&self.name, steps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.first().map(String::as_str) != Some("1") {
            return Err(Error::InvalidParameter("program must start with step 1".into()));
        }
        if self.steps.len() < 2 {
            return Err(Error::InvalidParameter("program needs a step after step 1".into()));
        }
        for s in &self.steps {
            if !STEP_IDS.contains(&s.as_str()) {
                return Err(Error::InvalidParameter(format!("unknown step '{s}'")));
            }
        }
        if self.steps[1..].iter().any(|s| s == "1") {
            return Err(Error::InvalidParameter("step 1 may only appear first".into()));
        }
        Ok(())
    }

    /// One `step <id>` per line; `#` starts a comment, `name <label>`
    /// optionally names the program.
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = String::from("custom");
        let mut steps = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let key = words.next().unwrap_or("");
            let value = words.next();
            let parse_err = |message: String| Error::Parse { line: k + 1, message };
            if words.next().is_some() {
                return Err(parse_err(format!("unexpected text in '{line}'")));
            }
            match (key, value) {
                ("step", Some(id)) if STEP_IDS.contains(&id) => steps.push(id.to_string()),
                ("step", Some(id)) => return Err(parse_err(format!("unknown step '{id}'"))),
                ("name", Some(n)) => name = n.to_string(),
                _ => return Err(parse_err(format!("expected 'step <id>', got '{line}'"))),
            }
        }
        Self::new(&name, steps)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("name {}\n", self.name);
        for s in &self.steps {
            let _ = writeln!(out, "step {s}");
        }
        out
    }

    /// Actions making up one step.
    pub fn step_actions(id: &str) -> Vec<ActionStep> {
        use ActionKind::*;
        let a = |kind| ActionStep::new(id, kind);
        match id {
            "1" => vec![a(ApproachLoop)],
            "2" => vec![a(GraspRope { arm: ArmSel::Fixed(Arm::Two), end: RopeEnd::Rf })],
            "3" => vec![a(Insertion { carrier: RopeEnd::Rf, target: LoopTarget::Anchor })],
            "4" => vec![
                a(GraspRope { arm: ArmSel::Fixed(Arm::One), end: RopeEnd::Rf }),
                a(ReleaseRope { arm: ArmSel::Fixed(Arm::Two) }),
            ],
            "5" => vec![a(GraspRope { arm: ArmSel::Fixed(Arm::Two), end: RopeEnd::R0 })],
            "6.1" => vec![a(TurnBase)],
            "6.2" => vec![a(TwistRope)],
            "7" => vec![a(Insertion { carrier: RopeEnd::R0, target: LoopTarget::RopeLoop })],
            "8" => vec![a(ReleaseRope { arm: ArmSel::Holding(RopeEnd::Rf) })],
            "9" => vec![
                a(GraspRope { arm: ArmSel::Free, end: RopeEnd::R0 }),
                a(ReleaseRope { arm: ArmSel::Giver(RopeEnd::R0) }),
            ],
            "10" => vec![a(GraspRope { arm: ArmSel::Free, end: RopeEnd::Rf })],
            _ => Vec::new(),
        }
    }

    fn step_node(id: &str) -> Node<Action> {
        if id == "6" {
            return Node::selector_star(vec![Self::step_node("6.1"), Self::step_node("6.2")]);
        }
        let mut leaves: Vec<Node<Action>> =
            Self::step_actions(id).into_iter().map(|s| Node::leaf(Action::new(s))).collect();
        if leaves.len() == 1 {
            leaves.pop().unwrap()
        } else {
            Node::sequence_star(leaves)
        }
    }

    /// Root sequence re-ticking step 1, then a memory sequence over the
    /// rest with steps 2 and 3 grouped reactively so that a lost grasp is
    /// redone during the insertion.
    pub fn tree(&self) -> Result<Node<Action>> {
        self.validate()?;
        let rest = &self.steps[1..];
        let mut body = Vec::new();
        let mut k = 0;
        while k < rest.len() {
            if rest[k] == "2" && rest.get(k + 1).map(String::as_str) == Some("3") {
                body.push(Node::sequence(vec![Self::step_node("2"), Self::step_node("3")]));
                k += 2;
            } else {
                body.push(Self::step_node(&rest[k]));
                k += 1;
            }
        }
        let tree = Node::sequence(vec![Self::step_node("1"), Node::sequence_star(body)]);
        tree.validate()?;
        Ok(tree)
    }
}

/// Initial layout: robot at the origin facing +X, anchor ahead of it, rope
/// lying straight across in front of the robot.
#[derive(Debug, Clone)]
pub struct KnotScenario {
    pub config: KnotConfig,
    pub anchor: Anchor,
    pub rope_start: Vec3,
    pub rope_dir: Vec3,
    /// Radius of the anchoring circle, kept for rebuilding it.
    pub anchor_radius: f64,
}

impl KnotScenario {
    pub const ANCHOR_CENTER: Vec3 = Vec3::new(0.6, 0.0, 0.45);

    pub fn new(anchor_radius: f64, anchor_step: f64) -> Result<Self> {
        Ok(Self {
            config: KnotConfig::default(),
            anchor: Anchor::circle(anchor_radius, anchor_step, Self::ANCHOR_CENTER, Vec3::x())?,
            rope_start: Vec3::new(0.3, 0.8, 0.25),
            rope_dir: -Vec3::y(),
            anchor_radius,
        })
    }

    /// Rebuild the anchoring circle with a different angular step, keeping
    /// any wave and motion.
    pub fn with_anchor_step(mut self, angular_step: f64) -> Result<Self> {
        let rebuilt = Anchor::circle(self.anchor_radius, angular_step, Self::ANCHOR_CENTER, Vec3::x())?;
        self.anchor.nominal = rebuilt.nominal;
        Ok(self)
    }

    /// Travelling wave on the anchor with amplitude `ratio * radius`. The seed
    /// picks the direction, the number of periods per turn and the base
    /// frequency.
    pub fn with_wave(mut self, ratio: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let direction = if rng.random_bool(0.5) { WaveDirection::Parallel } else { WaveDirection::Perpendicular };
        let spatial_frequency = rng.random_range(1..=3);
        let temporal = TemporalProfile::Chirp { omega0: rng.random_range(0.5..1.5), rate: 0.05 };
        self.anchor.wave =
            Some(WaveSpec::from_ratio(ratio, self.anchor_radius, direction, spatial_frequency, temporal)?);
        Ok(self)
    }

    /// Oscillate the anchor horizontally with peak speed `speed` (m/s). The
    /// seed picks the direction and the period.
    pub fn with_motion(mut self, speed: f64, seed: u64) -> Result<Self> {
        if !(speed >= 0.0) || !speed.is_finite() {
            return Err(Error::InvalidParameter(format!("loop speed must be >= 0, got {speed}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let heading = rng.random_range(0.0..std::f64::consts::TAU);
        let omega = rng.random_range(0.3..0.6);
        let path =
            MotionPath::Oscillate { amplitude: Vec3::new(heading.cos(), heading.sin(), 0.0) * (speed / omega), omega };
        self.anchor.motion = MotionSpec::new(path, speed, speed * omega, &self.anchor.nominal)?;
        Ok(self)
    }

    /// Shift where the rope lies by a few centimetres, drawn from `seed`.
    pub fn jitter(mut self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut j = || rng.random_range(-0.03..0.03);
        self.rope_start += Vec3::new(j(), j(), j());
        self
    }

    pub fn world(&self) -> Result<World> {
        World::new(self.config.clone(), self.anchor.clone(), self.rope_start, self.rope_dir)
    }
}

impl Default for KnotScenario {
    fn default() -> Self {
        Self::new(0.12, 0.1).expect("default scenario is valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub tick: usize,
    pub active_step: String,
    pub status: Status,
    pub base: (f64, f64, f64),
    pub arm1: Vec3,
    pub arm2: Vec3,
}

pub const LOG_HEADER: &str = "tick,active_step,status,base_x,base_y,heading,arm1_x,arm1_y,arm1_z,arm2_x,arm2_y,arm2_z";

impl LogRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.tick,
            self.active_step,
            self.status.label(),
            self.base.0,
            self.base.1,
            self.base.2,
            self.arm1.x,
            self.arm1.y,
            self.arm1.z,
            self.arm2.x,
            self.arm2.y,
            self.arm2.z
        )
    }
}

#[derive(Debug, Clone)]
pub struct KnotResult {
    pub program: String,
    pub completed: bool,
    pub log: Vec<LogRow>,
    pub insertion_count: usize,
    pub twist_count: usize,
    /// |linking number| of the rope (closed far away) with the anchor.
    pub link_check: Option<i64>,
    pub failure: Option<String>,
    pub ticks: usize,
    /// Worst segment-length deviation seen over the run.
    pub max_length_error: f64,
    /// Worst gripper to rope-point distance for closed grippers.
    pub max_binding_error: f64,
    /// Worst base distance from its tracking target after the first
    /// approach.
    pub max_tracking_error: f64,
    pub world: World,
}

impl KnotResult {
    pub fn log_csv(&self) -> String {
        let mut out = String::from(LOG_HEADER);
        out.push('\n');
        for row in &self.log {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }
}

/// Closed rope path against the anchor: the rope continued far out from
/// both ends and joined well away from the anchor.
pub fn anchor_link(world: &World) -> Result<i64> {
    let lp = world.anchor_loop()?;
    let c = lp.centroid();
    let n = lp.area_vector().normalize();
    let seed = if n.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
    let up = (seed - n * seed.dot(&n)).normalize();
    let path = world.rope.closed_path(&c, &up, 10.0);
    Ok(linking_number(&path, lp.vertices())?.abs())
}

pub fn run_program(program: &KnotProgram, scenario: &KnotScenario) -> Result<KnotResult> {
    let mut tree = program.tree()?;
    let mut kw = KnotWorld { world: scenario.world()?, tally: Tally::default() };
    let mut log = Vec::new();
    let mut max_length_error: f64 = 0.0;
    let mut max_binding_error: f64 = 0.0;
    let mut max_tracking_error: f64 = 0.0;
    let mut tracking = false;
    let mut outcome = Status::Running;
    let max_ticks = scenario.config.max_ticks;
    while kw.world.tick < max_ticks {
        outcome = tree.tick(&mut kw)?;
        let w = &kw.world;
        let b = w.robot.base;
        log.push(LogRow {
            tick: w.tick,
            active_step: kw.tally.active.clone(),
            status: outcome,
            base: (b.x, b.y, b.heading),
            arm1: w.robot.arm(Arm::One).position,
            arm2: w.robot.arm(Arm::Two).position,
        });
        if let Ok(target) = w.approach_pose() {
            let e = (target.x - b.x).hypot(target.y - b.y);
            if tracking {
                max_tracking_error = max_tracking_error.max(e);
            } else if e <= w.config.tracking_tolerance {
                tracking = true;
            }
        }
        if outcome != Status::Running {
            break;
        }
        kw.world.advance();
        max_length_error = max_length_error.max(kw.world.rope.length_error());
        max_binding_error = max_binding_error.max(kw.world.binding_error());
    }
    let completed = outcome == Status::Success;
    let failure = match outcome {
        Status::Success => None,
        Status::Failure => kw.tally.failure.clone().or_else(|| Some("action failed".into())),
        Status::Running => Some(format!("no result after {max_ticks} ticks (step {})", kw.tally.active)),
    };
    Ok(KnotResult {
        program: program.name.clone(),
        completed,
        insertion_count: kw.tally.insertions,
        twist_count: kw.tally.twists,
        link_check: anchor_link(&kw.world).ok(),
        failure,
        ticks: kw.world.tick,
        max_length_error,
        max_binding_error,
        max_tracking_error,
        log,
        world: kw.world,
    })
}
