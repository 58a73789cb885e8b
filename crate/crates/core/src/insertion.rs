//! Field-following insertion: integrate the offset into a trajectory, stop
//! once the flux density has passed its maximum, and score the result.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::field::{field, offset_from_field, FieldParams};
use crate::geometry::{fit_plane_frame, plane_crossing, point_inside_planar, Loop, LoopFrame, Vec3};

/// When to declare that the flux density has passed its maximum.
///
/// The flux is smoothed with a trailing moving mean of `window` samples. The
/// run stops once the smoothed flux has decreased `persistence` times in a
/// row and sits at least a fraction `drop` below its running peak.
/// `window = 1, drop = 0` is the plain consecutive-decrease test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub persistence: usize,
    pub window: usize,
    pub drop: f64,
}

impl StopRule {
    /// Consecutive raw decreases only.
    pub fn consecutive(persistence: usize) -> Self {
        Self { persistence, window: 1, drop: 0.0 }
    }

    /// Smooth fields: stop on the first decrease.
    pub fn strict() -> Self {
        Self::consecutive(1)
    }

    /// Loops re-sampled with noise every tick.
    pub fn noisy() -> Self {
        Self { persistence: 3, window: 20, drop: 0.15 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.persistence == 0 {
            return Err(Error::InvalidParameter("stop persistence must be >= 1".into()));
        }
        if self.window == 0 {
            return Err(Error::InvalidParameter("stop window must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.drop) {
            return Err(Error::InvalidParameter(format!("stop drop must be in [0, 1), got {}", self.drop)));
        }
        Ok(())
    }
}

impl Default for StopRule {
    fn default() -> Self {
        Self::strict()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsertionParams {
    pub field: FieldParams,
    pub max_iters: usize,
    pub stop: StopRule,
    /// Follow the α/β-weighted field in the frame of the current loop.
    pub planar: bool,
}

impl InsertionParams {
    pub fn new(field: FieldParams, max_iters: usize, stop: StopRule, planar: bool) -> Result<Self> {
        let p = Self { field, max_iters, stop, planar };
        p.validate()?;
        Ok(p)
    }

    /// Static-loop defaults: stop on the first decrease; budget of ten times
    /// the straight-line distance to the loop in steps.
    pub fn for_start(field: FieldParams, start: &Vec3, lp: &Loop) -> Self {
        let distance = (start - lp.centroid()).norm();
        Self {
            field,
            max_iters: default_max_iters(distance, field.gamma),
            stop: StopRule::strict(),
            planar: field.alpha != field.beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        self.stop.validate()
    }
}

pub fn default_max_iters(distance: f64, gamma: f64) -> usize {
    ((10.0 * distance / gamma).ceil() as usize).max(10)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub positions: Vec<Vec3>,
    pub flux: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Moves `(index, from, to)`; move `i` goes from sample `i` to `i + 1`.
    pub fn moves(&self) -> impl Iterator<Item = (usize, &Vec3, &Vec3)> {
        self.positions.windows(2).enumerate().map(|(i, w)| (i, &w[0], &w[1]))
    }

    /// First plane crossing: `(move index, point, sign)`.
    pub fn first_crossing(&self, frame: &LoopFrame) -> Option<(usize, Vec3, i8)> {
        self.moves().find_map(|(i, a, b)| plane_crossing(a, b, frame).map(|(p, s)| (i, p, s)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    FieldDrop,
    MaxIters,
    Error(Error),
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::FieldDrop => "field_drop",
            Termination::MaxIters => "max_iters",
            Termination::Error(_) => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertionOutcome {
    pub success: bool,
    /// Distance of the first plane crossing from the loop centroid.
    pub quality: Option<f64>,
    /// Iterations until the trajectory first reached the loop plane.
    pub delay: Option<usize>,
    pub stop_point: Vec3,
    pub trajectory: TrajectoryRecord,
    pub termination: Termination,
}

/// One control tick: `x + δ` with the plain or α/β-weighted offset.
///
/// In planar mode a missing frame is fitted from `lp`.
pub fn step(x: &Vec3, lp: &Loop, params: &InsertionParams, frame: Option<&LoopFrame>) -> Result<Vec3> {
    let b = field(lp, x, &params.field)?;
    let delta = if params.planar {
        let fitted;
        let frame = match frame {
            Some(f) => f,
            None => {
                fitted = fit_plane_frame(lp)?;
                &fitted
            }
        };
        offset_from_field(&b, Some(frame), &params.field)?
    } else {
        offset_from_field(&b, None, &params.field)?
    };
    Ok(x + delta)
}

/// Online evaluation of a [`StopRule`] over a flux sequence.
#[derive(Debug, Clone)]
pub struct StopDetector {
    rule: StopRule,
    recent: VecDeque<f64>,
    count: usize,
    previous: Option<f64>,
    run: usize,
    peak: f64,
    peak_at: usize,
}

impl StopDetector {
    pub fn new(rule: StopRule) -> Self {
        Self {
            rule,
            recent: VecDeque::with_capacity(rule.window),
            count: 0,
            previous: None,
            run: 0,
            peak: f64::NEG_INFINITY,
            peak_at: 0,
        }
    }

    /// Feed the next flux sample; true once the rule fires.
    pub fn push(&mut self, flux: f64) -> bool {
        let index = self.count;
        self.count += 1;
        self.recent.push_back(flux);
        if self.recent.len() > self.rule.window {
            self.recent.pop_front();
        }
        if self.recent.len() < self.rule.window {
            return false;
        }
        let smoothed =
            if self.rule.window == 1 { flux } else { self.recent.iter().sum::<f64>() / self.rule.window as f64 };
        if let Some(prev) = self.previous {
            if smoothed < prev {
                self.run += 1;
            } else {
                self.run = 0;
            }
        }
        self.previous = Some(smoothed);
        if smoothed > self.peak {
            self.peak = smoothed;
            self.peak_at = index;
        }
        self.run >= self.rule.persistence && smoothed <= (1.0 - self.rule.drop) * self.peak
    }

    /// Sample that best represents the flux maximum once the rule fired at
    /// sample `fired_at`: the sample before the decrease run for the plain
    /// rule, otherwise the centre of the peak window.
    pub fn peak_sample(&self, fired_at: usize) -> usize {
        if self.rule.window == 1 && self.rule.drop == 0.0 {
            fired_at - self.rule.persistence
        } else {
            self.peak_at - (self.rule.window - 1) / 2
        }
    }
}

/// Follow the field of `loop_at(t)` from `start`, re-reading the loop every
/// tick. Scoring uses the `nominal` loop and its frame.
pub fn run_insertion<F>(start: Vec3, nominal: &Loop, mut loop_at: F, params: &InsertionParams) -> InsertionOutcome
where
    F: FnMut(usize) -> Loop,
{
    let mut trajectory = TrajectoryRecord::default();
    let mut detector = StopDetector::new(params.stop);
    let mut x = start;
    let mut termination = Termination::MaxIters;
    let mut stop_index = None;

    if let Err(e) = params.validate() {
        termination = Termination::Error(e);
    } else {
        for t in 0..=params.max_iters {
            let lp = loop_at(t);
            let tick = field(&lp, &x, &params.field).and_then(|b| {
                let frame = if params.planar { Some(fit_plane_frame(&lp)?) } else { None };
                Ok((b, frame))
            });
            let (b, frame) = match tick {
                Ok(v) => v,
                Err(e) => {
                    termination = Termination::Error(e);
                    break;
                }
            };
            trajectory.positions.push(x);
            trajectory.flux.push(b.norm());
            if detector.push(b.norm()) {
                termination = Termination::FieldDrop;
                stop_index = Some(detector.peak_sample(t));
                break;
            }
            if t == params.max_iters {
                break;
            }
            match offset_from_field(&b, frame.as_ref(), &params.field) {
                Ok(delta) => x += delta,
                Err(e) => {
                    termination = Termination::Error(e);
                    break;
                }
            }
        }
    }

    let stop_point = match stop_index {
        Some(i) => trajectory.positions[i],
        None => trajectory.positions.last().copied().unwrap_or(start),
    };
    let (success, quality, delay) = match fit_plane_frame(nominal) {
        Ok(frame) => (
            detect_success(&trajectory, nominal, &frame),
            score_quality(&trajectory, nominal, &frame).ok(),
            score_delay(&trajectory, &frame).ok(),
        ),
        Err(_) => (false, None, None),
    };
    InsertionOutcome { success, quality, delay, stop_point, trajectory, termination }
}

/// Distance from the first plane crossing to the loop centroid.
pub fn score_quality(trajectory: &TrajectoryRecord, lp: &Loop, frame: &LoopFrame) -> Result<f64> {
    let (_, point, _) = trajectory.first_crossing(frame).ok_or(Error::NoInsertion)?;
    Ok((point - lp.centroid()).norm())
}

/// Number of iterations until the trajectory first reaches the plane.
pub fn score_delay(trajectory: &TrajectoryRecord, frame: &LoopFrame) -> Result<usize> {
    trajectory.first_crossing(frame).map(|(i, _, _)| i + 1).ok_or(Error::NoInsertion)
}

/// True iff some move crosses the plane inside the loop, travelling along
/// the loop normal (the direction the field passes through the interior).
pub fn detect_success(trajectory: &TrajectoryRecord, lp: &Loop, frame: &LoopFrame) -> bool {
    trajectory.moves().any(|(_, a, b)| match plane_crossing(a, b, frame) {
        Some((p, sign)) => sign > 0 && point_inside_planar(lp, frame, &p).unwrap_or(false),
        None => false,
    })
}
