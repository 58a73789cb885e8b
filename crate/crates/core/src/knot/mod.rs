//! Knot tying with a two-armed mobile robot: kinematic rope, basic actions
//! and their behavior-tree composition.

pub mod actions;
pub mod bt;
pub mod program;
pub mod rope;
pub mod world;

pub use actions::{Action, ActionKind, ActionStep, ArmSel, KnotWorld, LoopTarget, Tally};
pub use bt::{Behavior, Node, Status};
pub use program::{run_program, KnotName, KnotProgram, KnotResult, KnotScenario};
pub use rope::{rope_loop_extraction, rope_update, Rope};
pub use world::{Anchor, Arm, KnotConfig, RobotState, RopeEnd, World};
