//! Behavior-tree composites over user-defined leaves.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Running,
    Success,
    Failure,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Success => "success",
            Status::Failure => "failure",
        }
    }
}

/// A leaf of the tree, ticked against a mutable world.
pub trait Behavior<W> {
    fn tick(&mut self, world: &mut W) -> Status;

    /// Called before the leaf is started again by a memory composite.
    fn reset(&mut self) {}
}

#[derive(Debug, Clone)]
pub enum Node<L> {
    /// Reactive sequence: every tick starts from the first child, so earlier
    /// children keep running (and can fail) while later ones are active.
    Sequence(Vec<Node<L>>),
    /// Sequence with memory: resumes at the child that was running.
    SequenceStar {
        children: Vec<Node<L>>,
        current: usize,
    },
    /// Selector with memory: resumes the running child and moves on to the
    /// next alternative only when it fails.
    SelectorStar {
        children: Vec<Node<L>>,
        current: usize,
    },
    Leaf(L),
}

impl<L> Node<L> {
    pub fn sequence(children: Vec<Node<L>>) -> Self {
        Node::Sequence(children)
    }

    pub fn sequence_star(children: Vec<Node<L>>) -> Self {
        Node::SequenceStar { children, current: 0 }
    }

    pub fn selector_star(children: Vec<Node<L>>) -> Self {
        Node::SelectorStar { children, current: 0 }
    }

    pub fn leaf(leaf: L) -> Self {
        Node::Leaf(leaf)
    }

    pub fn children(&self) -> &[Node<L>] {
        match self {
            Node::Sequence(c) => c,
            Node::SequenceStar { children, .. } | Node::SelectorStar { children, .. } => children,
            Node::Leaf(_) => &[],
        }
    }

    /// Composites must have at least one child.
    pub fn validate(&self) -> Result<()> {
        match self {
            Node::Leaf(_) => Ok(()),
            _ if self.children().is_empty() => Err(Error::Structure("composite node without children".into())),
            _ => self.children().iter().try_for_each(Node::validate),
        }
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<&L> {
        match self {
            Node::Leaf(l) => vec![l],
            _ => self.children().iter().flat_map(Node::leaves).collect(),
        }
    }
}

impl<L> Node<L> {
    pub fn reset<W>(&mut self)
    where
        L: Behavior<W>,
    {
        match self {
            Node::Leaf(l) => Behavior::<W>::reset(l),
            Node::Sequence(children) => children.iter_mut().for_each(|c| c.reset::<W>()),
            Node::SequenceStar { children, current } | Node::SelectorStar { children, current } => {
                *current = 0;
                children.iter_mut().for_each(|c| c.reset::<W>());
            }
        }
    }

    pub fn tick<W>(&mut self, world: &mut W) -> Result<Status>
    where
        L: Behavior<W>,
    {
        match self {
            Node::Leaf(l) => Ok(l.tick(world)),
            Node::Sequence(children) => {
                if children.is_empty() {
                    return Err(Error::Structure("empty sequence".into()));
                }
                for child in children.iter_mut() {
                    match child.tick(world)? {
                        Status::Success => continue,
                        other => return Ok(other),
                    }
                }
                Ok(Status::Success)
            }
            Node::SequenceStar { children, current } => {
                if children.is_empty() {
                    return Err(Error::Structure("empty sequence".into()));
                }
                while *current < children.len() {
                    match children[*current].tick(world)? {
                        Status::Success => *current += 1,
                        Status::Running => return Ok(Status::Running),
                        Status::Failure => {
                            *current = 0;
                            return Ok(Status::Failure);
                        }
                    }
                }
                *current = 0;
                Ok(Status::Success)
            }
            Node::SelectorStar { children, current } => {
                if children.is_empty() {
                    return Err(Error::Structure("empty selector".into()));
                }
                while *current < children.len() {
                    match children[*current].tick(world)? {
                        Status::Failure => *current += 1,
                        Status::Running => return Ok(Status::Running),
                        Status::Success => {
                            *current = 0;
                            return Ok(Status::Success);
                        }
                    }
                }
                *current = 0;
                Ok(Status::Failure)
            }
        }
    }
}
