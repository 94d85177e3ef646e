use super::state::State;
use crate::error::{Error, Result};

/// Replay buffer of states observed on failing runs. Last in, first out.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayBuffer {
    entries: Vec<State>,
}

impl ReplayBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, s: State) {
        self.entries.push(s);
    }

    pub fn pop(&mut self) -> Result<State> {
        self.entries.pop().ok_or(Error::BufferUnderflow)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}
