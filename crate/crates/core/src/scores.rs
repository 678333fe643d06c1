//! Rarity scores from a trailing-window empirical CDF.
//!
//! A raw market value is mapped through the empirical distribution of the
//! series' own recent history, giving a score in `[0, 1]` that is uniformly
//! distributed for stationary input. Ties use the mid-rank convention.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 2_000;
pub const DEFAULT_MIN_HISTORY: usize = 30;

/// Bounded FIFO of past values with a sorted index for rank queries.
#[derive(Debug, Clone)]
pub struct EcdfState {
    capacity: usize,
    window: VecDeque<f64>,
    sorted: Vec<f64>,
}

impl EcdfState {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("score window capacity must be positive".into()));
        }
        Ok(EcdfState {
            capacity,
            window: VecDeque::new(),
            sorted: Vec::new(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Values in insertion order, oldest first.
    pub fn window(&self) -> impl Iterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    /// Inserts `x`, evicting the oldest value when the window is full.
    pub fn update(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("cannot score non-finite value {x}")));
        }
        if self.window.len() == self.capacity {
            if let Some(old) = self.window.pop_front() {
                let at = self.sorted.partition_point(|&v| v < old);
                debug_assert!(self.sorted[at] == old);
                self.sorted.remove(at);
            }
        }
        self.window.push_back(x);
        let at = self.sorted.partition_point(|&v| v <= x);
        self.sorted.insert(at, x);
        Ok(())
    }

    /// Mid-rank ECDF value of `x`: `(#{v < x} + #{v = x} / 2) / n`.
    pub fn rarity_score(&self, x: f64) -> Result<f64> {
        if self.sorted.is_empty() {
            return Err(Error::InsufficientHistory("empty score window".into()));
        }
        let below = self.sorted.partition_point(|&v| v < x);
        let not_above = self.sorted.partition_point(|&v| v <= x);
        let ties = not_above - below;
        Ok((below as f64 + 0.5 * ties as f64) / self.sorted.len() as f64)
    }
}

/// Online scorer for one series: scores each value against history strictly
/// before it, then adds it to the history. Emits `None` during cold start.
#[derive(Debug, Clone)]
pub struct ScoreTracker {
    state: EcdfState,
    min_history: usize,
}

impl ScoreTracker {
    pub fn new(window: usize, min_history: usize) -> Result<Self> {
        if min_history == 0 || min_history > window {
            return Err(Error::Config(format!(
                "score minimum history must be in 1..={window}, got {min_history}"
            )));
        }
        Ok(ScoreTracker {
            state: EcdfState::new(window)?,
            min_history,
        })
    }

    pub fn observe(&mut self, x: f64) -> Result<Option<f64>> {
        let score = if self.state.len() >= self.min_history {
            Some(self.state.rarity_score(x)?)
        } else {
            None
        };
        self.state.update(x)?;
        Ok(score)
    }

    /// Score `x` would get now, without recording it.
    pub fn peek(&self, x: f64) -> Option<f64> {
        if self.state.len() >= self.min_history {
            self.state.rarity_score(x).ok()
        } else {
            None
        }
    }

    pub fn state(&self) -> &EcdfState {
        &self.state
    }
}
