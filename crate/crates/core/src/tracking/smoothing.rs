use std::collections::VecDeque;

use crate::Vec3;

/// Sliding-window arithmetic mean of 3-D samples.
///
/// During warm-up the mean runs over however many samples have arrived.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingAverageFilter {
    window: usize,
    buffer: VecDeque<Vec3>,
}

impl MovingAverageFilter {
    pub fn new(window: usize) -> Self {
        let window = window.max(1);
        Self { window, buffer: VecDeque::with_capacity(window) }
    }

    pub fn window_size(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn reset(&mut self) {
        self.buffer.clear();
    }

    pub fn smooth(&mut self, sample: Vec3) -> Vec3 {
        if self.buffer.len() == self.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(sample);
        self.mean().expect("buffer is non-empty after push")
    }

    /// Mean of the buffer, clamped into its axis-wise envelope so rounding
    /// can never push it outside the samples.
    pub fn mean(&self) -> Option<Vec3> {
        let first = *self.buffer.front()?;
        let (lo, hi) = self
            .buffer
            .iter()
            .fold((first, first), |(lo, hi), &s| (lo.component_min(s), hi.component_max(s)));
        let mean = self.buffer.iter().copied().sum::<Vec3>() / self.buffer.len() as f64;
        Some(mean.component_max(lo).component_min(hi))
    }

    pub fn samples(&self) -> impl Iterator<Item = &Vec3> {
        self.buffer.iter()
    }
}
