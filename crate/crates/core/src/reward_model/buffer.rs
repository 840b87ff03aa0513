use std::collections::VecDeque;

use rand::Rng;

use super::Trajectory;

/// FIFO store of complete trajectories bounded by the total number of
/// transitions they hold.
#[derive(Debug, Clone)]
pub struct TrajectoryBuffer {
    capacity_transitions: usize,
    trajectories: VecDeque<Trajectory>,
    transitions: usize,
}

impl TrajectoryBuffer {
    pub fn new(capacity_transitions: usize) -> Self {
        Self {
            capacity_transitions,
            trajectories: VecDeque::new(),
            transitions: 0,
        }
    }

    /// Adds a trajectory, evicting the oldest ones until the transition count
    /// fits. The newest trajectory is always kept.
    pub fn push(&mut self, traj: Trajectory) {
        self.transitions += traj.len();
        self.trajectories.push_back(traj);
        while self.transitions > self.capacity_transitions && self.trajectories.len() > 1 {
            let old = self.trajectories.pop_front().unwrap();
            self.transitions -= old.len();
        }
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn transitions(&self) -> usize {
        self.transitions
    }

    /// Uniform draw with replacement. Empty when the buffer is empty.
    pub fn sample<'a, R: Rng + ?Sized>(&'a self, count: usize, rng: &mut R) -> Vec<&'a Trajectory> {
        if self.trajectories.is_empty() {
            return Vec::new();
        }
        (0..count)
            .map(|_| &self.trajectories[rng.random_range(0..self.trajectories.len())])
            .collect()
    }
}
