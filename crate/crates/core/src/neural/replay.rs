use rand::Rng;

/// Which controller produced the executed action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Actor,
    Planner,
}

/// One stored transition. `action` is in actor units, i.e. the velocity
/// command divided by the evader's top speed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperienceTuple {
    pub s: Vec<f64>,
    pub action: [f64; 2],
    pub reward: f64,
    pub s_next: Vec<f64>,
    pub terminal: bool,
    pub branch: Branch,
}

/// Fixed-capacity ring of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<ExperienceTuple>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: ExperienceTuple) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// `batch` indices drawn uniformly with replacement, or `None` while the
    /// buffer holds fewer than `batch` transitions.
    pub fn sample<'a, R: Rng + ?Sized>(
        &'a self,
        batch: usize,
        rng: &mut R,
    ) -> Option<Vec<&'a ExperienceTuple>> {
        if batch == 0 || self.items.len() < batch {
            return None;
        }
        Some(
            (0..batch)
                .map(|_| &self.items[rng.random_range(0..self.items.len())])
                .collect(),
        )
    }
}
