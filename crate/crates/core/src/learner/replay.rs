use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::math;
use crate::{Error, Result};

/// Binary tree of partial sums over a fixed number of leaves.
#[derive(Debug, Clone, PartialEq)]
struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(capacity: usize) -> Self {
        let leaves = capacity.next_power_of_two();
        Self {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    fn get(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    fn set(&mut self, i: usize, value: f64) {
        let mut node = self.leaves + i;
        self.nodes[node] = value;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
    }

    /// Leaf whose cumulative range contains `mass`, skipping empty leaves.
    fn find(&self, mut mass: f64) -> usize {
        let mut node = 1;
        while node < self.leaves {
            let left = self.nodes[2 * node];
            if mass < left || self.nodes[2 * node + 1] <= 0.0 {
                node *= 2;
            } else {
                mass -= left;
                node = 2 * node + 1;
            }
        }
        node - self.leaves
    }
}

/// One sampled slot of a batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledItem {
    pub index: usize,
    pub probability: f64,
    /// `(N·p)^{-β}`, divided by the largest weight in the batch.
    pub weight: f64,
}

/// Proportional prioritized replay over a ring buffer.
///
/// Raw priorities are stored; `prio^α` lives in a sum tree for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct PrioritizedReplay<T> {
    capacity: usize,
    alpha: f64,
    beta: f64,
    items: Vec<T>,
    priorities: Vec<f64>,
    tree: SumTree,
    next: usize,
    max_priority: f64,
}

impl<T> PrioritizedReplay<T> {
    pub const DEFAULT_ALPHA: f64 = 0.6;
    pub const DEFAULT_BETA: f64 = 0.3;
    /// Lower bound on every stored priority.
    pub const PRIORITY_FLOOR: f64 = 1e-6;

    pub fn new(capacity: usize, alpha: f64, beta: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Empty("replay capacity"));
        }
        if !(alpha >= 0.0 && alpha.is_finite() && beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(
                "replay exponents must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            capacity,
            alpha,
            beta,
            items: Vec::new(),
            priorities: Vec::new(),
            tree: SumTree::new(capacity),
            next: 0,
            max_priority: 1.0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn get(&self, index: usize) -> Option<&T> {
        self.items.get(index)
    }

    pub fn priorities(&self) -> &[f64] {
        &self.priorities
    }

    /// Slot the next insertion overwrites once the buffer is full.
    pub fn cursor(&self) -> usize {
        self.next
    }

    /// Largest priority assigned so far; new items enter with it.
    pub fn max_priority(&self) -> f64 {
        self.max_priority
    }

    /// Insert at the current maximal priority (1 for an empty buffer).
    pub fn add(&mut self, item: T) -> usize {
        let p = if self.items.is_empty() { 1.0 } else { self.max_priority };
        self.add_with_priority(item, p)
            .expect("max priority is positive")
    }

    pub fn add_with_priority(&mut self, item: T, priority: f64) -> Result<usize> {
        check_priority(priority)?;
        let slot = self.next;
        if self.items.len() < self.capacity {
            self.items.push(item);
            self.priorities.push(priority);
        } else {
            self.items[slot] = item;
            self.priorities[slot] = priority;
        }
        self.tree.set(slot, math::powf(priority, self.alpha));
        self.max_priority = self.max_priority.max(priority);
        self.next = (slot + 1) % self.capacity;
        Ok(slot)
    }

    /// Sampling probability of one slot.
    pub fn probability(&self, index: usize) -> f64 {
        self.tree.get(index) / self.tree.total()
    }

    /// Draw `batch` slots with replacement.
    pub fn sample<R: RngCore + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<SampledItem>> {
        if self.items.is_empty() {
            return Err(Error::Empty("replay buffer"));
        }
        let total = self.tree.total();
        let n = self.items.len() as f64;
        let mut out: Vec<SampledItem> = (0..batch)
            .map(|_| {
                let mut index = self.tree.find(rng.random::<f64>() * total);
                if index >= self.items.len() {
                    index = self.items.len() - 1;
                }
                let probability = self.probability(index);
                SampledItem {
                    index,
                    probability,
                    weight: math::powf(n * probability, -self.beta),
                }
            })
            .collect();
        let max = out.iter().map(|s| s.weight).fold(0.0, f64::max);
        for s in &mut out {
            s.weight /= max;
        }
        Ok(out)
    }

    /// Set a slot's priority to `|td| + floor`.
    pub fn update_priority(&mut self, index: usize, td_error: f64) -> Result<()> {
        if !td_error.is_finite() {
            return Err(Error::NonFinite("TD error"));
        }
        self.set_priority(index, math::abs(td_error) + Self::PRIORITY_FLOOR)
    }

    pub fn set_priority(&mut self, index: usize, priority: f64) -> Result<()> {
        check_priority(priority)?;
        if index >= self.items.len() {
            return Err(Error::OutOfRange {
                what: "replay slots",
                index,
                len: self.items.len(),
            });
        }
        self.priorities[index] = priority;
        self.tree.set(index, math::powf(priority, self.alpha));
        self.max_priority = self.max_priority.max(priority);
        Ok(())
    }
}

fn check_priority(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument("priority must be positive and finite".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn two_item_probabilities() {
        let mut r = PrioritizedReplay::new(4, 0.6, 0.3).unwrap();
        r.add_with_priority('a', 1.0).unwrap();
        r.add_with_priority('b', 2.0).unwrap();
        let z = 1.0 + 2f64.powf(0.6);
        assert!((r.probability(0) - 1.0 / z).abs() < 1e-15);
        assert!((r.probability(1) - 2f64.powf(0.6) / z).abs() < 1e-15);
        assert!((r.probability(0) - 0.3976).abs() < 1e-4);
    }

    #[test]
    fn equal_priorities_sample_uniformly_with_unit_weights() {
        let mut r = PrioritizedReplay::new(8, 0.6, 0.3).unwrap();
        for i in 0..5 {
            r.add(i);
        }
        let batch = r.sample(64, &mut seeded_rng(0)).unwrap();
        assert!(batch.iter().all(|s| (s.weight - 1.0).abs() < 1e-12));
        assert!(batch.iter().all(|s| (s.probability - 0.2).abs() < 1e-12));
    }

    #[test]
    fn zero_beta_gives_unit_weights() {
        let mut r = PrioritizedReplay::new(8, 0.6, 0.0).unwrap();
        for (i, p) in [0.1, 3.0, 7.0].into_iter().enumerate() {
            r.add_with_priority(i, p).unwrap();
        }
        let batch = r.sample(32, &mut seeded_rng(1)).unwrap();
        assert!(batch.iter().all(|s| s.weight == 1.0));
    }

    #[test]
    fn zero_alpha_is_uniform() {
        let mut r = PrioritizedReplay::new(4, 0.0, 0.3).unwrap();
        for (i, p) in [0.01, 1.0, 5.0, 100.0].into_iter().enumerate() {
            r.add_with_priority(i, p).unwrap();
        }
        let mut counts = [0usize; 4];
        let n = 100_000;
        for s in r.sample(n, &mut seeded_rng(2)).unwrap() {
            counts[s.index] += 1;
        }
        // 4 binomial standard deviations
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 / 4.0).abs() < 4.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn frequencies_follow_priorities() {
        let mut r = PrioritizedReplay::new(3, 0.6, 0.3).unwrap();
        for (i, p) in [1.0, 2.0, 4.0].into_iter().enumerate() {
            r.add_with_priority(i, p).unwrap();
        }
        let n = 200_000;
        let mut counts = [0usize; 3];
        for s in r.sample(n, &mut seeded_rng(3)).unwrap() {
            counts[s.index] += 1;
        }
        for (i, c) in counts.iter().enumerate() {
            let p = r.probability(i);
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - n as f64 * p).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn new_items_enter_at_max_priority() {
        let mut r = PrioritizedReplay::new(4, 0.6, 0.3).unwrap();
        r.add(0);
        assert_eq!(r.priorities(), &[1.0]);
        r.update_priority(0, 3.0).unwrap();
        r.add(1);
        assert_eq!(r.priorities()[1], 3.0 + 1e-6);
    }

    #[test]
    fn priority_floor_and_ring() {
        let mut r = PrioritizedReplay::new(2, 0.6, 0.3).unwrap();
        r.add(0);
        r.add(1);
        r.update_priority(0, 0.0).unwrap();
        assert!(r.priorities().iter().all(|p| *p >= 1e-6));
        let slot = r.add(2);
        assert_eq!(slot, 0);
        assert_eq!(r.len(), 2);
        assert_eq!(r.get(0), Some(&2));
    }

    #[test]
    fn empty_buffer_errors() {
        let r: PrioritizedReplay<u8> = PrioritizedReplay::new(2, 0.6, 0.3).unwrap();
        assert!(r.sample(1, &mut seeded_rng(0)).is_err());
    }
}
