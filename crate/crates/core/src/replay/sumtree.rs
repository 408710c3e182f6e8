/// Binary tree of partial sums over `capacity` non-negative leaves.
///
/// Every update recomputes the ancestors from their children, so internal
/// nodes never accumulate drift.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    /// Heap layout: node `k` has children `2k` and `2k + 1`; leaves start at `leaves`.
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        let leaves = capacity.next_power_of_two();
        SumTree {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    pub fn capacity(&self) -> usize {
        self.leaves
    }

    pub fn total(&self) -> f64 {
        self.nodes[1.min(self.nodes.len() - 1)]
    }

    pub fn get(&self, index: usize) -> f64 {
        self.nodes[self.leaves + index]
    }

    pub fn set(&mut self, index: usize, value: f64) {
        debug_assert!(value >= 0.0 && value.is_finite());
        let mut k = self.leaves + index;
        self.nodes[k] = value;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Leaf whose cumulative range contains `mass`, clamped to positive leaves.
    pub fn find(&self, mass: f64) -> usize {
        if self.leaves == 1 {
            return 0;
        }
        let mut mass = mass.clamp(0.0, self.total());
        let mut k = 1;
        while k < self.leaves {
            let left = self.nodes[2 * k];
            if (mass < left || self.nodes[2 * k + 1] <= 0.0) && left > 0.0 {
                k *= 2;
            } else {
                mass -= left;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }

    /// Largest absolute mismatch between an internal node and its children.
    pub fn max_inconsistency(&self) -> f64 {
        (1..self.leaves)
            .map(|k| (self.nodes[k] - (self.nodes[2 * k] + self.nodes[2 * k + 1])).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn find_walks_cumulative_ranges() {
        let mut t = SumTree::new(4);
        for (i, p) in [1.0, 0.0, 2.0, 1.0].into_iter().enumerate() {
            t.set(i, p);
        }
        assert_eq!(t.total(), 4.0);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.0), 2);
        assert_eq!(t.find(2.9), 2);
        assert_eq!(t.find(3.5), 3);
        assert_eq!(t.find(4.0), 3);
    }

    #[test]
    fn never_returns_zero_leaf() {
        let mut t = SumTree::new(5);
        t.set(2, 1.0);
        for m in [0.0, 0.3, 1.0, 5.0] {
            assert_eq!(t.find(m), 2);
        }
    }

    proptest! {
        #[test]
        fn root_matches_direct_sum(ops in prop::collection::vec((0usize..37, 0.0f64..100.0), 1..400)) {
            let mut t = SumTree::new(37);
            let mut direct = vec![0.0; 37];
            for (i, p) in ops {
                t.set(i, p);
                direct[i] = p;
            }
            let sum: f64 = direct.iter().sum();
            prop_assert!((t.total() - sum).abs() < 1e-9);
            prop_assert!(t.max_inconsistency() == 0.0);
        }
    }
}
