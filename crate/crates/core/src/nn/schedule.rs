/// Cosine annealing with warm restarts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdrSchedule {
    pub eta_min: f64,
    pub eta_max: f64,
    /// Length of the first cycle in steps.
    pub period: u64,
    /// Factor applied to the cycle length after each restart.
    pub mult: f64,
}

/// `eta_min + (eta_max - eta_min) (1 + cos(pi t_cur / t_i)) / 2`.
pub fn cosine_annealing(t_cur: f64, t_i: f64, eta_min: f64, eta_max: f64) -> f64 {
    eta_min + 0.5 * (eta_max - eta_min) * (1.0 + (std::f64::consts::PI * t_cur / t_i).cos())
}

impl SgdrSchedule {
    /// Position inside the current cycle: `(cycle index, t_cur, t_i)`.
    pub fn locate(&self, step: u64) -> (u32, f64, f64) {
        let mut t_i = self.period.max(1) as f64;
        let mut t_cur = step as f64;
        let mut cycle = 0;
        while t_cur >= t_i {
            t_cur -= t_i;
            t_i = (t_i * self.mult.max(1.0)).round();
            cycle += 1;
        }
        (cycle, t_cur, t_i)
    }

    pub fn lr(&self, step: u64) -> f64 {
        let (_, t_cur, t_i) = self.locate(step);
        cosine_annealing(t_cur, t_i, self.eta_min, self.eta_max)
    }

    /// True on the last step of a cycle, where ensemble snapshots are taken.
    pub fn is_cycle_end(&self, step: u64) -> bool {
        self.locate(step + 1).0 != self.locate(step).0
    }
}

pub fn lr_sgdr(step: u64, schedule: &SgdrSchedule) -> f64 {
    schedule.lr(step)
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: SgdrSchedule = SgdrSchedule {
        eta_min: 1e-4,
        eta_max: 1e-2,
        period: 100,
        mult: 2.0,
    };

    #[test]
    fn cosine_landmarks() {
        assert_eq!(cosine_annealing(0.0, 100.0, 0.1, 1.0), 1.0);
        assert!((cosine_annealing(100.0, 100.0, 0.1, 1.0) - 0.1).abs() < 1e-15);
        assert!((cosine_annealing(50.0, 100.0, 0.1, 1.0) - 0.55).abs() < 1e-15);
    }

    #[test]
    fn restarts_with_growing_period() {
        assert_eq!(lr_sgdr(0, &S), S.eta_max);
        assert_eq!(lr_sgdr(100, &S), S.eta_max);
        assert_eq!(S.locate(100), (1, 0.0, 200.0));
        assert_eq!(S.locate(300), (2, 0.0, 400.0));
        assert!((lr_sgdr(200, &S) - 0.5 * (S.eta_min + S.eta_max)).abs() < 1e-15);
        assert!(S.is_cycle_end(99));
        assert!(!S.is_cycle_end(100));
    }

    #[test]
    fn learning_rate_stays_in_band() {
        for step in 0..2000 {
            let lr = lr_sgdr(step, &S);
            assert!(lr >= S.eta_min - 1e-18 && lr <= S.eta_max);
        }
    }
}
