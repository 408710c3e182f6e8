use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskMode {
    Start,
    Side,
    Normal,
}

impl TaskMode {
    pub fn name(self) -> &'static str {
        match self {
            TaskMode::Start => "start",
            TaskMode::Side => "side",
            TaskMode::Normal => "normal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchRules {
    pub start_steps: u32,
    /// Lateral target speed above which the side model takes over.
    pub side_threshold: f64,
}

impl Default for SwitchRules {
    fn default() -> Self {
        SwitchRules {
            start_steps: 50,
            side_threshold: 1.0,
        }
    }
}

/// Which specialised model should act at step `t` for target `w = (w_x, w_z)`.
pub fn task_switch(t: u32, w: (f64, f64), rules: &SwitchRules) -> TaskMode {
    if t < rules.start_steps {
        TaskMode::Start
    } else if w.1.abs() > rules.side_threshold {
        TaskMode::Side
    } else {
        TaskMode::Normal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumSchedule {
    speeds: Vec<f64>,
    budgets: Vec<u64>,
}

pub const CURRICULUM_FAST: f64 = 4.0;
pub const CURRICULUM_FINAL: f64 = 1.25;
pub const CURRICULUM_STAGES: usize = 5;

impl CurriculumSchedule {
    pub fn new(speeds: Vec<f64>, budgets: Vec<u64>) -> Result<Self> {
        if speeds.is_empty() {
            return Err(Error::config("curriculum.speeds", "at least one stage is required"));
        }
        if speeds.len() != budgets.len() {
            return Err(Error::config("curriculum.budgets", "one budget per stage is required"));
        }
        if speeds.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("curriculum.speeds", "speeds must be finite"));
        }
        Ok(CurriculumSchedule { speeds, budgets })
    }

    /// Five stages decreasing linearly from 4.0 to 1.25 m/s, `budget` steps each.
    pub fn linear(budget: u64) -> Self {
        let n = CURRICULUM_STAGES;
        let speeds = (0..n)
            .map(|i| CURRICULUM_FAST + (CURRICULUM_FINAL - CURRICULUM_FAST) * i as f64 / (n - 1) as f64)
            .collect();
        CurriculumSchedule {
            speeds,
            budgets: vec![budget; n],
        }
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn budgets(&self) -> &[u64] {
        &self.budgets
    }
}

/// Commanded speed at `step`; the last stage holds after the total budget.
pub fn curriculum_stage(schedule: &CurriculumSchedule, step: u64) -> f64 {
    let mut end = 0u64;
    for (&speed, &budget) in schedule.speeds.iter().zip(&schedule.budgets) {
        end = end.saturating_add(budget);
        if step < end {
            return speed;
        }
    }
    *schedule.speeds.last().expect("non-empty by construction")
}
