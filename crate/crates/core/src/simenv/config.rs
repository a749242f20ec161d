use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default executor move delay in seconds (JVM start-up cost).
pub const DEFAULT_MOVE_DELAY: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutorClass {
    pub cpu: f64,
    pub mem: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    AvgJct,
    Makespan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Executor classes; a single class means single-resource mode unless
    /// `multi_resource` is set.
    pub classes: Vec<ExecutorClass>,
    pub multi_resource: bool,
    pub move_delay: f64,
    /// First-wave tasks use the slower first-wave mean.
    pub waves: bool,
    /// Per-parallelism task slowdown from the stage's inflation table.
    pub inflation: bool,
    /// Multiplicative duration noise.
    pub noise: bool,
    pub objective: Objective,
    /// Keep per-task records (Gantt export, placement audit).
    pub record_tasks: bool,
    /// Keep the JSON-lines event audit log.
    pub audit: bool,
}

impl EnvConfig {
    /// Single-resource cluster of `n` identical executors.
    pub fn single(n: usize) -> Self {
        EnvConfig {
            classes: vec![ExecutorClass {
                cpu: 1.0,
                mem: 1.0,
                count: n,
            }],
            multi_resource: false,
            move_delay: DEFAULT_MOVE_DELAY,
            waves: true,
            inflation: true,
            noise: true,
            objective: Objective::AvgJct,
            record_tasks: true,
            audit: false,
        }
    }

    /// Four executor classes with one core and 0.25/0.5/0.75/1.0 memory,
    /// each a quarter of `n` (rounded; the remainder goes to the smallest).
    pub fn four_class(n: usize) -> Self {
        let base = n / 4;
        let mut classes: Vec<ExecutorClass> = [0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&mem| ExecutorClass {
                cpu: 1.0,
                mem,
                count: base,
            })
            .collect();
        classes[0].count += n - 4 * base;
        EnvConfig {
            classes,
            multi_resource: true,
            ..EnvConfig::single(n)
        }
    }

    /// No waves, no move delay, no inflation, no noise: stage duration scales
    /// inversely with its executor count.
    pub fn simplified(mut self) -> Self {
        self.waves = false;
        self.inflation = false;
        self.noise = false;
        self.move_delay = 0.0;
        self
    }

    pub fn with_move_delay(mut self, d: f64) -> Self {
        self.move_delay = d;
        self
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn num_executors(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_executors() == 0 {
            return Err(Error::InvalidConfig("cluster needs at least one executor".into()));
        }
        if !(self.move_delay.is_finite() && self.move_delay >= 0.0) {
            return Err(Error::InvalidConfig(format!("move_delay {} must be >= 0", self.move_delay)));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if !(c.mem > 0.0 && c.cpu > 0.0 && c.mem.is_finite() && c.cpu.is_finite()) {
                return Err(Error::InvalidConfig(format!("executor class {i} has empty capacity")));
            }
        }
        Ok(())
    }
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig::single(50)
    }
}
