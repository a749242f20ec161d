//! Declarative description of a synthetic workload family.

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::dag::{JobDag, Workload};
use super::generate::{num_templates, tpch_job, with_poisson_arrivals, TemplateOptions, TPCH_SIZES};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// TPC-H-like jobs with uniformly drawn template and size, arriving as a
/// batch or as a Poisson stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadSpec {
    pub num_jobs: usize,
    pub sizes: Vec<f64>,
    /// Templates to draw from (0-based); empty means all of them.
    pub templates: Vec<usize>,
    /// `None` submits every job at time 0.
    pub mean_interarrival: Option<f64>,
    pub noise_cv: f64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            num_jobs: 10,
            sizes: TPCH_SIZES.to_vec(),
            templates: Vec::new(),
            mean_interarrival: None,
            noise_cv: TemplateOptions::default().noise_cv,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.num_jobs == 0 {
            return bad("workload.num_jobs must be >= 1".into());
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("workload.sizes must be non-empty and positive".into());
        }
        if let Some(t) = self.templates.iter().find(|&&t| t >= num_templates()) {
            return bad(format!("workload.templates: {t} out of range 0..{}", num_templates()));
        }
        if let Some(m) = self.mean_interarrival {
            if !(m.is_finite() && m > 0.0) {
                return bad(format!("workload.mean_interarrival must be > 0, got {m}"));
            }
        }
        if !(self.noise_cv.is_finite() && self.noise_cv >= 0.0) {
            return bad("workload.noise_cv must be >= 0".into());
        }
        Ok(())
    }

    /// The workload drawn for `seed`; same seed, same workload.
    pub fn sample(&self, seed: u64) -> Result<Workload> {
        self.validate()?;
        let all: Vec<usize> = (0..num_templates()).collect();
        let pool = if self.templates.is_empty() { &all } else { &self.templates };
        let opts = TemplateOptions {
            noise_cv: self.noise_cv,
            ..TemplateOptions::default()
        };
        let mut rng = seeded(seed);
        let jobs: Vec<JobDag> = (0..self.num_jobs)
            .map(|k| {
                let t = *pool.choose(&mut rng).expect("non-empty pool");
                let size = *self.sizes.choose(&mut rng).expect("non-empty sizes");
                tpch_job(t, size, &opts, format!("q{}-s{}-{}", t + 1, size, k))
            })
            .collect::<Result<_>>()?;
        match self.mean_interarrival {
            None => Ok(Workload::batch(jobs)),
            Some(m) => with_poisson_arrivals(jobs, m, seed ^ 0x5eed),
        }
    }
}
