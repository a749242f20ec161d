//! Job DAGs, synthetic workloads, trace files and task-duration models.

mod dag;
mod duration;
mod generate;
mod spec;
mod trace;

pub use dag::{ArrivalKind, ArrivalProcess, DurationModel, JobDag, StageSpec, Workload};
pub use duration::{mean_task_duration, sample_task_duration, Wave};
pub use generate::{
    default_inflation, gen_random_dag, gen_tpch_like, gen_tpch_like_with, num_templates,
    top_work_share, tpch_job, with_poisson_arrivals, TemplateOptions, TPCH_SIZES,
};
pub use spec::WorkloadSpec;
pub use trace::{load_trace, parse_trace, trace_to_string, TRACE_SCHEMA_VERSION};
