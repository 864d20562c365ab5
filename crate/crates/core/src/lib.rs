//! Parametric-task MAP-Elites: fills a continuous task space with elites,
//! measures the result at arbitrary resolutions and distills it into a policy.

pub mod archive;
pub mod delaunay;
pub mod distill;
pub mod engine;
pub mod error;
pub mod kdtree;
pub mod logfile;
pub mod metrics;
pub mod problems;
pub mod seed;
pub mod tessellation;
pub mod variation;

pub use archive::{Archive, Elite};
pub use distill::{train_distillation, Dataset, Distillation, MlpPolicy, TrainReport, TrainSettings};
pub use engine::{Engine, Evaluation, EvaluationLog, Method, Operator, RunConfig, RunMetadata, RunMode, RunOutput};
pub use error::{Error, Result};
pub use metrics::{GeometryCache, Rearchiver, ResolutionSchedule, ResolutionScore};
pub use problems::{Archery, Arm, Benchmark, LinearToy, Problem};
pub use tessellation::Tessellation;
pub use variation::BanditState;
