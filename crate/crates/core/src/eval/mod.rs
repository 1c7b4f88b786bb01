//! Ground truth, the hit criterion, synthetic data and benchmark reports.

mod bench;
mod manifest;
mod metrics;
mod report;
pub mod synth;

pub use bench::{
    aggregate, benchmark_images, load_images, render_corpus, run_benchmark, BenchRun, ImageRecord,
    LoadedImage, MethodConfigs,
};
pub use manifest::{Annotation, Category, DatasetEntry, DatasetManifest, MANIFEST_VERSION};
pub use metrics::{
    average_robustness, hit_rate, is_hit, pooled_rate, rate_percent, relative_error, round2,
    HIT_THRESHOLD,
};
pub use report::{
    BenchReport, CellReport, GlobalReport, ReportFormat, TimingReport, REPORT_VERSION,
};
pub use synth::{
    apportion, plan_corpus, synth_eye, write_corpus, CorpusItem, LensReflection, Occlusion,
    PupilShape, SynthParams, DEFAULT_PROPORTIONS, MANIFEST_FILE,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty result set")]
    EmptySet,
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
