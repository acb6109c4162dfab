//! One-vs-all multiclass training, hyperparameter selection and the
//! repeated random-split benchmark with its report and plot data.

mod benchmark;
mod fit;
mod method;
mod metrics;
mod model;
mod report;
mod settings;

pub use benchmark::{
    repetition_key, run_benchmark, BenchmarkPlan, BenchmarkReport, CellSummary, ClassWeights, FailureRecord,
    MemoryStore, RepetitionResult, ResultStore,
};
pub use fit::{fit_split, select_hyperparameters, CvChoice, Fit, GridPoint, Workspace};
pub use method::Method;
pub use metrics::{accuracy, confusion_matrix, mean_and_std};
pub use model::{predict_multiclass, train_one_vs_all, MulticlassModel};
pub use report::{curve_rows, table_csv, weight_rows};
pub use settings::PipelineSettings;
