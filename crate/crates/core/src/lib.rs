//! Cross-validated tuning and selection of supervised learners.
//!
//! Grid points are scored by the fold-size-weighted K-fold error on one
//! shared fold assignment. [`metalearn`] picks among tuned families.

pub mod cli;
pub mod crossval;
pub mod dataset;
pub mod error;
pub mod folds;
pub mod learners;
pub mod metalearn;
pub mod rng;

pub use crossval::{
    cv_error, grid_search, grid_search_with, mce, mse, CvResult, GridReport, Metric, SearchOptions,
};
pub use dataset::{
    load_csv, standardize_apply, standardize_fit, train_test_split, Dataset, Matrix, Standardizer,
    Target, Task,
};
pub use error::{Error, Result};
pub use folds::{loocv_folds, make_folds, make_stratified_folds, FoldAssignment};
pub use learners::{
    complexity_rank, fit, predict, Family, FittedModel, HyperGrid, HyperValue, KernelFn,
    LearnerSpec, Params,
};
pub use metalearn::{
    bias_variance_curve, ensemble_predict, tune_all, CurveRow, DgpConfig, DgpFunction, MetaConfig,
    MetaReport, StopReason, Strategy,
};
