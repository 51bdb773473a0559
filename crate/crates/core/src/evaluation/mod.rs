//! Leave-two-units-out cross-validation and week-wise error analysis.

mod cv;
mod folds;
mod temporal;

pub use cv::{
    constant_predictor_mae, fit_fold_stats, run_cv, CvDataset, CvReport, CvSample, FoldResult,
    PredictionRecord,
};
pub use folds::{make_folds, FoldSpec};
pub use temporal::{cover_error_correlation, pearson, weekwise_error, Correlation, WeekRow};
