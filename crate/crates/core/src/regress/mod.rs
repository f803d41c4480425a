//! Regressors on top of group features and Gram matrices.

pub mod baseline;
pub mod cv;
pub mod krr;
pub mod lasso;
pub mod metrics;

pub use baseline::{baseline_rbf_gram, RbfBaseline};
pub use cv::{default_grid, grid_search_cv, CvOutcome, Folds, HyperParams, Method};
pub use krr::{krr_fit, krr_predict, CenteredKrr, FittedKrr};
pub use lasso::{lasso_fit, FittedLasso, LassoSettings, StandardizedLasso};
pub use metrics::{metrics, Metrics};
