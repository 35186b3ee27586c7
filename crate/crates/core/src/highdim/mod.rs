//! Inference on one treatment coefficient with many controls: Lasso with
//! penalty loadings, penalty selection, partialling out, double selection,
//! the debiased Lasso and a numerical Neyman-orthogonality probe.

mod dml;
mod lambda;
mod lasso;

pub use dml::{
    debiased_lasso, double_selection, ols_all_controls, orthogonality_check, partial_out, single_selection,
    DmlMethod, DmlOptions, Nuisance, DmlReport, LoadingSummary, OrthogonalityCheck, OrthogonalityRow, DEFAULT_T_GRID,
};
pub use lambda::{fold_assignment, lambda_grid, select_lambda, CvPoint, LambdaChoice, LambdaRule, PLUGIN_C};
pub use lasso::{default_loadings, lambda_max, lasso, LassoFit, LassoOptions};
