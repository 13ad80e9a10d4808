//! Shapley regression, hypothesis tests, share coefficients and VEIN aggregation.

mod coefficients;
mod components;
mod regression;
mod vein;

pub use coefficients::{smc, ssc, ssc_se_bound, term_signs, CoefficientRow, CoefficientTable, ShareSummary, Sign};
pub use components::{group_components, ComponentTable};
pub use regression::{
    is_robust, shapley_regression, stars, test_null, test_robust, Estimate, SeMode, ShapleyRegressionFit,
};
pub use vein::{adjust_ci, ci_ratio, required_folds, vein_aggregate, VeinEstimate, VeinSummary};
