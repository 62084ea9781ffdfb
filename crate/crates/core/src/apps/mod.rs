//! Application builders, their private counterparts and evaluation metrics.

pub mod ellipsoid;
pub mod metrics;
pub mod opf;
pub mod regression;
pub mod simple_lp;
pub mod svm;

pub use ellipsoid::{
    build_ellipsoid, ellipsoid_sensitivity, evaluate_ellipsoids, privatize_ellipsoid, privatize_ellipsoid_with,
    solve_ellipsoid, Ellipse, EllipsoidAdjacency, EllipsoidInstance, EllipsoidMetrics, EllipsoidPrivate,
};
pub use metrics::{evaluate_points, evaluate_rule_metrics, RuleMetrics, SampleRecord, FEASIBILITY_TOL};
pub use opf::{
    build_opf, build_opf_with, cost_range, evaluate_opf_strategy, opf_sensitivity_bound, privatize_opf,
    privatize_opf_with, Balance, OpfAdjacency, OpfPrivate, PowerNetwork, Strategy,
};
pub use regression::{
    build_monotone_regression, build_wind_curve_dataset, bundled_wind_curve, evaluate_regression, privatize_regression,
    privatize_regression_with, regression_sensitivity, solve_regression, Basis, RegressionAdjacency, RegressionMetrics,
    RegressionModel, RegressionPrivate,
};
pub use simple_lp::{SimpleLp, SimpleLpAdjacency};
pub use svm::{
    accuracy, build_svm, classify, hyperplane, perturbed_accuracy, privatize_svm, privatize_svm_with, solve_svm,
    svm_sensitivity, LabeledPoints, MinMax, SvmAdjacency, SvmLayout, SvmPrivate,
};
