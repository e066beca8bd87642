//! Sparse logistic regression with Logsum, L1/2 and L1 penalties, trained by
//! IRLS + coordinate descent, optionally wrapped in a self-paced learning loop
//! that admits samples from easy (low loss) to hard.
//!
//! Modules:
//! - [`data`]: datasets, CSV I/O, standardization, stratified splits
//! - [`penalties`]: penalty values and univariate thresholding operators
//! - [`solver`]: the penalized IRLS solver and λ cross-validation
//! - [`spl`]: the self-paced outer loop
//! - [`metrics`]: AUC, confusion-based scores, descriptor p-values
//! - [`sim`]: the correlated simulation design and support-recovery scores

pub mod data;
pub mod metrics;
pub mod penalties;
pub mod seeding;
pub mod sim;
pub mod solver;
pub mod spl;

pub use data::{load_csv, save_csv, split, DataError, Dataset, DropReport, LabelMapping, SplitPair, Standardization};
pub use metrics::{auc, confusion_report, descriptor_pvalues, ClassificationReport, DescriptorReport, MetricsError};
pub use penalties::{PenaltyError, PenaltyKind, PenaltySpec};
pub use solver::{cross_validate, fit, fit_chosen, fit_weighted, CvOptions, CvResult, FitOptions, ModelFit, SolverError};
pub use spl::{confidence_bands, spl_fit, spl_fit_from, update_weights, ConfidenceBands, Gamma0, SplConfig, SplError, SplState};
pub use sim::{generate, run_replicated, support_metrics, Cell, Method, ReplicatedResults, ReplicationPlan, SimConfig, SimError, SupportMetrics, TrueModel};
