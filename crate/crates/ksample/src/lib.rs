//! Nonparametric k-sample hypothesis testing by recasting k-sample problems
//! as independence problems.
//!
//! Groups are concatenated into a pooled data matrix x and paired with a
//! label matrix y; any dependence statistic between x and y then tests
//! whether the groups share a distribution. The crate provides:
//!
//! - distance and kernel statistics: biased/unbiased Dcov and Dcorr, HSIC,
//!   two-sample Energy, MMD, and the k-sample DISCO energy ([`stats`]),
//!   together with checks of the exact identities tying them together;
//! - Multiscale Graph Correlation ([`mgc`]) and the random-forest induced
//!   kernel statistic KMERF ([`kmerf`]);
//! - parametric baselines, Hotelling's T² and MANOVA's Pillai trace
//!   ([`classical`]);
//! - a seedable permutation engine with plain and block (multilevel) modes
//!   ([`permutation`]), a by-name test runner ([`runner`]), and Monte-Carlo
//!   power estimation ([`power`]);
//! - data generators for the Gaussian, multiway, multilevel, and rotated
//!   benchmark settings ([`simulations`]).
//!
//! Everything is deterministic given a seed: parallel execution draws each
//! work item's randomness from its own counter-addressed stream.

pub mod classical;
pub mod encoding;
pub mod error;
pub mod kmerf;
pub mod matrix;
pub mod mgc;
pub mod permutation;
pub mod power;
pub mod rng;
pub mod runner;
pub mod simulations;
pub mod stats;

pub use encoding::{
    concat_groups, make_blocks, multiway_labels, one_way_labels, BlockStructure, KSampleData,
    LabelEncoding,
};
pub use error::{Error, Result};
pub use matrix::{
    double_center, gaussian_kernel, pairwise_distances, u_center, Bandwidth, CenteredMatrix,
    CenteringScheme, DataMatrix, DistanceMatrix, KernelMatrix, Metric,
};
pub use permutation::{perm_test, PermutationMode, PermutationPlan, TestResult};
pub use power::{binomial_band, estimate_power, GeneratedData, PowerConfig, PowerEstimate, TestSpec};
pub use runner::{run_test, RunOptions, TestKind};
pub use stats::{HsicVariant, IdentityCheck, KSampleIdentity, StatisticValue};
