//! Runs any of the k-sample tests by name against a permutation plan. Each
//! test precomputes its x-side structure once (distance or kernel matrix,
//! pooled data) and re-evaluates only the label side per permutation, so all
//! tests driven by the same plan see identical permutation streams.

use ndarray::Array2;

use crate::classical::{hotelling_from_pooled, pillai_from_pooled};
use crate::encoding::{concat_groups, one_way_labels, KSampleData};
use crate::error::{Error, Result};
use crate::kmerf::{kmerf_statistic_value, ForestConfig};
use crate::matrix::{
    double_center_values, gaussian_kernel, pairwise_distance_values, u_center_values, Bandwidth,
};
use crate::mgc::mgc_statistic_values;
use crate::permutation::{perm_test, PermutationPlan, TestResult};
use crate::rng::derive_seed;
use crate::stats::{
    disco_from_pooled, energy_from_pooled, inner, inner_permuted, mmd_from_pooled,
};

/// The k-sample tests the runner knows about. `Energy` evaluates the
/// two-sample energy statistic for k = 2 and the pairwise-weighted DISCO
/// form for k ≥ 3; `Mmd` and `Hotelling` are strictly two-sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Dcorr,
    DcorrBiased,
    Hsic,
    HsicBiased,
    Mgc,
    Kmerf,
    Energy,
    Mmd,
    Disco,
    Manova,
    Hotelling,
}

impl TestKind {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "dcorr" => Self::Dcorr,
            "dcorr-biased" => Self::DcorrBiased,
            "hsic" => Self::Hsic,
            "hsic-biased" => Self::HsicBiased,
            "mgc" => Self::Mgc,
            "kmerf" => Self::Kmerf,
            "energy" => Self::Energy,
            "mmd" => Self::Mmd,
            "disco" => Self::Disco,
            "manova" => Self::Manova,
            "hotelling" => Self::Hotelling,
            other => return Err(Error::UnknownTest(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Dcorr => "dcorr",
            Self::DcorrBiased => "dcorr-biased",
            Self::Hsic => "hsic",
            Self::HsicBiased => "hsic-biased",
            Self::Mgc => "mgc",
            Self::Kmerf => "kmerf",
            Self::Energy => "energy",
            Self::Mmd => "mmd",
            Self::Disco => "disco",
            Self::Manova => "manova",
            Self::Hotelling => "hotelling",
        }
    }

    pub fn all() -> &'static [TestKind] {
        &[
            Self::Dcorr,
            Self::DcorrBiased,
            Self::Hsic,
            Self::HsicBiased,
            Self::Mgc,
            Self::Kmerf,
            Self::Energy,
            Self::Mmd,
            Self::Disco,
            Self::Manova,
            Self::Hotelling,
        ]
    }
}

/// Tunables shared by the kernel- and forest-based tests.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Bandwidth rule for HSIC and MMD kernels (resolved on the pooled data,
    /// so it is invariant under label permutations).
    pub bandwidth: Bandwidth,
    /// Forest configuration for KMERF.
    pub forest: ForestConfig,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::Median,
            forest: ForestConfig::default(),
        }
    }
}

fn permuted_matrix(values: &Array2<f64>, perm: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn(values.raw_dim(), |(i, j)| values[[perm[i], perm[j]]])
}

fn group_lists(labels: &[usize], k: usize, perm: &[usize]) -> Vec<Vec<usize>> {
    let mut lists = vec![Vec::with_capacity(labels.len() / k + 1); k];
    for (i, &p) in perm.iter().enumerate() {
        lists[labels[p]].push(i);
    }
    lists
}

/// Normalized correlation closure over precomputed centered matrices. The
/// self terms are permutation-invariant, so they are fixed up front; a zero
/// self term is a degenerate (constant) sample.
fn correlation_closure(
    cx: Array2<f64>,
    cy: Array2<f64>,
) -> Result<impl Fn(&[usize]) -> Result<f64> + Sync> {
    let vxx = inner(&cx, &cx);
    let vyy = inner(&cy, &cy);
    if vxx <= 0.0 || vyy <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let denom = (vxx * vyy).sqrt();
    Ok(move |perm: &[usize]| Ok(inner_permuted(&cx, &cy, perm) / denom))
}

/// Run a k-sample test against a permutation plan. The plan's sample count
/// must match the pooled data; block plans exchange intact blocks.
pub fn run_test(
    kind: TestKind,
    data: &KSampleData,
    plan: &PermutationPlan,
    options: &RunOptions,
) -> Result<TestResult> {
    let n = data.total_n();
    if plan.n() != n {
        return Err(Error::InvalidInput(format!(
            "plan covers {} samples, data has {n}",
            plan.n()
        )));
    }
    let pooled = concat_groups(data);
    let labels = data.group_indices();
    let k = data.k();

    match kind {
        TestKind::Dcorr | TestKind::DcorrBiased => {
            let dx = pairwise_distance_values(&pooled.values().view());
            let encoding = one_way_labels(&data.sizes())?;
            let dy = pairwise_distance_values(&encoding.as_data().values().view());
            let (cx, cy) = match kind {
                TestKind::Dcorr => {
                    if n < 4 {
                        return Err(Error::SampleSize { needed: 4, got: n });
                    }
                    (u_center_values(&dx.view()), u_center_values(&dy.view()))
                }
                _ => (
                    double_center_values(&dx.view()),
                    double_center_values(&dy.view()),
                ),
            };
            perm_test(correlation_closure(cx, cy)?, plan)
        }
        TestKind::Hsic | TestKind::HsicBiased => {
            let kx = gaussian_kernel(&pooled, options.bandwidth)?;
            let encoding = one_way_labels(&data.sizes())?;
            let ky = gaussian_kernel(&encoding.as_data(), options.bandwidth)?;
            let (cx, cy) = match kind {
                TestKind::Hsic => {
                    if n < 4 {
                        return Err(Error::SampleSize { needed: 4, got: n });
                    }
                    (
                        u_center_values(&kx.values().view()),
                        u_center_values(&ky.values().view()),
                    )
                }
                _ => (
                    double_center_values(&kx.values().view()),
                    double_center_values(&ky.values().view()),
                ),
            };
            perm_test(correlation_closure(cx, cy)?, plan)
        }
        TestKind::Mgc => {
            let dx = pairwise_distance_values(&pooled.values().view());
            let encoding = one_way_labels(&data.sizes())?;
            let dy = pairwise_distance_values(&encoding.as_data().values().view());
            let stat = move |perm: &[usize]| {
                Ok(mgc_statistic_values(&dx, &permuted_matrix(&dy, perm))?.0)
            };
            perm_test(stat, plan)
        }
        TestKind::Kmerf => {
            let forest_seed = derive_seed(plan.seed(), 0xF0FE57);
            let config = options.forest.clone();
            let stat = move |perm: &[usize]| {
                let permuted: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
                kmerf_statistic_value(&pooled, &permuted, &config, forest_seed)
            };
            perm_test(stat, plan)
        }
        TestKind::Energy if k == 2 => {
            let dx = pairwise_distance_values(&pooled.values().view());
            let stat = move |perm: &[usize]| {
                let lists = group_lists(&labels, 2, perm);
                Ok(energy_from_pooled(&dx, &lists[0], &lists[1]))
            };
            perm_test(stat, plan)
        }
        TestKind::Energy | TestKind::Disco => {
            let dx = pairwise_distance_values(&pooled.values().view());
            let stat = move |perm: &[usize]| {
                let lists = group_lists(&labels, k, perm);
                Ok(disco_from_pooled(&dx, &lists))
            };
            perm_test(stat, plan)
        }
        TestKind::Mmd => {
            if k != 2 {
                return Err(Error::InvalidInput(format!(
                    "mmd is a two-sample test, got {k} groups"
                )));
            }
            let kx = gaussian_kernel(&pooled, options.bandwidth)?;
            let stat = move |perm: &[usize]| {
                let lists = group_lists(&labels, 2, perm);
                Ok(mmd_from_pooled(kx.values(), &lists[0], &lists[1]))
            };
            perm_test(stat, plan)
        }
        TestKind::Manova => {
            let values = pooled.values().clone();
            let stat = move |perm: &[usize]| {
                let lists = group_lists(&labels, k, perm);
                pillai_from_pooled(&values.view(), &lists)
            };
            perm_test(stat, plan)
        }
        TestKind::Hotelling => {
            if k != 2 {
                return Err(Error::InvalidInput(format!(
                    "hotelling is a two-sample test, got {k} groups"
                )));
            }
            let values = pooled.values().clone();
            let stat = move |perm: &[usize]| {
                let lists = group_lists(&labels, 2, perm);
                hotelling_from_pooled(&values.view(), &lists[0], &lists[1])
            };
            perm_test(stat, plan)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{pairwise_distances, Metric};
    use crate::simulations::{gaussian_three_sample, multilevel_gaussian, GaussianSetting};
    use crate::stats;

    fn small_data(epsilon: f64, seed: u64) -> KSampleData {
        gaussian_three_sample(GaussianSetting::OneDifferent, epsilon, 2, 12, seed).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for &kind in TestKind::all() {
            assert_eq!(TestKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(matches!(
            TestKind::parse("anova").unwrap_err(),
            Error::UnknownTest(_)
        ));
    }

    #[test]
    fn observed_statistic_matches_the_module_operation() {
        let data = small_data(0.8, 5);
        let plan = PermutationPlan::plain(36, 25, 7).unwrap();
        let run = run_test(TestKind::Dcorr, &data, &plan, &RunOptions::default()).unwrap();

        let pooled = concat_groups(&data);
        let encoding = one_way_labels(&data.sizes()).unwrap();
        let dx = pairwise_distances(&pooled, Metric::Euclidean);
        let dy = pairwise_distances(&encoding.as_data(), Metric::Euclidean);
        let direct = stats::dcorr_unbiased(&dx, &dy).unwrap();
        assert_eq!(run.statistic, direct.value);
    }

    #[test]
    fn runner_is_deterministic() {
        let data = small_data(0.5, 9);
        let plan = PermutationPlan::plain(36, 50, 11).unwrap();
        for kind in [TestKind::Dcorr, TestKind::Manova, TestKind::Energy] {
            let a = run_test(kind, &data, &plan, &RunOptions::default()).unwrap();
            let b = run_test(kind, &data, &plan, &RunOptions::default()).unwrap();
            assert_eq!(a, b, "{kind:?}");
        }
    }

    #[test]
    fn energy_dispatches_to_disco_for_three_groups() {
        let data = small_data(0.5, 13);
        let plan = PermutationPlan::plain(36, 40, 3).unwrap();
        let a = run_test(TestKind::Energy, &data, &plan, &RunOptions::default()).unwrap();
        let b = run_test(TestKind::Disco, &data, &plan, &RunOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_sample_only_tests_reject_three_groups() {
        let data = small_data(0.5, 17);
        let plan = PermutationPlan::plain(36, 10, 1).unwrap();
        for kind in [TestKind::Mmd, TestKind::Hotelling] {
            assert!(matches!(
                run_test(kind, &data, &plan, &RunOptions::default()).unwrap_err(),
                Error::InvalidInput(_)
            ));
        }
    }

    #[test]
    fn plan_size_must_match_data() {
        let data = small_data(0.5, 19);
        let plan = PermutationPlan::plain(35, 10, 1).unwrap();
        assert!(run_test(TestKind::Dcorr, &data, &plan, &RunOptions::default()).is_err());
    }

    #[test]
    fn separated_groups_are_detected() {
        let data = small_data(3.0, 23);
        let plan = PermutationPlan::plain(36, 199, 29).unwrap();
        for kind in [
            TestKind::Dcorr,
            TestKind::DcorrBiased,
            TestKind::Hsic,
            TestKind::Energy,
            TestKind::Manova,
        ] {
            let result = run_test(kind, &data, &plan, &RunOptions::default()).unwrap();
            assert!(
                result.p_value <= 0.05,
                "{kind:?}: p = {}",
                result.p_value
            );
        }
    }

    #[test]
    fn block_plans_run_end_to_end() {
        let sample = multilevel_gaussian(0.0, 20, 2, 31).unwrap();
        let n = sample.data.total_n();
        let plan = PermutationPlan::block(n, 60, 37, sample.blocks.clone()).unwrap();
        let result = run_test(TestKind::Dcorr, &sample.data, &plan, &RunOptions::default());
        let p = result.unwrap().p_value;
        assert!(p > 0.0 && p <= 1.0);
    }
}
