//! Permutation-based p-values: plain label permutation and block (multilevel)
//! permutation, driven by a seedable plan whose replicate streams are
//! independent of execution order. Two statistics run against the same plan
//! see exactly the same permutations, which is what makes the theorem-level
//! p-value equality checks possible.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::encoding::BlockStructure;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// How labels are rearranged under the null.
#[derive(Debug, Clone)]
pub enum PermutationMode {
    /// Uniform random permutation of all rows.
    Plain,
    /// Equal-size contiguous blocks are exchanged as intact units; the order
    /// of samples within each block is preserved.
    Block(BlockStructure),
}

/// Replicate count, seed, and mode for a permutation test.
#[derive(Debug, Clone)]
pub struct PermutationPlan {
    n: usize,
    replicates: usize,
    seed: u64,
    mode: PermutationMode,
}

impl PermutationPlan {
    pub fn plain(n: usize, replicates: usize, seed: u64) -> Result<Self> {
        if n == 0 || replicates == 0 {
            return Err(Error::InvalidInput(
                "sample and replicate counts must be positive".into(),
            ));
        }
        Ok(Self {
            n,
            replicates,
            seed,
            mode: PermutationMode::Plain,
        })
    }

    pub fn block(n: usize, replicates: usize, seed: u64, blocks: BlockStructure) -> Result<Self> {
        if n == 0 || replicates == 0 {
            return Err(Error::InvalidInput(
                "sample and replicate counts must be positive".into(),
            ));
        }
        if blocks.len() != n {
            return Err(Error::InvalidInput(format!(
                "block structure covers {} samples, data has {n}",
                blocks.len()
            )));
        }
        Ok(Self {
            n,
            replicates,
            seed,
            mode: PermutationMode::Block(blocks),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> &PermutationMode {
        &self.mode
    }

    /// The permutation for a given replicate: `perm[i]` is the original row
    /// index placed at position `i`. Replicate 0 is the identity (the
    /// observed arrangement); replicates 1..=R are the null draws, each a
    /// deterministic function of `(seed, replicate)`.
    pub fn permutation(&self, replicate: u64) -> Vec<usize> {
        if replicate == 0 {
            return (0..self.n).collect();
        }
        let mut rng = stream_rng(self.seed, replicate);
        match &self.mode {
            PermutationMode::Plain => {
                let mut perm: Vec<usize> = (0..self.n).collect();
                perm.shuffle(&mut rng);
                perm
            }
            PermutationMode::Block(blocks) => {
                let size = blocks.block_size();
                let mut order: Vec<usize> = (0..blocks.n_blocks()).collect();
                order.shuffle(&mut rng);
                let mut perm = Vec::with_capacity(self.n);
                for &b in &order {
                    perm.extend(b * size..(b + 1) * size);
                }
                perm
            }
        }
    }
}

/// Outcome of a permutation test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// Statistic on the observed (unpermuted) arrangement.
    pub statistic: f64,
    /// Add-one estimator (1 + #{T_r ≥ T_obs}) / (1 + R); never exactly zero.
    pub p_value: f64,
    /// Number of null replicates R.
    pub replicates: usize,
    /// Seed of the plan that produced this result.
    pub seed: u64,
    /// Null statistics in replicate order.
    pub null_replicates: Option<Vec<f64>>,
}

/// Run a permutation test. The statistic closure receives the permutation to
/// apply to the label side (`perm[i]` = original row at position `i`) and
/// must be a pure function of it. Replicates are evaluated in parallel;
/// counting is order-independent, so results are bit-identical to a serial
/// run with the same plan.
pub fn perm_test<F>(statistic: F, plan: &PermutationPlan) -> Result<TestResult>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    let identity: Vec<usize> = (0..plan.n()).collect();
    let observed = statistic(&identity)?;
    let nulls: Vec<f64> = (1..=plan.replicates() as u64)
        .into_par_iter()
        .map(|r| statistic(&plan.permutation(r)))
        .collect::<Result<Vec<f64>>>()?;
    let exceed = nulls.iter().filter(|&&t| t >= observed).count();
    Ok(TestResult {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (1 + plan.replicates()) as f64,
        replicates: plan.replicates(),
        seed: plan.seed(),
        null_replicates: Some(nulls),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;
    use rand_distr::StandardNormal;

    use crate::encoding::make_blocks;
    use crate::matrix::{
        gaussian_kernel, pairwise_distance_values, pairwise_distances, Bandwidth, DataMatrix,
        Metric,
    };
    use crate::power::binomial_band;
    use crate::rng::{derive_seed, stream_rng};
    use crate::stats::{dcov_biased_values, energy_from_pooled, mmd_from_pooled};

    fn permuted(values: &Array2<f64>, perm: &[usize]) -> Array2<f64> {
        Array2::from_shape_fn(values.raw_dim(), |(i, j)| values[[perm[i], perm[j]]])
    }

    fn normal_data(n: usize, p: usize, seed: u64, shift: f64) -> DataMatrix {
        let mut rng = stream_rng(seed, 0);
        DataMatrix::new(Array2::from_shape_fn((n, p), |_| {
            rng.sample::<f64, _>(StandardNormal) + shift
        }))
        .unwrap()
    }

    #[test]
    fn replicates_are_reproducible() {
        let plan = PermutationPlan::plain(2, 10, 99).unwrap();
        for r in 1..=10 {
            let a = plan.permutation(r);
            let b = plan.permutation(r);
            assert_eq!(a, b);
            assert!(a == vec![0, 1] || a == vec![1, 0]);
        }
    }

    #[test]
    fn block_permutation_exchanges_intact_units() {
        let plan = PermutationPlan::block(4, 50, 7, make_blocks(2, 2).unwrap()).unwrap();
        let mut seen_swap = false;
        for r in 1..=50 {
            let p = plan.permutation(r);
            assert!(p == vec![0, 1, 2, 3] || p == vec![2, 3, 0, 1]);
            seen_swap |= p == vec![2, 3, 0, 1];
        }
        assert!(seen_swap);
    }

    #[test]
    fn block_permutation_preserves_within_block_order() {
        let plan = PermutationPlan::block(12, 30, 3, make_blocks(4, 3).unwrap()).unwrap();
        for r in 1..=30 {
            let p = plan.permutation(r);
            for b in 0..4 {
                let chunk = &p[b * 3..(b + 1) * 3];
                assert!(chunk[0] + 1 == chunk[1] && chunk[1] + 1 == chunk[2]);
                assert_eq!(chunk[0] % 3, 0);
            }
        }
    }

    #[test]
    fn block_structure_must_cover_data() {
        let err =
            PermutationPlan::block(5, 10, 0, make_blocks(2, 2).unwrap()).unwrap_err();
        assert!(matches!(err, crate::error::Error::InvalidInput(_)));
    }

    #[test]
    fn boundary_p_value() {
        // observed strictly greater than every null replicate
        let plan = PermutationPlan::plain(6, 99, 5).unwrap();
        let stat = |perm: &[usize]| {
            let identity = perm.iter().enumerate().all(|(i, &p)| i == p);
            Ok(if identity { 1.0 } else { 0.0 })
        };
        let result = perm_test(stat, &plan).unwrap();
        assert_eq!(result.p_value, 1.0 / 100.0);
    }

    #[test]
    fn results_are_deterministic() {
        let x = normal_data(20, 2, 1, 0.0);
        let y = normal_data(20, 1, 2, 0.0);
        let dx = pairwise_distances(&x, Metric::Euclidean);
        let dy = pairwise_distances(&y, Metric::Euclidean);
        let plan = PermutationPlan::plain(20, 100, 77).unwrap();
        let stat = |perm: &[usize]| {
            Ok(dcov_biased_values(dx.values(), &permuted(dy.values(), perm)))
        };
        let a = perm_test(stat, &plan).unwrap();
        let b = perm_test(stat, &plan).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dcov_dcorr_and_energy_share_p_values() {
        // Theorem-level equality: with a shared plan the permutation-invariant
        // scale factor cannot change any comparison against the observed value.
        for trial in 0..5 {
            let n1 = 6 + trial as usize;
            let n2 = 9;
            let u = normal_data(n1, 2, 100 + trial, 0.0);
            let v = normal_data(n2, 2, 200 + trial, 1.0);
            let pooled = u.vstack(&v).unwrap();
            let dx = pairwise_distance_values(&pooled.values().view());
            let labels: Vec<usize> = (0..n1 + n2).map(|i| usize::from(i >= n1)).collect();
            let enc = crate::encoding::one_way_labels(&[n1, n2]).unwrap();
            let dy = pairwise_distance_values(&enc.as_data().values().view());

            let plan = PermutationPlan::plain(n1 + n2, 199, 4242 + trial).unwrap();
            let dcov = |perm: &[usize]| Ok(dcov_biased_values(&dx, &permuted(&dy, perm)));
            let energy = |perm: &[usize]| {
                let mut groups = vec![Vec::new(), Vec::new()];
                for (i, &p) in perm.iter().enumerate() {
                    groups[labels[p]].push(i);
                }
                Ok(energy_from_pooled(&dx, &groups[0], &groups[1]))
            };
            let dcorr = |perm: &[usize]| {
                crate::stats::dcorr_biased_values(&dx, &permuted(&dy, perm))
            };
            let p1 = perm_test(dcov, &plan).unwrap().p_value;
            let p2 = perm_test(energy, &plan).unwrap().p_value;
            let p3 = perm_test(dcorr, &plan).unwrap().p_value;
            assert_eq!(p1, p2);
            assert_eq!(p1, p3);
        }
    }

    #[test]
    fn hsic_and_mmd_share_p_values() {
        for trial in 0..5 {
            let n1 = 7;
            let n2 = 10 + trial as usize;
            let u = normal_data(n1, 2, 300 + trial, 0.0);
            let v = normal_data(n2, 2, 400 + trial, 0.8);
            let pooled = u.vstack(&v).unwrap();
            let kx = gaussian_kernel(&pooled, Bandwidth::Fixed(1.0)).unwrap();
            let enc = crate::encoding::one_way_labels(&[n1, n2]).unwrap();
            let ky = gaussian_kernel(&enc.as_data(), Bandwidth::Fixed(1.0)).unwrap();
            let labels: Vec<usize> = (0..n1 + n2).map(|i| usize::from(i >= n1)).collect();

            let plan = PermutationPlan::plain(n1 + n2, 199, 999 + trial).unwrap();
            let hsic = |perm: &[usize]| {
                Ok(dcov_biased_values(kx.values(), &permuted(ky.values(), perm)))
            };
            let mmd = |perm: &[usize]| {
                let mut groups = vec![Vec::new(), Vec::new()];
                for (i, &p) in perm.iter().enumerate() {
                    groups[labels[p]].push(i);
                }
                Ok(mmd_from_pooled(kx.values(), &groups[0], &groups[1]))
            };
            let p1 = perm_test(hsic, &plan).unwrap().p_value;
            let p2 = perm_test(mmd, &plan).unwrap().p_value;
            assert_eq!(p1, p2);
        }
    }

    #[test]
    fn p_values_are_valid_under_the_null() {
        // 200 null datasets, one p-value each; rejection rates at several
        // alpha levels must sit inside the exact binomial 99% band.
        let reps = 200;
        let p_values: Vec<f64> = (0..reps)
            .map(|rep| {
                let x = normal_data(30, 2, derive_seed(8888, rep), 0.0);
                let dx = pairwise_distance_values(&x.values().view());
                let enc = crate::encoding::one_way_labels(&[15, 15]).unwrap();
                let dy = pairwise_distance_values(&enc.as_data().values().view());
                let plan = PermutationPlan::plain(30, 200, derive_seed(1234, rep)).unwrap();
                let stat = |perm: &[usize]| Ok(dcov_biased_values(&dx, &permuted(&dy, perm)));
                perm_test(stat, &plan).unwrap().p_value
            })
            .collect();
        for alpha in [0.01, 0.05, 0.10] {
            let rejections = p_values.iter().filter(|&&p| p <= alpha).count();
            let (lo, hi) = binomial_band(reps as usize, alpha, 0.005);
            assert!(
                (lo..=hi).contains(&rejections),
                "alpha {alpha}: {rejections} rejections outside [{lo}, {hi}]"
            );
        }
    }
}
