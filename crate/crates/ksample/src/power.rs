//! Monte-Carlo power estimation: repeatedly generate data under a setting,
//! run each configured test, and count rejections at level α. Replicates run
//! in a work pool with per-replicate derived seeds, so estimates are
//! bit-identical regardless of thread count.

use rayon::prelude::*;

use crate::encoding::{BlockStructure, KSampleData};
use crate::error::{Error, Result};
use crate::permutation::PermutationPlan;
use crate::rng::{derive_seed, derive_seed2};
use crate::runner::{run_test, RunOptions, TestKind};

/// Shared Monte-Carlo configuration: level, replicate counts, master seed.
#[derive(Debug, Clone)]
pub struct PowerConfig {
    pub alpha: f64,
    pub mc_reps: usize,
    pub perm_reps: usize,
    pub seed: u64,
}

impl PowerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if self.mc_reps == 0 || self.perm_reps == 0 {
            return Err(Error::InvalidInput(
                "Monte-Carlo and permutation replicate counts must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One test to evaluate: which statistic, whether labels are exchanged in
/// blocks, and its options.
#[derive(Debug, Clone)]
pub struct TestSpec {
    pub kind: TestKind,
    pub block_permutation: bool,
    pub options: RunOptions,
}

impl TestSpec {
    pub fn new(kind: TestKind) -> Self {
        Self {
            kind,
            block_permutation: false,
            options: RunOptions::default(),
        }
    }

    pub fn with_block(kind: TestKind) -> Self {
        Self {
            kind,
            block_permutation: true,
            options: RunOptions::default(),
        }
    }

    /// Label used in reports: the test name, with a `+block` suffix for
    /// block-permutation variants.
    pub fn label(&self) -> String {
        if self.block_permutation {
            format!("{}+block", self.kind.name())
        } else {
            self.kind.name().to_string()
        }
    }
}

/// One dataset drawn from a setting, with its block structure when the
/// setting has one.
pub struct GeneratedData {
    pub data: KSampleData,
    pub blocks: Option<BlockStructure>,
}

/// Estimated rejection rate of one test.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerEstimate {
    pub test: String,
    pub power: f64,
    pub se: f64,
    pub rejections: usize,
    pub reps: usize,
}

/// Estimate power for each test over `cfg.mc_reps` datasets drawn from the
/// generator. The generator receives a derived seed per replicate; each
/// (replicate, test) pair gets its own permutation-plan seed. Rejection rule:
/// p ≤ α.
pub fn estimate_power<G>(
    generator: G,
    tests: &[TestSpec],
    cfg: &PowerConfig,
) -> Result<Vec<PowerEstimate>>
where
    G: Fn(u64) -> Result<GeneratedData> + Sync,
{
    cfg.validate()?;
    if tests.is_empty() {
        return Err(Error::InvalidInput("no tests configured".into()));
    }
    let counts: Vec<usize> = (0..cfg.mc_reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<Vec<usize>> {
            let generated = generator(derive_seed(cfg.seed, rep))?;
            let n = generated.data.total_n();
            let mut rejected = vec![0usize; tests.len()];
            for (t, spec) in tests.iter().enumerate() {
                let plan_seed = derive_seed2(cfg.seed, rep, t as u64 + 1);
                let plan = if spec.block_permutation {
                    let blocks = generated.blocks.clone().ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "test `{}` wants block permutation but the setting has no blocks",
                            spec.label()
                        ))
                    })?;
                    PermutationPlan::block(n, cfg.perm_reps, plan_seed, blocks)?
                } else {
                    PermutationPlan::plain(n, cfg.perm_reps, plan_seed)?
                };
                let result = run_test(spec.kind, &generated.data, &plan, &spec.options)?;
                if result.p_value <= cfg.alpha {
                    rejected[t] = 1;
                }
            }
            Ok(rejected)
        })
        .try_reduce(
            || vec![0usize; tests.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b.iter()) {
                    *x += y;
                }
                Ok(a)
            },
        )?;

    Ok(tests
        .iter()
        .zip(counts.iter())
        .map(|(spec, &rejections)| {
            let m = cfg.mc_reps as f64;
            let power = rejections as f64 / m;
            PowerEstimate {
                test: spec.label(),
                power,
                se: (power * (1.0 - power) / m).sqrt(),
                rejections,
                reps: cfg.mc_reps,
            }
        })
        .collect())
}

/// Equal-tail exact binomial acceptance band for a count of successes out of
/// `n` trials at success probability `p`: the smallest `lo` with
/// P(X ≤ lo) > tail and the largest `hi` with P(X ≥ hi) > tail. Observing a
/// count outside [lo, hi] is evidence at the 2·tail level.
pub fn binomial_band(n: usize, p: f64, tail: f64) -> (usize, usize) {
    let pmf0 = (1.0 - p).powi(n as i32);
    let mut pmf = pmf0;
    let mut cdf = pmf0;
    let mut lo = 0;
    while cdf <= tail && lo < n {
        pmf *= (n - lo) as f64 / (lo + 1) as f64 * p / (1.0 - p);
        cdf += pmf;
        lo += 1;
    }
    // upper tail: largest hi with P(X >= hi) > tail
    let mut pmf = pmf0;
    let mut cdf_below = 0.0;
    let mut hi = n;
    for k in 0..=n {
        if 1.0 - cdf_below <= tail {
            hi = k.saturating_sub(1);
            break;
        }
        cdf_below += pmf;
        if k < n {
            pmf *= (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
        }
    }
    if 1.0 - cdf_below > tail {
        hi = n;
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulations::{gaussian_three_sample, GaussianSetting};

    fn one_diff_generator(epsilon: f64) -> impl Fn(u64) -> Result<GeneratedData> + Sync {
        move |seed| {
            Ok(GeneratedData {
                data: gaussian_three_sample(GaussianSetting::OneDifferent, epsilon, 2, 15, seed)?,
                blocks: None,
            })
        }
    }

    #[test]
    fn binomial_band_matches_frozen_values() {
        assert_eq!(binomial_band(200, 0.05, 0.005), (3, 19));
        assert_eq!(binomial_band(200, 0.1, 0.0005), (8, 35));
    }

    #[test]
    fn binomial_band_tails_are_exactly_controlled() {
        let (lo, hi) = binomial_band(50, 0.2, 0.01);
        let pmf = |k: usize| {
            let mut v = 0.8f64.powi(50);
            for i in 0..k {
                v *= (50 - i) as f64 / (i + 1) as f64 * 0.25;
            }
            v
        };
        let below: f64 = (0..lo).map(pmf).sum();
        let above: f64 = (hi + 1..=50).map(pmf).sum();
        assert!(below <= 0.01 + 1e-12 && above <= 0.01 + 1e-12);
        let with_lo: f64 = (0..=lo).map(pmf).sum();
        assert!(with_lo > 0.01);
    }

    #[test]
    fn estimates_are_deterministic() {
        let cfg = PowerConfig {
            alpha: 0.05,
            mc_reps: 10,
            perm_reps: 49,
            seed: 77,
        };
        let tests = vec![TestSpec::new(TestKind::Dcorr), TestSpec::new(TestKind::Manova)];
        let a = estimate_power(one_diff_generator(1.0), &tests, &cfg).unwrap();
        let b = estimate_power(one_diff_generator(1.0), &tests, &cfg).unwrap();
        assert_eq!(a, b);
        for e in &a {
            assert!(e.power >= 0.0 && e.power <= 1.0);
            let m = e.reps as f64;
            assert!((e.se - (e.power * (1.0 - e.power) / m).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn strong_separation_yields_high_power() {
        let cfg = PowerConfig {
            alpha: 0.05,
            mc_reps: 20,
            perm_reps: 99,
            seed: 909,
        };
        let tests = vec![TestSpec::new(TestKind::Dcorr)];
        let strong = estimate_power(one_diff_generator(2.5), &tests, &cfg).unwrap();
        assert!(strong[0].power >= 0.9, "power {}", strong[0].power);
        let null = estimate_power(one_diff_generator(0.0), &tests, &cfg).unwrap();
        assert!(null[0].power <= 0.3, "power {}", null[0].power);
    }

    #[test]
    fn block_requests_need_block_structures() {
        let cfg = PowerConfig {
            alpha: 0.05,
            mc_reps: 2,
            perm_reps: 19,
            seed: 1,
        };
        let tests = vec![TestSpec::with_block(TestKind::Dcorr)];
        assert!(estimate_power(one_diff_generator(0.0), &tests, &cfg).is_err());
    }
}
