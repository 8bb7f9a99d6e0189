//! The distance/kernel statistic family: biased and unbiased Dcov/Dcorr, HSIC,
//! two-sample Energy, MMD, the k-sample DISCO energy, and the exact
//! equivalence identities connecting them.
//!
//! The identity checks use the biased trace forms, which is what the exact
//! equalities are stated for; the unbiased forms are the defaults for actual
//! testing. Both are exported.

use ndarray::Array2;

use crate::encoding::{concat_groups, one_way_labels, KSampleData};
use crate::error::{Error, Result};
use crate::matrix::{
    double_center_values, gaussian_kernel, pairwise_distance_values, pairwise_distances,
    row_distance, u_center_values, Bandwidth, DataMatrix, DistanceMatrix, KernelMatrix, Metric,
};

/// A named statistic together with the sample size it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticValue {
    pub value: f64,
    pub name: &'static str,
    pub n: usize,
}

/// Variant selector for HSIC (the same centering choices as Dcov/Dcorr).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsicVariant {
    Biased,
    Unbiased,
}

/// Two sides of an exact identity and their absolute difference.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
        }
    }

    /// Residual measured against `tol · max(1, |lhs|)`.
    pub fn within(&self, tol: f64) -> bool {
        self.residual < tol * self.lhs.abs().max(1.0)
    }
}

/// Result of the k-sample equivalence check: the weighted-sum identity holds
/// for arbitrary group sizes, the DISCO shortcut with its (2β/nk) constant
/// only when every group has the same size.
#[derive(Debug, Clone, PartialEq)]
pub struct KSampleIdentity {
    pub weighted: IdentityCheck,
    pub balanced_form: IdentityCheck,
    pub balanced_sizes: bool,
}

pub(crate) fn inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let (sa, sb) = (a.as_slice().unwrap(), b.as_slice().unwrap());
    sa.iter().zip(sb.iter()).map(|(x, y)| x * y).sum()
}

/// Σ_ij a[i][j] · b[perm(i)][perm(j)], the trace inner product after applying
/// the same row/column permutation to `b`. With the identity permutation the
/// accumulation order matches [`inner`] exactly.
pub(crate) fn inner_permuted(a: &Array2<f64>, b: &Array2<f64>, perm: &[usize]) -> f64 {
    let n = perm.len();
    let (sa, sb) = (a.as_slice().unwrap(), b.as_slice().unwrap());
    let mut total = 0.0;
    for i in 0..n {
        let arow = &sa[i * n..(i + 1) * n];
        let brow = &sb[perm[i] * n..perm[i] * n + n];
        for (j, &aij) in arow.iter().enumerate() {
            total += aij * brow[perm[j]];
        }
    }
    total
}

fn check_same_size(nx: usize, ny: usize) -> Result<()> {
    if nx != ny {
        return Err(Error::InvalidInput(format!(
            "matrix sizes differ: {nx} vs {ny}"
        )));
    }
    Ok(())
}

pub(crate) fn dcov_biased_values(dx: &Array2<f64>, dy: &Array2<f64>) -> f64 {
    let n = dx.nrows() as f64;
    let a = double_center_values(&dx.view());
    let b = double_center_values(&dy.view());
    inner(&a, &b) / (n * n)
}

pub(crate) fn dcorr_biased_values(dx: &Array2<f64>, dy: &Array2<f64>) -> Result<f64> {
    let n = dx.nrows() as f64;
    let a = double_center_values(&dx.view());
    let b = double_center_values(&dy.view());
    let vxx = inner(&a, &a) / (n * n);
    let vyy = inner(&b, &b) / (n * n);
    if vxx <= 0.0 || vyy <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(inner(&a, &b) / (n * n) / (vxx * vyy).sqrt())
}

pub(crate) fn dcov_unbiased_values(dx: &Array2<f64>, dy: &Array2<f64>) -> Result<f64> {
    let n = dx.nrows();
    if n < 4 {
        return Err(Error::SampleSize { needed: 4, got: n });
    }
    let cx = u_center_values(&dx.view());
    let cy = u_center_values(&dy.view());
    Ok(inner(&cx, &cy) / (n * (n - 3)) as f64)
}

pub(crate) fn dcorr_unbiased_values(dx: &Array2<f64>, dy: &Array2<f64>) -> Result<f64> {
    let n = dx.nrows();
    if n < 4 {
        return Err(Error::SampleSize { needed: 4, got: n });
    }
    let cx = u_center_values(&dx.view());
    let cy = u_center_values(&dy.view());
    let vxx = inner(&cx, &cx);
    let vyy = inner(&cy, &cy);
    if vxx <= 0.0 || vyy <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(inner(&cx, &cy) / (vxx * vyy).sqrt())
}

/// Biased distance covariance: trace(H·Dx·H · H·Dy·H) / n².
pub fn dcov_biased(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<StatisticValue> {
    check_same_size(dx.n(), dy.n())?;
    Ok(StatisticValue {
        value: dcov_biased_values(dx.values(), dy.values()),
        name: "dcov-biased",
        n: dx.n(),
    })
}

/// Biased distance correlation, normalized into [−1, 1].
pub fn dcorr_biased(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<StatisticValue> {
    check_same_size(dx.n(), dy.n())?;
    Ok(StatisticValue {
        value: dcorr_biased_values(dx.values(), dy.values())?,
        name: "dcorr-biased",
        n: dx.n(),
    })
}

/// Unbiased distance covariance: trace(Cx·Cy) / (n(n−3)) over U-centered
/// matrices. Requires n ≥ 4.
pub fn dcov_unbiased(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<StatisticValue> {
    check_same_size(dx.n(), dy.n())?;
    Ok(StatisticValue {
        value: dcov_unbiased_values(dx.values(), dy.values())?,
        name: "dcov",
        n: dx.n(),
    })
}

/// Unbiased distance correlation, the default correlation in this crate.
pub fn dcorr_unbiased(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<StatisticValue> {
    check_same_size(dx.n(), dy.n())?;
    Ok(StatisticValue {
        value: dcorr_unbiased_values(dx.values(), dy.values())?,
        name: "dcorr",
        n: dx.n(),
    })
}

/// HSIC: the Dcov/Dcorr formulas applied to kernel similarity matrices. The
/// biased variant shares the exact code path with [`dcov_biased`]; the
/// unbiased variant is the normalized U-centered form.
pub fn hsic(kx: &KernelMatrix, ky: &KernelMatrix, variant: HsicVariant) -> Result<StatisticValue> {
    check_same_size(kx.n(), ky.n())?;
    let value = match variant {
        HsicVariant::Biased => dcov_biased_values(kx.values(), ky.values()),
        HsicVariant::Unbiased => dcorr_unbiased_values(kx.values(), ky.values())?,
    };
    Ok(StatisticValue {
        value,
        name: match variant {
            HsicVariant::Biased => "hsic-biased",
            HsicVariant::Unbiased => "hsic",
        },
        n: kx.n(),
    })
}

pub(crate) fn block_sum(d: &Array2<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let n = d.nrows();
    let s = d.as_slice().unwrap();
    let mut total = 0.0;
    for &i in rows {
        let row = &s[i * n..(i + 1) * n];
        let mut acc = 0.0;
        for &j in cols {
            acc += row[j];
        }
        total += acc;
    }
    total
}

/// Two-sample energy statistic evaluated on a pooled distance matrix, with
/// `ia` and `ib` the pooled row indices of the two groups:
/// (2·n1·n2·Σ_cross − n2²·Σ_aa − n1²·Σ_bb) / (n1²·n2²).
pub(crate) fn energy_from_pooled(d: &Array2<f64>, ia: &[usize], ib: &[usize]) -> f64 {
    let n1 = ia.len() as f64;
    let n2 = ib.len() as f64;
    let cross = block_sum(d, ia, ib);
    let saa = block_sum(d, ia, ia);
    let sbb = block_sum(d, ib, ib);
    (2.0 * n1 * n2 * cross - n2 * n2 * saa - n1 * n1 * sbb) / (n1 * n1 * n2 * n2)
}

/// MMD² (biased V-statistic) evaluated on a pooled kernel matrix:
/// Σ_aa/n1² + Σ_bb/n2² − 2·Σ_cross/(n1·n2). Non-negative for any kernel.
pub(crate) fn mmd_from_pooled(k: &Array2<f64>, ia: &[usize], ib: &[usize]) -> f64 {
    let n1 = ia.len() as f64;
    let n2 = ib.len() as f64;
    block_sum(k, ia, ia) / (n1 * n1) + block_sum(k, ib, ib) / (n2 * n2)
        - 2.0 * block_sum(k, ia, ib) / (n1 * n2)
}

/// Pairwise-weighted k-sample energy: Σ_{s<t} (n_s·n_t / 2n)·Energy_{s,t}.
pub(crate) fn disco_from_pooled(d: &Array2<f64>, groups: &[Vec<usize>]) -> f64 {
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let mut total = 0.0;
    for s in 0..groups.len() {
        for t in (s + 1)..groups.len() {
            let w = (groups[s].len() * groups[t].len()) as f64 / (2.0 * n as f64);
            total += w * energy_from_pooled(d, &groups[s], &groups[t]);
        }
    }
    total
}

fn pooled_ranges(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut at = 0;
    sizes
        .iter()
        .map(|&s| {
            let r: Vec<usize> = (at..at + s).collect();
            at += s;
            r
        })
        .collect()
}

/// Two-sample energy statistic with the Euclidean metric.
pub fn energy_two_sample(u: &DataMatrix, v: &DataMatrix) -> Result<StatisticValue> {
    let pooled = u.vstack(v)?;
    let d = pairwise_distance_values(&pooled.values().view());
    let groups = pooled_ranges(&[u.n(), v.n()]);
    Ok(StatisticValue {
        value: energy_from_pooled(&d, &groups[0], &groups[1]),
        name: "energy",
        n: pooled.n(),
    })
}

/// Maximum mean discrepancy (squared, biased V-statistic form) with a Gaussian
/// kernel. The bandwidth is resolved once on the pooled sample so it is
/// invariant under label permutations.
pub fn mmd(u: &DataMatrix, v: &DataMatrix, bandwidth: Bandwidth) -> Result<StatisticValue> {
    let pooled = u.vstack(v)?;
    let k = gaussian_kernel(&pooled, bandwidth)?;
    let groups = pooled_ranges(&[u.n(), v.n()]);
    Ok(StatisticValue {
        value: mmd_from_pooled(k.values(), &groups[0], &groups[1]),
        name: "mmd",
        n: pooled.n(),
    })
}

/// The k-sample DISCO energy statistic: Σ_{s<t} (n_s n_t / 2n)·Energy_{s,t}.
pub fn disco_energy(data: &KSampleData) -> Result<StatisticValue> {
    let pooled = concat_groups(data);
    let d = pairwise_distance_values(&pooled.values().view());
    let groups = pooled_ranges(&data.sizes());
    Ok(StatisticValue {
        value: disco_from_pooled(&d, &groups),
        name: "disco",
        n: pooled.n(),
    })
}

/// Exact two-sample equivalence: biased Dcov on the pooled encoding equals
/// (2·n1²·n2²/n⁴) · Energy, with the Euclidean metric (β = 1).
pub fn check_thm2(u: &DataMatrix, v: &DataMatrix) -> Result<IdentityCheck> {
    let pooled = u.vstack(v)?;
    let labels = one_way_labels(&[u.n(), v.n()])?;
    let dx = pairwise_distances(&pooled, Metric::Euclidean);
    let dy = pairwise_distances(&labels.as_data(), Metric::Euclidean);
    let lhs = dcov_biased(&dx, &dy)?.value;
    let n = pooled.n() as f64;
    let (n1, n2) = (u.n() as f64, v.n() as f64);
    let scale = 2.0 * n1 * n1 * n2 * n2 / (n * n * n * n);
    let rhs = scale * energy_two_sample(u, v)?.value;
    Ok(IdentityCheck::new(lhs, rhs))
}

/// Exact kernel equivalence: biased HSIC equals (2·n1²·n2²·β/n⁴) · (−MMD)
/// for a shared translation-invariant Gaussian kernel, β = k(0,1) − k(0,0).
pub fn check_cor2(u: &DataMatrix, v: &DataMatrix, sigma: f64) -> Result<IdentityCheck> {
    let pooled = u.vstack(v)?;
    let labels = one_way_labels(&[u.n(), v.n()])?;
    let kx = gaussian_kernel(&pooled, Bandwidth::Fixed(sigma))?;
    let ky = gaussian_kernel(&labels.as_data(), Bandwidth::Fixed(sigma))?;
    let lhs = hsic(&kx, &ky, HsicVariant::Biased)?.value;
    let beta = (-1.0 / (2.0 * sigma * sigma)).exp() - 1.0;
    let n = pooled.n() as f64;
    let (n1, n2) = (u.n() as f64, v.n() as f64);
    let scale = 2.0 * n1 * n1 * n2 * n2 * beta / (n * n * n * n);
    let rhs = scale * (-mmd(u, v, Bandwidth::Fixed(sigma))?.value);
    Ok(IdentityCheck::new(lhs, rhs))
}

/// k-sample equivalence: biased Dcov on the label encoding equals the
/// weighted sum β·Σ_{s<t} ((n(n_s+n_t) − Σ n_l²)/n⁴)·n_s·n_t·Energy_{s,t}
/// for arbitrary sizes, and the DISCO shortcut (2β/nk)·Energy_{n_1..n_k}
/// exactly when k = 2 or all sizes are equal. β is measured directly from
/// the constructed label rows, so one-hot and two-sample encodings both
/// satisfy the identity.
pub fn check_thm4(data: &KSampleData) -> Result<KSampleIdentity> {
    let sizes = data.sizes();
    let k = sizes.len();
    let pooled = concat_groups(data);
    let labels = one_way_labels(&sizes)?;
    let dx = pairwise_distances(&pooled, Metric::Euclidean);
    let dy = pairwise_distances(&labels.as_data(), Metric::Euclidean);
    let lhs = dcov_biased(&dx, &dy)?.value;

    // β = d(y_s, y_t) − d(y_s, y_s) for rows from different groups
    let y = labels.matrix();
    let beta = row_distance(y.row(0), y.row(data.sizes()[0]));

    let n: usize = sizes.iter().sum();
    let nf = n as f64;
    let sum_sq: f64 = sizes.iter().map(|&s| (s * s) as f64).sum();
    let groups = pooled_ranges(&sizes);
    let mut weighted = 0.0;
    for s in 0..k {
        for t in (s + 1)..k {
            let (ns, nt) = (sizes[s] as f64, sizes[t] as f64);
            let w = (nf * (ns + nt) - sum_sq) / (nf * nf * nf * nf) * ns * nt;
            weighted += w * energy_from_pooled(dx.values(), &groups[s], &groups[t]);
        }
    }
    weighted *= beta;

    let disco = disco_from_pooled(dx.values(), &groups);
    let balanced_rhs = 2.0 * beta / (nf * k as f64) * disco;
    let balanced_sizes = sizes.iter().all(|&s| s == sizes[0]);

    Ok(KSampleIdentity {
        weighted: IdentityCheck::new(lhs, weighted),
        balanced_form: IdentityCheck::new(lhs, balanced_rhs),
        balanced_sizes,
    })
}
