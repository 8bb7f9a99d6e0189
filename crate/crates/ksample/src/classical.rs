//! Parametric baselines: Hotelling's T² and MANOVA with the Pillai–Bartlett
//! trace. P-values for both come from the same permutation engine as the
//! nonparametric tests, so every test in a benchmark shares one inference
//! mechanism.

use ndarray::{Array1, Array2, ArrayView2};

use crate::encoding::{concat_groups, KSampleData};
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::stats::StatisticValue;

/// Condition-number threshold beyond which scatter matrices are treated as
/// singular. No pseudo-inverse fallback: MANOVA genuinely stops functioning
/// once dimension exceeds rank.
const COND_LIMIT: f64 = 1e12;

/// Within-group scatter W, between-group scatter B, and the pooled covariance
/// W / (n − k).
#[derive(Debug, Clone)]
pub struct CovarianceSummary {
    pub within: Array2<f64>,
    pub between: Array2<f64>,
    pub pooled: Array2<f64>,
}

fn group_mean(x: &ArrayView2<'_, f64>, rows: &[usize]) -> Array1<f64> {
    let p = x.ncols();
    let mut mean = Array1::zeros(p);
    for &i in rows {
        for j in 0..p {
            mean[j] += x[[i, j]];
        }
    }
    mean / rows.len() as f64
}

fn scatter_about(x: &ArrayView2<'_, f64>, rows: &[usize], mean: &Array1<f64>) -> Array2<f64> {
    let p = x.ncols();
    let mut s = Array2::zeros((p, p));
    let mut centered = vec![0.0; p];
    for &i in rows {
        for j in 0..p {
            centered[j] = x[[i, j]] - mean[j];
        }
        for a in 0..p {
            for b in a..p {
                s[[a, b]] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            s[[a, b]] = s[[b, a]];
        }
    }
    s
}

fn within_between(
    x: &ArrayView2<'_, f64>,
    groups: &[Vec<usize>],
) -> (Array2<f64>, Array2<f64>) {
    let p = x.ncols();
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let all_rows: Vec<usize> = (0..x.nrows()).collect();
    let grand = group_mean(x, &all_rows);
    let mut within = Array2::zeros((p, p));
    let mut between = Array2::zeros((p, p));
    for rows in groups {
        let mean = group_mean(x, rows);
        within += &scatter_about(x, rows, &mean);
        let d = &mean - &grand;
        for a in 0..p {
            for b in 0..p {
                between[[a, b]] += rows.len() as f64 * d[a] * d[b];
            }
        }
    }
    debug_assert_eq!(n, x.nrows());
    (within, between)
}

/// Within/between scatter matrices and pooled covariance for k groups.
pub fn scatter_matrices(data: &KSampleData) -> CovarianceSummary {
    let pooled_x = concat_groups(data);
    let groups = contiguous_groups(&data.sizes());
    let (within, between) = within_between(&pooled_x.values().view(), &groups);
    let denom = (data.total_n() - data.k()) as f64;
    let pooled = &within / denom;
    CovarianceSummary {
        within,
        between,
        pooled,
    }
}

fn contiguous_groups(sizes: &[usize]) -> Vec<Vec<usize>> {
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

fn to_nalgebra(a: &Array2<f64>) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Reject symmetric matrices that are numerically rank-deficient
/// (condition number above `COND_LIMIT` or non-positive spectrum).
fn check_condition(m: &nalgebra::DMatrix<f64>, context: &str) -> Result<()> {
    let eig = m.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lmax > 0.0) || lmin <= lmax / COND_LIMIT {
        return Err(Error::Singular(format!(
            "{context}: eigenvalue range [{lmin:.3e}, {lmax:.3e}] exceeds condition limit"
        )));
    }
    Ok(())
}

pub(crate) fn hotelling_from_pooled(
    x: &ArrayView2<'_, f64>,
    iu: &[usize],
    iv: &[usize],
) -> Result<f64> {
    let (n, m) = (iu.len(), iv.len());
    if n + m < 3 {
        return Err(Error::SampleSize {
            needed: 3,
            got: n + m,
        });
    }
    let mean_u = group_mean(x, iu);
    let mean_v = group_mean(x, iv);
    let scatter = scatter_about(x, iu, &mean_u) + scatter_about(x, iv, &mean_v);
    let pooled = scatter / (n + m - 2) as f64;
    let pooled_na = to_nalgebra(&pooled);
    check_condition(&pooled_na, "pooled covariance")?;
    let diff = nalgebra::DVector::from_iterator(
        x.ncols(),
        mean_u.iter().zip(mean_v.iter()).map(|(a, b)| a - b),
    );
    let solved = pooled_na
        .lu()
        .solve(&diff)
        .ok_or_else(|| Error::Singular("pooled covariance".into()))?;
    let nf = n as f64;
    let mf = m as f64;
    Ok(nf * mf / (nf + mf) * diff.dot(&solved))
}

/// Hotelling's T²: (nm/(n+m)) (ū − v̄)ᵀ Σ̂⁻¹ (ū − v̄) with the mean-centered
/// pooled covariance Σ̂.
pub fn hotelling_t2(u: &DataMatrix, v: &DataMatrix) -> Result<StatisticValue> {
    if u.dim() != v.dim() {
        return Err(Error::InvalidInput(format!(
            "samples have different dimensions: {} vs {}",
            u.dim(),
            v.dim()
        )));
    }
    let pooled = u.vstack(v)?;
    let iu: Vec<usize> = (0..u.n()).collect();
    let iv: Vec<usize> = (u.n()..u.n() + v.n()).collect();
    Ok(StatisticValue {
        value: hotelling_from_pooled(&pooled.values().view(), &iu, &iv)?,
        name: "hotelling",
        n: pooled.n(),
    })
}

pub(crate) fn pillai_from_pooled(x: &ArrayView2<'_, f64>, groups: &[Vec<usize>]) -> Result<f64> {
    let (within, between) = within_between(x, groups);
    let total = to_nalgebra(&(&within + &between));
    check_condition(&total, "B + W")?;
    let b = to_nalgebra(&between);
    let solved = total
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular("B + W".into()))?;
    Ok(solved.trace())
}

/// MANOVA Pillai–Bartlett trace: trace(B(B+W)⁻¹), computed via a linear
/// solve. Value lies in [0, min(k−1, p)] for nonsingular B+W.
pub fn manova_pillai(data: &KSampleData) -> Result<StatisticValue> {
    let pooled = concat_groups(data);
    let groups = contiguous_groups(&data.sizes());
    Ok(StatisticValue {
        value: pillai_from_pooled(&pooled.values().view(), &groups)?,
        name: "manova",
        n: pooled.n(),
    })
}
