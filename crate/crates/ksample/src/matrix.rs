//! Matrix primitives shared by every statistic: pairwise distances, Gaussian
//! kernels, double-centering, and the four-term unbiased U-centering.
//!
//! All centering is done in double precision; symmetric outputs are computed
//! on the upper triangle and mirrored so downstream trace computations never
//! see floating-point asymmetry.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Metric used to build a [`DistanceMatrix`]. Only the Euclidean metric ships;
/// the statistic layer accepts any valid `DistanceMatrix`, so other metrics
/// can be plugged in through [`DistanceMatrix::from_values`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
}

/// Bandwidth rule for the Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Median of the strictly positive pairwise Euclidean distances.
    Median,
    /// Fixed sigma, must be positive and finite.
    Fixed(f64),
}

/// An n × p observation matrix: rows are samples, columns are features.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
}

impl DataMatrix {
    /// Wrap a matrix, requiring n ≥ 1, p ≥ 1 and all entries finite.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "data matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "data matrix contains non-finite entries".into(),
            ));
        }
        Ok(Self { values })
    }

    /// Build from row slices; all rows must share a length ≥ 1.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("no rows given".into()));
        }
        let p = rows[0].len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidInput("rows have differing lengths".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), p), flat)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::new(values)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Stack `self` over `other` (both must share the feature dimension).
    pub fn vstack(&self, other: &DataMatrix) -> Result<DataMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidInput(format!(
                "cannot stack {}-dim rows onto {}-dim rows",
                other.dim(),
                self.dim()
            )));
        }
        let mut values = Array2::zeros((self.n() + other.n(), self.dim()));
        for (i, row) in self.values.rows().into_iter().enumerate() {
            values.row_mut(i).assign(&row);
        }
        for (i, row) in other.values.rows().into_iter().enumerate() {
            values.row_mut(self.n() + i).assign(&row);
        }
        DataMatrix::new(values)
    }
}

/// Symmetric n × n pairwise distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: Array2<f64>,
    metric: Metric,
}

impl DistanceMatrix {
    /// Wrap a caller-supplied matrix, validating symmetry, zero diagonal,
    /// non-negativity, and finiteness. This is the plug-in point for metrics
    /// other than the built-in Euclidean one.
    pub fn from_values(values: Array2<f64>, metric: Metric) -> Result<Self> {
        let n = values.nrows();
        if n == 0 || values.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "distance matrix must be square and non-empty, got {}x{}",
                n,
                values.ncols()
            )));
        }
        for i in 0..n {
            if values[[i, i]] != 0.0 {
                return Err(Error::InvalidInput("distance diagonal must be zero".into()));
            }
            for j in (i + 1)..n {
                let v = values[[i, j]];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(
                        "distances must be finite and non-negative".into(),
                    ));
                }
                if v != values[[j, i]] {
                    return Err(Error::InvalidInput("distance matrix must be symmetric".into()));
                }
            }
        }
        Ok(Self { values, metric })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }
}

/// Symmetric n × n kernel similarity matrix; for the Gaussian kernel the
/// diagonal is exactly 1 and all entries lie in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    values: Array2<f64>,
    bandwidth: f64,
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
}

/// Which centering produced a [`CenteredMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenteringScheme {
    /// H·D·H with H = I − J/n: every row and column sums to zero.
    DoubleCentered,
    /// Four-term unbiased modification with zero diagonal.
    UCentered,
}

/// Result of centering a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredMatrix {
    values: Array2<f64>,
    scheme: CenteringScheme,
}

impl CenteredMatrix {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn scheme(&self) -> CenteringScheme {
        self.scheme
    }
}

/// Euclidean distance between two rows.
pub(crate) fn row_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn pairwise_distance_values(x: &ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = row_distance(x.row(i), x.row(j));
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

/// Pairwise distances between the rows of `x`.
pub fn pairwise_distances(x: &DataMatrix, metric: Metric) -> DistanceMatrix {
    let Metric::Euclidean = metric;
    DistanceMatrix {
        values: pairwise_distance_values(&x.values().view()),
        metric,
    }
}

/// Median of the strictly positive pairwise distances. Duplicate points
/// contribute zero distances, which are excluded so the bandwidth cannot
/// collapse to zero.
pub(crate) fn median_positive_distance(d: &ArrayView2<'_, f64>) -> Result<f64> {
    let n = d.nrows();
    let mut positive: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            if d[[i, j]] > 0.0 {
                positive.push(d[[i, j]]);
            }
        }
    }
    if positive.is_empty() {
        return Err(Error::DegenerateBandwidth);
    }
    positive.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = positive.len();
    Ok(if m % 2 == 1 {
        positive[m / 2]
    } else {
        0.5 * (positive[m / 2 - 1] + positive[m / 2])
    })
}

pub(crate) fn gaussian_kernel_from_distances(
    d: &ArrayView2<'_, f64>,
    bandwidth: Bandwidth,
) -> Result<(Array2<f64>, f64)> {
    let sigma = match bandwidth {
        Bandwidth::Median => median_positive_distance(d)?,
        Bandwidth::Fixed(s) => {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "kernel bandwidth must be positive and finite, got {s}"
                )));
            }
            s
        }
    };
    let n = d.nrows();
    let denom = 2.0 * sigma * sigma;
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let v = (-d[[i, j]] * d[[i, j]] / denom).exp();
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    Ok((k, sigma))
}

/// Gaussian kernel matrix K[i][j] = exp(−d(i,j)² / (2σ²)) over the rows of `x`.
pub fn gaussian_kernel(x: &DataMatrix, bandwidth: Bandwidth) -> Result<KernelMatrix> {
    let d = pairwise_distance_values(&x.values().view());
    let (values, sigma) = gaussian_kernel_from_distances(&d.view(), bandwidth)?;
    Ok(KernelMatrix {
        values,
        bandwidth: sigma,
    })
}

/// H·A·H for any square matrix, H = I − J/n. Computed entrywise as
/// A_ij − rowmean_i − colmean_j + grandmean, mirrored from the upper triangle
/// when the input is symmetric.
pub(crate) fn double_center_values(a: &ArrayView2<'_, f64>) -> Array2<f64> {
    let n = a.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| a.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| a.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut c = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            c[[i, j]] = a[[i, j]] - row_means[i] - col_means[j] + grand;
        }
    }
    // mirror the upper triangle so symmetric inputs give exactly symmetric output
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (c[[i, j]] + c[[j, i]]);
            c[[i, j]] = v;
            c[[j, i]] = v;
        }
    }
    c
}

/// Four-term U-centering: for i ≠ j,
/// C_ij = A_ij − Σ_t A_it/(n−2) − Σ_s A_sj/(n−2) + Σ_st A_st/((n−1)(n−2)),
/// and C_ii = 0. Row, column, and grand sums run over all entries including
/// the diagonal, so the same transform serves distance matrices (zero
/// diagonal) and kernel matrices (unit diagonal).
pub(crate) fn u_center_values(a: &ArrayView2<'_, f64>) -> Array2<f64> {
    let n = a.nrows();
    let nf = n as f64;
    let row_sums: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    let col_sums: Vec<f64> = (0..n).map(|j| a.column(j).sum()).collect();
    let grand: f64 = row_sums.iter().sum();
    let rdiv = nf - 2.0;
    let gdiv = (nf - 1.0) * (nf - 2.0);
    let mut c = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                c[[i, j]] = a[[i, j]] - row_sums[i] / rdiv - col_sums[j] / rdiv + grand / gdiv;
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (c[[i, j]] + c[[j, i]]);
            c[[i, j]] = v;
            c[[j, i]] = v;
        }
    }
    c
}

/// Double-center a distance matrix: H·D·H.
pub fn double_center(d: &DistanceMatrix) -> CenteredMatrix {
    CenteredMatrix {
        values: double_center_values(&d.values().view()),
        scheme: CenteringScheme::DoubleCentered,
    }
}

/// U-center a distance matrix. Requires n ≥ 4 so the n−2 and (n−1)(n−2)
/// divisors (and the downstream n(n−3) statistic) are meaningful.
pub fn u_center(d: &DistanceMatrix) -> Result<CenteredMatrix> {
    if d.n() < 4 {
        return Err(Error::SampleSize {
            needed: 4,
            got: d.n(),
        });
    }
    Ok(CenteredMatrix {
        values: u_center_values(&d.values().view()),
        scheme: CenteringScheme::UCentered,
    })
}
