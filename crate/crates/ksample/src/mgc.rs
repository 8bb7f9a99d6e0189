//! Multiscale Graph Correlation: k-nearest-neighbor graphs over both distance
//! matrices, the map of local correlations c^{kl} across every scale pair,
//! a smoothing operator that discards isolated large correlations, and the
//! max-over-scales statistic.
//!
//! The full map is computed in O(n² log n) by accumulating products into the
//! (rank_x, rank_y) grid and taking cumulative sums, which is exactly the sum
//! over the k- and l-neighborhood indicators.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::matrix::DistanceMatrix;
use crate::stats::StatisticValue;

/// k-nearest-neighbor indicator graph: row i has ones at the k nearest
/// columns of the distance row, self included.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    indicator: Array2<u8>,
    k: usize,
}

impl NeighborGraph {
    pub fn indicator(&self) -> &Array2<u8> {
        &self.indicator
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// The n × n grid of local correlations; entry (k−1, l−1) holds c^{kl}.
#[derive(Debug, Clone)]
pub struct LocalCorrMap {
    values: Array2<f64>,
}

impl LocalCorrMap {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// The global correlation c^{nn}.
    pub fn global(&self) -> f64 {
        let n = self.values.nrows();
        self.values[[n - 1, n - 1]]
    }
}

/// MGC statistic with the scale at which it was attained (1-based, (n, n)
/// when the smoothed map falls back to the global correlation).
#[derive(Debug, Clone)]
pub struct MgcResult {
    pub statistic: StatisticValue,
    pub optimal_scale: (usize, usize),
}

/// Neighbor ranks per row: rank 1 is the sample itself, remaining columns are
/// ordered by distance with ties broken by lowest index.
fn rank_rows(d: &Array2<f64>) -> Vec<Vec<u32>> {
    let n = d.nrows();
    let mut ranks = vec![vec![0u32; n]; n];
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        let row = d.row(i);
        order.sort_by(|&a, &b| {
            row[a]
                .partial_cmp(&row[b])
                .unwrap()
                .then_with(|| a.cmp(&b))
        });
        ranks[i][i] = 1;
        for (pos, &j) in order.iter().enumerate() {
            ranks[i][j] = pos as u32 + 2;
        }
    }
    ranks
}

/// Column centering for the local correlation map: subtract each column's
/// mean computed over the off-diagonal entries, then zero the diagonal.
fn center_columns(d: &Array2<f64>) -> Array2<f64> {
    let n = d.nrows();
    let mut c = Array2::zeros((n, n));
    for j in 0..n {
        let sum: f64 = (0..n).filter(|&t| t != j).map(|t| d[[t, j]]).sum();
        let mean = sum / (n - 1) as f64;
        for i in 0..n {
            if i != j {
                c[[i, j]] = d[[i, j]] - mean;
            }
        }
    }
    c
}

/// Indicator of the k nearest neighbors per row of a distance matrix.
pub fn knn_graph(d: &DistanceMatrix, k: usize) -> Result<NeighborGraph> {
    let n = d.n();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "neighborhood size must satisfy 1 <= k <= {n}, got {k}"
        )));
    }
    let ranks = rank_rows(d.values());
    let mut indicator = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if ranks[i][j] as usize <= k {
                indicator[[i, j]] = 1;
            }
        }
    }
    Ok(NeighborGraph { indicator, k })
}

fn local_corr_values(dx: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
    let n = dx.nrows();
    let cx = center_columns(dx);
    let cy = center_columns(dy);
    let rx = rank_rows(dx);
    let ry = rank_rows(dy);

    // accumulate products on the (rank_x, rank_y) grid, then cumulative sums
    // turn cell (k−1, l−1) into the sum over the k/l neighbor indicators
    let mut num = Array2::<f64>::zeros((n, n));
    let mut varx = vec![0.0; n];
    let mut vary = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (cx[[i, j]], cy[[i, j]]);
            let (ra, rb) = (rx[i][j] as usize - 1, ry[i][j] as usize - 1);
            num[[ra, rb]] += a * b;
            varx[ra] += a * a;
            vary[rb] += b * b;
        }
    }
    for k in 0..n {
        for l in 1..n {
            num[[k, l]] += num[[k, l - 1]];
        }
    }
    for k in 1..n {
        for l in 0..n {
            num[[k, l]] += num[[k - 1, l]];
        }
    }
    for k in 1..n {
        varx[k] += varx[k - 1];
        vary[k] += vary[k - 1];
    }

    let mut c = Array2::zeros((n, n));
    for k in 0..n {
        for l in 0..n {
            let denom = varx[k] * vary[l];
            if denom > 0.0 {
                c[[k, l]] = num[[k, l]] / denom.sqrt();
            }
        }
    }
    c
}

/// Local correlation c^{kl} for every scale pair (k, l) in {1..n}².
/// Entries whose variance term vanishes are set to 0.
pub fn local_corr_map(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<LocalCorrMap> {
    if dx.n() != dy.n() {
        return Err(Error::InvalidInput(format!(
            "matrix sizes differ: {} vs {}",
            dx.n(),
            dy.n()
        )));
    }
    if dx.n() < 4 {
        return Err(Error::SampleSize {
            needed: 4,
            got: dx.n(),
        });
    }
    Ok(LocalCorrMap {
        values: local_corr_values(dx.values(), dy.values()),
    })
}

/// Largest 4-connected region of cells above the threshold; returns its size
/// and membership mask.
fn largest_connected_region(sig: &Array2<bool>) -> (usize, Array2<bool>) {
    let n = sig.nrows();
    let mut labels = Array2::<u32>::zeros((n, n));
    let mut best_label = 0u32;
    let mut best_size = 0usize;
    let mut next = 1u32;
    let mut queue = Vec::new();
    for sk in 0..n {
        for sl in 0..n {
            if !sig[[sk, sl]] || labels[[sk, sl]] != 0 {
                continue;
            }
            let label = next;
            next += 1;
            let mut size = 0usize;
            queue.clear();
            queue.push((sk, sl));
            labels[[sk, sl]] = label;
            while let Some((k, l)) = queue.pop() {
                size += 1;
                let mut visit = |a: usize, b: usize, labels: &mut Array2<u32>| {
                    if sig[[a, b]] && labels[[a, b]] == 0 {
                        labels[[a, b]] = label;
                        queue.push((a, b));
                    }
                };
                if k > 0 {
                    visit(k - 1, l, &mut labels);
                }
                if k + 1 < n {
                    visit(k + 1, l, &mut labels);
                }
                if l > 0 {
                    visit(k, l - 1, &mut labels);
                }
                if l + 1 < n {
                    visit(k, l + 1, &mut labels);
                }
            }
            if size > best_size {
                best_size = size;
                best_label = label;
            }
        }
    }
    let mask = Array2::from_shape_fn((n, n), |(k, l)| {
        best_size > 0 && labels[[k, l]] == best_label
    });
    (best_size, mask)
}

/// Smoothed maximum of the local correlation map. The map is thresholded at
/// τ = max(c^{nn}, 2/√n); if the largest 4-connected region above τ covers at
/// least 2n cells, the maximum is taken over that region, otherwise the
/// statistic falls back to the global correlation c^{nn} at scale (n, n).
pub(crate) fn mgc_statistic_values(
    dx: &Array2<f64>,
    dy: &Array2<f64>,
) -> Result<(f64, (usize, usize))> {
    let n = dx.nrows();
    if n < 4 {
        return Err(Error::SampleSize { needed: 4, got: n });
    }
    let map = local_corr_values(dx, dy);
    let c_nn = map[[n - 1, n - 1]];
    let tau = c_nn.max(2.0 / (n as f64).sqrt());
    let sig = Array2::from_shape_fn((n, n), |(k, l)| map[[k, l]] > tau);
    let (area, mask) = largest_connected_region(&sig);
    if area >= 2 * n {
        let mut best = c_nn;
        let mut scale = (n, n);
        for k in 0..n {
            for l in 0..n {
                if mask[[k, l]] && map[[k, l]] >= best {
                    best = map[[k, l]];
                    scale = (k + 1, l + 1);
                }
            }
        }
        Ok((best, scale))
    } else {
        Ok((c_nn, (n, n)))
    }
}

/// The MGC statistic: max over scales of the smoothed local correlation map,
/// with the optimal scale it was attained at.
pub fn mgc_statistic(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<MgcResult> {
    if dx.n() != dy.n() {
        return Err(Error::InvalidInput(format!(
            "matrix sizes differ: {} vs {}",
            dx.n(),
            dy.n()
        )));
    }
    let (value, optimal_scale) = mgc_statistic_values(dx.values(), dy.values())?;
    Ok(MgcResult {
        statistic: StatisticValue {
            value,
            name: "mgc",
            n: dx.n(),
        },
        optimal_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use rayon::prelude::*;

    use crate::matrix::{pairwise_distance_values, pairwise_distances, DataMatrix, Metric};
    use crate::permutation::{perm_test, PermutationPlan};
    use crate::rng::{derive_seed, stream_rng};

    fn normal_data(n: usize, p: usize, seed: u64) -> DataMatrix {
        let mut rng = stream_rng(seed, 0);
        DataMatrix::new(Array2::from_shape_fn((n, p), |_| {
            rng.sample::<f64, _>(StandardNormal)
        }))
        .unwrap()
    }

    fn distances(x: &DataMatrix) -> DistanceMatrix {
        pairwise_distances(x, Metric::Euclidean)
    }

    #[test]
    fn knn_full_neighborhood_is_all_ones() {
        let d = distances(&normal_data(7, 2, 1));
        let g = knn_graph(&d, 7).unwrap();
        assert!(g.indicator().iter().all(|&v| v == 1));
    }

    #[test]
    fn knn_one_selects_self() {
        let x = DataMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let g = knn_graph(&distances(&x), 1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.indicator()[[i, j]], u8::from(i == j));
            }
        }
    }

    #[test]
    fn knn_row_sums_equal_k() {
        let d = distances(&normal_data(12, 3, 2));
        for k in 1..=12 {
            let g = knn_graph(&d, k).unwrap();
            for i in 0..12 {
                let sum: u32 = (0..12).map(|j| g.indicator()[[i, j]] as u32).sum();
                assert_eq!(sum, k as u32);
            }
        }
        assert!(knn_graph(&d, 0).is_err());
        assert!(knn_graph(&d, 13).is_err());
    }

    #[test]
    fn identical_inputs_reach_global_correlation_one() {
        let x = normal_data(10, 2, 3);
        let d = distances(&x);
        let map = local_corr_map(&d, &d).unwrap();
        assert!((map.global() - 1.0).abs() < 1e-12);
        let result = mgc_statistic(&d, &d).unwrap();
        assert!((result.statistic.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_x_gives_zero_map() {
        let x = DataMatrix::from_rows(&vec![vec![2.0]; 6]).unwrap();
        let y = normal_data(6, 1, 4);
        let map = local_corr_map(&distances(&x), &distances(&y)).unwrap();
        assert!(map.values().iter().all(|&v| v == 0.0));
        let result = mgc_statistic(&distances(&x), &distances(&y)).unwrap();
        assert_eq!(result.statistic.value, 0.0);
        assert_eq!(result.optimal_scale, (6, 6));
    }

    #[test]
    fn local_correlations_are_bounded() {
        for seed in 0..10 {
            let x = normal_data(15, 2, 100 + seed);
            let y = normal_data(15, 1, 200 + seed);
            let map = local_corr_map(&distances(&x), &distances(&y)).unwrap();
            assert!(map.values().iter().all(|&v| v.abs() <= 1.0 + 1e-9));
        }
    }

    // Brute-force oracle: evaluate c^{kl} directly from the neighbor graphs
    // and the displayed normalized sum, independent of the cumulative path.
    fn brute_force_map(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Array2<f64> {
        let n = dx.n();
        let cx = center_columns(dx.values());
        let cy = center_columns(dy.values());
        let mut map = Array2::zeros((n, n));
        for k in 1..=n {
            for l in 1..=n {
                let gx = knn_graph(dx, k).unwrap();
                let gy = knn_graph(dy, l).unwrap();
                let mut num = 0.0;
                let mut vx = 0.0;
                let mut vy = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let (a, b) = (
                            gx.indicator()[[i, j]] as f64,
                            gy.indicator()[[i, j]] as f64,
                        );
                        num += cx[[i, j]] * a * cy[[i, j]] * b;
                        vx += cx[[i, j]] * cx[[i, j]] * a;
                        vy += cy[[i, j]] * cy[[i, j]] * b;
                    }
                }
                let denom = vx * vy;
                map[[k - 1, l - 1]] = if denom > 0.0 { num / denom.sqrt() } else { 0.0 };
            }
        }
        map
    }

    #[test]
    fn cumulative_map_matches_brute_force() {
        for seed in 0..3 {
            let x = normal_data(8, 2, 300 + seed);
            let y = normal_data(8, 1, 400 + seed);
            let (dx, dy) = (distances(&x), distances(&y));
            let fast = local_corr_map(&dx, &dy).unwrap();
            let brute = brute_force_map(&dx, &dy);
            for (a, b) in fast.values().iter().zip(brute.iter()) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn smoothing_never_increases_the_maximum() {
        for seed in 0..10 {
            let x = normal_data(20, 1, 500 + seed);
            let mut rng = stream_rng(600 + seed, 0);
            let y = DataMatrix::new(Array2::from_shape_fn((20, 1), |(i, _)| {
                x.values()[[i, 0]].powi(2) + 0.3 * rng.sample::<f64, _>(StandardNormal)
            }))
            .unwrap();
            let (dx, dy) = (distances(&x), distances(&y));
            let map = local_corr_map(&dx, &dy).unwrap();
            let map_max = map.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let result = mgc_statistic(&dx, &dy).unwrap();
            assert!(result.statistic.value <= map_max + 1e-12);
            assert!(result.statistic.value >= map.global() - 1e-12);
        }
    }

    #[test]
    fn noiseless_linear_data_selects_the_global_scale() {
        let x = DataMatrix::from_rows(
            &(0..12).map(|i| vec![i as f64 * 0.5]).collect::<Vec<_>>(),
        )
        .unwrap();
        let y = DataMatrix::new(x.values().mapv(|v| 2.0 * v + 1.0)).unwrap();
        let (dx, dy) = (distances(&x), distances(&y));
        let map = local_corr_map(&dx, &dy).unwrap();
        let result = mgc_statistic(&dx, &dy).unwrap();
        assert_eq!(result.optimal_scale, (12, 12));
        assert!((result.statistic.value - map.global()).abs() < 1e-9);
        assert!((result.statistic.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn invariant_to_simultaneous_row_permutation() {
        let x = normal_data(10, 2, 700);
        let y = normal_data(10, 1, 701);
        let (dx, dy) = (distances(&x), distances(&y));
        let perm = [4usize, 2, 9, 0, 7, 1, 8, 3, 6, 5];
        let permute = |d: &DistanceMatrix| {
            DistanceMatrix::from_values(
                Array2::from_shape_fn((10, 10), |(i, j)| d.values()[[perm[i], perm[j]]]),
                Metric::Euclidean,
            )
            .unwrap()
        };
        let a = mgc_statistic(&dx, &dy).unwrap();
        let b = mgc_statistic(&permute(&dx), &permute(&dy)).unwrap();
        assert!((a.statistic.value - b.statistic.value).abs() < 1e-12);
    }

    #[test]
    fn null_p_values_are_uniform() {
        // independence-null validity: 200 Monte-Carlo p-values, 10 bins,
        // no bin further than 3σ from the uniform expectation
        let reps = 200usize;
        let r = 99usize;
        let counts = (0..reps as u64)
            .into_par_iter()
            .map(|rep| {
                let x = normal_data(100, 1, derive_seed(81_000, rep));
                let y = normal_data(100, 1, derive_seed(82_000, rep));
                let dx = pairwise_distance_values(&x.values().view());
                let dy = pairwise_distance_values(&y.values().view());
                let plan =
                    PermutationPlan::plain(100, r, derive_seed(83_000, rep)).unwrap();
                let stat = |perm: &[usize]| {
                    let dyp =
                        Array2::from_shape_fn((100, 100), |(i, j)| dy[[perm[i], perm[j]]]);
                    Ok(mgc_statistic_values(&dx, &dyp)?.0)
                };
                let p = perm_test(stat, &plan).unwrap().p_value;
                ((p * 10.0).ceil() as usize - 1).min(9)
            })
            .fold(
                || vec![0usize; 10],
                |mut acc, bin| {
                    acc[bin] += 1;
                    acc
                },
            )
            .reduce(
                || vec![0usize; 10],
                |mut a, b| {
                    for i in 0..10 {
                        a[i] += b[i];
                    }
                    a
                },
            );
        let expected = reps as f64 / 10.0;
        let sigma = (reps as f64 * 0.1 * 0.9).sqrt();
        for (bin, &count) in counts.iter().enumerate() {
            assert!(
                (count as f64 - expected).abs() <= 3.0 * sigma,
                "bin {bin}: count {count} vs expected {expected} (3σ = {:.1})",
                3.0 * sigma
            );
        }
    }
}
