//! KMERF: a CART-style classification random forest trained on the group
//! labels, the proximity kernel counting how often two samples share a leaf,
//! and the unbiased induced-kernel correlation statistic.

use ndarray::Array2;
use rayon::prelude::*;

use crate::encoding::encoding_from_labels;
use crate::error::{Error, Result};
use crate::matrix::{pairwise_distance_values, u_center_values, DataMatrix};
use crate::rng::stream_rng;
use crate::stats::{inner, StatisticValue};

/// Forest hyperparameters. Defaults: 500 trees, bootstrap size n, √p candidate
/// features per split, minimum leaf size 1 (grown to purity).
#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Bootstrap sample size n_b ≤ n; `None` means n.
    pub bootstrap_size: Option<usize>,
    /// Candidate features per split; `None` means max(1, round(√p)).
    pub features_per_split: Option<usize>,
    pub min_leaf: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 500,
            bootstrap_size: None,
            features_per_split: None,
            min_leaf: 1,
        }
    }
}

impl ForestConfig {
    /// Small forest preset for quick tests and Monte-Carlo sweeps.
    pub fn with_trees(n_trees: usize) -> Self {
        Self {
            n_trees,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        id: u32,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn route(&self, row: &[f64]) -> u32 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { id } => return *id,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

/// A trained classification forest; every tree maps any sample to exactly one
/// leaf partition.
#[derive(Debug, Clone)]
pub struct Forest {
    trees: Vec<Tree>,
    seed: u64,
}

impl Forest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Leaf partition assigned to each row of `x`, per tree. Row-major:
    /// `assignments[w][i]` is the leaf of sample i in tree w.
    pub fn leaf_assignments(&self, x: &DataMatrix) -> Vec<Vec<u32>> {
        let rows: Vec<Vec<f64>> = (0..x.n()).map(|i| x.row(i).to_vec()).collect();
        self.trees
            .iter()
            .map(|t| rows.iter().map(|r| t.route(r)).collect())
            .collect()
    }
}

struct TreeBuilder<'a> {
    x: &'a Array2<f64>,
    labels: &'a [usize],
    n_classes: usize,
    mtry: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
    next_leaf: u32,
}

impl<'a> TreeBuilder<'a> {
    fn gini_cost(counts: &[usize], total: usize) -> f64 {
        if total == 0 {
            return 0.0;
        }
        let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
        total as f64 - sq / total as f64
    }

    fn class_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &i in idx {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    /// Best (feature, threshold) over the candidate features, minimizing the
    /// weighted Gini impurity. Boundaries are midpoints between distinct
    /// sorted values; both children must hold at least `min_leaf` samples.
    fn best_split(&self, idx: &[usize], features: &[usize]) -> Option<(usize, f64)> {
        let total = idx.len();
        let node_counts = self.class_counts(idx);
        let mut best: Option<(usize, f64)> = None;
        let mut best_cost = f64::INFINITY;
        let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(total);
        for &f in features {
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.x[[i, f]], self.labels[i])));
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut left = vec![0usize; self.n_classes];
            let mut right = node_counts.clone();
            for t in 0..total - 1 {
                left[pairs[t].1] += 1;
                right[pairs[t].1] -= 1;
                if pairs[t].0 == pairs[t + 1].0 {
                    continue;
                }
                let nl = t + 1;
                let nr = total - nl;
                if nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let cost = Self::gini_cost(&left, nl) + Self::gini_cost(&right, nr);
                if cost < best_cost - 1e-12 {
                    best_cost = cost;
                    let (a, b) = (pairs[t].0, pairs[t + 1].0);
                    let mut threshold = a + (b - a) / 2.0;
                    if !(threshold > a && threshold < b) {
                        threshold = a;
                    }
                    best = Some((f, threshold));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, rng: &mut rand_chacha::ChaCha8Rng) -> usize {
        use rand::seq::index::sample;

        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { id: 0 });

        let counts = self.class_counts(&idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let splittable = idx.len() >= 2 * self.min_leaf && idx.len() >= 2 && !pure;
        let split = if splittable {
            let p = self.x.ncols();
            let features: Vec<usize> = sample(rng, p, self.mtry.min(p)).into_vec();
            self.best_split(&idx, &features)
        } else {
            None
        };

        match split {
            Some((feature, threshold)) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                    idx.into_iter().partition(|&i| self.x[[i, feature]] <= threshold);
                let left = self.grow(left_idx, rng);
                let right = self.grow(right_idx, rng);
                self.nodes[slot] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
            None => {
                self.nodes[slot] = Node::Leaf { id: self.next_leaf };
                self.next_leaf += 1;
            }
        }
        slot
    }
}

/// Train a forest of `config.n_trees` CART classification trees, each grown
/// on an independent bootstrap of size n_b, splitting by Gini impurity over
/// √p random candidate features per node, to purity (or the configured
/// minimum leaf size). Tree w draws its randomness from an independent
/// stream of `(seed, w)`, so training is deterministic under parallelism.
pub fn train_forest(
    x: &DataMatrix,
    labels: &[usize],
    config: &ForestConfig,
    seed: u64,
) -> Result<Forest> {
    let n = x.n();
    if labels.len() != n {
        return Err(Error::InvalidInput(format!(
            "label vector length {} does not match sample count {n}",
            labels.len()
        )));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidInput(
            "labels must take at least 2 distinct values".into(),
        ));
    }
    if config.n_trees == 0 {
        return Err(Error::InvalidInput("forest needs at least one tree".into()));
    }
    let n_b = config.bootstrap_size.unwrap_or(n);
    if n_b == 0 || n_b > n {
        return Err(Error::InvalidInput(format!(
            "bootstrap size must satisfy 1 <= n_b <= {n}, got {n_b}"
        )));
    }
    // relabel into 0..n_classes for dense count vectors
    let dense: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).unwrap())
        .collect();
    let p = x.dim();
    let mtry = config
        .features_per_split
        .unwrap_or(((p as f64).sqrt().round() as usize).max(1));
    if mtry == 0 || mtry > p {
        return Err(Error::InvalidInput(format!(
            "features per split must satisfy 1 <= mtry <= {p}, got {mtry}"
        )));
    }

    let trees: Vec<Tree> = (0..config.n_trees as u64)
        .into_par_iter()
        .map(|w| {
            use rand::Rng;
            let mut rng = stream_rng(seed, w);
            let bootstrap: Vec<usize> = (0..n_b).map(|_| rng.random_range(0..n)).collect();
            let mut builder = TreeBuilder {
                x: x.values(),
                labels: &dense,
                n_classes: classes.len(),
                mtry,
                min_leaf: config.min_leaf.max(1),
                nodes: Vec::new(),
                next_leaf: 0,
            };
            builder.grow(bootstrap, &mut rng);
            Tree {
                nodes: builder.nodes,
            }
        })
        .collect();

    Ok(Forest { trees, seed })
}

/// Proximity kernel K with unit diagonal: K_ij is the fraction of trees
/// placing samples i and j in the same leaf partition.
#[derive(Debug, Clone)]
pub struct ProximityKernel {
    values: Array2<f64>,
}

impl ProximityKernel {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// Compute the proximity kernel of a forest over the rows of `x`. Counts use
/// all trees for all pairs (no out-of-bag restriction).
pub fn proximity_kernel(forest: &Forest, x: &DataMatrix) -> ProximityKernel {
    let n = x.n();
    let m = forest.n_trees() as f64;
    let mut counts = Array2::<f64>::zeros((n, n));
    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).to_vec()).collect();
    let mut by_leaf: std::collections::HashMap<u32, Vec<usize>> = std::collections::HashMap::new();
    for tree in &forest.trees {
        by_leaf.clear();
        for (i, row) in rows.iter().enumerate() {
            by_leaf.entry(tree.route(row)).or_default().push(i);
        }
        for members in by_leaf.values() {
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    counts[[i, j]] += 1.0;
                }
            }
        }
    }
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        values[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let v = counts[[i, j]] / m;
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
    }
    ProximityKernel { values }
}

pub(crate) fn kmerf_statistic_value(
    x: &DataMatrix,
    labels: &[usize],
    config: &ForestConfig,
    seed: u64,
) -> Result<f64> {
    let n = x.n();
    if n < 4 {
        return Err(Error::SampleSize { needed: 4, got: n });
    }
    let forest = train_forest(x, labels, config, seed)?;
    let kx = proximity_kernel(&forest, x);
    let lx = u_center_values(&kx.values().view());

    // Euclidean-distance induced kernel over the label encoding:
    // K^y = max(D^y) − D^y
    let encoding = encoding_from_labels(labels)?;
    let dy = pairwise_distance_values(&encoding.as_data().values().view());
    let dmax = dy.iter().cloned().fold(0.0, f64::max);
    let ky = dy.mapv(|d| dmax - d);
    let ly = u_center_values(&ky.view());

    Ok(inner(&lx, &ly) / (n * (n - 3)) as f64)
}

/// The KMERF statistic: train a forest on (x, labels), U-center the proximity
/// kernel and the label-induced kernel, and take trace(Lx·Ly)/(n(n−3)).
/// Deterministic given the seed.
pub fn kmerf_statistic(
    x: &DataMatrix,
    labels: &[usize],
    config: &ForestConfig,
    seed: u64,
) -> Result<StatisticValue> {
    Ok(StatisticValue {
        value: kmerf_statistic_value(x, labels, config, seed)?,
        name: "kmerf",
        n: x.n(),
    })
}
