//! Transforms k group samples into the paired (x, y) matrices that turn a
//! k-sample problem into an independence problem: concatenated data, one-hot
//! (or two-sample 0/1) label matrices, multiway label matrices, and the block
//! structure used by multilevel permutation tests.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Ordered collection of k group samples sharing one feature dimension.
#[derive(Debug, Clone)]
pub struct KSampleData {
    groups: Vec<DataMatrix>,
}

impl KSampleData {
    /// Requires k ≥ 2 groups, all with the same number of columns.
    pub fn new(groups: Vec<DataMatrix>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 groups, got {}",
                groups.len()
            )));
        }
        let p = groups[0].dim();
        if groups.iter().any(|g| g.dim() != p) {
            return Err(Error::InvalidInput(
                "groups have mismatched feature dimensions".into(),
            ));
        }
        Ok(Self { groups })
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn dim(&self) -> usize {
        self.groups[0].dim()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.n()).collect()
    }

    pub fn total_n(&self) -> usize {
        self.groups.iter().map(|g| g.n()).sum()
    }

    pub fn groups(&self) -> &[DataMatrix] {
        &self.groups
    }

    /// Group index (0-based) of each pooled row, in concatenation order.
    pub fn group_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total_n());
        for (g, m) in self.groups.iter().enumerate() {
            out.extend(std::iter::repeat(g).take(m.n()));
        }
        out
    }
}

/// Label matrix y paired with the pooled data matrix x.
#[derive(Debug, Clone)]
pub struct LabelEncoding {
    y: Array2<f64>,
    ways: usize,
}

impl LabelEncoding {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.y
    }

    /// Number of factor memberships per row (1 for one-way encodings).
    pub fn ways(&self) -> usize {
        self.ways
    }

    /// View the label rows as a data matrix, e.g. to build distance or kernel
    /// matrices over labels.
    pub fn as_data(&self) -> DataMatrix {
        DataMatrix::new(self.y.clone()).expect("label matrix is finite and non-empty")
    }
}

/// Row-stack the groups into the pooled n × p data matrix, in group order.
pub fn concat_groups(data: &KSampleData) -> DataMatrix {
    let n = data.total_n();
    let p = data.dim();
    let mut values = Array2::zeros((n, p));
    let mut at = 0;
    for g in data.groups() {
        for row in g.values().rows() {
            values.row_mut(at).assign(&row);
            at += 1;
        }
    }
    DataMatrix::new(values).expect("groups are validated data matrices")
}

/// One-way label encoding: the n × 1 vector (0s then 1s) for k = 2, and the
/// n × k one-hot matrix for k ≥ 3.
pub fn one_way_labels(sizes: &[usize]) -> Result<LabelEncoding> {
    if sizes.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 groups, got {}",
            sizes.len()
        )));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidInput("group sizes must be positive".into()));
    }
    let n: usize = sizes.iter().sum();
    let k = sizes.len();
    let y = if k == 2 {
        let mut y = Array2::zeros((n, 1));
        for i in sizes[0]..n {
            y[[i, 0]] = 1.0;
        }
        y
    } else {
        let mut y = Array2::zeros((n, k));
        let mut at = 0;
        for (g, &s) in sizes.iter().enumerate() {
            for _ in 0..s {
                y[[at, g]] = 1.0;
                at += 1;
            }
        }
        y
    };
    Ok(LabelEncoding { y, ways: 1 })
}

/// Label encoding from an arbitrary class vector (values need not be grouped
/// contiguously). Classes are the distinct values in `labels`; two classes
/// give the n × 1 encoding, more give one-hot rows.
pub fn encoding_from_labels(labels: &[usize]) -> Result<LabelEncoding> {
    if labels.is_empty() {
        return Err(Error::InvalidInput("empty label vector".into()));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidInput(
            "labels must take at least 2 distinct values".into(),
        ));
    }
    let n = labels.len();
    let k = classes.len();
    let class_index = |l: usize| classes.binary_search(&l).unwrap();
    let y = if k == 2 {
        let mut y = Array2::zeros((n, 1));
        for (i, &l) in labels.iter().enumerate() {
            y[[i, 0]] = class_index(l) as f64;
        }
        y
    } else {
        let mut y = Array2::zeros((n, k));
        for (i, &l) in labels.iter().enumerate() {
            y[[i, class_index(l)]] = 1.0;
        }
        y
    };
    Ok(LabelEncoding { y, ways: 1 })
}

/// Multiway label encoding: the row for every sample in group i carries a 1
/// at each of that group's `w` factor positions. Memberships are caller
/// supplied; the resulting row-pair squared distances count how many factor
/// labels two groups differ by.
pub fn multiway_labels(sizes: &[usize], memberships: &[Vec<usize>]) -> Result<LabelEncoding> {
    let k = sizes.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 groups, got {k}"
        )));
    }
    if memberships.len() != k {
        return Err(Error::InvalidInput(format!(
            "need one membership set per group: {} groups, {} sets",
            k,
            memberships.len()
        )));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidInput("group sizes must be positive".into()));
    }
    let w = memberships[0].len();
    if w == 0 || w >= k {
        return Err(Error::InvalidInput(format!(
            "ways must satisfy 1 <= w < k, got w={w}, k={k}"
        )));
    }
    for (g, m) in memberships.iter().enumerate() {
        if m.len() != w {
            return Err(Error::InvalidInput(format!(
                "membership set for group {g} has cardinality {}, expected {w}",
                m.len()
            )));
        }
        let mut sorted = m.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != w {
            return Err(Error::InvalidInput(format!(
                "membership set for group {g} has duplicate factors"
            )));
        }
    }
    let q = memberships
        .iter()
        .flat_map(|m| m.iter())
        .max()
        .copied()
        .unwrap()
        + 1;
    let n: usize = sizes.iter().sum();
    let mut y = Array2::zeros((n, q));
    let mut at = 0;
    for (g, &s) in sizes.iter().enumerate() {
        for _ in 0..s {
            for &f in &memberships[g] {
                y[[at, f]] = 1.0;
            }
            at += 1;
        }
    }
    Ok(LabelEncoding { y, ways: w })
}

/// Contiguous equal-size blocks for multilevel (block) permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    block_ids: Vec<usize>,
    block_size: usize,
}

impl BlockStructure {
    pub fn block_ids(&self) -> &[usize] {
        &self.block_ids
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn n_blocks(&self) -> usize {
        self.block_ids.len() / self.block_size
    }

    pub fn len(&self) -> usize {
        self.block_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_ids.is_empty()
    }

    /// Block structure covering `n` samples with blocks of `block_size`.
    pub fn covering(n: usize, block_size: usize) -> Result<Self> {
        if block_size == 0 || n % block_size != 0 {
            return Err(Error::InvalidInput(format!(
                "{n} samples cannot be split into blocks of {block_size}"
            )));
        }
        make_blocks(n / block_size, block_size)
    }
}

/// Contiguous block assignment `1,1,…,2,2,…` over n = n_blocks · block_size
/// samples. Callers must sort their data by block first.
pub fn make_blocks(n_blocks: usize, block_size: usize) -> Result<BlockStructure> {
    if n_blocks == 0 || block_size == 0 {
        return Err(Error::InvalidInput(
            "block count and block size must be positive".into(),
        ));
    }
    let mut block_ids = Vec::with_capacity(n_blocks * block_size);
    for b in 1..=n_blocks {
        block_ids.extend(std::iter::repeat(b).take(block_size));
    }
    Ok(BlockStructure {
        block_ids,
        block_size,
    })
}
