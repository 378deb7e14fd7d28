//! Graphs, cluster structures, the generalized stochastic blockmodel
//! generator, the semi-random adversary, and cluster-quality metrics.
//!
//! Node layout produced by [`generate_gsbm`]: clusters occupy contiguous
//! index ranges in the order of `cluster_sizes`, outliers come last.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Fraction of the `n²` ordered pairs that may be misclassified for a
/// recovery to count as a success.
pub const SUCCESS_FRACTION: f64 = 0.001;

/// Square 0/1 matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl BinaryMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, bits: vec![false; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                bits.push(f(i, j));
            }
        }
        Self { n, bits }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.bits[i * self.n + j] = value;
    }

    /// Number of ones over all `n²` entries.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| ((i + 1)..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Entrywise L1 distance, i.e. the number of differing entries.
    pub fn l1_distance(&self, other: &BinaryMatrix) -> Result<usize> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: other.n });
        }
        Ok(self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count())
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| if self.get(i, j) { 1.0 } else { 0.0 })
    }
}

/// Observed graph: symmetric 0/1 matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Adjacency(BinaryMatrix);

impl Adjacency {
    /// Graph on `n` nodes with no edges (diagonal set to one).
    pub fn empty(n: usize) -> Self {
        Self(BinaryMatrix::from_fn(n, |i, j| i == j))
    }

    pub fn complete(n: usize) -> Self {
        Self(BinaryMatrix::from_fn(n, |_, _| true))
    }

    /// Builds a graph from undirected edges. Self-loops and out-of-range
    /// endpoints are rejected; repeated edges are idempotent.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut a = Self::empty(n);
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidAdjacency(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::InvalidAdjacency(format!("self-loop at node {u}")));
            }
            a.set_edge(u, v, true);
        }
        Ok(a)
    }

    /// Validates symmetry and the unit diagonal.
    pub fn from_binary(b: BinaryMatrix) -> Result<Self> {
        if let Some(i) = (0..b.n()).find(|&i| !b.get(i, i)) {
            return Err(Error::InvalidAdjacency(format!("diagonal entry {i} is zero")));
        }
        if !b.is_symmetric() {
            return Err(Error::InvalidAdjacency("matrix is not symmetric".into()));
        }
        Ok(Self(b))
    }

    /// Accepts a dense matrix whose entries are exactly 0 or 1.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: m.ncols() });
        }
        for j in 0..n {
            for i in 0..n {
                let v = m[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidAdjacency(format!("entry ({i}, {j}) = {v} is not binary")));
                }
            }
        }
        Self::from_binary(BinaryMatrix::from_fn(n, |i, j| m[(i, j)] == 1.0))
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.0.get(i, j)
    }

    /// Adds or removes the undirected edge `{u, v}`.
    ///
    /// # Panics
    /// If `u == v`; the diagonal is fixed to one.
    pub fn set_edge(&mut self, u: usize, v: usize, present: bool) {
        assert_ne!(u, v, "diagonal entries of an adjacency matrix are fixed");
        self.0.set(u, v, present);
        self.0.set(v, u, present);
    }

    /// Number of undirected off-diagonal edges.
    pub fn edge_count(&self) -> usize {
        (self.0.count_ones() - self.n()) / 2
    }

    /// Number of ones among all `n²` entries, diagonal included.
    pub fn support_size(&self) -> usize {
        self.0.count_ones()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |u| ((u + 1)..n).filter(move |&v| self.get(u, v)).map(move |v| (u, v)))
    }

    /// Row `i` as a 0/1 slice.
    pub fn row(&self, i: usize) -> &[bool] {
        let n = self.n();
        &self.0.bits[i * n..(i + 1) * n]
    }

    pub fn as_binary(&self) -> &BinaryMatrix {
        &self.0
    }

    pub fn to_matrix(&self) -> Matrix {
        self.0.to_matrix()
    }
}

/// Per-node cluster labels; `0` marks an outlier and `1..=r` are clusters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    r: usize,
}

impl ClusterAssignment {
    pub const OUTLIER: usize = 0;

    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let r = labels.iter().copied().max().unwrap_or(0);
        let mut seen = vec![false; r + 1];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = (1..=r).find(|&c| !seen[c]) {
            return Err(Error::InvalidAssignment(format!(
                "cluster ids must be contiguous in 1..={r}; id {missing} has no members"
            )));
        }
        Ok(Self { labels, r })
    }

    /// Contiguous layout: cluster 1 takes the first `sizes[0]` nodes, and so
    /// on, followed by `n_outliers` outliers.
    pub fn from_sizes(sizes: &[usize], n_outliers: usize) -> Result<Self> {
        let mut labels = Vec::with_capacity(sizes.iter().sum::<usize>() + n_outliers);
        for (c, &size) in sizes.iter().enumerate() {
            labels.extend(std::iter::repeat_n(c + 1, size));
        }
        labels.extend(std::iter::repeat_n(Self::OUTLIER, n_outliers));
        Self::new(labels)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of non-outlier clusters.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn is_outlier(&self, i: usize) -> bool {
        self.labels[i] == Self::OUTLIER
    }

    /// Sizes of clusters `1..=r`, in label order.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.r];
        for &l in &self.labels {
            if l != Self::OUTLIER {
                sizes[l - 1] += 1;
            }
        }
        sizes
    }

    pub fn min_cluster_size(&self) -> Option<usize> {
        self.sizes().into_iter().min()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i] == cluster).collect()
    }

    pub fn cluster_matrix(&self) -> ClusterMatrix {
        ClusterMatrix::from_assignment(self)
    }

    /// Relabels clusters in order of first appearance.
    pub fn canonical(&self) -> ClusterAssignment {
        let mut map = vec![0usize; self.r + 1];
        let mut next = 1;
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                if l == Self::OUTLIER {
                    return Self::OUTLIER;
                }
                if map[l] == 0 {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect();
        ClusterAssignment { labels, r: self.r }
    }

    /// Equality up to a permutation of cluster ids (outliers must agree).
    pub fn same_partition(&self, other: &ClusterAssignment) -> bool {
        self.n() == other.n() && self.canonical() == other.canonical()
    }
}

/// Block-structured 0/1 matrix `Y` with `y_ij = 1` iff `i` and `j` share a
/// non-outlier cluster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterMatrix {
    bits: BinaryMatrix,
    r: usize,
}

impl ClusterMatrix {
    pub fn from_assignment(assignment: &ClusterAssignment) -> Self {
        let labels = assignment.labels();
        let bits = BinaryMatrix::from_fn(labels.len(), |i, j| {
            labels[i] != ClusterAssignment::OUTLIER && labels[i] == labels[j]
        });
        Self { bits, r: assignment.r() }
    }

    pub fn n(&self) -> usize {
        self.bits.n()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits.get(i, j)
    }

    /// Equals the number of clusters.
    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn as_binary(&self) -> &BinaryMatrix {
        &self.bits
    }

    pub fn to_matrix(&self) -> Matrix {
        self.bits.to_matrix()
    }

    /// Cluster labels in order of first appearance.
    pub fn assignment(&self) -> ClusterAssignment {
        let n = self.n();
        let mut labels = vec![ClusterAssignment::OUTLIER; n];
        let mut next = 1;
        for i in 0..n {
            if labels[i] != ClusterAssignment::OUTLIER || !self.get(i, i) {
                continue;
            }
            for (j, label) in labels.iter_mut().enumerate() {
                if self.get(i, j) {
                    *label = next;
                }
            }
            next += 1;
        }
        ClusterAssignment { labels, r: next - 1 }
    }
}

/// Parameters of the generalized stochastic blockmodel with homogeneous
/// probabilities: in-cluster pairs are edges with probability `p`, every
/// other pair with probability `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct GsbmParams {
    cluster_sizes: Vec<usize>,
    n_outliers: usize,
    p: f64,
    q: f64,
}

impl GsbmParams {
    pub fn new(cluster_sizes: Vec<usize>, n_outliers: usize, p: f64, q: f64) -> Result<Self> {
        if cluster_sizes.is_empty() {
            return Err(Error::params("at least one cluster is required"));
        }
        if cluster_sizes.contains(&0) {
            return Err(Error::params("cluster sizes must be positive"));
        }
        for (name, v) in [("p", p), ("q", q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::params(format!("{name} = {v} is not a probability")));
            }
        }
        if p == q {
            return Err(Error::params(format!("p = q = {p} carries no cluster signal")));
        }
        Ok(Self { cluster_sizes, n_outliers, p, q })
    }

    /// Standard blockmodel: `r` clusters of size `k`, no outliers.
    pub fn standard(r: usize, k: usize, p: f64, q: f64) -> Result<Self> {
        Self::new(vec![k; r], 0, p, q)
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.cluster_sizes
    }

    pub fn n1(&self) -> usize {
        self.cluster_sizes.iter().sum()
    }

    pub fn n2(&self) -> usize {
        self.n_outliers
    }

    pub fn n(&self) -> usize {
        self.n1() + self.n2()
    }

    pub fn r(&self) -> usize {
        self.cluster_sizes.len()
    }

    /// Minimum cluster size `K`.
    pub fn min_cluster_size(&self) -> usize {
        self.cluster_sizes.iter().copied().min().unwrap_or(0)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn homophily(&self) -> bool {
        self.p > self.q
    }

    pub fn assignment(&self) -> ClusterAssignment {
        ClusterAssignment::from_sizes(&self.cluster_sizes, self.n_outliers)
            .expect("validated sizes are positive")
    }
}

/// A sampled graph together with its ground truth.
#[derive(Debug, Clone)]
pub struct GsbmInstance {
    pub adjacency: Adjacency,
    pub assignment: ClusterAssignment,
    pub truth: ClusterMatrix,
}

/// Samples a graph from the blockmodel. Deterministic in `seed`.
pub fn generate_gsbm(params: &GsbmParams, seed: u64) -> GsbmInstance {
    let assignment = params.assignment();
    let truth = assignment.cluster_matrix();
    let n = params.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adjacency = Adjacency::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = if truth.get(i, j) { params.p } else { params.q };
            if rng.random_bool(prob) {
                adjacency.set_edge(i, j, true);
            }
        }
    }
    GsbmInstance { adjacency, assignment, truth }
}

/// How many eligible pairs the semi-random adversary edits in each
/// direction. Edits are chosen by a seeded shuffle of the eligible pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversarySpec {
    pub add_fraction: f64,
    pub remove_fraction: f64,
    pub seed: u64,
}

impl AdversarySpec {
    pub fn new(add_fraction: f64, remove_fraction: f64, seed: u64) -> Result<Self> {
        let spec = Self { add_fraction, remove_fraction, seed };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        for (name, f) in [("add_fraction", self.add_fraction), ("remove_fraction", self.remove_fraction)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::params(format!("{name} = {f} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Number of pairs edited when a fraction `f` of `eligible` pairs is chosen.
/// The small slack absorbs representation error in products like `0.29 * 100`.
pub fn edit_count(fraction: f64, eligible: usize) -> usize {
    ((fraction * eligible as f64 + 1e-9).floor() as usize).min(eligible)
}

/// Applies semi-random edits aligned with `truth`.
///
/// Under homophily additions go to in-cluster non-edges and removals to
/// edges outside the clusters; under heterophily the two sets swap roles.
pub fn apply_adversary(
    a: &Adjacency,
    truth: &ClusterMatrix,
    spec: &AdversarySpec,
    homophily: bool,
) -> Result<Adjacency> {
    spec.validate()?;
    let n = a.n();
    if truth.n() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: truth.n() });
    }
    let mut addable = Vec::new();
    let mut removable = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let aligned_with_edges = truth.get(i, j) == homophily;
            match (a.get(i, j), aligned_with_edges) {
                (false, true) => addable.push((i, j)),
                (true, false) => removable.push((i, j)),
                _ => {}
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    addable.shuffle(&mut rng);
    removable.shuffle(&mut rng);

    let mut out = a.clone();
    for &(i, j) in &addable[..edit_count(spec.add_fraction, addable.len())] {
        out.set_edge(i, j, true);
    }
    for &(i, j) in &removable[..edit_count(spec.remove_fraction, removable.len())] {
        out.set_edge(i, j, false);
    }
    Ok(out)
}

/// Flips every off-diagonal entry; the diagonal stays one.
pub fn complement_graph(a: &Adjacency) -> Adjacency {
    Adjacency(BinaryMatrix::from_fn(a.n(), |i, j| i == j || !a.get(i, j)))
}

/// Returns the assignment encoded by `y` when every entry is within `tol`
/// of a valid cluster matrix.
pub fn is_cluster_matrix(y: &Matrix, tol: f64) -> Option<ClusterAssignment> {
    let n = y.nrows();
    if y.ncols() != n {
        return None;
    }
    let mut support = BinaryMatrix::zeros(n);
    for j in 0..n {
        for i in 0..n {
            let v = y[(i, j)];
            if (v - 1.0).abs() <= tol {
                support.set(i, j, true);
            } else if v.abs() > tol {
                return None;
            }
        }
    }
    if !support.is_symmetric() {
        return None;
    }

    // Connected components of the support; a node with a zero diagonal
    // must have an empty row.
    let mut labels = vec![ClusterAssignment::OUTLIER; n];
    let mut next = 1;
    for start in 0..n {
        if labels[start] != ClusterAssignment::OUTLIER {
            continue;
        }
        if !support.get(start, start) {
            if (0..n).any(|j| support.get(start, j)) {
                return None;
            }
            continue;
        }
        let mut stack = vec![start];
        labels[start] = next;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if support.get(u, v) && labels[v] == ClusterAssignment::OUTLIER {
                    labels[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }

    // Every component must be a complete all-ones block.
    for i in 0..n {
        for j in 0..n {
            let same = labels[i] != ClusterAssignment::OUTLIER && labels[i] == labels[j];
            if same != support.get(i, j) {
                return None;
            }
        }
    }
    Some(ClusterAssignment { labels, r: next - 1 })
}

/// Partition read off a binary estimate: connected components of its
/// support (made symmetric), with nodes whose row is empty as outliers.
/// Equals the encoded assignment whenever `b` is a cluster matrix.
pub fn components_assignment(b: &BinaryMatrix) -> ClusterAssignment {
    let n = b.n();
    let linked = |u: usize, v: usize| b.get(u, v) || b.get(v, u);
    let mut labels = vec![ClusterAssignment::OUTLIER; n];
    let mut next = 1;
    for start in 0..n {
        if labels[start] != ClusterAssignment::OUTLIER || !(0..n).any(|v| linked(start, v)) {
            continue;
        }
        let mut stack = vec![start];
        labels[start] = next;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if linked(u, v) && labels[v] == ClusterAssignment::OUTLIER {
                    labels[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    ClusterAssignment { labels, r: next - 1 }
}

/// Rounds each entry to one iff it strictly exceeds the mean of all entries.
pub fn round_by_mean(y: &Matrix) -> BinaryMatrix {
    let threshold = crate::linalg::mean(y);
    BinaryMatrix::from_fn(y.nrows(), |i, j| y[(i, j)] > threshold)
}

/// `‖Y* − estimate‖₁` over all ordered pairs.
pub fn misclassified_pairs(truth: &ClusterMatrix, estimate: &BinaryMatrix) -> Result<usize> {
    truth.as_binary().l1_distance(estimate)
}

/// Success criterion: fewer than [`SUCCESS_FRACTION`]` · n²` misclassified pairs.
pub fn is_success(misclassified: usize, n: usize) -> bool {
    is_success_at(misclassified, n, SUCCESS_FRACTION)
}

pub fn is_success_at(misclassified: usize, n: usize, fraction: f64) -> bool {
    (misclassified as f64) < fraction * (n * n) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_blocks() -> ClusterMatrix {
        ClusterAssignment::new(vec![1, 1, 2, 2]).unwrap().cluster_matrix()
    }

    #[test]
    fn degenerate_probabilities_force_two_cliques() {
        let params = GsbmParams::new(vec![2, 2], 0, 1.0, 0.0).unwrap();
        for seed in [0, 1, 99] {
            let inst = generate_gsbm(&params, seed);
            let expected = Adjacency::from_edges(4, [(0, 1), (2, 3)]).unwrap();
            assert_eq!(inst.adjacency, expected);
        }
    }

    #[test]
    fn paper_scale_instance_has_expected_shape() {
        let params = GsbmParams::standard(5, 200, 0.6, 0.1).unwrap();
        let inst = generate_gsbm(&params, 11);
        assert_eq!(inst.adjacency.n(), 1000);
        assert_eq!(inst.assignment.sizes(), vec![200; 5]);
        assert_eq!(inst.truth.rank(), 5);
        assert_eq!(inst.truth.as_binary().count_ones(), 5 * 200 * 200);
    }

    #[test]
    fn in_cluster_density_matches_p() {
        let params = GsbmParams::new(vec![3, 3], 2, 0.9, 0.1).unwrap();
        let (mut hits, mut total) = (0usize, 0usize);
        for seed in 0..10_000u64 {
            let inst = generate_gsbm(&params, seed.wrapping_mul(7919).wrapping_add(7));
            for i in 0..8 {
                for j in (i + 1)..8 {
                    if inst.truth.get(i, j) {
                        total += 1;
                        hits += inst.adjacency.get(i, j) as usize;
                    }
                }
            }
        }
        let density = hits as f64 / total as f64;
        assert!((density - 0.9).abs() < 0.01, "density {density}");
    }

    #[test]
    fn generation_is_deterministic_and_consistent() {
        let params = GsbmParams::new(vec![5, 4], 3, 0.7, 0.2).unwrap();
        let a = generate_gsbm(&params, 5);
        let b = generate_gsbm(&params, 5);
        assert_eq!(a.adjacency, b.adjacency);
        assert_eq!(a.truth, a.assignment.cluster_matrix());
        assert_ne!(a.adjacency, generate_gsbm(&params, 6).adjacency);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(GsbmParams::new(vec![3, 3], 0, 0.4, 0.4).is_err());
        assert!(GsbmParams::new(vec![3, 0], 0, 0.6, 0.4).is_err());
        assert!(GsbmParams::new(vec![], 5, 0.6, 0.4).is_err());
        assert!(GsbmParams::new(vec![3], 0, 1.2, 0.4).is_err());
        assert!(!GsbmParams::new(vec![3], 0, 0.1, 0.4).unwrap().homophily());
    }

    #[test]
    fn identity_adversary_leaves_graph_unchanged() {
        let inst = generate_gsbm(&GsbmParams::standard(2, 10, 0.6, 0.3).unwrap(), 1);
        let spec = AdversarySpec::new(0.0, 0.0, 9).unwrap();
        let out = apply_adversary(&inst.adjacency, &inst.truth, &spec, true).unwrap();
        assert_eq!(out, inst.adjacency);
    }

    #[test]
    fn saturating_adversary_yields_truth() {
        let inst = generate_gsbm(&GsbmParams::standard(3, 8, 0.6, 0.3).unwrap(), 2);
        let spec = AdversarySpec::new(1.0, 1.0, 9).unwrap();
        let out = apply_adversary(&inst.adjacency, &inst.truth, &spec, true).unwrap();
        assert_eq!(out.as_binary(), inst.truth.as_binary());
    }

    #[test]
    fn adversary_edits_floor_fraction_of_eligible_pairs() {
        let inst = generate_gsbm(&GsbmParams::standard(2, 50, 0.5, 0.2).unwrap(), 3);
        let (a, y) = (&inst.adjacency, &inst.truth);
        let (mut addable, mut removable) = (0, 0);
        for i in 0..100 {
            for j in (i + 1)..100 {
                match (a.get(i, j), y.get(i, j)) {
                    (false, true) => addable += 1,
                    (true, false) => removable += 1,
                    _ => {}
                }
            }
        }
        let spec = AdversarySpec::new(0.05, 0.05, 3).unwrap();
        let out = apply_adversary(a, y, &spec, true).unwrap();
        let (mut added, mut removed) = (0, 0);
        for (i, j) in (0..100).flat_map(|i| ((i + 1)..100).map(move |j| (i, j))) {
            match (a.get(i, j), out.get(i, j)) {
                (false, true) => added += 1,
                (true, false) => removed += 1,
                _ => {}
            }
        }
        assert_eq!(added, (0.05 * addable as f64).floor() as usize);
        assert_eq!(removed, (0.05 * removable as f64).floor() as usize);
    }

    #[test]
    fn heterophily_adversary_mirrors_directions() {
        let inst = generate_gsbm(&GsbmParams::standard(2, 6, 0.2, 0.7).unwrap(), 4);
        let spec = AdversarySpec::new(1.0, 1.0, 0).unwrap();
        let out = apply_adversary(&inst.adjacency, &inst.truth, &spec, false).unwrap();
        for i in 0..12 {
            for j in (i + 1)..12 {
                assert_eq!(out.get(i, j), !inst.truth.get(i, j));
            }
        }
    }

    #[test]
    fn adversary_rejects_dimension_mismatch() {
        let a = Adjacency::empty(4);
        let y = ClusterAssignment::new(vec![1, 1, 1]).unwrap().cluster_matrix();
        let spec = AdversarySpec { add_fraction: 0.5, remove_fraction: 0.5, seed: 0 };
        assert!(apply_adversary(&a, &y, &spec, true).is_err());
        assert!(AdversarySpec::new(1.5, 0.0, 0).is_err());
    }

    #[test]
    fn complement_of_complete_graph_is_empty() {
        assert_eq!(complement_graph(&Adjacency::complete(5)), Adjacency::empty(5));
    }

    #[test]
    fn complement_of_heterophilous_graph_is_homophilous() {
        let params = GsbmParams::standard(2, 20, 0.1, 0.8).unwrap();
        let (mut in_hits, mut in_total, mut out_hits, mut out_total) = (0, 0, 0, 0);
        for seed in 0..50 {
            let inst = generate_gsbm(&params, seed);
            let c = complement_graph(&inst.adjacency);
            for i in 0..40 {
                for j in (i + 1)..40 {
                    if inst.truth.get(i, j) {
                        in_total += 1;
                        in_hits += c.get(i, j) as usize;
                    } else {
                        out_total += 1;
                        out_hits += c.get(i, j) as usize;
                    }
                }
            }
        }
        let p = in_hits as f64 / in_total as f64;
        let q = out_hits as f64 / out_total as f64;
        assert!((p - 0.9).abs() < 0.02, "p' = {p}");
        assert!((q - 0.2).abs() < 0.02, "q' = {q}");
    }

    #[test]
    fn recognizes_exact_block_matrix() {
        let y = two_blocks().to_matrix();
        let got = is_cluster_matrix(&y, 1e-6).unwrap();
        assert_eq!(got.labels(), &[1, 1, 2, 2]);
    }

    #[test]
    fn components_of_a_cluster_matrix_give_its_assignment() {
        let assignment = ClusterAssignment::new(vec![2, 0, 1, 2, 1, 0]).unwrap();
        let read = components_assignment(assignment.cluster_matrix().as_binary());
        assert!(read.same_partition(&assignment));
        let mut b = BinaryMatrix::zeros(4);
        b.set(0, 2, true);
        b.set(3, 3, true);
        assert_eq!(components_assignment(&b).labels(), &[1, 0, 1, 2]);
    }

    #[test]
    fn zero_matrix_is_all_outliers() {
        let got = is_cluster_matrix(&Matrix::zeros(3, 3), 1e-6).unwrap();
        assert_eq!(got.labels(), &[0, 0, 0]);
        assert_eq!(got.r(), 0);
    }

    #[test]
    fn perturbed_entry_is_not_a_cluster_matrix() {
        let tol = 1e-3;
        let mut y = two_blocks().to_matrix();
        y[(0, 1)] -= 2.0 * tol;
        assert!(is_cluster_matrix(&y, tol).is_none());
        let mut y = two_blocks().to_matrix();
        y[(0, 1)] -= 0.5 * tol;
        assert!(is_cluster_matrix(&y, tol).is_some());
    }

    #[test]
    fn incomplete_block_is_rejected() {
        // Path 0-1-2: connected but not a clique.
        let y = Matrix::from_fn(3, 3, |i, j| if (i as i64 - j as i64).abs() <= 1 { 1.0 } else { 0.0 });
        assert!(is_cluster_matrix(&y, 1e-6).is_none());
    }

    #[test]
    fn round_by_mean_cases() {
        let y = two_blocks().to_matrix();
        assert_eq!(&round_by_mean(&y), two_blocks().as_binary());
        let constant = Matrix::full(4, 4, 0.3);
        assert_eq!(round_by_mean(&constant).count_ones(), 0);
    }

    #[test]
    fn round_by_mean_recovers_noisy_truth() {
        let truth = ClusterAssignment::from_sizes(&[50, 50], 0).unwrap().cluster_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut y = truth.to_matrix();
        for j in 0..100 {
            for i in 0..100 {
                y[(i, j)] += rng.random_range(-0.05..=0.05);
            }
        }
        let rounded = round_by_mean(&y);
        assert_eq!(misclassified_pairs(&truth, &rounded).unwrap(), 0);
    }

    #[test]
    fn misclassified_pair_counts() {
        let truth = two_blocks();
        assert_eq!(misclassified_pairs(&truth, truth.as_binary()).unwrap(), 0);
        let mut est = truth.as_binary().clone();
        est.set(0, 2, true);
        est.set(2, 0, true);
        assert_eq!(misclassified_pairs(&truth, &est).unwrap(), 2);
        let truth = ClusterAssignment::from_sizes(&[3, 3, 3], 0).unwrap().cluster_matrix();
        assert_eq!(misclassified_pairs(&truth, &BinaryMatrix::zeros(9)).unwrap(), 3 * 9);
        assert!(misclassified_pairs(&truth, &BinaryMatrix::zeros(4)).is_err());
    }

    #[test]
    fn success_threshold_is_strict() {
        // 0.001 * 316^2 = 99.856
        assert!(is_success(99, 316));
        assert!(!is_success(100, 316));
        assert!(!is_success(160, 400));
        assert!(is_success(159, 400));
    }

    #[test]
    fn assignment_validation() {
        assert!(ClusterAssignment::new(vec![1, 3, 3]).is_err());
        let a = ClusterAssignment::new(vec![2, 2, 0, 1]).unwrap();
        assert_eq!(a.r(), 2);
        assert_eq!(a.sizes(), vec![1, 2]);
        assert_eq!(a.canonical().labels(), &[1, 1, 0, 2]);
        assert!(a.same_partition(&ClusterAssignment::new(vec![1, 1, 0, 2]).unwrap()));
        assert!(!a.same_partition(&ClusterAssignment::new(vec![1, 1, 2, 0]).unwrap()));
    }

    fn arb_labels() -> impl Strategy<Value = Vec<usize>> {
        (1usize..5).prop_flat_map(|r| proptest::collection::vec(0..=r, 1..30))
    }

    fn compact(labels: Vec<usize>) -> ClusterAssignment {
        let mut used: Vec<usize> = labels.iter().copied().filter(|&l| l != 0).collect();
        used.sort_unstable();
        used.dedup();
        let relabeled = labels
            .iter()
            .map(|&l| if l == 0 { 0 } else { used.binary_search(&l).unwrap() + 1 })
            .collect();
        ClusterAssignment::new(relabeled).unwrap()
    }

    fn arb_adjacency(n: usize) -> impl Strategy<Value = Adjacency> {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut a = Adjacency::empty(n);
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    a.set_edge(i, j, bits[k]);
                    k += 1;
                }
            }
            a
        })
    }

    proptest! {
        #[test]
        fn cluster_matrix_round_trips(labels in arb_labels()) {
            let assignment = compact(labels);
            let y = assignment.cluster_matrix();
            let recovered = is_cluster_matrix(&y.to_matrix(), 1e-9).unwrap();
            prop_assert!(recovered.same_partition(&assignment));
            prop_assert_eq!(y.assignment().canonical(), assignment.canonical());
        }

        #[test]
        fn adversary_only_edits_aligned_pairs(
            a in arb_adjacency(14),
            labels in proptest::collection::vec(0usize..3, 14),
            add in 0.0f64..=1.0,
            remove in 0.0f64..=1.0,
            seed in any::<u64>(),
            homophily in any::<bool>(),
        ) {
            let truth = compact(labels).cluster_matrix();
            let spec = AdversarySpec::new(add, remove, seed).unwrap();
            let out = apply_adversary(&a, &truth, &spec, homophily).unwrap();
            prop_assert!(out.as_binary().is_symmetric());
            for i in 0..14 {
                prop_assert!(out.get(i, i));
                for j in 0..14 {
                    if out.get(i, j) != a.get(i, j) {
                        // Added edges point along the structure, removed ones against it.
                        prop_assert_eq!(out.get(i, j), truth.get(i, j) == homophily);
                    }
                }
            }
        }

        #[test]
        fn misclassified_pairs_is_a_metric(
            x in proptest::collection::vec(any::<bool>(), 36),
            y in proptest::collection::vec(any::<bool>(), 36),
            z in proptest::collection::vec(any::<bool>(), 36),
        ) {
            let m = |v: &Vec<bool>| BinaryMatrix::from_fn(6, |i, j| v[6 * i + j]);
            let (x, y, z) = (m(&x), m(&y), m(&z));
            let d = |a: &BinaryMatrix, b: &BinaryMatrix| a.l1_distance(b).unwrap();
            prop_assert_eq!(d(&x, &y), d(&y, &x));
            prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
            prop_assert_eq!(d(&x, &x), 0);
        }

        #[test]
        fn complement_is_an_involution(a in arb_adjacency(9)) {
            let c = complement_graph(&a);
            prop_assert!(c.as_binary().is_symmetric());
            prop_assert!((0..9).all(|i| c.get(i, i)));
            prop_assert_eq!(complement_graph(&c), a);
        }
    }
}
