//! Comparison methods: single linkage on adjacency rows, spectral
//! embedding followed by single linkage, and the unweighted low-rank plus
//! sparse decomposition.

use serde::{Deserialize, Serialize};

use crate::alm::{solve_weighted, SolveResult, SolverConfig};
use crate::error::{Error, Result};
use crate::graphmodel::{round_by_mean, Adjacency, BinaryMatrix, ClusterAssignment};
use crate::linalg::{self, Matrix};
use crate::objective::make_weights;

pub const DEFAULT_LRPS_LAMBDA_SCALE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Slink,
    Spectral,
    Lrps,
}

impl BaselineMethod {
    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Slink => "slink",
            BaselineMethod::Spectral => "spectral",
            BaselineMethod::Lrps => "lrps",
        }
    }
}

impl std::str::FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slink" => Ok(BaselineMethod::Slink),
            "spectral" => Ok(BaselineMethod::Spectral),
            "lrps" => Ok(BaselineMethod::Lrps),
            other => Err(Error::params(format!("unknown baseline method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    /// Number of clusters for the linkage-based methods.
    pub r: usize,
    pub lrps_lambda_scale: f64,
}

impl BaselineConfig {
    pub fn new(method: BaselineMethod, r: usize) -> Self {
        Self { method, r, lrps_lambda_scale: DEFAULT_LRPS_LAMBDA_SCALE }
    }
}

#[derive(Debug, Clone)]
pub enum BaselineOutput {
    Partition(ClusterAssignment),
    Decomposition(SolveResult),
}

impl BaselineOutput {
    /// Binary co-membership estimate: the cluster matrix of a partition, or
    /// the mean-rounded low-rank part of a decomposition.
    pub fn estimate(&self) -> BinaryMatrix {
        match self {
            BaselineOutput::Partition(assignment) => assignment.cluster_matrix().as_binary().clone(),
            BaselineOutput::Decomposition(result) => round_by_mean(&result.y_hat),
        }
    }
}

/// Runs `cfg.method` on `a`. `solver` supplies the iteration controls for
/// the decomposition method; its weights are ignored.
pub fn run_baseline(a: &Adjacency, cfg: &BaselineConfig, solver: Option<&SolverConfig>) -> Result<BaselineOutput> {
    match cfg.method {
        BaselineMethod::Slink => Ok(BaselineOutput::Partition(slink(a, cfg.r)?)),
        BaselineMethod::Spectral => Ok(BaselineOutput::Partition(spectral_cluster(a, cfg.r)?)),
        BaselineMethod::Lrps => {
            let default;
            let controls = match solver {
                Some(s) => s,
                None => {
                    default = SolverConfig::new(make_weights(0.5, a.n(), 1.0)?);
                    &default
                }
            };
            Ok(BaselineOutput::Decomposition(lrps(a, cfg.lrps_lambda_scale, controls)?))
        }
    }
}

fn check_r(n: usize, r: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::params(format!("number of clusters must lie in 1..={n}, got {r}")));
    }
    Ok(())
}

/// Single-linkage agglomeration of `n` points under `dist`, stopped at `r`
/// clusters. Equivalent to Kruskal's algorithm on pairs ordered by
/// `(distance, i, j)`: among tied closest pairs the lexicographically
/// smallest `(i, j)` merges first. Labels are `1..=r` in order of first
/// appearance.
pub fn single_linkage<D, F>(n: usize, r: usize, mut dist: F) -> Result<ClusterAssignment>
where
    D: PartialOrd + Copy,
    F: FnMut(usize, usize) -> D,
{
    check_r(n, r)?;
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((dist(i, j), i, j));
        }
    }
    pairs.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(_, i, j) in &pairs {
        if components == r {
            break;
        }
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
            components -= 1;
        }
    }

    let mut label_of_root = vec![0usize; n];
    let mut next = 0;
    let mut labels = vec![0usize; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if label_of_root[root] == 0 {
            next += 1;
            label_of_root[root] = next;
        }
        labels[i] = label_of_root[root];
    }
    ClusterAssignment::new(labels)
}

/// Single linkage on the rows of the adjacency (unit diagonal included)
/// under the L1 distance, which for binary rows is the Hamming distance.
pub fn slink(a: &Adjacency, r: usize) -> Result<ClusterAssignment> {
    let n = a.n();
    let rows: Vec<&[bool]> = (0..n).map(|i| a.row(i)).collect();
    single_linkage(n, r, |i, j| rows[i].iter().zip(rows[j]).filter(|(x, y)| x != y).count())
}

/// Embeds each node as its row of the top-`r` left singular vectors of `A`
/// and runs single linkage on those rows under the L1 distance.
pub fn spectral_cluster(a: &Adjacency, r: usize) -> Result<ClusterAssignment> {
    let n = a.n();
    check_r(n, r)?;
    let (u, _, _) = linalg::svd(&a.to_matrix())?;
    let embedding = Matrix::from_fn(n, r, |i, c| u[(i, c)]);
    single_linkage(n, r, |i, j| (0..r).map(|c| (embedding[(i, c)] - embedding[(j, c)]).abs()).sum::<f64>())
}

/// Unweighted decomposition: the ALM with `C = 11ᵀ` and `λ = scale/√n`.
/// Only the iteration controls of `controls` are used.
pub fn lrps(a: &Adjacency, scale: f64, controls: &SolverConfig) -> Result<SolveResult> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::params(format!("lambda scale = {scale} must be positive")));
    }
    let n = a.n();
    let c = Matrix::full(n, n, 1.0);
    solve_weighted(a, &c, scale / (n as f64).sqrt(), controls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alm::solve;
    use crate::graphmodel::{generate_gsbm, misclassified_pairs, GsbmParams};

    fn block_graph(sizes: &[usize]) -> (Adjacency, ClusterAssignment) {
        let assignment = ClusterAssignment::from_sizes(sizes, 0).unwrap();
        let a = Adjacency::from_binary(assignment.cluster_matrix().as_binary().clone()).unwrap();
        (a, assignment)
    }

    #[test]
    fn slink_recovers_disjoint_cliques() {
        let (a, truth) = block_graph(&[6, 9]);
        assert!(slink(&a, 2).unwrap().same_partition(&truth));
    }

    #[test]
    fn slink_with_r_equal_n_keeps_singletons() {
        let inst = generate_gsbm(&GsbmParams::standard(2, 5, 0.7, 0.2).unwrap(), 1);
        let out = slink(&inst.adjacency, 10).unwrap();
        assert_eq!(out.labels(), (1..=10).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn slink_single_cluster() {
        let inst = generate_gsbm(&GsbmParams::standard(2, 5, 0.7, 0.2).unwrap(), 1);
        assert!(slink(&inst.adjacency, 1).unwrap().labels().iter().all(|&l| l == 1));
    }

    #[test]
    fn slink_rejects_bad_r() {
        assert!(slink(&Adjacency::empty(4), 0).is_err());
        assert!(slink(&Adjacency::empty(4), 5).is_err());
    }

    #[test]
    fn ties_merge_the_smallest_pair_first() {
        // Points 0..4 on a line at unit spacing: every adjacent pair ties.
        let out = single_linkage(4, 3, |i, j| (i as f64 - j as f64).abs()).unwrap();
        assert_eq!(out.labels(), &[1, 1, 2, 3]);
        let out = single_linkage(4, 2, |i, j| (i as f64 - j as f64).abs()).unwrap();
        assert_eq!(out.labels(), &[1, 1, 1, 2]);
    }

    #[test]
    fn single_linkage_chains_through_nearest_neighbours() {
        let xs = [0.0f64, 1.0, 2.0, 10.0, 10.5];
        let out = single_linkage(5, 2, |i, j| (xs[i] - xs[j]).abs()).unwrap();
        assert_eq!(out.labels(), &[1, 1, 1, 2, 2]);
    }

    #[test]
    fn spectral_recovers_noiseless_blocks() {
        for sizes in [vec![5, 7, 4], vec![20, 20], vec![3, 3, 3, 3]] {
            let (a, truth) = block_graph(&sizes);
            assert!(spectral_cluster(&a, sizes.len()).unwrap().same_partition(&truth));
        }
    }

    #[test]
    fn spectral_with_one_cluster() {
        let inst = generate_gsbm(&GsbmParams::standard(3, 6, 0.6, 0.3).unwrap(), 2);
        assert!(spectral_cluster(&inst.adjacency, 1).unwrap().labels().iter().all(|&l| l == 1));
    }

    #[test]
    fn lrps_recovers_disjoint_cliques() {
        let (a, truth) = block_graph(&[15, 15]);
        let controls = SolverConfig::new(make_weights(0.5, 30, 1.0).unwrap());
        let out = lrps(&a, 1.0, &controls).unwrap();
        assert_eq!(misclassified_pairs(&truth.cluster_matrix(), &round_by_mean(&out.y_hat)).unwrap(), 0);
    }

    #[test]
    fn lrps_matches_weighted_solver_at_half() {
        let inst = generate_gsbm(&GsbmParams::standard(2, 10, 0.7, 0.2).unwrap(), 7);
        for rho in [1.0, 2.5] {
            let cfg = SolverConfig::new(make_weights(0.5, 20, rho).unwrap());
            let weighted = solve(&inst.adjacency, &cfg).unwrap();
            let unweighted = lrps(&inst.adjacency, 1.0 / rho, &cfg).unwrap();
            assert!(linalg::max_abs_diff(&weighted.y_hat, &unweighted.y_hat) < 1e-6);
        }
    }

    #[test]
    fn run_baseline_dispatches() {
        let (a, truth) = block_graph(&[8, 8]);
        let y = truth.cluster_matrix();
        for method in [BaselineMethod::Slink, BaselineMethod::Spectral, BaselineMethod::Lrps] {
            let out = run_baseline(&a, &BaselineConfig::new(method, 2), None).unwrap();
            assert_eq!(misclassified_pairs(&y, &out.estimate()).unwrap(), 0, "{}", method.name());
            assert_eq!(method.name().parse::<BaselineMethod>().unwrap(), method);
        }
        assert!("kmeans".parse::<BaselineMethod>().is_err());
    }
}
