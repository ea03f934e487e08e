//! Independent reference implementations ("oracles") used to cross-check
//! the production code paths.
//!
//! These deliberately avoid the crate's own numerics: the posterior oracle
//! assembles the normal equations in plain nested `Vec`s and inverts them
//! by Gauss–Jordan elimination (the production path factorizes instead of
//! inverting), the equivalence oracle is a from-scratch union–find over
//! interned strings, and the clustering oracle re-runs average linkage with
//! its own bookkeeping.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use sbmlkit::balance::BalancingProblem;
use sbmlkit::expr::Expression;

/// Posterior computed by explicit dense inversion.
#[derive(Debug, Clone)]
pub struct DensePosterior {
    /// Posterior mean for every row of the dependence matrix (basics first,
    /// then derived), on the internal scale.
    pub mean: Vec<f64>,
    /// Posterior covariance over the basic quantities.
    pub cov: Vec<Vec<f64>>,
    /// Posterior standard deviation per dependence-matrix row.
    pub std: Vec<f64>,
}

/// Invert a square matrix by Gauss–Jordan elimination with partial
/// pivoting. Returns `None` when a pivot collapses (singular input).
pub fn invert_gauss_jordan(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut work: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (i, row) in a.iter().enumerate() {
        assert_eq!(row.len(), n, "matrix must be square");
        let mut aug = Vec::with_capacity(2 * n);
        aug.extend_from_slice(row);
        aug.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
        work.push(aug);
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| work[p][col].abs().total_cmp(&work[q][col].abs()))
            .unwrap();
        if work[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        work.swap(col, pivot_row);
        let pivot = work[col][col];
        for x in &mut work[col] {
            *x /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = work[row][col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..2 * n {
                work[row][k] -= factor * work[col][k];
            }
        }
    }
    Some(work.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Compute the posterior of a balancing problem by direct evaluation of
/// (Σ₀⁻¹ + QᵀΣy⁻¹Q)⁻¹, using only `Vec` arithmetic.
pub fn dense_posterior(p: &BalancingProblem) -> Option<DensePosterior> {
    let n = p.basics.len();
    let rows = p.q_matrix.nrows();
    let q: Vec<Vec<f64>> = (0..rows)
        .map(|r| (0..n).map(|c| p.q_matrix[(r, c)]).collect())
        .collect();

    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        let w = 1.0 / (p.prior_std[i] * p.prior_std[i]);
        a[i][i] += w;
        b[i] += w * p.prior_mean[i];
    }
    for obs in p.data.iter().chain(p.pseudo.iter()) {
        let r = p
            .row_index(&obs.instance)
            .expect("observation instance must be in the catalog");
        let w = 1.0 / (obs.std * obs.std);
        for i in 0..n {
            if q[r][i] == 0.0 {
                continue;
            }
            b[i] += w * obs.value * q[r][i];
            for j in 0..n {
                a[i][j] += w * q[r][i] * q[r][j];
            }
        }
    }

    let cov = invert_gauss_jordan(&a)?;
    let mean_basic: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| cov[i][j] * b[j]).sum())
        .collect();
    let mean: Vec<f64> = q
        .iter()
        .map(|row| row.iter().zip(&mean_basic).map(|(x, m)| x * m).sum())
        .collect();
    let std: Vec<f64> = q
        .iter()
        .map(|row| {
            let mut var = 0.0;
            for i in 0..n {
                if row[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    var += row[i] * cov[i][j] * row[j];
                }
            }
            var.max(0.0).sqrt()
        })
        .collect();
    Some(DensePosterior { mean, cov, std })
}

/// Relative difference normalized by the larger magnitude (floored at 1),
/// suitable for "matches to relative tolerance" assertions.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Classic array-based union–find with path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Transitive closure of a pair list: the partition of every mentioned
/// string into equivalence classes.
pub fn closure_classes(pairs: &[(String, String)]) -> BTreeSet<BTreeSet<String>> {
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for (a, b) in pairs {
        let next = ids.len();
        ids.entry(a).or_insert(next);
        let next = ids.len();
        ids.entry(b).or_insert(next);
    }
    let mut uf = UnionFind::new(ids.len());
    for (a, b) in pairs {
        uf.union(ids[a.as_str()], ids[b.as_str()]);
    }
    let mut classes: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (name, &id) in &ids {
        classes.entry(uf.find(id)).or_default().insert((*name).to_string());
    }
    classes.into_values().collect()
}

/// Reference agglomerative average-linkage clustering over a precomputed
/// similarity matrix (`sim[i * n + j]`). Returns one cluster id per node,
/// ids contiguous in order of each cluster's smallest member. Merging
/// continues while the best average similarity is at least `threshold`;
/// ties keep the earliest pair in scan order.
pub fn reference_partition(n: usize, sim: &[f64], threshold: f64) -> Vec<usize> {
    assert_eq!(sim.len(), n * n, "similarity matrix must be n x n");
    if n == 0 {
        return Vec::new();
    }
    let mut groups: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
    loop {
        let mut best_pair = None;
        let mut best_avg = f64::NEG_INFINITY;
        for a in 0..groups.len() {
            for b in (a + 1)..groups.len() {
                let mut total = 0.0;
                for &x in &groups[a] {
                    for &y in &groups[b] {
                        total += sim[x * n + y];
                    }
                }
                let avg = total / (groups[a].len() * groups[b].len()) as f64;
                if avg > best_avg {
                    best_avg = avg;
                    best_pair = Some((a, b));
                }
            }
        }
        match best_pair {
            Some((a, b)) if best_avg >= threshold => {
                let absorbed = groups.remove(b);
                groups[a].extend(absorbed);
            }
            _ => break,
        }
    }
    groups.sort_by_key(|g| *g.first().unwrap());
    let mut assignment = vec![0; n];
    for (cid, group) in groups.iter().enumerate() {
        for &node in group {
            assignment[node] = cid;
        }
    }
    assignment
}

/// Straight recursive expression evaluation, written separately from the
/// production evaluator. `None` on unbound symbols.
pub fn eval_reference(e: &Expression, env: &BTreeMap<String, f64>) -> Option<f64> {
    Some(match e {
        Expression::Number(v) => *v,
        Expression::Symbol(s) => *env.get(s)?,
        Expression::Add(a, b) => eval_reference(a, env)? + eval_reference(b, env)?,
        Expression::Sub(a, b) => eval_reference(a, env)? - eval_reference(b, env)?,
        Expression::Mul(a, b) => eval_reference(a, env)? * eval_reference(b, env)?,
        Expression::Div(a, b) => eval_reference(a, env)? / eval_reference(b, env)?,
        Expression::Pow(a, b) => eval_reference(a, env)?.powf(eval_reference(b, env)?),
        Expression::Neg(a) => -eval_reference(a, env)?,
    })
}
