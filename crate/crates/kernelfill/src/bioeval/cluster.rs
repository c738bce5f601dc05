//! Kernel k-means: Lloyd iterations entirely in kernel space, with
//! k-means++-style seeding and best-of-restarts selection.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matcore::SymMatrix;

/// A clustering of samples into `k` groups. Cluster ids are arbitrary; empty
/// clusters are representable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub assignments: Vec<usize>,
    pub k: usize,
}

impl Partition {
    pub fn new(assignments: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".to_string()));
        }
        if assignments.iter().any(|&a| a >= k) {
            return Err(Error::InvalidInput(format!(
                "cluster id out of range for k = {k}"
            )));
        }
        Ok(Partition { assignments, k })
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// Diagnostics from one clustering run.
#[derive(Debug, Clone, Copy)]
pub struct KmeansStats {
    /// Final within-cluster objective of the winning restart.
    pub objective: f64,
    /// Negative squared kernel distances clamped to zero (indefinite input).
    pub negative_distance_clamps: usize,
}

struct ClusterState {
    sizes: Vec<usize>,
    /// within[j] = sum over pairs (i, i') in cluster j of K[i][i']
    within: Vec<f64>,
    /// point_to[x][j] = sum over i in cluster j of K[x][i]
    point_to: Vec<Vec<f64>>,
    clamps: usize,
}

impl ClusterState {
    fn compute(k_mat: &SymMatrix, assignments: &[usize], k: usize) -> Self {
        let d = k_mat.dim();
        let mut sizes = vec![0usize; k];
        let mut within = vec![0.0; k];
        let mut point_to = vec![vec![0.0; k]; d];
        for &a in assignments {
            sizes[a] += 1;
        }
        for x in 0..d {
            for i in 0..d {
                point_to[x][assignments[i]] += k_mat.get(x, i);
            }
        }
        for (i, &a) in assignments.iter().enumerate() {
            within[a] += point_to[i][a];
        }
        ClusterState {
            sizes,
            within,
            point_to,
            clamps: 0,
        }
    }

    /// Squared kernel distance from point `x` to the centroid of cluster `j`.
    fn distance_sq(&mut self, k_mat: &SymMatrix, x: usize, j: usize) -> Option<f64> {
        let size = self.sizes[j];
        if size == 0 {
            return None;
        }
        let s = size as f64;
        let d2 = k_mat.get(x, x) - 2.0 * self.point_to[x][j] / s + self.within[j] / (s * s);
        if d2 < 0.0 {
            self.clamps += 1;
            Some(0.0)
        } else {
            Some(d2)
        }
    }
}

fn lloyd(k_mat: &SymMatrix, k: usize, initial: Vec<usize>) -> (Vec<usize>, f64, usize) {
    const MAX_ROUNDS: usize = 100;
    let d = k_mat.dim();
    let mut assignments = initial;
    let mut clamps = 0usize;
    let mut previous_objective = f64::INFINITY;
    for _round in 0..MAX_ROUNDS {
        let mut state = ClusterState::compute(k_mat, &assignments, k);
        let mut next = vec![0usize; d];
        for x in 0..d {
            let mut best = (f64::INFINITY, 0usize);
            for j in 0..k {
                if let Some(d2) = state.distance_sq(k_mat, x, j) {
                    if d2 < best.0 {
                        best = (d2, j);
                    }
                }
            }
            next[x] = best.1;
        }
        clamps += state.clamps;

        // Keep k clusters populated: hand each empty cluster the globally
        // farthest point whose donor keeps at least one member.
        let mut refilled = false;
        loop {
            let mut stats = ClusterState::compute(k_mat, &next, k);
            let empty = (0..k).find(|&j| stats.sizes[j] == 0);
            let Some(j_empty) = empty else { break };
            let mut farthest: Option<(f64, usize)> = None;
            for x in 0..d {
                let home = next[x];
                if stats.sizes[home] < 2 {
                    continue;
                }
                if let Some(d2) = stats.distance_sq(k_mat, x, home) {
                    if farthest.is_none_or(|(best, _)| d2 > best) {
                        farthest = Some((d2, x));
                    }
                }
            }
            clamps += stats.clamps;
            match farthest {
                Some((_, x)) => {
                    next[x] = j_empty;
                    refilled = true;
                }
                None => break,
            }
        }

        let mut state = ClusterState::compute(k_mat, &next, k);
        let objective: f64 = (0..d)
            .map(|x| state.distance_sq(k_mat, x, next[x]).unwrap_or(0.0))
            .sum();
        clamps += state.clamps;
        if !refilled {
            debug_assert!(
                objective <= previous_objective + 1e-9,
                "Lloyd objective increased: {previous_objective} -> {objective}"
            );
        }
        let converged = next == assignments;
        assignments = next;
        previous_objective = objective;
        if converged {
            break;
        }
    }
    (assignments, previous_objective, clamps)
}

fn seed_centers(k_mat: &SymMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let d = k_mat.dim();
    let mut centers = Vec::with_capacity(k);
    centers.push(rng.random_range(0..d));
    while centers.len() < k {
        // Weight by kernel distance to the nearest chosen center.
        let weights: Vec<f64> = (0..d)
            .map(|x| {
                if centers.contains(&x) {
                    return 0.0;
                }
                centers
                    .iter()
                    .map(|&c| {
                        let d2 = k_mat.get(x, x) - 2.0 * k_mat.get(x, c) + k_mat.get(c, c);
                        d2.max(0.0)
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = d - 1;
            for (x, &w) in weights.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                target -= w;
                if target <= 0.0 {
                    chosen = x;
                    break;
                }
            }
            chosen
        } else {
            // All distances zero (duplicate points): pick the first unused.
            (0..d).find(|x| !centers.contains(x)).unwrap_or(0)
        };
        if centers.contains(&next) {
            // Degenerate weight walk; fall back to first unused index.
            if let Some(x) = (0..d).find(|x| !centers.contains(x)) {
                centers.push(x);
            } else {
                break;
            }
        } else {
            centers.push(next);
        }
    }
    centers
}

/// Kernel k-means with diagnostics. Deterministic for a fixed seed: restart
/// `r` uses seed `seed + r`, the best objective wins, and ties go to the
/// earliest restart.
pub fn kernel_kmeans_detailed(
    k_mat: &SymMatrix,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<(Partition, KmeansStats)> {
    let d = k_mat.dim();
    if k == 0 || k > d {
        return Err(Error::InvalidInput(format!(
            "k = {k} out of range for {d} samples"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidInput("need at least one restart".to_string()));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut clamps_total = 0usize;
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let centers = seed_centers(k_mat, k, &mut rng);
        let initial: Vec<usize> = (0..d)
            .map(|x| {
                let mut choice = (f64::INFINITY, 0usize);
                for (j, &c) in centers.iter().enumerate() {
                    let d2 = (k_mat.get(x, x) - 2.0 * k_mat.get(x, c) + k_mat.get(c, c)).max(0.0);
                    if d2 < choice.0 {
                        choice = (d2, j);
                    }
                }
                choice.1
            })
            .collect();
        let (assignments, objective, clamps) = lloyd(k_mat, k, initial);
        clamps_total += clamps;
        if best.as_ref().is_none_or(|(b, _)| objective < *b) {
            best = Some((objective, assignments));
        }
    }
    let (objective, assignments) = best.expect("at least one restart ran");
    Ok((
        Partition::new(assignments, k)?,
        KmeansStats {
            objective,
            negative_distance_clamps: clamps_total,
        },
    ))
}

/// Kernel k-means clustering of the rows of a kernel matrix.
pub fn kernel_kmeans(k_mat: &SymMatrix, k: usize, seed: u64, restarts: usize) -> Result<Partition> {
    kernel_kmeans_detailed(k_mat, k, seed, restarts).map(|(p, _)| p)
}
