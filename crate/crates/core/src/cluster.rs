//! k-means over embedding vectors with k-means++ seeding.
//!
//! Distances are squared euclidean throughout. Ties in the nearest-centroid
//! search go to the lowest cluster index.

use ndarray::{Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
    /// Stop once no centroid moves by more than this (euclidean) distance.
    pub tolerance: f64,
    pub seed: u64,
}

impl KMeansConfig {
    /// `round(sqrt(n / 2))`, at least 1.
    pub fn default_k(n: usize) -> usize {
        ((n as f64 / 2.0).sqrt().round() as usize).max(1)
    }

    pub fn for_points(n: usize, seed: u64) -> Self {
        Self {
            k: Self::default_k(n),
            max_iterations: 300,
            tolerance: 1e-6,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after every assignment step, final one included.
    pub inertia_history: Vec<f64>,
    /// Clusters left without members (only possible with duplicate points).
    pub empty_clusters: Vec<usize>,
    pub config: KMeansConfig,
}

impl ClusteringResult {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignments
            .iter()
            .enumerate()
            .filter(move |&(_, &c)| c == cluster)
            .map(|(i, _)| i)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn sq_dist(a: ArrayView1<'_, f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: ArrayView1<'_, f64>, centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Index of the nearest centroid to `point`.
pub fn assign_cluster(result: &ClusteringResult, point: &[f64]) -> Result<usize> {
    let dim = result.centroids.first().map_or(0, Vec::len);
    if point.len() != dim {
        return Err(Error::FeatureWidth {
            expected: dim,
            got: point.len(),
        });
    }
    Ok(nearest(ArrayView1::from(point), &result.centroids).0)
}

fn assign_all(points: &Array2<f64>, centroids: &[Vec<f64>]) -> Vec<(usize, f64)> {
    (0..points.nrows())
        .into_par_iter()
        .map(|i| nearest(points.row(i), centroids))
        .collect()
}

/// Neumaier-compensated sum, so centroid means do not depend on summation noise.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

fn total(xs: impl Iterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    xs.for_each(|x| acc.add(x));
    acc.value()
}

fn plus_plus_seeds(points: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.nrows();
    let first = rng.random_range(0..n);
    let mut centroids = vec![points.row(first).to_vec()];
    let mut d2: Vec<f64> = points
        .axis_iter(Axis(0))
        .map(|p| sq_dist(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let mass = total(d2.iter().copied());
        let pick = if mass > 0.0 {
            let mut target = rng.random::<f64>() * mass;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            if d2[chosen] == 0.0 {
                // rounding ran off the end; take the last point with mass
                chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick).to_vec();
        for (d, p) in d2.iter_mut().zip(points.axis_iter(Axis(0))) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd iterations from k-means++ seeds.
///
/// Runs until the largest centroid shift is at most `tolerance` or
/// `max_iterations` updates have been made. A cluster that loses all its
/// members is re-seeded at the point farthest from its assigned centroid.
/// The returned assignments are nearest-centroid with respect to the returned
/// centroids and `inertia` is computed from exactly those two.
pub fn kmeans_fit(points: &Array2<f64>, config: &KMeansConfig) -> Result<ClusteringResult> {
    let (n, dim) = points.dim();
    if config.k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if n < config.k {
        return Err(Error::TooFewPoints { n, k: config.k });
    }
    let k = config.k;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = plus_plus_seeds(points, k, &mut rng);
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < config.max_iterations {
        let assigned = assign_all(points, &centroids);
        history.push(total(assigned.iter().map(|&(_, d)| d)));

        let mut sums = vec![vec![CompensatedSum::default(); dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &(c, _)) in points.axis_iter(Axis(0)).zip(&assigned) {
            counts[c] += 1;
            for (s, &x) in sums[c].iter_mut().zip(p.iter()) {
                s.add(x);
            }
        }
        let mut updated: Vec<Vec<f64>> = sums
            .iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &m), old)| {
                if m == 0 {
                    old.clone()
                } else {
                    s.iter().map(|x| x.value() / m as f64).collect()
                }
            })
            .collect();

        // re-seed empty clusters at the worst-served points
        let mut residual: Vec<(usize, f64)> = assigned
            .iter()
            .enumerate()
            .map(|(i, &(c, _))| (i, sq_dist(points.row(i), &updated[c])))
            .collect();
        let empty: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
        for j in empty {
            let Some(&(far, d)) = residual
                .iter()
                .filter(|(i, _)| counts[assigned[*i].0] > 1)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            else {
                break;
            };
            if d <= 0.0 {
                break;
            }
            counts[assigned[far].0] -= 1;
            counts[j] += 1;
            updated[j] = points.row(far).to_vec();
            residual[far].1 = 0.0;
        }

        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| sq_dist(ArrayView1::from(a.as_slice()), b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        iterations += 1;
        if shift <= config.tolerance {
            break;
        }
    }

    let assigned = assign_all(points, &centroids);
    let inertia = total(assigned.iter().map(|&(_, d)| d));
    history.push(inertia);
    let assignments: Vec<usize> = assigned.into_iter().map(|(c, _)| c).collect();
    let mut sizes = vec![0; k];
    for &a in &assignments {
        sizes[a] += 1;
    }
    Ok(ClusteringResult {
        assignments,
        centroids,
        inertia,
        iterations_run: iterations,
        inertia_history: history,
        empty_clusters: (0..k).filter(|&j| sizes[j] == 0).collect(),
        config: *config,
    })
}

/// Best (lowest inertia) of `restarts` runs with consecutive seeds.
pub fn kmeans_best_of(
    points: &Array2<f64>,
    config: &KMeansConfig,
    restarts: usize,
) -> Result<ClusteringResult> {
    let mut best: Option<ClusteringResult> = None;
    for r in 0..restarts.max(1) as u64 {
        let run = kmeans_fit(
            points,
            &KMeansConfig {
                seed: config.seed.wrapping_add(r),
                ..*config
            },
        )?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn cfg(k: usize, seed: u64) -> KMeansConfig {
        KMeansConfig {
            k,
            max_iterations: 100,
            tolerance: 1e-9,
            seed,
        }
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let pts = array![[0.0, 1.0], [2.0, 3.0], [5.0, -1.0], [7.0, 7.0]];
        let r = kmeans_fit(&pts, &cfg(4, 3)).unwrap();
        assert_eq!(r.inertia, 0.0);
        let mut seen = r.assignments.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn k_one_is_the_mean() {
        let pts = array![[0.0, 0.0], [2.0, 0.0], [4.0, 6.0]];
        let r = kmeans_fit(&pts, &cfg(1, 0)).unwrap();
        assert!((r.centroids[0][0] - 2.0).abs() < 1e-12);
        assert!((r.centroids[0][1] - 2.0).abs() < 1e-12);
        // n * total variance = sum of squared deviations = 4+0+4 + 4+4+16
        assert!((r.inertia - 32.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        let pts = array![[0.0], [1.0]];
        assert!(matches!(
            kmeans_fit(&pts, &cfg(3, 0)),
            Err(Error::TooFewPoints { n: 2, k: 3 })
        ));
    }

    #[test]
    fn duplicates_flag_empty_clusters() {
        let pts = Array2::from_elem((5, 2), 1.0);
        let r = kmeans_fit(&pts, &cfg(3, 0)).unwrap();
        assert_eq!(r.inertia, 0.0);
        assert_eq!(r.empty_clusters.len(), 2);
        for j in 0..3 {
            assert!(r.members(j).next().is_some() || r.empty_clusters.contains(&j));
        }
    }

    #[test]
    fn assign_cluster_exact_and_ties() {
        let r = ClusteringResult {
            assignments: vec![],
            centroids: vec![vec![0.0, 0.0], vec![2.0, 0.0]],
            inertia: 0.0,
            iterations_run: 0,
            inertia_history: vec![],
            empty_clusters: vec![],
            config: cfg(2, 0),
        };
        assert_eq!(assign_cluster(&r, &[2.0, 0.0]).unwrap(), 1);
        assert_eq!(assign_cluster(&r, &[1.0, 5.0]).unwrap(), 0);
        assert!(assign_cluster(&r, &[1.0]).is_err());
    }

    #[test]
    fn default_k_heuristic() {
        assert_eq!(KMeansConfig::default_k(933), 22);
        assert_eq!(KMeansConfig::default_k(1), 1);
        assert_eq!(KMeansConfig::default_k(50), 5);
    }
}
