//! Dimensionality reduction, clustering, cluster-count selection, and
//! minority oversampling — the machinery behind the EMG label pipeline.
//!
//! The label construction path is: standardize EMG features → PCA for the
//! continuous PC1/PC2 labels, and t-SNE → k-means (k chosen by silhouette)
//! for the categorical label. DBSCAN exists only as a reportable comparison
//! path; SMOTE balances classifier training data.

mod dbscan;
mod kmeans;
mod pca;
mod smote;
mod tsne;

pub use dbscan::dbscan;
pub use kmeans::{kmeans, KmeansResult};
pub use pca::{pca_fit, PcaModel};
pub use smote::smote;
pub use tsne::{tsne_embed, TsneParams};

use crate::error::{Error, Result};

/// Per-feature mean and standard deviation fitted on a training split.
///
/// Constant features (zero std) are flagged and passed through as 0 after
/// centering instead of dividing by zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
}

impl StandardizationStats {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidArgument("standardize: empty matrix".into()));
        }
        let d = x[0].len();
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            if row.len() != d {
                return Err(Error::InvalidArgument("standardize: ragged matrix".into()));
            }
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let mut std = Vec::with_capacity(d);
        let mut constant = Vec::with_capacity(d);
        for s in var {
            let sd = (s / n).sqrt();
            constant.push(sd == 0.0);
            std.push(if sd == 0.0 { 1.0 } else { sd });
        }
        Ok(StandardizationStats {
            mean,
            std,
            constant,
        })
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| {
                if self.constant[j] {
                    0.0
                } else {
                    (v - self.mean[j]) / self.std[j]
                }
            })
            .collect()
    }

    pub fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|row| self.apply_row(row)).collect()
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mean silhouette coefficient over all points; singleton clusters
/// contribute 0 for their lone member.
pub fn silhouette_score(x: &[Vec<f64>], assignments: &[usize]) -> Result<f64> {
    if x.len() != assignments.len() || x.is_empty() {
        return Err(Error::InvalidArgument("silhouette: length mismatch".into()));
    }
    let k = assignments.iter().max().map(|m| m + 1).unwrap_or(0);
    let mut counts = vec![0usize; k];
    for &a in assignments {
        counts[a] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::InvalidArgument(
            "silhouette: need at least 2 clusters".into(),
        ));
    }
    let n = x.len();
    let mut total = 0.0;
    for i in 0..n {
        let own = assignments[i];
        if counts[own] == 1 {
            continue; // singleton contributes 0
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if i != j {
                sums[assignments[j]] += squared_distance(&x[i], &x[j]).sqrt();
            }
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    Ok(total / n as f64)
}

/// Pick the cluster count maximizing the silhouette of a k-means clustering
/// over `k_range` (inclusive); ties break toward smaller k.
pub fn select_k(
    x: &[Vec<f64>],
    k_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<usize> {
    if k_range.is_empty() {
        return Err(Error::InvalidArgument("select_k: empty range".into()));
    }
    let mut best_k = None;
    let mut best_score = f64::NEG_INFINITY;
    for k in k_range {
        let result = kmeans(x, k, 10, seed)?;
        let score = silhouette_score(x, &result.assignments)?;
        if score > best_score {
            best_score = score;
            best_k = Some(k);
        }
    }
    Ok(best_k.unwrap())
}

#[cfg(test)]
pub(crate) mod test_support {
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    /// Isotropic Gaussian blobs with known membership.
    pub fn blobs(
        rng: &mut ChaCha8Rng,
        centers: &[Vec<f64>],
        per_blob: usize,
        spread: f64,
    ) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut x = Vec::new();
        let mut labels = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..per_blob {
                let point: Vec<f64> = center
                    .iter()
                    .map(|m| {
                        // Box-Muller
                        let u1: f64 = rng.gen_range(1e-12..1.0);
                        let u2: f64 = rng.gen_range(0.0..1.0);
                        let z =
                            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                        m + spread * z
                    })
                    .collect();
                x.push(point);
                labels.push(c);
            }
        }
        (x, labels)
    }

    /// Adjusted Rand index between two labelings.
    pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len();
        let ka = a.iter().max().unwrap() + 1;
        let kb = b.iter().max().unwrap() + 1;
        let mut table = vec![vec![0u64; kb]; ka];
        for (&x, &y) in a.iter().zip(b) {
            table[x][y] += 1;
        }
        let comb2 = |v: u64| (v * v.saturating_sub(1)) as f64 / 2.0;
        let sum_ij: f64 = table.iter().flatten().map(|&v| comb2(v)).sum();
        let sum_a: f64 = table
            .iter()
            .map(|row| comb2(row.iter().sum::<u64>()))
            .sum();
        let sum_b: f64 = (0..kb)
            .map(|j| comb2(table.iter().map(|row| row[j]).sum::<u64>()))
            .sum();
        let total = comb2(n as u64);
        let expected = sum_a * sum_b / total;
        let max_index = 0.5 * (sum_a + sum_b);
        (sum_ij - expected) / (max_index - expected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_flags_constant_features() {
        let x = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]];
        let stats = StandardizationStats::fit(&x).unwrap();
        assert!(!stats.constant[0]);
        assert!(stats.constant[1]);
        let z = stats.apply(&x);
        for row in &z {
            assert_eq!(row[1], 0.0);
        }
        let mean0: f64 = z.iter().map(|r| r[0]).sum::<f64>() / 3.0;
        assert!(mean0.abs() < 1e-12);
    }

    #[test]
    fn silhouette_two_tight_pairs() {
        // two far-apart pairs; hand-checkable geometry
        let x = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![10.0, 0.0],
            vec![10.1, 0.0],
        ];
        let good = silhouette_score(&x, &[0, 0, 1, 1]).unwrap();
        assert!(good > 0.9, "score {good}");

        let crossed = silhouette_score(&x, &[0, 1, 0, 1]).unwrap();
        assert!(crossed < 0.0, "score {crossed}");
    }

    #[test]
    fn silhouette_random_labels_near_zero() {
        use rand::Rng;
        let mut rng = crate::seeds::rng_for(11, "silhouette-random");
        let x: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let labels: Vec<usize> = (0..200).map(|_| rng.gen_range(0..2)).collect();
        let score = silhouette_score(&x, &labels).unwrap();
        assert!(score.abs() < 0.1, "score {score}");
    }

    #[test]
    fn silhouette_rejects_single_cluster() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(silhouette_score(&x, &[0, 0]).is_err());
    }

    #[test]
    fn select_k_recovers_planted_blobs() {
        let mut rng = crate::seeds::rng_for(3, "select-k");
        let centers4 = vec![
            vec![0.0, 0.0],
            vec![10.0, 0.0],
            vec![0.0, 10.0],
            vec![10.0, 10.0],
        ];
        let (x, _) = test_support::blobs(&mut rng, &centers4, 30, 0.5);
        assert_eq!(select_k(&x, 2..=8, 17).unwrap(), 4);

        let centers2 = vec![vec![0.0, 0.0], vec![12.0, 0.0]];
        let (x, _) = test_support::blobs(&mut rng, &centers2, 40, 0.5);
        assert_eq!(select_k(&x, 2..=8, 17).unwrap(), 2);
    }
}
