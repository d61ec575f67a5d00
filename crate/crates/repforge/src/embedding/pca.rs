//! Principal component analysis via Jacobi eigendecomposition of the sample
//! covariance matrix.

use crate::error::{Error, Result};

use super::StandardizationStats;

/// Fitted PCA model. Components are rows (one per retained component),
/// orthonormal, ordered by non-increasing explained variance. The sign
/// convention makes the largest-magnitude loading of each component
/// positive, so fits are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub stats: StandardizationStats,
}

/// Fit PCA on an already-standardized matrix (rows = observations).
pub fn pca_fit(x: &[Vec<f64>], n_components: usize) -> Result<PcaModel> {
    let stats = StandardizationStats {
        mean: vec![0.0; x.first().map_or(0, Vec::len)],
        std: vec![1.0; x.first().map_or(0, Vec::len)],
        constant: vec![false; x.first().map_or(0, Vec::len)],
    };
    fit_with_stats(x, n_components, stats)
}

impl PcaModel {
    /// Standardize raw features with train-split statistics, then fit.
    pub fn fit_standardizing(x: &[Vec<f64>], n_components: usize) -> Result<PcaModel> {
        let stats = StandardizationStats::fit(x)?;
        let z = stats.apply(x);
        fit_with_stats(&z, n_components, stats)
    }

    /// Project one raw row through the stored standardization and components.
    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        let z = self.stats.apply_row(row);
        self.components
            .iter()
            .map(|c| c.iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|row| self.transform_row(row)).collect()
    }

    /// Map component scores back to the standardized feature space.
    pub fn inverse_transform_row(&self, scores: &[f64]) -> Vec<f64> {
        let d = self.components[0].len();
        let mut out = vec![0.0; d];
        for (score, component) in scores.iter().zip(&self.components) {
            for (o, c) in out.iter_mut().zip(component) {
                *o += score * c;
            }
        }
        out
    }
}

fn fit_with_stats(
    x: &[Vec<f64>],
    n_components: usize,
    stats: StandardizationStats,
) -> Result<PcaModel> {
    if x.len() < 2 {
        return Err(Error::InvalidArgument("pca: need at least 2 rows".into()));
    }
    let d = x[0].len();
    if n_components == 0 || n_components > d {
        return Err(Error::InvalidArgument(format!(
            "pca: n_components {n_components} outside [1, {d}]"
        )));
    }
    for row in x {
        if row.len() != d {
            return Err(Error::InvalidArgument("pca: ragged matrix".into()));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("pca: non-finite input".into()));
        }
    }

    // sample covariance (rows are already centered by standardization, but
    // center again so pca_fit also works on raw zero-std input)
    let n = x.len() as f64;
    let mut mean = vec![0.0; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for row in x {
        let centered: Vec<f64> = row.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..d {
            for j in i..d {
                cov[i][j] += centered[i] * centered[j] / (n - 1.0);
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[i][j] = cov[j][i];
        }
    }

    let (mut eigenvalues, mut eigenvectors) = jacobi_eigen(&cov);

    // sort by descending eigenvalue
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigenvalues[b].partial_cmp(&eigenvalues[a]).unwrap());
    eigenvalues = order.iter().map(|&i| eigenvalues[i].max(0.0)).collect();
    eigenvectors = order.iter().map(|&i| eigenvectors[i].clone()).collect();

    // sign convention: largest-magnitude loading positive
    for v in &mut eigenvectors {
        let dominant = v
            .iter()
            .cloned()
            .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
            .unwrap_or(1.0);
        if dominant < 0.0 {
            for e in v.iter_mut() {
                *e = -*e;
            }
        }
    }

    Ok(PcaModel {
        components: eigenvectors.into_iter().take(n_components).collect(),
        explained_variance: eigenvalues.into_iter().take(n_components).collect(),
        stats,
    })
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors-as-rows), unsorted.
fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[p][k];
                    let vkq = v[q][k];
                    v[p][k] = c * vkp - s * vkq;
                    v[q][k] = s * vkp + c * vkq;
                }
            }
        }
    }

    let eigenvalues: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
    (eigenvalues, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn recovers_principal_axis_of_line() {
        let mut rng = crate::seeds::rng_for(5, "pca-line");
        let x: Vec<Vec<f64>> = (0..200)
            .map(|_| {
                let t: f64 = rng.gen_range(-1.0..1.0);
                let noise: f64 = rng.gen_range(-1e-3..1e-3);
                vec![t, t + noise]
            })
            .collect();
        let model = pca_fit(&x, 2).unwrap();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((model.components[0][0] - inv_sqrt2).abs() < 1e-2);
        assert!((model.components[0][1] - inv_sqrt2).abs() < 1e-2);
        let share =
            model.explained_variance[0] / model.explained_variance.iter().sum::<f64>();
        assert!(share > 0.99, "share {share}");
    }

    #[test]
    fn isotropic_variances_near_equal() {
        let mut rng = crate::seeds::rng_for(5, "pca-iso");
        let x: Vec<Vec<f64>> = (0..4000)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let model = pca_fit(&x, 2).unwrap();
        let ratio = model.explained_variance[0] / model.explained_variance[1];
        assert!(ratio < 1.15, "ratio {ratio}");
    }

    #[test]
    fn orthonormal_components_and_reconstruction() {
        let mut rng = crate::seeds::rng_for(5, "pca-recon");
        let d = 6;
        let x: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let model = PcaModel::fit_standardizing(&x, d).unwrap();
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = model.components[i]
                    .iter()
                    .zip(&model.components[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8, "({i},{j}) dot {dot}");
            }
        }
        // full-rank transform then inverse-transform reproduces the
        // standardized input
        let z = model.stats.apply(&x);
        for (row, zrow) in x.iter().zip(&z) {
            let scores = model.transform_row(row);
            let back = model.inverse_transform_row(&scores);
            for (a, b) in back.iter().zip(zrow) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        // explained variances non-increasing
        for w in model.explained_variance.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }

    #[test]
    fn transformed_training_data_is_centered_with_matching_variance() {
        let mut rng = crate::seeds::rng_for(9, "pca-var");
        let x: Vec<Vec<f64>> = (0..300)
            .map(|_| {
                let a: f64 = rng.gen_range(-3.0..3.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                vec![a, 0.3 * a + b, b - a]
            })
            .collect();
        let model = PcaModel::fit_standardizing(&x, 3).unwrap();
        let scores = model.transform(&x);
        let n = scores.len() as f64;
        for c in 0..3 {
            let mean: f64 = scores.iter().map(|s| s[c]).sum::<f64>() / n;
            assert!(mean.abs() < 1e-9, "component {c} mean {mean}");
            let var: f64 = scores.iter().map(|s| s[c] * s[c]).sum::<f64>() / (n - 1.0);
            let want = model.explained_variance[c];
            assert!((var - want).abs() < 1e-8 * want.max(1.0), "{var} vs {want}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(pca_fit(&[vec![1.0, f64::NAN]], 1).is_err());
        assert!(pca_fit(&[vec![1.0], vec![2.0]], 2).is_err());
    }
}
