//! DBSCAN density clustering. Kept as a reportable comparison path; the
//! label pipeline itself uses k-means.

use crate::error::{Error, Result};

use super::squared_distance;

pub const NOISE: i64 = -1;

/// Standard density-reachability clustering. Returns one label per point;
/// noise points get [`NOISE`].
pub fn dbscan(x: &[Vec<f64>], eps: f64, min_pts: usize) -> Result<Vec<i64>> {
    if eps <= 0.0 {
        return Err(Error::InvalidArgument("dbscan: eps must be > 0".into()));
    }
    if min_pts < 1 {
        return Err(Error::InvalidArgument("dbscan: min_pts must be ≥ 1".into()));
    }
    let n = x.len();
    let eps2 = eps * eps;
    let neighbors = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| j != i && squared_distance(&x[i], &x[j]) <= eps2)
            .collect()
    };

    const UNVISITED: i64 = -2;
    let mut labels = vec![UNVISITED; n];
    let mut cluster = 0i64;
    for i in 0..n {
        if labels[i] != UNVISITED {
            continue;
        }
        let seed_neighbors = neighbors(i);
        if seed_neighbors.len() + 1 < min_pts {
            labels[i] = NOISE;
            continue;
        }
        labels[i] = cluster;
        let mut queue = seed_neighbors;
        let mut head = 0;
        while head < queue.len() {
            let j = queue[head];
            head += 1;
            if labels[j] == NOISE {
                labels[j] = cluster; // border point
            }
            if labels[j] != UNVISITED {
                continue;
            }
            labels[j] = cluster;
            let jn = neighbors(j);
            if jn.len() + 1 >= min_pts {
                queue.extend(jn);
            }
        }
        cluster += 1;
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::test_support::blobs;

    #[test]
    fn two_dense_blobs_no_noise() {
        let mut rng = crate::seeds::rng_for(4, "dbscan-blobs");
        let (x, truth) = blobs(&mut rng, &[vec![0.0, 0.0], vec![10.0, 0.0]], 50, 0.3);
        let labels = dbscan(&x, 1.5, 4).unwrap();
        assert!(!labels.contains(&NOISE));
        let clusters: std::collections::BTreeSet<i64> = labels.iter().copied().collect();
        assert_eq!(clusters.len(), 2);
        // membership matches the planted blobs
        for (i, &l) in labels.iter().enumerate() {
            for (j, &m) in labels.iter().enumerate() {
                assert_eq!(truth[i] == truth[j], l == m, "points {i},{j}");
            }
        }
    }

    #[test]
    fn sparse_scatter_is_all_noise() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![10.0 * i as f64, 0.0]).collect();
        let labels = dbscan(&x, 0.5, 2).unwrap();
        assert!(labels.iter().all(|&l| l == NOISE));
    }

    #[test]
    fn single_dense_cluster() {
        let mut rng = crate::seeds::rng_for(4, "dbscan-one");
        let (x, _) = blobs(&mut rng, &[vec![0.0, 0.0]], 60, 0.3);
        let labels = dbscan(&x, 1.5, 4).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn rejects_bad_params() {
        let x = vec![vec![0.0]];
        assert!(dbscan(&x, 0.0, 2).is_err());
        assert!(dbscan(&x, 1.0, 0).is_err());
    }
}
