//! Synthetic minority oversampling. Each synthetic point lies on the
//! segment between a minority sample and one of its k nearest same-class
//! neighbors, so class diversity is preserved without duplicating rows.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds::rng_for;

use super::squared_distance;

/// Oversample every minority class up to the majority count.
///
/// Originals are preserved verbatim and come first in the output, in input
/// order; synthetic rows follow. Deterministic under `seed`.
pub fn smote(
    x: &[Vec<f64>],
    labels: &[usize],
    k_neighbors: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    if x.len() != labels.len() || x.is_empty() {
        return Err(Error::InvalidArgument("smote: length mismatch".into()));
    }
    if k_neighbors < 1 {
        return Err(Error::InvalidArgument("smote: k_neighbors must be ≥ 1".into()));
    }

    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &label) in labels.iter().enumerate() {
        by_class.entry(label).or_default().push(i);
    }
    let majority = by_class.values().map(Vec::len).max().unwrap();
    for (&label, members) in &by_class {
        if members.len() < majority && members.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "smote: class {label} has a single member, cannot interpolate"
            )));
        }
    }

    let mut out_x = x.to_vec();
    let mut out_labels = labels.to_vec();
    let mut rng = rng_for(seed, "smote");

    for (&label, members) in &by_class {
        let deficit = majority - members.len();
        if deficit == 0 {
            continue;
        }
        let k = k_neighbors.min(members.len() - 1);

        // k nearest same-class neighbors of each member
        let neighbor_lists: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let mut others: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (squared_distance(&x[i], &x[j]), j))
                    .collect();
                others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                others.into_iter().take(k).map(|(_, j)| j).collect()
            })
            .collect();

        for _ in 0..deficit {
            let pick = rng.gen_range(0..members.len());
            let base = &x[members[pick]];
            let neighbor = &x[neighbor_lists[pick][rng.gen_range(0..k)]];
            let u: f64 = rng.gen_range(0.0..1.0);
            let synthetic: Vec<f64> = base
                .iter()
                .zip(neighbor)
                .map(|(a, b)| a + u * (b - a))
                .collect();
            out_x.push(synthetic);
            out_labels.push(label);
        }
    }
    Ok((out_x, out_labels))
}
