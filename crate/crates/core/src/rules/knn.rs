//! Brute-force nearest neighbours in the 2-D projection and local label entropy.

use crate::error::{BcpError, Result};

/// Indices of the `k` points nearest to `query` (Euclidean), skipping
/// `exclude`. Ties in distance go to the lower index. The result is ordered
/// by (distance, index).
pub fn nearest_indices(points: &[[f64; 2]], query: [f64; 2], k: usize, exclude: Option<usize>) -> Vec<usize> {
    let mut cand: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, p)| {
            let dx = p[0] - query[0];
            let dy = p[1] - query[1];
            (dx * dx + dy * dy, i)
        })
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let k = k.min(cand.len());
    if k == 0 {
        return Vec::new();
    }
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.sort_by(cmp);
    cand.into_iter().map(|(_, i)| i).collect()
}

/// Shannon entropy in bits of the empirical distribution of
/// `neighbor_labels` over `num_labels` classes.
pub fn local_entropy(neighbor_labels: &[usize], num_labels: usize) -> Result<f64> {
    if neighbor_labels.is_empty() {
        return Err(BcpError::InvalidParameter("empty neighbour list".into()));
    }
    let mut counts = vec![0usize; num_labels];
    for &l in neighbor_labels {
        if l >= num_labels {
            return Err(BcpError::LabelOutOfRange {
                row: 0,
                label: l as i64,
                num_labels,
            });
        }
        counts[l] += 1;
    }
    let k = neighbor_labels.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / k;
            -p * p.log2()
        })
        .sum();
    Ok(h.max(0.0))
}
