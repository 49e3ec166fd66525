//! Centered moving-block sums, the common building block of the multiplier
//! bootstraps.

use crate::curves::CurveSet;

/// The rows `A_k(t) = (sum_{j=k}^{k+l-1} X_j(t) - (l/m) sum_{j=1}^m X_j(t)) / sqrt(l)`
/// for k = 1..=m-l+1, stored densely.
pub(crate) struct BlockRows {
    pub count: usize,
    pub width: usize,
    data: Vec<f64>,
}

impl BlockRows {
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.width..(k + 1) * self.width]
    }
}

/// Precompute all centered block rows of a sample. `block_len` must satisfy
/// `1 <= block_len <= set.len()` (checked by the callers).
pub(crate) fn centered_blocks(set: &CurveSet, block_len: usize) -> BlockRows {
    let m = set.len();
    let g = set.grid().len();
    let l = block_len;

    // Prefix sums over rows: prefix[k] = sum of rows 0..k.
    let mut prefix = vec![0.0; (m + 1) * g];
    for i in 0..m {
        let (done, current) = prefix.split_at_mut((i + 1) * g);
        let prev = &done[i * g..(i + 1) * g];
        let next = &mut current[..g];
        for ((n, p), v) in next.iter_mut().zip(prev).zip(set.row(i)) {
            *n = p + v;
        }
    }
    let total_start = m * g;
    let count = m - l + 1;
    let center_factor = l as f64 / m as f64;
    let inv_sqrt_l = 1.0 / (l as f64).sqrt();

    let mut data = vec![0.0; count * g];
    for k in 0..count {
        let lo = k * g;
        let hi = (k + l) * g;
        for t in 0..g {
            let block_sum = prefix[hi + t] - prefix[lo + t];
            data[k * g + t] = (block_sum - center_factor * prefix[total_start + t]) * inv_sqrt_l;
        }
    }
    BlockRows {
        count,
        width: g,
        data,
    }
}
