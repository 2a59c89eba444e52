/// Writes into `perm` the asset indices sorted by decreasing weight.
///
/// `perm[k]` is the index of the asset ranked `k + 1`; ties go to the lowest
/// index (the sort is stable).
pub fn rank_order(weights: &[f64], perm: &mut Vec<usize>) {
    perm.clear();
    perm.extend(0..weights.len());
    perm.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
}

pub fn ranked(weights: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut perm = Vec::with_capacity(weights.len());
    rank_order(weights, &mut perm);
    (perm.iter().map(|&i| weights[i]).collect(), perm)
}

/// Reverse order statistics of a weight series, one row per time.
#[derive(Clone, Debug, PartialEq)]
pub struct RankView {
    pub ranked_weights: Vec<Vec<f64>>,
    /// Zero-based: `perm[t][k]` is the asset holding rank `k + 1` at time `t`.
    pub perm: Vec<Vec<usize>>,
}

impl RankView {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let (ranked_weights, perm) = rows.into_iter().map(ranked).unzip();
        RankView { ranked_weights, perm }
    }
}
