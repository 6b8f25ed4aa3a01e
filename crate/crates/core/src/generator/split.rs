//! Stratified train/validation/test splits.
//!
//! Records are grouped by (action, decision). Each stratum is divided in
//! proportion to the fractions, rounded so that every stratum is within one
//! record of its exact share and the split sizes equal `round(f * n)`.
//! The rounding is a tiny transportation problem solved by augmenting paths.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DatasetRecord;
use crate::oracle::Verdict;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SplitError {
    #[error("split fractions must be within [0, 1] and sum to 1, got {0}, {1}, {2}")]
    InvalidFractions(f64, f64, f64),
}

/// The three parts of a split, each in original record order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Split {
    pub train: Vec<DatasetRecord>,
    pub val: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
}

pub fn split(
    records: &[DatasetRecord],
    train_frac: f64,
    val_frac: f64,
    test_frac: f64,
    seed: u64,
) -> Result<Split, SplitError> {
    let fracs = [train_frac, val_frac, test_frac];
    if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) || (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(SplitError::InvalidFractions(train_frac, val_frac, test_frac));
    }

    // Strata in a fixed order: action index, then allow before deny.
    let mut strata: Vec<Vec<usize>> = vec![Vec::new(); 14];
    for (i, r) in records.iter().enumerate() {
        let d = usize::from(r.decision == Verdict::Deny);
        strata[r.action().index() * 2 + d].push(i);
    }
    strata.retain(|s| !s.is_empty());

    let n = records.len();
    let mut totals = [0usize; 3];
    totals[0] = (train_frac * n as f64).round() as usize;
    totals[1] = ((val_frac * n as f64).round() as usize).min(n - totals[0]);
    totals[2] = n - totals[0] - totals[1];

    let sizes: Vec<usize> = strata.iter().map(Vec::len).collect();
    let alloc = controlled_round(&sizes, &fracs, &totals);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut part_of = vec![0u8; n];
    for (members, counts) in strata.iter_mut().zip(&alloc) {
        members.shuffle(&mut rng);
        let mut it = members.iter();
        for (part, &c) in counts.iter().enumerate() {
            for &i in it.by_ref().take(c) {
                part_of[i] = part as u8;
            }
        }
    }
    let mut out = Split::default();
    for (r, part) in records.iter().zip(part_of) {
        match part {
            0 => out.train.push(r.clone()),
            1 => out.val.push(r.clone()),
            _ => out.test.push(r.clone()),
        }
    }
    Ok(out)
}

/// Integer allocation `a[s][k]` with row sums `sizes[s]`, column sums
/// `totals[k]` and each cell the floor or ceiling of `sizes[s] * fracs[k]`.
fn controlled_round(sizes: &[usize], fracs: &[f64; 3], totals: &[usize; 3]) -> Vec<[usize; 3]> {
    let rows = sizes.len();
    let exact: Vec<[f64; 3]> = sizes.iter().map(|&n| fracs.map(|f| f * n as f64)).collect();
    let mut alloc: Vec<[usize; 3]> = exact.iter().map(|r| r.map(|x| (x + 1e-9).floor() as usize)).collect();
    let row_need: Vec<usize> = sizes.iter().zip(&alloc).map(|(&n, a)| n - a.iter().sum::<usize>()).collect();
    let col_need: [usize; 3] =
        std::array::from_fn(|k| totals[k].saturating_sub(alloc.iter().map(|a| a[k]).sum::<usize>()));

    // Max flow: source -> row (row_need) -> column (1 where the exact value
    // is fractional) -> sink (col_need).
    let (src, sink) = (rows + 3, rows + 4);
    let nodes = rows + 5;
    let mut cap = vec![vec![0usize; nodes]; nodes];
    for s in 0..rows {
        cap[src][s] = row_need[s];
        for k in 0..3 {
            if alloc[s][k] as f64 + 1e-9 < exact[s][k] {
                cap[s][rows + k] = 1;
            }
        }
    }
    for k in 0..3 {
        cap[rows + k][sink] = col_need[k];
    }
    let original = cap.clone();
    while let Some(path) = augmenting_path(&cap, src, sink) {
        for w in path.windows(2) {
            cap[w[0]][w[1]] -= 1;
            cap[w[1]][w[0]] += 1;
        }
    }
    for s in 0..rows {
        for k in 0..3 {
            if original[s][rows + k] == 1 && cap[s][rows + k] == 0 {
                alloc[s][k] += 1;
            }
        }
    }
    // Any unit the flow could not place (only possible with degenerate
    // fractions) goes to the column furthest below its total.
    for s in 0..rows {
        while alloc[s].iter().sum::<usize>() < sizes[s] {
            let k = (0..3)
                .max_by_key(|&k| totals[k] as i64 - alloc.iter().map(|a| a[k] as i64).sum::<i64>())
                .unwrap_or(2);
            alloc[s][k] += 1;
        }
    }
    alloc
}

/// Shortest path with spare capacity, as a node list from `src` to `sink`.
fn augmenting_path(cap: &[Vec<usize>], src: usize, sink: usize) -> Option<Vec<usize>> {
    let mut parent = vec![usize::MAX; cap.len()];
    parent[src] = src;
    let mut queue = std::collections::VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for v in 0..cap.len() {
            if parent[v] == usize::MAX && cap[u][v] > 0 {
                parent[v] = u;
                if v == sink {
                    let mut path = vec![sink];
                    let mut at = sink;
                    while at != src {
                        at = parent[at];
                        path.push(at);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(v);
            }
        }
    }
    None
}
