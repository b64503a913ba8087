//! Square assignment problems: minimum total cost (Hungarian method) and
//! minimum largest cost (bottleneck), plus signed-permutation alignment.

use nalgebra::DMatrix;

/// Minimum-cost perfect matching. Returns `assign` with row `i` matched to
/// column `assign[i]`. O(k^3).
pub fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let k = cost.nrows();
    assert_eq!(k, cost.ncols(), "assignment needs a square cost matrix");
    if k == 0 {
        return Vec::new();
    }
    // Potentials formulation with 1-based sentinel column 0.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for row in 1..=k {
        owner[0] = row;
        let mut col0 = 0;
        let mut min_v = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=k {
                if used[col] {
                    continue;
                }
                let cur = cost[(r0 - 1, col - 1)] - u[r0] - v[col];
                if cur < min_v[col] {
                    min_v[col] = cur;
                    way[col] = col0;
                }
                if min_v[col] < delta {
                    delta = min_v[col];
                    col1 = col;
                }
            }
            for col in 0..=k {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_v[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; k];
    for col in 1..=k {
        assign[owner[col] - 1] = col - 1;
    }
    assign
}

fn has_perfect_matching(allowed: &[Vec<bool>]) -> bool {
    let k = allowed.len();
    let mut match_col: Vec<Option<usize>> = vec![None; k];
    fn augment(row: usize, allowed: &[Vec<bool>], seen: &mut [bool], match_col: &mut [Option<usize>]) -> bool {
        for col in 0..allowed.len() {
            if allowed[row][col] && !seen[col] {
                seen[col] = true;
                if match_col[col].is_none_or(|r| augment(r, allowed, seen, match_col)) {
                    match_col[col] = Some(row);
                    return true;
                }
            }
        }
        false
    }
    (0..k).all(|row| {
        let mut seen = vec![false; k];
        augment(row, allowed, &mut seen, &mut match_col)
    })
}

/// Perfect matching minimizing the largest matched cost; among those, the
/// total cost is minimized.
pub fn bottleneck_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let k = cost.nrows();
    assert_eq!(k, cost.ncols(), "assignment needs a square cost matrix");
    if k == 0 {
        return Vec::new();
    }
    let mut levels: Vec<f64> = cost.iter().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let feasible = |threshold: f64| {
        let allowed: Vec<Vec<bool>> = (0..k)
            .map(|r| (0..k).map(|c| cost[(r, c)] <= threshold).collect())
            .collect();
        has_perfect_matching(&allowed)
    };
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let threshold = levels[lo];
    let penalty = cost.iter().fold(0.0f64, |a, &b| a + b.abs()) * 2.0 + 1.0;
    let restricted = cost.map(|c| if c <= threshold { c } else { c + penalty });
    hungarian(&restricted)
}

/// Greedy signed-permutation alignment of a square matrix that should be
/// close to `D P`: repeatedly takes the largest remaining `|entry|`.
/// Returns `(col_for_row, sign)` so that entry `(i, col_for_row[i])` is the
/// one kept for row `i`, with its sign.
pub fn greedy_signed_permutation(m: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>) {
    let k = m.nrows();
    let mut entries: Vec<(usize, usize)> = (0..k).flat_map(|r| (0..k).map(move |c| (r, c))).collect();
    entries.sort_by(|a, b| m[*b].abs().total_cmp(&m[*a].abs()));
    let mut col_for_row = vec![usize::MAX; k];
    let mut col_taken = vec![false; k];
    for (r, c) in entries {
        if col_for_row[r] == usize::MAX && !col_taken[c] {
            col_for_row[r] = c;
            col_taken[c] = true;
        }
    }
    let signs = (0..k).map(|r| m[(r, col_for_row[r])].signum()).collect();
    (col_for_row, signs)
}
