//! Square assignment problem by shortest augmenting paths with potentials
//! (the O(n^3) Hungarian method in its Dijkstra-like formulation).

pub(crate) struct Assignment {
    /// `col_of_row[i]` is the column matched to row `i`.
    pub col_of_row: Vec<usize>,
    /// Row potentials; `u[i] + v[j] <= cost[i][j]` with equality on the matching.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Solves `min sum_i cost[i][sigma(i)]` over permutations `sigma`.
///
/// `cost` is row-major `n x n`. Ties between candidate columns resolve to
/// the lowest index, so the result is deterministic.
pub(crate) fn solve(cost: &[f64], n: usize) -> Assignment {
    // 1-based internal arrays; index 0 is the virtual root.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|x| *x = inf);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let ui0 = u[i0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - ui0 - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    Assignment {
        col_of_row,
        u: u[1..].to_vec(),
        v: v[1..].to_vec(),
    }
}
