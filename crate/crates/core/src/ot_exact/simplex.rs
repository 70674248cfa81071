//! Transportation simplex on the dense bipartite graph.
//!
//! The basis is a spanning tree on `n + m` nodes (rows `0..n`, columns
//! `n..n+m`) with exactly `n + m - 1` basic cells, some possibly carrying
//! zero flow. Entering cells are chosen by block pricing over the cells in
//! row-major order; ties on the leaving side go to the lowest `(row, col)`.

use crate::error::{Error, Result};

pub(crate) struct Solution {
    /// Basic cells with positive flow, sorted lexicographically.
    pub triples: Vec<(usize, usize, f64)>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

struct Tree {
    n: usize,
    row: Vec<usize>,
    col: Vec<usize>,
    flow: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl Tree {
    fn add(&mut self, slot: usize, r: usize, c: usize, x: f64) {
        self.row[slot] = r;
        self.col[slot] = c;
        self.flow[slot] = x;
        self.adj[r].push(slot);
        self.adj[self.n + c].push(slot);
    }

    fn remove(&mut self, slot: usize) {
        let (r, c) = (self.row[slot], self.col[slot]);
        let n = self.n;
        self.adj[r].retain(|&e| e != slot);
        self.adj[n + c].retain(|&e| e != slot);
    }

    fn other(&self, slot: usize, node: usize) -> usize {
        if node < self.n {
            self.n + self.col[slot]
        } else {
            self.row[slot]
        }
    }
}

pub(crate) fn solve(cost: &[f64], a: &[f64], b: &[f64]) -> Result<Solution> {
    let (n, m) = (a.len(), b.len());
    let nodes = n + m;
    let cells = n * m;
    let cmax = cost.iter().fold(0.0f64, |acc, &c| acc.max(c.abs()));
    let eps = 1e-12 * cmax.max(f64::MIN_POSITIVE);

    // North-west corner start: exactly n + m - 1 cells forming a tree.
    let mut tree = Tree {
        n,
        row: vec![0; nodes - 1],
        col: vec![0; nodes - 1],
        flow: vec![0.0; nodes - 1],
        adj: vec![Vec::new(); nodes],
    };
    {
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let (mut i, mut j) = (0, 0);
        for slot in 0..nodes - 1 {
            let x = ra[i].min(rb[j]).max(0.0);
            tree.add(slot, i, j, x);
            ra[i] -= x;
            rb[j] -= x;
            if i == n - 1 {
                j += 1;
            } else if j == m - 1 || ra[i] <= rb[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];
    let mut known = vec![false; nodes];
    let mut stack: Vec<usize> = Vec::with_capacity(nodes);
    let mut parent_edge = vec![usize::MAX; nodes];
    let mut path: Vec<usize> = Vec::with_capacity(nodes);

    let block = ((cells as f64).sqrt() as usize).max(nodes).min(cells);
    let mut cursor = 0usize;
    let mut degenerate_streak = 0usize;
    let max_pivots = 1000 * nodes + 100_000;
    let mut pivots = 0usize;

    loop {
        // Potentials from the tree, u[0] = 0.
        known.iter_mut().for_each(|k| *k = false);
        known[0] = true;
        u[0] = 0.0;
        stack.clear();
        stack.push(0);
        while let Some(node) = stack.pop() {
            for &e in &tree.adj[node] {
                let other = tree.other(e, node);
                if known[other] {
                    continue;
                }
                let c = cost[tree.row[e] * m + tree.col[e]];
                if other < n {
                    u[other] = c - v[tree.col[e]];
                } else {
                    v[other - n] = c - u[tree.row[e]];
                }
                known[other] = true;
                stack.push(other);
            }
        }
        if known.iter().any(|k| !k) {
            return Err(Error::SolverFailure("basis is not a spanning tree".into()));
        }

        // Pricing.
        let bland = degenerate_streak > nodes;
        let mut entering: Option<(usize, f64)> = None;
        if bland {
            for cell in 0..cells {
                let (r, c) = (cell / m, cell % m);
                let rc = cost[cell] - u[r] - v[c];
                if rc < -eps {
                    entering = Some((cell, rc));
                    break;
                }
            }
        } else {
            let mut scanned = 0;
            while scanned < cells && entering.is_none() {
                let len = block.min(cells - scanned);
                let mut best: Option<(usize, f64)> = None;
                for k in 0..len {
                    let cell = (cursor + k) % cells;
                    let (r, c) = (cell / m, cell % m);
                    let rc = cost[cell] - u[r] - v[c];
                    if rc < -eps && best.is_none_or(|(bc, br)| rc < br || (rc == br && cell < bc)) {
                        best = Some((cell, rc));
                    }
                }
                cursor = (cursor + len) % cells;
                scanned += len;
                entering = best;
            }
        }
        let Some((cell, _)) = entering else { break };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::SolverFailure(format!(
                "no convergence after {max_pivots} pivots"
            )));
        }
        let (er, ec) = (cell / m, cell % m);

        // Tree path from row node er to column node n + ec.
        let target = n + ec;
        parent_edge.iter_mut().for_each(|p| *p = usize::MAX);
        known.iter_mut().for_each(|k| *k = false);
        known[er] = true;
        stack.clear();
        stack.push(er);
        'dfs: while let Some(node) = stack.pop() {
            for &e in &tree.adj[node] {
                let other = tree.other(e, node);
                if known[other] {
                    continue;
                }
                known[other] = true;
                parent_edge[other] = e;
                if other == target {
                    break 'dfs;
                }
                stack.push(other);
            }
        }
        path.clear();
        let mut node = target;
        while node != er {
            let e = parent_edge[node];
            path.push(e);
            node = tree.other(e, node);
        }
        path.reverse();
        // path[0] touches row er and gets -theta; signs alternate from there.

        let mut leave: Option<usize> = None;
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 1 {
                continue;
            }
            leave = Some(match leave {
                None => e,
                Some(l) => {
                    let (fe, fl) = (tree.flow[e], tree.flow[l]);
                    if fe < fl || (fe == fl && (tree.row[e], tree.col[e]) < (tree.row[l], tree.col[l]))
                    {
                        e
                    } else {
                        l
                    }
                }
            });
        }
        let leave = leave.expect("cycle has a decreasing edge");
        let theta = tree.flow[leave];
        if theta > 0.0 {
            degenerate_streak = 0;
            for (k, &e) in path.iter().enumerate() {
                if k % 2 == 0 {
                    tree.flow[e] = (tree.flow[e] - theta).max(0.0);
                } else {
                    tree.flow[e] += theta;
                }
            }
        } else {
            degenerate_streak += 1;
        }
        tree.remove(leave);
        tree.add(leave, er, ec, theta);
    }

    let mut triples: Vec<(usize, usize, f64)> = (0..nodes - 1)
        .filter(|&e| tree.flow[e] > 0.0)
        .map(|e| (tree.row[e], tree.col[e], tree.flow[e]))
        .collect();
    triples.sort_by_key(|x| (x.0, x.1));
    Ok(Solution {
        triples,
        u,
        v,
    })
}
