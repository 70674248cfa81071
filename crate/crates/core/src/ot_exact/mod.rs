//! Exact Wasserstein distances between finitely supported measures on R^d.
//!
//! The transport problem `min <gamma, C>` over couplings of `mu` and `nu`
//! with `C_ij = |x_i - y_j|^p` is solved exactly:
//!
//! * equal-size, uniform-weight instances go to a square assignment solver
//!   (an optimal permutation is an optimal coupling by Birkhoff's theorem);
//! * everything else goes to a transportation simplex.
//!
//! Both routes return optimal dual potentials, which back the Kantorovich
//! certificate for `p = 1`.

mod assignment;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{check_order, Error, Result};
use crate::measures::DiscreteMeasure;
use crate::numeric::{distance, CompensatedSum};

/// Largest accepted `n * m` cost matrix.
pub const MAX_COST_ENTRIES: usize = 50_000_000;

/// Which exact solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Assignment fast path when eligible, simplex otherwise.
    #[default]
    Auto,
    Simplex,
}

/// An optimal coupling and its value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    /// `(i, j, mass)` with positive masses, sorted lexicographically.
    pub triples: Vec<(usize, usize, f64)>,
    /// `W_p = (sum mass * |x_i - y_j|^p)^{1/p}`.
    pub primal_value: f64,
    /// Total cost `sum mass * |x_i - y_j|^p` before the p-th root.
    pub total_cost: f64,
    pub order: f64,
}

impl TransportPlan {
    /// Row and column sums of the plan.
    pub fn marginals(&self, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; m];
        for &(i, j, x) in &self.triples {
            a[i] += x;
            b[j] += x;
        }
        (a, b)
    }
}

/// Kantorovich potentials for `W_1`.
///
/// Feasible: `f[i] + g[j] <= |x_i - y_j|`. The gauge is fixed by `f[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// `sum_i a_i f_i + sum_j b_j g_j`.
    pub dual_value: f64,
}

fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<Vec<f64>> {
    mu.check_dim(nu.dim())?;
    let (n, m) = (mu.len(), nu.len());
    if n.saturating_mul(m) > MAX_COST_ENTRIES {
        return Err(Error::ProblemTooLarge {
            n,
            m,
            limit: MAX_COST_ENTRIES,
        });
    }
    let mut c = Vec::with_capacity(n * m);
    for x in mu.points() {
        for y in nu.points() {
            c.push(distance(x, y).powf(p));
        }
    }
    Ok(c)
}

struct RawSolution {
    triples: Vec<(usize, usize, f64)>,
    u: Vec<f64>,
    v: Vec<f64>,
}

fn uses_assignment(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> bool {
    mu.len() == nu.len() && mu.has_uniform_weights() && nu.has_uniform_weights()
}

fn solve_raw(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &[f64],
    choice: SolverChoice,
) -> Result<RawSolution> {
    let n = mu.len();
    if choice == SolverChoice::Auto && uses_assignment(mu, nu) {
        let sol = assignment::solve(cost, n);
        let mass = 1.0 / n as f64;
        let triples = sol
            .col_of_row
            .iter()
            .enumerate()
            .map(|(i, &j)| (i, j, mass))
            .collect();
        return Ok(RawSolution {
            triples,
            u: sol.u,
            v: sol.v,
        });
    }
    let sol = simplex::solve(cost, mu.weights(), nu.weights())?;
    let raw = RawSolution {
        triples: sol.triples,
        u: sol.u,
        v: sol.v,
    };
    verify_marginals(&raw.triples, mu.weights(), nu.weights())?;
    debug_assert!(raw
        .triples
        .iter()
        .all(|&(i, j, _)| (raw.u[i] + raw.v[j] - cost[i * nu.len() + j]).abs() <= 1e-9 * (1.0 + cost[i * nu.len() + j].abs())));
    Ok(raw)
}

fn verify_marginals(triples: &[(usize, usize, f64)], a: &[f64], b: &[f64]) -> Result<()> {
    let mut ra = vec![0.0; a.len()];
    let mut rb = vec![0.0; b.len()];
    for &(i, j, x) in triples {
        if !(x >= 0.0) {
            return Err(Error::SolverFailure(format!("negative mass {x} at ({i}, {j})")));
        }
        ra[i] += x;
        rb[j] += x;
    }
    let worst = ra
        .iter()
        .zip(a)
        .chain(rb.iter().zip(b))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if worst > 1e-9 {
        return Err(Error::SolverFailure(format!(
            "marginal violation {worst:e} exceeds 1e-9"
        )));
    }
    Ok(())
}

fn plan_from(raw: &RawSolution, cost: &[f64], m: usize, p: f64) -> TransportPlan {
    let total: f64 = raw
        .triples
        .iter()
        .map(|&(i, j, x)| x * cost[i * m + j])
        .collect::<CompensatedSum>()
        .value()
        .max(0.0);
    TransportPlan {
        triples: raw.triples.clone(),
        primal_value: total.powf(1.0 / p),
        total_cost: total,
        order: p,
    }
}

/// Optimal transport plan for the cost `|x - y|^p`.
pub fn wasserstein_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<TransportPlan> {
    wasserstein_exact_with(mu, nu, p, SolverChoice::Auto)
}

pub fn wasserstein_exact_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    choice: SolverChoice,
) -> Result<TransportPlan> {
    check_order(p)?;
    let cost = cost_matrix(mu, nu, p)?;
    let raw = solve_raw(mu, nu, &cost, choice)?;
    Ok(plan_from(&raw, &cost, nu.len(), p))
}

/// Applies the double c-transform and fixes the gauge at `f[0] = 0`.
///
/// Starting from the solver's (approximately feasible) potentials this
/// yields exactly feasible potentials whose value is no smaller.
fn certify(mut f: Vec<f64>, cost: &[f64], a: &[f64], b: &[f64]) -> DualCertificate {
    let (n, m) = (a.len(), b.len());
    let mut g = vec![f64::INFINITY; m];
    for i in 0..n {
        let row = &cost[i * m..(i + 1) * m];
        for (gj, c) in g.iter_mut().zip(row) {
            *gj = gj.min(c - f[i]);
        }
    }
    for i in 0..n {
        let row = &cost[i * m..(i + 1) * m];
        f[i] = row
            .iter()
            .zip(&g)
            .map(|(c, gj)| c - gj)
            .fold(f64::INFINITY, f64::min);
    }
    let anchor = f[0];
    for fi in &mut f {
        *fi -= anchor;
    }
    for gj in &mut g {
        *gj += anchor;
    }
    // Re-tighten after the shift so rounding cannot break feasibility.
    for j in 0..m {
        let slack = (0..n)
            .map(|i| cost[i * m + j] - f[i] - g[j])
            .fold(f64::INFINITY, f64::min);
        if slack < 0.0 {
            g[j] += slack;
        }
    }
    let dual_value = f
        .iter()
        .zip(a)
        .map(|(x, w)| x * w)
        .chain(g.iter().zip(b).map(|(x, w)| x * w))
        .collect::<CompensatedSum>()
        .value();
    DualCertificate { f, g, dual_value }
}

/// Solves `W_1` once and returns both the plan and the dual certificate.
pub fn solve_w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(TransportPlan, DualCertificate)> {
    solve_w1_with(mu, nu, SolverChoice::Auto)
}

pub fn solve_w1_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    choice: SolverChoice,
) -> Result<(TransportPlan, DualCertificate)> {
    let cost = cost_matrix(mu, nu, 1.0)?;
    let raw = solve_raw(mu, nu, &cost, choice)?;
    let plan = plan_from(&raw, &cost, nu.len(), 1.0);
    let cert = certify(raw.u.clone(), &cost, mu.weights(), nu.weights());
    Ok((plan, cert))
}

/// Optimal Kantorovich potentials for `W_1`, anchored at the first atom of `mu`.
pub fn dual_potentials_w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<DualCertificate> {
    Ok(solve_w1(mu, nu)?.1)
}

/// `|primal - dual|` for `W_1`.
pub fn duality_gap(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    let (plan, cert) = solve_w1(mu, nu)?;
    Ok((plan.primal_value - cert.dual_value).abs())
}
