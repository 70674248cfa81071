use serde::{Deserialize, Serialize};

use super::{lipschitz_constant, Objective};
use crate::error::Result;
use crate::measures::DiscreteMeasure;
use crate::numeric::{dot, norm};
use crate::sphere::Direction;

pub(crate) const DEFAULT_MAX_ITERS: usize = 500;

/// Backtracking step rule for [`direction_ascent`].
///
/// Each iteration tries `eta0, eta0/2, ...` and accepts the first step that
/// strictly increases the objective. When `eta0` is `None` it defaults to
/// `0.5 / (p L^p)`, which makes the angular step scale-free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRule {
    pub eta0: Option<f64>,
    pub max_halvings: usize,
}

impl Default for StepRule {
    fn default() -> Self {
        Self {
            eta0: None,
            max_halvings: 40,
        }
    }
}

/// Projected subgradient ascent on `v -> W_p(mu_v, nu_v)^p` from `v0`.
///
/// Returns the best visited direction and its exact `W_p(mu_v, nu_v)`.
pub fn direction_ascent(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    v0: &Direction,
    max_iters: usize,
    step_rule: &StepRule,
) -> Result<(Direction, f64)> {
    let obj = Objective::new(mu, nu, p)?;
    mu.check_dim(v0.dim())?;
    Ok(run(&obj, v0.clone(), max_iters, step_rule))
}

pub(crate) fn run(
    obj: &Objective<'_>,
    v0: Direction,
    max_iters: usize,
    rule: &StepRule,
) -> (Direction, f64) {
    let p = obj.p;
    let eta0 = rule.eta0.unwrap_or_else(|| {
        let l = lipschitz_constant(obj.mu, obj.nu, p).unwrap_or(1.0);
        if l > 0.0 {
            0.5 / (p * l.powf(p))
        } else {
            1.0
        }
    });
    let mut v = v0.into_inner();
    let (mut f, mut g) = obj.pow_and_gradient(&v);
    for _ in 0..max_iters {
        let gv = dot(&g, &v);
        let tangent: Vec<f64> = g.iter().zip(&v).map(|(gi, vi)| gi - gv * vi).collect();
        let tn = norm(&tangent);
        if !(tn > 1e-15 * (1.0 + norm(&g))) {
            break;
        }
        let mut eta = eta0;
        let mut accepted = None;
        for _ in 0..=rule.max_halvings {
            let cand: Vec<f64> = v.iter().zip(&tangent).map(|(vi, ti)| vi + eta * ti).collect();
            let r = norm(&cand);
            let cand: Vec<f64> = cand.into_iter().map(|x| x / r).collect();
            let fc = obj.pow(&cand);
            if fc > f {
                accepted = Some(cand);
                break;
            }
            eta *= 0.5;
        }
        let Some(next) = accepted else { break };
        v = next;
        (f, g) = obj.pow_and_gradient(&v);
    }
    (Direction::from_unit_unchecked(v), f.powf(1.0 / p))
}
