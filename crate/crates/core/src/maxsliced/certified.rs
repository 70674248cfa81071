use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ascent, lipschitz_constant, DirectionResult, Mode, Objective, StepRule};
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::numeric::{distance, norm};
use crate::sphere::Direction;

/// Options for [`max_sliced_certified_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Target bracket width `upper - lower`.
    pub tol: f64,
    /// Cap on objective evaluations before giving up with `BudgetExceeded`.
    pub max_evaluations: usize,
}

/// Default evaluation budget of the certified search.
pub const DEFAULT_MAX_EVALUATIONS: usize = 2_000_000;

impl CertifyOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
        }
    }
}

/// Patches only cover the upper half of the sphere; the objective is even.
#[derive(Debug, Clone)]
enum Shape {
    /// Angles `[a, b]` on the circle.
    Arc(f64, f64),
    /// Spherical triangle with unit vertices, at most a quarter hemisphere.
    Tri([[f64; 3]; 3]),
}

impl Shape {
    fn center(&self) -> Vec<f64> {
        match self {
            Shape::Arc(a, b) => {
                let t = 0.5 * (a + b);
                vec![t.cos(), t.sin()]
            }
            Shape::Tri(v) => {
                let s: Vec<f64> = (0..3).map(|k| v[0][k] + v[1][k] + v[2][k]).collect();
                let r = norm(&s);
                s.into_iter().map(|x| x / r).collect()
            }
        }
    }

    /// Largest chord from `center` to a point of the patch.
    ///
    /// For a triangle this is attained at a vertex: writing a patch point as
    /// `w = sum l_i v_i / |sum l_i v_i|`, `c.w >= min_i c.v_i` whenever that
    /// minimum is nonnegative.
    fn radius(&self, center: &[f64]) -> f64 {
        match self {
            Shape::Arc(a, b) => 2.0 * ((b - a) / 4.0).sin(),
            Shape::Tri(v) => v.iter().map(|x| distance(center, x)).fold(0.0, f64::max),
        }
    }

    fn split(&self) -> Vec<Shape> {
        match self {
            Shape::Arc(a, b) => {
                let m = 0.5 * (a + b);
                vec![Shape::Arc(*a, m), Shape::Arc(m, *b)]
            }
            Shape::Tri([a, b, c]) => {
                let mid = |x: &[f64; 3], y: &[f64; 3]| {
                    let s = [x[0] + y[0], x[1] + y[1], x[2] + y[2]];
                    let r = norm(&s);
                    [s[0] / r, s[1] / r, s[2] / r]
                };
                let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
                vec![
                    Shape::Tri([*a, ab, ca]),
                    Shape::Tri([ab, *b, bc]),
                    Shape::Tri([ca, bc, *c]),
                    Shape::Tri([ab, bc, ca]),
                ]
            }
        }
    }
}

fn initial_patches(d: usize) -> Vec<Shape> {
    match d {
        2 => {
            let k = 16;
            (0..k)
                .map(|i| Shape::Arc(PI * i as f64 / k as f64, PI * (i + 1) as f64 / k as f64))
                .collect()
        }
        _ => {
            let z = [0.0, 0.0, 1.0];
            let ring = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]];
            (0..4).map(|i| Shape::Tri([ring[i], ring[(i + 1) % 4], z])).collect()
        }
    }
}

struct Node {
    upper: f64,
    id: u64,
    shape: Shape,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap on the bound; among equal bounds the older patch wins.
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper
            .total_cmp(&other.upper)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Certified bracket on `maxSW_p` with the default evaluation budget.
pub fn max_sliced_certified(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    tol: f64,
) -> Result<DirectionResult> {
    max_sliced_certified_with(mu, nu, p, &CertifyOptions::new(tol))
}

/// Relative widening of the certified upper bound.
const ROUNDING_SLACK: f64 = 1e-12;

/// Lipschitz branch-and-bound over the upper half sphere (`d` = 2 or 3).
///
/// Each patch with center `c` and chord radius `r` is bounded above using
/// the monotone coupling at `c` (second-order expansion, capped by
/// `W_p(mu_c, nu_c) + L r`). The patch with the largest bound is split until
/// that bound is within `tol` of the best evaluated value. In `d = 1` the
/// sphere is `{-1, 1}` and the bracket is exact.
///
/// On budget exhaustion the best bracket so far is returned inside
/// [`Error::BudgetExceeded`].
pub fn max_sliced_certified_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    opts: &CertifyOptions,
) -> Result<DirectionResult> {
    let obj = Objective::new(mu, nu, p)?;
    let d = obj.dim();
    if !(opts.tol > 0.0) || !opts.tol.is_finite() {
        return Err(Error::ArgumentOutOfRange(format!("tol must be > 0, got {}", opts.tol)));
    }
    if d == 1 {
        let w = obj.value(&[1.0]);
        return Ok(DirectionResult {
            v_star: Direction::axis(1, 0),
            lower: w,
            upper: w,
            evaluations: obj.evaluations(),
            mode: Mode::Certified,
        });
    }
    if d > 3 {
        return Err(Error::UnsupportedDimension(d));
    }
    let lip = lipschitz_constant(mu, nu, p)?;
    let parallel = mu.len() + nu.len() >= 256;

    let evaluate = |shapes: Vec<Shape>| -> Vec<(Shape, Vec<f64>, f64, f64)> {
        let eval = |s: Shape| {
            let c = s.center();
            let (w, upper) = obj.patch_bound(&c, s.radius(&c), lip);
            (s, c, w, upper)
        };
        if parallel {
            shapes.into_par_iter().map(eval).collect()
        } else {
            shapes.into_iter().map(eval).collect()
        }
    };

    let mut best_v: Vec<f64> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    let mut push = |heap: &mut BinaryHeap<Node>,
                    best: &mut f64,
                    best_v: &mut Vec<f64>,
                    items: Vec<(Shape, Vec<f64>, f64, f64)>| {
        for (shape, c, w, upper) in items {
            if w > *best {
                *best = w;
                *best_v = c.clone();
            }
            heap.push(Node {
                upper,
                id: next_id,
                shape,
            });
            next_id += 1;
        }
    };

    let first = evaluate(initial_patches(d));
    push(&mut heap, &mut best, &mut best_v, first);

    // A local ascent from the best center usually lands on the maximizer and
    // lets most patches be pruned immediately.
    let (v, w) = ascent::run(
        &obj,
        Direction::from_unit_unchecked(best_v.clone()),
        ascent::DEFAULT_MAX_ITERS,
        &StepRule::default(),
    );
    if w > best {
        best = w;
        best_v = v.into_inner();
    }

    // Patch bounds are computed in floating point; widen the final upper
    // end to cover their rounding error.
    let result = |best_v: &[f64], lower: f64, upper: f64, evals: usize| DirectionResult {
        v_star: Direction::from_unit_unchecked(best_v.to_vec()),
        lower,
        upper: upper.max(lower) * (1.0 + ROUNDING_SLACK),
        evaluations: evals,
        mode: Mode::Certified,
    };

    let mut prune_at = 1usize << 16;
    loop {
        let Some(top) = heap.pop() else {
            return Ok(result(&best_v, best, best, obj.evaluations()));
        };
        if top.upper - best <= opts.tol {
            return Ok(result(&best_v, best, top.upper, obj.evaluations()));
        }
        if obj.evaluations() >= opts.max_evaluations {
            let partial = result(&best_v, best, top.upper, obj.evaluations());
            return Err(Error::BudgetExceeded(Box::new(partial)));
        }
        let children = evaluate(top.shape.split());
        push(&mut heap, &mut best, &mut best_v, children);
        // Patches whose bound is below the incumbent can never matter.
        if heap.len() > prune_at {
            let keep: Vec<Node> = heap.drain().filter(|n| n.upper > best).collect();
            heap = keep.into_iter().collect();
            prune_at = (2 * heap.len()).max(1 << 16);
        }
    }
}
