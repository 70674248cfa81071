//! Max-sliced Wasserstein distance `sup_v W_p(mu_v, nu_v)`.
//!
//! Two engines share one objective:
//!
//! * [`direction_ascent`] / [`max_sliced`]: projected subgradient ascent on
//!   `v -> W_p(mu_v, nu_v)^p` from several starts. Fast; yields a lower bound.
//! * [`max_sliced_certified`]: branch-and-bound over sphere patches. Patch
//!   bounds come from the Lipschitz estimate
//!   `|W_p(mu_u, nu_u) - W_p(mu_v, nu_v)| <= L |u - v|` with
//!   `L = M_p(mu - c) + M_p(nu - c)`, sharpened by a coupling-based expansion
//!   (see `Objective::patch_bound`). Yields a bracket `[lower, upper]`
//!   guaranteed to contain the maximum.

mod ascent;
mod certified;

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_order, Error, Result};
use crate::measures::{moment_p, DiscreteMeasure};
use crate::ot1d::{sorted_pow, sweep, SortedValues};
use crate::sphere::{project_values, sample_uniform, Direction};

pub use ascent::{direction_ascent, StepRule};
pub use certified::{max_sliced_certified, max_sliced_certified_with, CertifyOptions, DEFAULT_MAX_EVALUATIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Heuristic,
    Certified,
}

/// Best direction found and a bracket on the max-sliced distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionResult {
    pub v_star: Direction,
    /// `W_p(mu_{v*}, nu_{v*})`, a lower bound on the maximum.
    pub lower: f64,
    /// Certified upper bound; equals `lower` in heuristic mode.
    pub upper: f64,
    pub evaluations: usize,
    pub mode: Mode,
}

/// Lipschitz constant of `v -> W_p(mu_v, nu_v)` with respect to `|u - v|`.
///
/// Both measures are first translated by the midpoint of their means; a
/// common translation leaves every projected distance unchanged but
/// shrinks the moments.
pub fn lipschitz_constant(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    mu.check_dim(nu.dim())?;
    let (ma, mb) = (mu.mean(), nu.mean());
    let shift: Vec<f64> = ma.iter().zip(&mb).map(|(a, b)| -(a + b) / 2.0).collect();
    Ok(moment_p(&mu.translate(&shift)?, p)? + moment_p(&nu.translate(&shift)?, p)?)
}

/// `v -> W_p(mu_v, nu_v)^p` with an evaluation counter.
pub(crate) struct Objective<'a> {
    pub mu: &'a DiscreteMeasure,
    pub nu: &'a DiscreteMeasure,
    pub p: f64,
    evals: AtomicUsize,
}

impl<'a> Objective<'a> {
    pub fn new(mu: &'a DiscreteMeasure, nu: &'a DiscreteMeasure, p: f64) -> Result<Self> {
        check_order(p)?;
        mu.check_dim(nu.dim())?;
        Ok(Self {
            mu,
            nu,
            p,
            evals: AtomicUsize::new(0),
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }

    pub fn evaluations(&self) -> usize {
        self.evals.load(Ordering::Relaxed)
    }

    fn sorted(&self, v: &[f64]) -> (SortedValues, SortedValues) {
        (
            SortedValues::new(project_values(self.mu, v), self.mu.weights()),
            SortedValues::new(project_values(self.nu, v), self.nu.weights()),
        )
    }

    /// `W_p(mu_v, nu_v)^p`. `v` need not be normalized.
    pub fn pow(&self, v: &[f64]) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let (a, b) = self.sorted(v);
        sorted_pow(&a, &b, self.p)
    }

    /// `W_p(mu_v, nu_v)`.
    pub fn value(&self, v: &[f64]) -> f64 {
        self.pow(v).powf(1.0 / self.p)
    }

    /// `W_p(mu_c, nu_c)` and an upper bound on `W_p(mu_u, nu_u)` over all unit
    /// `u` with `|u - c| <= r`, for unit `c`.
    ///
    /// With `pi` the monotone coupling at `c`, `D_k = x_i - y_j` and
    /// `delta = u - c`, every `u` satisfies
    /// `W_p(mu_u, nu_u)^p <= sum_k pi_k |c.D_k + delta.D_k|^p`. Terms whose sign
    /// is fixed on the patch are expanded to second order; the others are
    /// bounded by `(|c.D_k| + r |D_k|)^p`. The linear part is split using
    /// `c.delta = -|delta|^2 / 2`, so near a stationary point the bound is
    /// quadratic in `r`.
    ///
    /// The result is also capped by the first-order bound `W + min(L, K) r`,
    /// where `K = (sum_k pi_k |D_k|^p)^{1/p}` (Minkowski and Cauchy-Schwarz
    /// in `L^p(pi)`) and `L` is the global Lipschitz constant.
    pub fn patch_bound(&self, c: &[f64], r: f64, lip: f64) -> (f64, f64) {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let p = self.p;
        let d = self.dim();
        let (a, b) = self.sorted(c);
        let mut phi = crate::numeric::CompensatedSum::new();
        let mut spread = crate::numeric::CompensatedSum::new();
        let mut grad = vec![0.0; d];
        let mut curvature = 0.0;
        let mut loose = 0.0;
        let mut diff = vec![0.0; d];
        sweep(&a.cum, &b.cum, |i, j, mass| {
            let x = self.mu.point(a.order[i]);
            let y = self.nu.point(b.order[j]);
            for k in 0..d {
                diff[k] = x[k] - y[k];
            }
            let rho = crate::numeric::norm(&diff);
            let s = a.values[i] - b.values[j];
            let abs = s.abs();
            phi.add(mass * abs.powf(p));
            spread.add(mass * rho.powf(p));
            let reach = r * rho;
            if abs > reach {
                let slope = mass * p * abs.powf(p - 1.0) * s.signum();
                for k in 0..d {
                    grad[k] += slope * diff[k];
                }
                if p != 1.0 {
                    let z = if p >= 2.0 { abs + reach } else { abs - reach };
                    curvature += 0.5 * mass * p * (p - 1.0) * z.powf(p - 2.0) * rho * rho;
                }
            } else {
                loose += mass * ((abs + reach).powf(p) - abs.powf(p));
            }
        });
        let phi = phi.value().max(0.0);
        let w = phi.powf(1.0 / p);
        let spread = spread.value().max(0.0).powf(1.0 / p);
        let first_order = w + spread.min(lip) * r;

        let gc = crate::numeric::dot(&grad, c);
        let tangent = grad
            .iter()
            .zip(c)
            .map(|(g, ci)| (g - gc * ci).powi(2))
            .sum::<f64>()
            .sqrt();
        // max over 0 <= x <= r of tangent * x + beta * x^2
        let beta = curvature - 0.5 * gc;
        let rise = if beta >= 0.0 {
            tangent * r + beta * r * r
        } else {
            let x = (tangent / (-2.0 * beta)).min(r);
            tangent * x + beta * x * x
        };
        let second_order = (phi + rise.max(0.0) + loose).powf(1.0 / p);
        (w, first_order.min(second_order))
    }

    /// `W_p^p` and a supergradient of it in ambient coordinates, assembled
    /// from the monotone coupling of the projections at `v`.
    pub fn pow_and_gradient(&self, v: &[f64]) -> (f64, Vec<f64>) {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let d = self.dim();
        let p = self.p;
        let (a, b) = self.sorted(v);
        let mut grad = vec![0.0; d];
        let mut total = crate::numeric::CompensatedSum::new();
        sweep(&a.cum, &b.cum, |i, j, mass| {
            let s = a.values[i] - b.values[j];
            total.add(mass * s.abs().powf(p));
            let scale = if s == 0.0 {
                0.0
            } else {
                mass * p * s.abs().powf(p - 1.0) * s.signum()
            };
            if scale != 0.0 {
                let x = self.mu.point(a.order[i]);
                let y = self.nu.point(b.order[j]);
                for k in 0..d {
                    grad[k] += scale * (x[k] - y[k]);
                }
            }
        });
        (total.value().max(0.0), grad)
    }
}

/// `W_p^p(mu_v, nu_v)` as a function of `v in R^d` (not only the sphere)
/// together with a supergradient built from the monotone coupling at `v`.
/// Where the sorted orders of both projections are strict the function is
/// differentiable and this is its gradient.
pub fn projected_pow_gradient(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    v: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let obj = Objective::new(mu, nu, p)?;
    if v.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            found: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::ArgumentOutOfRange("direction must be finite".into()));
    }
    Ok(obj.pow_and_gradient(v))
}

/// Multi-start heuristic: `starts` uniform random initial directions plus
/// the `2d` signed axis directions, each refined by [`direction_ascent`].
pub fn max_sliced(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    starts: usize,
    seed: u64,
) -> Result<DirectionResult> {
    if starts == 0 {
        return Err(Error::ArgumentOutOfRange("starts must be >= 1".into()));
    }
    let obj = Objective::new(mu, nu, p)?;
    let d = obj.dim();
    let mut inits = sample_uniform(d, starts, seed);
    for k in 0..d {
        let e = Direction::axis(d, k);
        inits.push(e.negated());
        inits.push(e);
    }
    let rule = StepRule::default();
    let runs: Vec<(Direction, f64)> = inits
        .par_iter()
        .map(|v0| ascent::run(&obj, v0.clone(), ascent::DEFAULT_MAX_ITERS, &rule))
        .collect();
    let (v_star, lower) = runs
        .into_iter()
        .reduce(|best, cand| if cand.1 > best.1 { cand } else { best })
        .expect("at least one start");
    Ok(DirectionResult {
        v_star,
        lower,
        upper: lower,
        evaluations: obj.evaluations(),
        mode: Mode::Heuristic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{generate, GeneratorSpec};
    use crate::ot1d::{to_measure1d, wasserstein_1d};
    use crate::ot_exact::wasserstein_exact;
    use crate::sphere::project;

    fn cloud(d: usize, n: usize, seed: u64) -> DiscreteMeasure {
        generate(&GeneratorSpec::empirical(GeneratorSpec::gaussian(d), n), seed).unwrap()
    }

    #[test]
    fn two_point_masses() {
        let x = vec![1.0, -2.0, 0.5];
        let y = vec![-0.5, 1.0, 2.0];
        let dist = crate::numeric::distance(&x, &y);
        let mu = DiscreteMeasure::dirac(x).unwrap();
        let nu = DiscreteMeasure::dirac(y).unwrap();
        for p in [1.0, 2.0] {
            let r = max_sliced(&mu, &nu, p, 4, 1).unwrap();
            assert!((r.lower - dist).abs() < 1e-8, "p={p}: {} vs {dist}", r.lower);
            assert_eq!(r.mode, Mode::Heuristic);
            assert_eq!(r.lower, r.upper);
        }
    }

    #[test]
    fn identical_measures() {
        let mu = cloud(3, 10, 4);
        let r = max_sliced(&mu, &mu, 1.0, 3, 0).unwrap();
        assert_eq!(r.lower, 0.0);
    }

    #[test]
    fn one_dimensional_is_plain_w1d() {
        let mu = cloud(1, 9, 1);
        let nu = cloud(1, 6, 2);
        let w = wasserstein_1d(&to_measure1d(&mu).unwrap(), &to_measure1d(&nu).unwrap(), 1.5).unwrap();
        let r = max_sliced(&mu, &nu, 1.5, 2, 0).unwrap();
        assert!((r.lower - w).abs() < 1e-12);
        assert!((r.v_star.as_slice()[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dominates_axes_and_is_dominated_by_exact() {
        for seed in 0..10 {
            let mu = cloud(3, 8, seed);
            let nu = cloud(3, 11, seed + 50);
            for p in [1.0, 2.0] {
                let r = max_sliced(&mu, &nu, p, 4, seed).unwrap();
                for k in 0..3 {
                    let e = Direction::axis(3, k);
                    let w = wasserstein_1d(&project(&mu, &e).unwrap(), &project(&nu, &e).unwrap(), p)
                        .unwrap();
                    assert!(r.lower >= w - 1e-12);
                }
                let w = wasserstein_exact(&mu, &nu, p).unwrap().primal_value;
                assert!(r.lower <= w + 1e-9);
                let check = wasserstein_1d(
                    &project(&mu, &r.v_star).unwrap(),
                    &project(&nu, &r.v_star).unwrap(),
                    p,
                )
                .unwrap();
                assert!((check - r.lower).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lipschitz_constant_is_translation_invariant() {
        let mu = cloud(2, 7, 1);
        let nu = cloud(2, 5, 2);
        let l0 = lipschitz_constant(&mu, &nu, 1.0).unwrap();
        let s = [100.0, -40.0];
        let l1 = lipschitz_constant(&mu.translate(&s).unwrap(), &nu.translate(&s).unwrap(), 1.0).unwrap();
        assert!((l0 - l1).abs() < 1e-9);
    }

    #[test]
    fn patch_bound_dominates_every_direction_in_the_patch() {
        use crate::rng;
        use rand::Rng as _;
        let mut r = rng::rng(99);
        for seed in 0..30 {
            let d = 2 + (seed % 2) as usize;
            let mu = cloud(d, 3 + (seed % 5) as usize, seed);
            let nu = cloud(d, 4 + (seed % 3) as usize, seed + 77);
            for p in [1.0, 1.5, 2.0, 3.0] {
                let obj = Objective::new(&mu, &nu, p).unwrap();
                let lip = lipschitz_constant(&mu, &nu, p).unwrap();
                for c in sample_uniform(d, 5, seed) {
                    for radius in [1e-3, 0.05, 0.3, 1.0] {
                        let (w, ub) = obj.patch_bound(c.as_slice(), radius, lip);
                        assert!((w - obj.value(c.as_slice())).abs() < 1e-12);
                        for _ in 0..40 {
                            let step: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
                            let scale = radius * r.random_range(0.0..1.0f64);
                            let u: Vec<f64> = c
                                .as_slice()
                                .iter()
                                .zip(&step)
                                .map(|(a, b)| a + scale * b / crate::numeric::norm(&step))
                                .collect();
                            let u = Direction::new(u).unwrap();
                            if crate::numeric::distance(u.as_slice(), c.as_slice()) > radius {
                                continue;
                            }
                            assert!(obj.value(u.as_slice()) <= ub * (1.0 + 1e-12) + 1e-14);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_zero_starts() {
        let mu = cloud(2, 3, 1);
        assert!(matches!(
            max_sliced(&mu, &mu, 1.0, 0, 0),
            Err(Error::ArgumentOutOfRange(_))
        ));
    }

    mod props {
        use super::*;
        use crate::maxsliced::max_sliced_certified;
        use crate::ot_exact::wasserstein_exact;
        use crate::sphere::project;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn identity_of_indiscernibles(d in 2..=3usize, n in 1..8usize, seed in any::<u64>()) {
                let mu = cloud(d, n, seed);
                let same = max_sliced_certified(&mu, &mu, 1.0, 1e-6).unwrap();
                prop_assert_eq!(same.lower, 0.0);
                prop_assert!(same.upper < 1e-6);
                for k in 0..d {
                    let a = project(&mu, &Direction::axis(d, k)).unwrap();
                    prop_assert_eq!(crate::ot1d::wasserstein_1d(&a, &a, 1.0).unwrap(), 0.0);
                }
                let nu = cloud(d, n, seed ^ 7);
                let w = wasserstein_exact(&mu, &nu, 1.0).unwrap().primal_value;
                if w > 1e-6 {
                    let r = max_sliced_certified(&mu, &nu, 1.0, 1e-6).unwrap();
                    prop_assert!(r.lower > 0.0);
                    prop_assert!(r.lower <= w + 1e-9);
                }
            }

            #[test]
            fn heuristic_is_below_certified_upper(d in 2..=3usize, n in 1..8usize, m in 1..8usize, seed in any::<u64>()) {
                let mu = cloud(d, n, seed);
                let nu = cloud(d, m, seed ^ 3);
                let h = max_sliced(&mu, &nu, 2.0, 4, seed).unwrap();
                let c = max_sliced_certified(&mu, &nu, 2.0, 1e-6).unwrap();
                prop_assert!(h.lower <= c.upper);
                prop_assert!(c.lower <= c.upper);
            }
        }
    }
}
