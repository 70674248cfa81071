//! Exact one-dimensional optimal transport through quantile functions.
//!
//! For measures on the line, `W_p^p = int_0^1 |F_mu^{-1}(t) - F_nu^{-1}(t)|^p dt`.
//! Both quantile functions are step functions whose jumps sit at the
//! cumulative weights, so the integral is a finite sum over the merged
//! breakpoint set. The same sweep emits the monotone (north-west corner)
//! coupling.

use crate::error::{check_order, Error, Result};
use crate::measures::DiscreteMeasure;
use crate::numeric::CompensatedSum;

/// A probability measure on R with sorted, distinct atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure1D {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    cum: Vec<f64>,
}

impl Measure1D {
    /// Sorts `values`, merges equal ones and builds cumulative weights.
    ///
    /// `weights` must be nonnegative and sum to 1 (within round-off); the
    /// final cumulative weight is pinned to exactly 1.
    pub fn from_weighted(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySupport);
        }
        if values.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                found: weights.len(),
            });
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut atoms: Vec<f64> = Vec::with_capacity(values.len());
        let mut merged: Vec<f64> = Vec::with_capacity(values.len());
        for &k in &order {
            match atoms.last() {
                Some(&last) if last == values[k] => *merged.last_mut().unwrap() += weights[k],
                _ => {
                    atoms.push(values[k]);
                    merged.push(weights[k]);
                }
            }
        }
        let cum = cumulative(merged.iter().copied(), merged.len());
        Ok(Self {
            atoms,
            weights: merged,
            cum,
        })
    }

    /// Point mass at `c`.
    pub fn dirac(c: f64) -> Self {
        Self {
            atoms: vec![c],
            weights: vec![1.0],
            cum: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cumulative_weights(&self) -> &[f64] {
        &self.cum
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Pushforward by `x -> x + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|a| a + c).collect(),
            weights: self.weights.clone(),
            cum: self.cum.clone(),
        }
    }

    /// `F^{-1}(t) = inf { x : mu((-inf, x]) > t }` for `t` in `[0, 1)`.
    ///
    /// The inequality is strict: at `t` equal to a cumulative weight the
    /// quantile jumps to the next atom.
    pub fn quantile(&self, t: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::ArgumentOutOfRange(format!(
                "quantile level {t} not in [0, 1)"
            )));
        }
        let k = self.cum.partition_point(|&c| c <= t);
        Ok(self.atoms[k.min(self.atoms.len() - 1)])
    }
}

/// Prefix sums by compensated summation, clamped to `[0, 1]`, last entry 1.
fn cumulative(weights: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
    let mut acc = CompensatedSum::new();
    let mut cum = Vec::with_capacity(n);
    for w in weights {
        acc.add(w);
        cum.push(acc.value().min(1.0));
    }
    if let Some(last) = cum.last_mut() {
        *last = 1.0;
    }
    cum
}

/// Converts a measure on R^1 to its sorted, merged form.
pub fn to_measure1d(mu: &DiscreteMeasure) -> Result<Measure1D> {
    if mu.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: mu.dim(),
        });
    }
    Measure1D::from_weighted(mu.coords(), mu.weights())
}

/// Walks the merged breakpoints of two cumulative weight vectors and calls
/// `f(i, j, mass)` for each interval of positive length on which the
/// quantile functions equal atom `i` and atom `j` respectively.
///
/// Both vectors must be nondecreasing and end at exactly 1.
pub(crate) fn sweep<F: FnMut(usize, usize, f64)>(a_cum: &[f64], b_cum: &[f64], mut f: F) {
    let (na, nb) = (a_cum.len(), b_cum.len());
    let (mut i, mut j) = (0, 0);
    let mut t = 0.0;
    loop {
        let (ca, cb) = (a_cum[i], b_cum[j]);
        let next = ca.min(cb);
        if next > t {
            f(i, j, next - t);
            t = next;
        }
        let adv_i = ca <= cb && i + 1 < na;
        let adv_j = cb <= ca && j + 1 < nb;
        if !adv_i && !adv_j {
            break;
        }
        if adv_i {
            i += 1;
        }
        if adv_j {
            j += 1;
        }
    }
}

/// `W_p(mu, nu)^p` for two sorted measures.
pub fn wasserstein_1d_pow(mu: &Measure1D, nu: &Measure1D, p: f64) -> Result<f64> {
    check_order(p)?;
    let mut acc = CompensatedSum::new();
    sweep(&mu.cum, &nu.cum, |i, j, m| {
        acc.add(m * (mu.atoms[i] - nu.atoms[j]).abs().powf(p));
    });
    Ok(acc.value().max(0.0))
}

/// Exact `W_p(mu, nu)` between measures on R.
pub fn wasserstein_1d(mu: &Measure1D, nu: &Measure1D, p: f64) -> Result<f64> {
    Ok(wasserstein_1d_pow(mu, nu, p)?.powf(1.0 / p))
}

/// Unmerged sorted view of weighted values, used on hot paths where the
/// original atom index of each sorted position is needed.
#[derive(Debug, Clone)]
pub(crate) struct SortedValues {
    pub order: Vec<usize>,
    pub values: Vec<f64>,
    pub cum: Vec<f64>,
}

impl SortedValues {
    pub fn new(values: Vec<f64>, weights: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let sorted: Vec<f64> = order.iter().map(|&k| values[k]).collect();
        let cum = cumulative(order.iter().map(|&k| weights[k]), order.len());
        Self {
            order,
            values: sorted,
            cum,
        }
    }
}

/// `W_p^p` between two unmerged sorted views.
pub(crate) fn sorted_pow(a: &SortedValues, b: &SortedValues, p: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    sweep(&a.cum, &b.cum, |i, j, m| {
        acc.add(m * (a.values[i] - b.values[j]).abs().powf(p));
    });
    acc.value().max(0.0)
}

/// The order-preserving coupling between two measures on R.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCoupling {
    /// `(source atom, target atom, mass)` with positive masses, lexicographically sorted.
    pub triples: Vec<(usize, usize, f64)>,
}

impl MonotoneCoupling {
    /// `sum mass * |a_i - b_j|^p`.
    pub fn cost(&self, mu: &Measure1D, nu: &Measure1D, p: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for &(i, j, m) in &self.triples {
            acc.add(m * (mu.atoms[i] - nu.atoms[j]).abs().powf(p));
        }
        acc.value()
    }
}

/// North-west corner coupling over the sorted atoms.
pub fn monotone_coupling(mu: &Measure1D, nu: &Measure1D) -> MonotoneCoupling {
    let mut triples = Vec::with_capacity(mu.len() + nu.len());
    sweep(&mu.cum, &nu.cum, |i, j, m| triples.push((i, j, m)));
    MonotoneCoupling { triples }
}
