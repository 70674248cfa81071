//! Finitely supported probability measures on R^d and seeded generators.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_order, Error, Result};
use crate::numeric::{compensated_sum, norm};
use crate::rng;

/// Tolerance within which a weight vector is accepted and rescaled to sum 1.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// A weighted point cloud `sum_i w_i delta_{x_i}` in R^d.
///
/// Points are stored row-major in one flat buffer. Duplicate points are
/// kept as separate atoms; see [`DiscreteMeasure::canonicalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from points and weights.
    ///
    /// Weights must be finite and nonnegative and sum to 1 within
    /// [`WEIGHT_SUM_TOLERANCE`]; they are then rescaled to sum to 1.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or(Error::EmptySupport)?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords, weights)
    }

    /// Builds a measure from a row-major coordinate buffer.
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::validated(dim, coords, weights, true)
    }

    fn validated(
        dim: usize,
        coords: Vec<f64>,
        mut weights: Vec<f64>,
        renormalize: bool,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if weights.is_empty() || coords.is_empty() {
            return Err(Error::EmptySupport);
        }
        if coords.len() != weights.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: weights.len() * dim,
                found: coords.len(),
            });
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index });
        }
        if let Some(index) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::NegativeWeight {
                index,
                value: weights[index],
            });
        }
        let sum = compensated_sum(weights.iter().copied());
        if !((sum - 1.0).abs() <= WEIGHT_SUM_TOLERANCE) {
            return Err(Error::WeightSumOutOfRange { sum });
        }
        if renormalize && sum != 1.0 {
            for w in &mut weights {
                *w /= sum;
            }
        }
        Ok(Self {
            dim,
            coords,
            weights,
        })
    }

    /// Uniform weights `1/n` on the given points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or(Error::EmptySupport)?;
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        Self::uniform_flat(dim, points.concat())
    }

    /// Uniform weights, kept at exactly `1/n` (no renormalization).
    pub fn uniform_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        let n = if dim == 0 { 0 } else { coords.len() / dim };
        Self::validated(dim, coords, vec![1.0 / n.max(1) as f64; n], false)
    }

    /// Point mass at `x`.
    pub fn dirac(x: Vec<f64>) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of atoms (duplicates counted separately).
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// True when all weights are equal (exactly, after normalization).
    pub fn has_uniform_weights(&self) -> bool {
        let w0 = self.weights[0];
        self.weights
            .iter()
            .all(|w| (w - w0).abs() <= 1e-14 * w0.max(f64::MIN_POSITIVE))
    }

    /// Weighted mean of the support.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (x, w) in self.points().zip(&self.weights) {
            for (mk, xk) in m.iter_mut().zip(x) {
                *mk += w * xk;
            }
        }
        m
    }

    /// Pushforward through an arbitrary map R^d -> R^k.
    pub fn map_points<F>(&self, out_dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut coords = vec![0.0; self.len() * out_dim];
        for (x, y) in self.points().zip(coords.chunks_exact_mut(out_dim)) {
            f(x, y);
        }
        Self::validated(out_dim, coords, self.weights.clone(), false)
    }

    /// Pushforward by `x -> x + shift`.
    pub fn translate(&self, shift: &[f64]) -> Result<Self> {
        self.check_dim(shift.len())?;
        self.map_points(self.dim, |x, y| {
            for ((yk, xk), sk) in y.iter_mut().zip(x).zip(shift) {
                *yk = xk + sk;
            }
        })
    }

    /// Pushforward by `x -> s * x`.
    pub fn scale(&self, s: f64) -> Result<Self> {
        self.map_points(self.dim, |x, y| {
            for (yk, xk) in y.iter_mut().zip(x) {
                *yk = s * xk;
            }
        })
    }

    /// Pushforward by the linear map with row-major `matrix` (d x d).
    pub fn linear_map(&self, matrix: &[f64]) -> Result<Self> {
        let d = self.dim;
        if matrix.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: matrix.len(),
            });
        }
        self.map_points(d, |x, y| {
            for (r, yk) in y.iter_mut().enumerate() {
                *yk = matrix[r * d..(r + 1) * d]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum();
            }
        })
    }

    /// Mixture `(1 - t) * self + t * other`, concatenating supports.
    pub fn mixture(&self, other: &Self, t: f64) -> Result<Self> {
        self.check_dim(other.dim)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::ArgumentOutOfRange(format!(
                "mixture weight {t} not in [0, 1]"
            )));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        let mut weights: Vec<f64> = self.weights.iter().map(|w| w * (1.0 - t)).collect();
        weights.extend(other.weights.iter().map(|w| w * t));
        Self::from_flat(self.dim, coords, weights)
    }

    /// Merges atoms with identical coordinates, summing their weights.
    ///
    /// Atoms keep the order of their first occurrence.
    pub fn canonicalize(&self) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (self.point(a), self.point(b));
            pa.iter()
                .zip(pb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut rep = vec![usize::MAX; self.len()];
        let mut k = 0;
        while k < order.len() {
            let first = order[k];
            let mut end = k;
            while end < order.len() && self.point(order[end]) == self.point(first) {
                rep[order[end]] = first;
                end += 1;
            }
            k = end;
        }
        let mut coords = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut slot = vec![usize::MAX; self.len()];
        for i in 0..self.len() {
            let r = rep[i];
            if slot[r] == usize::MAX {
                slot[r] = weights.len();
                coords.extend_from_slice(self.point(r));
                weights.push(0.0);
            }
            weights[slot[r]] += self.weights[i];
        }
        Self {
            dim: self.dim,
            coords,
            weights,
        }
    }

    pub(crate) fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim == other {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other,
            })
        }
    }
}

/// `M_p(mu) = (sum_i w_i |x_i|^p)^{1/p}` with the Euclidean norm.
pub fn moment_p(mu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_order(p)?;
    let s = compensated_sum(mu.points().zip(mu.weights()).map(|(x, w)| w * norm(x).powf(p)));
    Ok(s.max(0.0).powf(1.0 / p))
}

/// Recipe for a (random) discrete measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// Uniform law on `[0, side]^dim`. Continuous; sample it with `EmpiricalOf`.
    UniformCube {
        dim: usize,
        #[serde(default = "default_side")]
        side: f64,
    },
    /// Standard Gaussian on R^dim. Continuous; sample it with `EmpiricalOf`.
    StandardGaussian { dim: usize },
    /// `1/2 delta_x + 1/2 delta_y`.
    TwoPoint { x: Vec<f64>, y: Vec<f64> },
    /// Empirical measure of `n` i.i.d. draws from `base`, weights `1/n`.
    EmpiricalOf { base: Box<GeneratorSpec>, n: usize },
}

fn default_side() -> f64 {
    1.0
}

impl GeneratorSpec {
    pub fn uniform_cube(dim: usize) -> Self {
        GeneratorSpec::UniformCube { dim, side: 1.0 }
    }

    pub fn gaussian(dim: usize) -> Self {
        GeneratorSpec::StandardGaussian { dim }
    }

    pub fn empirical(base: GeneratorSpec, n: usize) -> Self {
        GeneratorSpec::EmpiricalOf {
            base: Box::new(base),
            n,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GeneratorSpec::UniformCube { dim, .. } | GeneratorSpec::StandardGaussian { dim } => *dim,
            GeneratorSpec::TwoPoint { x, .. } => x.len(),
            GeneratorSpec::EmpiricalOf { base, .. } => base.dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            GeneratorSpec::UniformCube { dim, side } => {
                if *dim == 0 || !(side.is_finite() && *side > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "uniform_cube needs dim >= 1 and side > 0 (dim={dim}, side={side})"
                    )));
                }
            }
            GeneratorSpec::StandardGaussian { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidSpec("standard_gaussian needs dim >= 1".into()));
                }
            }
            GeneratorSpec::TwoPoint { x, y } => {
                if x.is_empty() || x.len() != y.len() {
                    return Err(Error::InvalidSpec(format!(
                        "two_point endpoints have dims {} and {}",
                        x.len(),
                        y.len()
                    )));
                }
            }
            GeneratorSpec::EmpiricalOf { base, n } => {
                if *n == 0 {
                    return Err(Error::InvalidSpec("empirical_of needs n >= 1".into()));
                }
                if matches!(**base, GeneratorSpec::EmpiricalOf { .. }) {
                    return Err(Error::InvalidSpec("nested empirical_of".into()));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    fn sample_into(&self, rng: &mut rng::Rng, out: &mut [f64]) {
        match self {
            GeneratorSpec::UniformCube { side, .. } => {
                for c in out {
                    *c = side * rng.random::<f64>();
                }
            }
            GeneratorSpec::StandardGaussian { .. } => {
                for c in out {
                    *c = rng.sample(StandardNormal);
                }
            }
            GeneratorSpec::TwoPoint { x, y } => {
                let src = if rng.random::<bool>() { y } else { x };
                out.copy_from_slice(src);
            }
            GeneratorSpec::EmpiricalOf { .. } => unreachable!("validated: no nested empirical"),
        }
    }
}

/// Realizes a generator spec. Deterministic for a fixed `(spec, seed)`.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<DiscreteMeasure> {
    spec.validate()?;
    match spec {
        GeneratorSpec::TwoPoint { x, y } => {
            DiscreteMeasure::new(vec![x.clone(), y.clone()], vec![0.5, 0.5])
        }
        GeneratorSpec::EmpiricalOf { base, n } => {
            let dim = base.dim();
            let mut rng = rng::rng(seed);
            let mut coords = vec![0.0; n * dim];
            for chunk in coords.chunks_exact_mut(dim) {
                base.sample_into(&mut rng, chunk);
            }
            DiscreteMeasure::uniform_flat(dim, coords)
        }
        _ => Err(Error::InvalidSpec(
            "continuous law; wrap it in empirical_of to obtain a discrete measure".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_atom_and_dirac() {
        let m = DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.len(), 2);
        let d = DiscreteMeasure::new(vec![vec![0.0, 0.0]], vec![1.0]).unwrap();
        assert_eq!(d.point(0), &[0.0, 0.0]);
        assert_eq!(d.weights(), &[1.0]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.4]),
            Err(Error::WeightSumOutOfRange { .. })
        ));
        assert!(matches!(
            DiscreteMeasure::new(vec![], vec![]),
            Err(Error::EmptySupport)
        ));
        assert!(matches!(
            DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
        assert!(matches!(
            DiscreteMeasure::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            DiscreteMeasure::new(vec![vec![f64::NAN]], vec![1.0]),
            Err(Error::NonFiniteCoordinate { .. })
        ));
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let m = DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5 + 5e-10]).unwrap();
        let s: f64 = m.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moment_examples() {
        let origin = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
        for p in [1.0, 2.0, 3.7] {
            assert_eq!(moment_p(&origin, p).unwrap(), 0.0);
        }
        let d = DiscreteMeasure::dirac(vec![3.0, 4.0]).unwrap();
        assert!((moment_p(&d, 1.0).unwrap() - 5.0).abs() < 1e-15);
        let m = DiscreteMeasure::new(vec![vec![0.0], vec![2.0]], vec![0.5, 0.5]).unwrap();
        assert!((moment_p(&m, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(moment_p(&m, 0.5), Err(Error::InvalidOrder(_))));
    }

    #[test]
    fn generator_contracts() {
        let tp = GeneratorSpec::TwoPoint {
            x: vec![0.0, 0.0],
            y: vec![1.0, 0.0],
        };
        let m = generate(&tp, 0).unwrap();
        assert_eq!(m.point(0), &[0.0, 0.0]);
        assert_eq!(m.point(1), &[1.0, 0.0]);
        assert_eq!(m.weights(), &[0.5, 0.5]);

        let spec = GeneratorSpec::empirical(GeneratorSpec::uniform_cube(2), 100);
        let a = generate(&spec, 42).unwrap();
        assert_eq!(a.len(), 100);
        assert!(a.weights().iter().all(|&w| w == 0.01));
        assert!(a.coords().iter().all(|&c| (0.0..=1.0).contains(&c)));
        assert_eq!(a, generate(&spec, 42).unwrap());
        assert_ne!(a, generate(&spec, 43).unwrap());

        assert!(matches!(
            generate(&GeneratorSpec::uniform_cube(2), 0),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            generate(&GeneratorSpec::empirical(GeneratorSpec::gaussian(0), 3), 0),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn cube_sample_mean_near_half() {
        let n = 4000;
        let m = generate(&GeneratorSpec::empirical(GeneratorSpec::uniform_cube(3), n), 5).unwrap();
        let mean = m.mean();
        for c in mean {
            assert!((c - 0.5).abs() < 4.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn spec_serde_shape() {
        let spec = GeneratorSpec::empirical(GeneratorSpec::uniform_cube(3), 10);
        let js = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            js,
            r#"{"kind":"empirical_of","base":{"kind":"uniform_cube","dim":3,"side":1.0},"n":10}"#
        );
        let back: GeneratorSpec = serde_json::from_str(js.as_str()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn canonicalize_merges_duplicates() {
        let m = DiscreteMeasure::new(
            vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]],
            vec![0.25, 0.25, 0.5],
        )
        .unwrap();
        let c = m.canonicalize();
        assert_eq!(c.len(), 2);
        assert_eq!(c.point(0), &[1.0, 0.0]);
        assert_eq!(c.weights(), &[0.75, 0.25]);
    }

    proptest! {
        #[test]
        fn moment_is_one_homogeneous(seed in any::<u64>(), s in -5.0f64..5.0, p in 1.0f64..4.0) {
            let m = generate(&GeneratorSpec::empirical(GeneratorSpec::gaussian(3), 17), seed).unwrap();
            let lhs = moment_p(&m.scale(s).unwrap(), p).unwrap();
            let rhs = s.abs() * moment_p(&m, p).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1.0));
        }
    }
}
