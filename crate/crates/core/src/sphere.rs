//! Unit-sphere utilities: directions, surface area, quadrature grids,
//! projections of measures and covering nets.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::numeric::{dot, norm};
use crate::ot1d::Measure1D;
use crate::rng;

/// A unit vector in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalizes `v`; fails on the zero vector or non-finite input.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let r = norm(&v);
        if v.is_empty() || !r.is_finite() || r == 0.0 {
            return Err(Error::ArgumentOutOfRange(
                "direction must be a finite nonzero vector".into(),
            ));
        }
        Ok(Self(v.into_iter().map(|x| x / r).collect()))
    }

    /// `(cos theta, sin theta)`.
    pub fn from_angle(theta: f64) -> Self {
        Self(vec![theta.cos(), theta.sin()])
    }

    /// Standard basis vector `e_k` in R^d.
    pub fn axis(d: usize, k: usize) -> Self {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        Self(v)
    }

    pub(crate) fn from_unit_unchecked(v: Vec<f64>) -> Self {
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|x| -x).collect())
    }
}

/// Surface measure `A_d = 2 pi^{d/2} / Gamma(d/2)` of the unit sphere in R^d.
pub fn surface_area(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    // A_{d+2} = 2 pi A_d / d, seeded with A_2 = 2 pi and A_3 = 4 pi.
    let (mut k, mut a) = if d % 2 == 0 { (2, 2.0 * PI) } else { (3, 4.0 * PI) };
    while k < d {
        a *= 2.0 * PI / k as f64;
        k += 2;
    }
    Ok(a)
}

/// `count` i.i.d. uniform directions on S^{d-1} (normalized Gaussians).
pub fn sample_uniform(d: usize, count: usize, seed: u64) -> Vec<Direction> {
    let mut r = rng::rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut buf = vec![0.0; d];
    while out.len() < count {
        for x in buf.iter_mut() {
            *x = r.sample(StandardNormal);
        }
        if let Ok(v) = Direction::new(buf.clone()) {
            out.push(v);
        }
    }
    out
}

/// Directions with positive weights approximating the (unnormalized)
/// surface integral over S^{d-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub directions: Vec<Direction>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `sum_k w_k f(v_k)`, summed in grid order.
    pub fn integrate<F: Fn(&Direction) -> f64>(&self, f: F) -> f64 {
        self.directions
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * f(v))
            .sum()
    }
}

/// Smallest accepted grid resolution.
pub const MIN_RESOLUTION: usize = 4;

/// Equal-weight grid: equally spaced angles for d = 2 (periodic trapezoid
/// rule), a Fibonacci spiral for d = 3. Weights sum to `A_d`.
pub fn quadrature_grid(d: usize, resolution: usize) -> Result<QuadratureGrid> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::ArgumentOutOfRange(format!(
            "quadrature resolution {resolution} below {MIN_RESOLUTION}"
        )));
    }
    let directions: Vec<Direction> = match d {
        2 => (0..resolution)
            .map(|k| Direction::from_angle(2.0 * PI * k as f64 / resolution as f64))
            .collect(),
        3 => {
            let golden_angle = PI * (3.0 - 5f64.sqrt());
            (0..resolution)
                .map(|k| {
                    let z = 1.0 - (2 * k + 1) as f64 / resolution as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden_angle * k as f64;
                    Direction::new(vec![r * phi.cos(), r * phi.sin(), z])
                        .expect("spiral point is nonzero")
                })
                .collect()
        }
        _ => return Err(Error::UnsupportedDimension(d)),
    };
    let w = surface_area(d)? / resolution as f64;
    Ok(QuadratureGrid {
        weights: vec![w; directions.len()],
        directions,
    })
}

/// Projected values `v . x_i`.
pub fn project_values(mu: &DiscreteMeasure, v: &[f64]) -> Vec<f64> {
    mu.points().map(|x| dot(v, x)).collect()
}

/// The pushforward `mu_v` of `mu` by `x -> v . x`, sorted and merged.
pub fn project(mu: &DiscreteMeasure, v: &Direction) -> Result<Measure1D> {
    mu.check_dim(v.dim())?;
    Measure1D::from_weighted(&project_values(mu, v.as_slice()), mu.weights())
}

/// A finite direction set with `max_i |v_i . x| >= |x| / 2` for every x.
///
/// d = 2: angles `{0, pi/3, 2pi/3}`; every line is within `pi/6` of one of
/// them, so the bound is `cos(pi/6) > 1/2`.
///
/// 3 <= d <= 6: the normalized nonzero vectors of `{-1, 0, 1}^d` (one per
/// antipodal pair). For unit x with sorted magnitudes `a_1 >= ... >= a_d`
/// the top-k sign vectors give `max_k (a_1 + ... + a_k) / sqrt(k)`. If that
/// were below 1/2 then `1 = sum a_i^2 <= a_1 * sum a_i < sqrt(d) / 4`,
/// impossible for d <= 16.
pub fn half_norm_net(d: usize) -> Result<Vec<Direction>> {
    match d {
        2 => Ok((0..3)
            .map(|k| Direction::from_angle(k as f64 * PI / 3.0))
            .collect()),
        3..=6 => {
            let mut out = Vec::new();
            let total = 3usize.pow(d as u32);
            for code in 1..total {
                let mut c = code;
                let v: Vec<f64> = (0..d)
                    .map(|_| {
                        let digit = c % 3;
                        c /= 3;
                        digit as f64 - 1.0
                    })
                    .collect();
                let first = v.iter().find(|x| **x != 0.0);
                if first.is_some_and(|x| *x > 0.0) {
                    out.push(Direction::new(v).expect("nonzero"));
                }
            }
            Ok(out)
        }
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// Haar-random rotation (orthogonal matrix with determinant +1), row-major.
pub fn random_rotation(d: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::rng(seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| r.sample(StandardNormal)).collect();
        for b in &q {
            let c = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            q.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    let mut m: Vec<f64> = q.concat();
    if determinant(&m, d) < 0.0 {
        for x in &mut m[..d] {
            *x = -*x;
        }
    }
    m
}

fn determinant(m: &[f64], d: usize) -> f64 {
    let mut a = m.to_vec();
    let mut det = 1.0;
    for c in 0..d {
        let piv = (c..d)
            .max_by(|&i, &j| a[i * d + c].abs().total_cmp(&a[j * d + c].abs()))
            .unwrap();
        if a[piv * d + c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            for k in 0..d {
                a.swap(piv * d + k, c * d + k);
            }
            det = -det;
        }
        det *= a[c * d + c];
        for i in c + 1..d {
            let f = a[i * d + c] / a[c * d + c];
            for k in c..d {
                a[i * d + k] -= f * a[c * d + k];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::moment_p;
    use crate::ot1d::wasserstein_1d;

    #[test]
    fn surface_areas() {
        assert!((surface_area(2).unwrap() - 2.0 * PI).abs() < 1e-15);
        assert!((surface_area(3).unwrap() - 4.0 * PI).abs() < 1e-14);
        assert!((surface_area(4).unwrap() - 2.0 * PI * PI).abs() < 1e-13);
        // A_5 = 8 pi^2 / 3
        assert!((surface_area(5).unwrap() - 8.0 * PI * PI / 3.0).abs() < 1e-12);
        assert!(matches!(surface_area(1), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn uniform_samples() {
        let vs = sample_uniform(4, 100, 9);
        assert!(vs.iter().all(|v| (norm(v.as_slice()) - 1.0).abs() <= 1e-12));
        assert_eq!(vs, sample_uniform(4, 100, 9));
        let count = 100_000;
        let vs = sample_uniform(2, count, 3);
        for k in 0..2 {
            let mean = vs.iter().map(|v| v.as_slice()[k]).sum::<f64>() / count as f64;
            assert!(mean.abs() < 0.02);
        }
    }

    #[test]
    fn grids() {
        let g = quadrature_grid(2, 4).unwrap();
        let expect = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (v, (x, y)) in g.directions.iter().zip(expect) {
            assert!((v.as_slice()[0] - x).abs() < 1e-15 && (v.as_slice()[1] - y).abs() < 1e-15);
        }
        assert!(g.weights.iter().all(|&w| (w - PI / 2.0).abs() < 1e-15));
        for res in [8, 100, 1000] {
            let g3 = quadrature_grid(3, res).unwrap();
            assert!((g3.total_weight() - 4.0 * PI).abs() < 1e-10);
            assert!((g3.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-10);
            assert!(g3
                .directions
                .iter()
                .all(|v| (norm(v.as_slice()) - 1.0).abs() <= 1e-12));
        }
        assert!(matches!(quadrature_grid(4, 64), Err(Error::UnsupportedDimension(4))));
        assert!(quadrature_grid(2, 3).is_err());
    }

    #[test]
    fn circle_integral_of_abs_cos() {
        let f = |v: &Direction| v.as_slice()[0].abs();
        // For 4 | N the node sum has the closed form 2 cot(pi / N).
        let coarse = quadrature_grid(2, 64).unwrap().integrate(f);
        let trapezoid = 2.0 * PI / 64.0 * 2.0 / (PI / 64.0).tan();
        assert!((coarse - trapezoid).abs() < 1e-12);
        assert!((coarse - 4.0).abs() < 4e-3);
        let fine = quadrature_grid(2, 4096).unwrap().integrate(f);
        assert!((fine - 4.0).abs() < 1e-6);
    }

    #[test]
    fn projections() {
        let mu = DiscreteMeasure::new(
            vec![vec![1.0, 2.0], vec![-3.0, 0.5], vec![1.0, 7.0]],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        let p = project(&mu, &Direction::axis(2, 0)).unwrap();
        assert_eq!(p.atoms(), &[-3.0, 1.0]);
        assert_eq!(p.weights(), &[0.3, 0.7]);
        let d = DiscreteMeasure::dirac(vec![2.0, -1.0]).unwrap();
        let v = Direction::new(vec![3.0, 4.0]).unwrap();
        let pd = project(&d, &v).unwrap();
        assert_eq!(pd.atoms().len(), 1);
        assert!((pd.atoms()[0] - 0.4).abs() < 1e-15);
        for v in sample_uniform(2, 50, 1) {
            let pv = project(&mu, &v).unwrap();
            let line =
                DiscreteMeasure::from_flat(1, pv.atoms().to_vec(), pv.weights().to_vec()).unwrap();
            for p in [1.0, 2.0, 3.0] {
                assert!(moment_p(&line, p).unwrap() <= moment_p(&mu, p).unwrap() + 1e-12);
            }
        }
        assert!(matches!(
            project(&mu, &Direction::axis(3, 0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_of_mixture_is_mixture_of_projections() {
        let a = DiscreteMeasure::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]], vec![0.5, 0.5]).unwrap();
        let b = DiscreteMeasure::new(vec![vec![1.0, 1.0], vec![-1.0, 3.0]], vec![0.25, 0.75]).unwrap();
        let t = 0.3;
        let mix = a.mixture(&b, t).unwrap();
        let v = Direction::new(vec![0.6, -0.8]).unwrap();
        let lhs = project(&mix, &v).unwrap();
        let mut vals = project_values(&a, v.as_slice());
        vals.extend(project_values(&b, v.as_slice()));
        let mut ws: Vec<f64> = a.weights().iter().map(|w| w * (1.0 - t)).collect();
        ws.extend(b.weights().iter().map(|w| w * t));
        let rhs = Measure1D::from_weighted(&vals, &ws).unwrap();
        assert_eq!(lhs.atoms(), rhs.atoms());
        for (x, y) in lhs.weights().iter().zip(rhs.weights()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_distance_is_lipschitz_in_direction() {
        use crate::measures::{generate, GeneratorSpec};
        for seed in 0..30u64 {
            let mu = generate(&GeneratorSpec::empirical(GeneratorSpec::gaussian(3), 12), seed).unwrap();
            let nu = generate(&GeneratorSpec::empirical(GeneratorSpec::gaussian(3), 9), seed + 100).unwrap();
            let dirs = sample_uniform(3, 2, seed + 7);
            let (u, v) = (&dirs[0], &dirs[1]);
            for p in [1.0, 2.0] {
                let wu = wasserstein_1d(&project(&mu, u).unwrap(), &project(&nu, u).unwrap(), p).unwrap();
                let wv = wasserstein_1d(&project(&mu, v).unwrap(), &project(&nu, v).unwrap(), p).unwrap();
                let chord = crate::numeric::distance(u.as_slice(), v.as_slice());
                let l = moment_p(&mu, p).unwrap() + moment_p(&nu, p).unwrap();
                assert!((wu - wv).abs() <= chord * l + 1e-9);
            }
        }
    }

    fn covering_margin(net: &[Direction], x: &[f64]) -> f64 {
        net.iter().map(|v| dot(v.as_slice(), x).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn half_norm_net_covers() {
        let net2 = half_norm_net(2).unwrap();
        assert_eq!(net2.len(), 3);
        for d in 2..=6 {
            let net = half_norm_net(d).unwrap();
            for x in sample_uniform(d, 10_000, d as u64) {
                let m = covering_margin(&net, x.as_slice());
                assert!(m >= 0.5 && m <= 1.0 + 1e-12, "d={d} margin {m}");
            }
            for k in 0..d {
                assert!(covering_margin(&net, Direction::axis(d, k).as_slice()) >= 0.5);
            }
        }
        assert!(matches!(half_norm_net(7), Err(Error::UnsupportedDimension(7))));
        assert!(matches!(half_norm_net(1), Err(Error::UnsupportedDimension(1))));
    }

    #[test]
    fn rotations_are_orthogonal() {
        for d in 2..=5 {
            let r = random_rotation(d, d as u64);
            for i in 0..d {
                for j in 0..d {
                    let ip = dot(&r[i * d..(i + 1) * d], &r[j * d..(j + 1) * d]);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - expect).abs() < 1e-12);
                }
            }
            assert!((determinant(&r, d) - 1.0).abs() < 1e-10);
        }
    }
}
