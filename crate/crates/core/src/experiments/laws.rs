//! Closed-form law of `v . U` for `U` uniform on the unit square.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ks_uniform;
use crate::rng;
use crate::sphere::Direction;

/// CDF of `v1 U1 + v2 U2` with `U1, U2` independent uniform on `[0, 1]`.
///
/// A negative coefficient is reflected, `v U = v + |v| (1 - U)`, which shifts
/// the argument. With `a >= b` the absolute coefficients, the law is the
/// trapezoid on `[0, a + b]` with flat top on `[b, a]`; if `b = 0` it is
/// uniform on `[0, a]`.
pub fn projected_square_cdf(v: &Direction, x: f64) -> Result<f64> {
    if v.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: v.dim(),
        });
    }
    let (v1, v2) = (v.as_slice()[0], v.as_slice()[1]);
    let shift = v1.min(0.0) + v2.min(0.0);
    let t = x - shift;
    let (a, b) = if v1.abs() >= v2.abs() {
        (v1.abs(), v2.abs())
    } else {
        (v2.abs(), v1.abs())
    };
    if t.is_nan() {
        return Ok(f64::NAN);
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    if t >= a + b {
        return Ok(1.0);
    }
    if b == 0.0 {
        return Ok((t / a).clamp(0.0, 1.0));
    }
    let f = if t <= b {
        t * t / (2.0 * a * b)
    } else if t <= a {
        (2.0 * t - b) / (2.0 * a)
    } else {
        let s = a + b - t;
        1.0 - s * s / (2.0 * a * b)
    };
    Ok(f.clamp(0.0, 1.0))
}

/// The map `g_v = F_v` pushing the projected square law to uniform `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformizingMap {
    pub v: Direction,
    /// Peak density `1 / max(|v1|, |v2|)`, at most `sqrt 2`.
    pub lipschitz: f64,
}

impl UniformizingMap {
    pub fn apply(&self, x: f64) -> f64 {
        projected_square_cdf(&self.v, x).expect("dimension checked at construction")
    }
}

pub fn uniformizing_map(v: &Direction) -> Result<UniformizingMap> {
    projected_square_cdf(v, 0.0)?;
    let a = v.as_slice()[0].abs().max(v.as_slice()[1].abs());
    Ok(UniformizingMap {
        v: v.clone(),
        lipschitz: 1.0 / a,
    })
}

/// Kolmogorov-Smirnov distance to uniform of `g_v(v . U)` over `samples`
/// uniform points `U` of the unit square.
pub fn pit_statistic(v: &Direction, samples: usize, seed: u64) -> Result<f64> {
    let g = uniformizing_map(v)?;
    let mut r = rng::rng(seed);
    let (v1, v2) = (v.as_slice()[0], v.as_slice()[1]);
    let mapped: Vec<f64> = (0..samples)
        .map(|_| {
            let (u1, u2): (f64, f64) = (r.random(), r.random());
            g.apply(v1 * u1 + v2 * u2)
        })
        .collect();
    Ok(ks_uniform(&mapped))
}
