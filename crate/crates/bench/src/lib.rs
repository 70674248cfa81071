//! Fixtures shared by the benchmarks in `benches/`.

use slicewass::{generate, DiscreteMeasure, GeneratorSpec};

/// Empirical measure of `n` standard Gaussian draws in R^d.
pub fn gaussian_cloud(d: usize, n: usize, seed: u64) -> DiscreteMeasure {
    generate(&GeneratorSpec::empirical(GeneratorSpec::gaussian(d), n), seed).expect("valid spec")
}

/// Same support as [`gaussian_cloud`] with non-uniform weights, so the
/// exact solver cannot take the assignment path.
pub fn weighted_cloud(d: usize, n: usize, seed: u64) -> DiscreteMeasure {
    let base = gaussian_cloud(d, n, seed);
    let raw: Vec<f64> = (1..=n).map(|k| k as f64).collect();
    let total: f64 = raw.iter().sum();
    DiscreteMeasure::from_flat(d, base.coords().to_vec(), raw.iter().map(|w| w / total).collect())
        .expect("valid measure")
}
