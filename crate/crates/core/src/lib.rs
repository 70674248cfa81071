//! Wasserstein, sliced-Wasserstein and max-sliced-Wasserstein distances
//! between finitely supported measures on R^d.
//!
//! ```
//! use slicewass::{DiscreteMeasure, wasserstein_exact};
//!
//! let mu = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
//! let nu = DiscreteMeasure::dirac(vec![3.0, 4.0]).unwrap();
//! let plan = wasserstein_exact(&mu, &nu, 1.0).unwrap();
//! assert!((plan.primal_value - 5.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod experiments;
pub mod io;
pub mod maxsliced;
pub mod measures;
pub mod numeric;
pub mod ot1d;
pub mod ot_exact;
pub mod rng;
pub mod sliced;
pub mod sphere;

pub use error::{Error, Result};
pub use maxsliced::{
    direction_ascent, lipschitz_constant, max_sliced, max_sliced_certified, max_sliced_certified_with, projected_pow_gradient,
    CertifyOptions, DirectionResult, DEFAULT_MAX_EVALUATIONS, Mode, StepRule,
};
pub use measures::{generate, moment_p, DiscreteMeasure, GeneratorSpec};
pub use ot1d::{monotone_coupling, to_measure1d, wasserstein_1d, Measure1D, MonotoneCoupling};
pub use ot_exact::{
    dual_potentials_w1, duality_gap, solve_w1, wasserstein_exact, wasserstein_exact_with, DualCertificate,
    SolverChoice, TransportPlan,
};
pub use sliced::{sliced_wasserstein, sliced_wasserstein_both, SlicedEstimate, SlicedScheme};
pub use sphere::{half_norm_net, project, quadrature_grid, sample_uniform, surface_area, Direction, QuadratureGrid};
