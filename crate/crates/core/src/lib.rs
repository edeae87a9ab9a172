//! Error exponents of randomized list decoding over discrete memoryless channels.
//!
//! The crate is split into layers:
//!
//! - [`prob`]: distributions, joint distributions, channels, n-types and
//!   information measures.
//! - [`metric`]: decoding metrics `g(P_XY)` (matched, mismatched, MMI, constant).
//! - [`exponent`]: random-coding, sphere-packing and list-decoding exponents,
//!   and rate sweeps.
//! - [`asymptotics`]: scalar tools used to check the large-n behaviour of
//!   the ensemble (binomial tails, the integral exponent, `ξ*(L)`, Lambert W).
//! - [`sim`]: a Monte Carlo simulator of the randomized list decoder.
//!
//! Everything is computed in nats. The numerical core is generic over
//! [`Real`] (`f64` and `f32`); the aliases below fix `f64`, which is what the
//! CLI and the simulator use.
//!
//! ```
//! use explab::{random_coding_exponent, Dist, Dmc, SolverConfig};
//!
//! let w = Dmc::bsc(0.1).unwrap();
//! let q = Dist::uniform(2).unwrap();
//! let e = random_coding_exponent(&w, &q, 0.1, &SolverConfig::default()).unwrap();
//! assert!(e > 0.0);
//! ```

pub mod asymptotics;
pub mod error;
pub mod exponent;
pub mod metric;
pub mod prob;
pub mod scalar;
pub mod sim;
pub mod validate;

pub use error::{Error, Result};
pub use exponent::{
    critical_rate, deterministic_list_exponent_exp, deterministic_list_exponent_fixed, fig1_family,
    minimize_over_joint, random_coding_exponent, randomized_list_exponent_exp,
    randomized_list_exponent_fixed, sphere_packing_exponent, sweep, ExponentKind, ListSize,
    SolverConfig,
};
pub use metric::{eval_metric, metric_gap, parse_metric};
pub use prob::{Alphabet, TypeDist};
pub use scalar::Real;

pub type Dist = prob::Dist<f64>;
pub type JointDist = prob::JointDist<f64>;
pub type Dmc = prob::Dmc<f64>;
pub type MetricSpec = metric::MetricSpec<f64>;
pub type ExponentQuery = exponent::ExponentQuery<f64>;
pub type ExponentCurve = exponent::ExponentCurve<f64>;
