//! Privacy leakage of Laplace-perturbed linear queries over correlated data.
//!
//! An adversary `A(i, K)` tries to distinguish two values of tuple `i` while
//! knowing the exact values of the tuples in `K`. Its leakage is the largest
//! log-ratio of the output densities under the two hypotheses. This crate
//! computes that leakage three ways:
//!
//! * [`oracle`]: brute force over the joint distribution, exact for discrete
//!   data and grid-based for the Gaussian model;
//! * [`whg`]: the weighted hierarchical graph over all adversaries, where
//!   node leakages are propagated from the strongest adversaries outward by
//!   the chain rule, searched exhaustively or with top-`n` pruning;
//! * [`gaussian`]: the closed form `(M / lambda) * |1 + mu0_i|` for a
//!   multivariate Gaussian database.
//!
//! [`synth`] builds the synthetic inputs used by the experiment sweeps and
//! [`calibrate`] inverts the leakage for a target budget.

pub mod calibrate;
pub mod discrete;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod io;
pub mod numeric;
pub mod oracle;
pub mod report;
pub mod synth;
pub mod whg;

pub use discrete::{Assignment, ConditionalTable, JointDistribution, QuerySpec};
pub use error::{PdpError, Result};
pub use gaussian::{GaussianModel, Mu0Expansion};
pub use report::{Algorithm, LeakageReport};
pub use whg::{AdversaryNode, SearchOptions, WeightedHierGraph};
