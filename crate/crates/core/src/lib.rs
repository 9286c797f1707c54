//! Spectral option discovery on tabular gridworlds.
//!
//! Eigenvectors of the state graph's Laplacian (proto-value functions) are
//! read as intrinsic rewards, "eigenpurposes", whose optimal policies become
//! options ("eigenoptions"). The crate builds them, measures how they change
//! random-walk exploration, runs Q-learning with them, and recovers the same
//! purposes from sampled transitions through the incidence matrix.
//!
//! | module | contents |
//! |--------|----------|
//! | [`env`] | ASCII gridworld parser, dynamics, feature maps, shipped maps |
//! | [`spectral`] | adjacency, Laplacians, Jacobi eigensolver, PVF sequence |
//! | [`options`] | augmented MDP solve, eigenoptions, bottleneck and random-subgoal options |
//! | [`sampled`] | incidence matrix, SVD purposes, greedy execution |
//! | [`metrics`] | diffusion time, exact and Monte Carlo |
//! | [`learn`] | Q-learning with an option-augmented behaviour policy |

pub mod env;
pub mod io;
pub mod learn;
pub mod linalg;
pub mod metrics;
pub mod options;
pub mod sampled;
pub mod seeds;
pub mod spectral;

pub use env::{parse_map, Action, FeatureMap, GridWorld, MapError};
pub use options::{Eigenoption, MarkovOption, OptionAction};
pub use spectral::{Eigenpurpose, LaplacianKind, Sign};
