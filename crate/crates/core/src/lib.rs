//! Globally optimal relative pose of a calibrated multi-camera rig with a
//! known vertical direction, estimated from affine correspondences.
//!
//! The pipeline is:
//!
//! 1. [`constraints`] turns every affine correspondence into three linear
//!    constraints on the homogeneous translation `[t̃; 1]`, with coefficients
//!    that are polynomials in the Cayley yaw parameter `s = tan(θ_y / 2)`, and
//!    stacks them into the 4×4 polynomial cost matrix `C(s)`.
//! 2. [`solver`] writes the stationary points of `λ_min(C(s))` as a
//!    polynomial eigenvalue problem, solves it through a deflated companion
//!    matrix, and keeps the candidate with the smallest eigenvalue.
//! 3. The yaw and the eigenvector of `C(s*)` give the aligned pose, which is
//!    mapped back through the IMU roll/pitch into the body frame.
//!
//! [`synth`], [`bench`] and [`trajectory`] provide the synthetic evaluation
//! harness, and [`io`] / [`cli`] the file formats and command line surface.

pub mod bench;
pub mod cli;
pub mod constraints;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod poly;
pub mod solver;
pub mod synth;
pub mod trajectory;

pub use error::{Error, Result};
pub use geometry::{
    AffineCorrespondence, AlignedPose, ImuAttitude, PluckerLine, RelativePose, RigCamera,
    RigExtrinsics,
};
pub use solver::{solve, SolveReport, SolverMode};
