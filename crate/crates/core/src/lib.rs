//! Dimension theory of self-affine sets and measures.
//!
//! The crate computes, for an affine iterated function system
//! `x ↦ A_i x + v_i`, the quantities that govern the dimension of its
//! attractor and of its self-affine measures:
//!
//! * [`pressure`]: singular value function, finite-level singular value
//!   pressure and a certified upper bound on the affinity dimension, plus the
//!   step-n subsystem measure used for the matching lower estimate;
//! * [`lyapunov`]: Lyapunov exponents of the matrix cocycle, Lyapunov
//!   dimension, dominated-splitting classification and pinching/twisting
//!   witnesses;
//! * [`ifs`]: the natural projection and the checkable conditions on the
//!   matrix tuple (threshold membership, strong separation certificate,
//!   conjugation equivalence);
//! * [`furstenberg`]: Grassmannian orbits of the inverse cocycle, limit
//!   residuals and transversality diagnostics;
//! * [`attractor`]: point clouds, box counting and correlation dimension.

pub mod attractor;
pub mod error;
pub mod fixtures;
pub mod furstenberg;
pub mod ifs;
pub mod linalg;
pub mod lyapunov;
pub mod numeric;
pub mod pressure;
pub mod rng;
pub mod symbolic;

pub use attractor::{BoxCountCurve, PointCloud};
pub use error::{Error, Result};
pub use furstenberg::OrbitSample;
pub use ifs::{AffineIfs, ConditionReport};
pub use linalg::{Matrix, SingularSpectrum, Subspace, Vector};
pub use lyapunov::{DominationReport, LyapunovSpectrum};
pub use pressure::{DimensionBracket, PressureEstimate};
pub use symbolic::{StepMeasure, Word};
