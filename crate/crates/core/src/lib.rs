//! Distortion-minimal maps and morphs between discretized closed oriented
//! hypersurfaces.
//!
//! A [`DiscreteManifold`] is either a closed polygonal loop in the plane
//! (`n = 1`) or a closed triangle mesh in space (`n = 2`). Its volume form is
//! the piecewise-constant density that gives every simplex its Euclidean
//! measure. Maps between manifolds share combinatorics, so the Jacobian of a
//! map is the per-simplex ratio of image measure to source measure.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the
//! command-line driver live in the `minmorph` crate.
#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod geometry;
pub mod maps;
pub mod morph;
pub mod moser;
pub mod oracle;
pub mod shapes;
pub mod vec3;

pub use error::{Error, Result};
pub use geometry::{Check, Diagnostics, Dim, DiscreteManifold, Invariant, Point};
pub use maps::{phi_min, CorrespondenceMap, JacobianField, MinimalityReport};
pub use morph::{
    DistortionReport, Morph, PairwiseReport, TimeSample, VolumeSchedule,
};
pub use moser::{MoserSolveOptions, RelaxOutcome};
