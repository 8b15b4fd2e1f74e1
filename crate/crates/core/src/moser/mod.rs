//! Discrete Moser reparametrization.
//!
//! Given a map `h: M → N`, find a map with the same image set whose Jacobian
//! is constant. Curves are handled exactly by transporting vertices along
//! the image loop; surfaces by projected quasi-Newton descent with vertices
//! constrained to the image surface.

mod curve;
mod surface;

pub use curve::reparametrize_curve;
pub use surface::{relax_surface, RelaxOutcome};

use crate::geometry::Dim;
use crate::maps::CorrespondenceMap;
use crate::{Error, Result};

/// Tolerance for maps that are constant-Jacobian up to rounding.
pub const EXACT_TOLERANCE: f64 = 1e-9;

/// Default tolerance of the iterative surface backend.
pub const SURFACE_TOLERANCE: f64 = 1e-2;

/// Controls for the iterative surface backend.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoserSolveOptions {
    /// Target maximum relative Jacobian deviation.
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Largest vertex move per step, as a fraction of the mean edge length.
    pub step_scale: f64,
}

impl Default for MoserSolveOptions {
    fn default() -> Self {
        Self { rel_tol: SURFACE_TOLERANCE, max_iters: 500, step_scale: 0.05 }
    }
}

impl MoserSolveOptions {
    pub fn new(rel_tol: f64, max_iters: usize, step_scale: f64) -> Result<Self> {
        let opts = Self { rel_tol, max_iters, step_scale };
        opts.check()?;
        Ok(opts)
    }

    fn check(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::Domain("rel_tol must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be at least 1"));
        }
        if !(self.step_scale > 0.0) {
            return Err(Error::Domain("step_scale must be positive"));
        }
        Ok(())
    }

    /// Tolerance the backend for `dim` is expected to reach.
    pub fn tolerance_for(&self, dim: Dim) -> f64 {
        match dim {
            Dim::Curve => EXACT_TOLERANCE,
            Dim::Surface => self.rel_tol,
        }
    }
}

/// Returns a distortion-minimal map with the same image set as `map`.
///
/// Inputs that already have constant Jacobian (within the backend
/// tolerance) are returned unchanged. Surface solves that hit the iteration
/// cap are reported as [`Error::NotConverged`].
///
/// The output image can be slightly smaller than the input image, since
/// vertices stay on it while edges become chords. For a loop whose image is
/// shorter than its source this can leave `Φ` above the input's.
pub fn make_minimal_map(map: &CorrespondenceMap, opts: &MoserSolveOptions) -> Result<CorrespondenceMap> {
    opts.check()?;
    let dim = map.source().dim();
    if map.is_minimal_map(opts.tolerance_for(dim))?.minimal {
        return Ok(map.clone());
    }
    match dim {
        Dim::Curve => reparametrize_curve(map),
        Dim::Surface => {
            let out = relax_surface(map, opts)?;
            if out.converged {
                Ok(out.map)
            } else {
                Err(Error::NotConverged { residual: out.residual, iterations: out.iterations })
            }
        }
    }
}
