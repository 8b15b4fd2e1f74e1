//! Correspondence maps, their Jacobians and the map-level total distortion.
//!
//! A [`CorrespondenceMap`] sends every source vertex to a target position and
//! is affine on each simplex, so its Jacobian is constant per simplex and
//! equals the ratio of image measure to source measure.

use alloc::vec::Vec;

use crate::geometry::{degenerate_simplices, DiscreteManifold, Point};
use crate::{vec3, Error, Result};

/// Relative tolerance for "same vertex positions" when composing maps.
pub const POSITION_TOLERANCE: f64 = 1e-12;

/// A piecewise-linear surrogate for a diffeomorphism between two manifolds
/// with the same combinatorics.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceMap {
    source: DiscreteManifold,
    image: DiscreteManifold,
}

impl CorrespondenceMap {
    /// Map sending source vertex `i` to `targets[i]`.
    pub fn new(source: DiscreteManifold, targets: Vec<Point>) -> Result<Self> {
        let image = source.with_vertices(targets)?;
        Ok(Self { source, image })
    }

    /// Map between two manifolds that already share combinatorics.
    pub fn between(source: DiscreteManifold, image: DiscreteManifold) -> Result<Self> {
        if !source.same_combinatorics(&image) {
            return Err(Error::Incompatible("source and image combinatorics differ"));
        }
        Ok(Self { source, image })
    }

    pub fn identity(source: DiscreteManifold) -> Self {
        let image = source.clone();
        Self { source, image }
    }

    /// Map obtained by applying `f` to every source vertex.
    pub fn from_fn(source: DiscreteManifold, f: impl Fn(Point) -> Point) -> Result<Self> {
        let image = source.map_vertices(f)?;
        Ok(Self { source, image })
    }

    pub fn source(&self) -> &DiscreteManifold {
        &self.source
    }

    /// The image manifold `h(M)`, sharing the source combinatorics.
    pub fn image(&self) -> &DiscreteManifold {
        &self.image
    }

    pub fn targets(&self) -> &[Point] {
        self.image.vertices()
    }

    pub fn into_parts(self) -> (DiscreteManifold, DiscreteManifold) {
        (self.source, self.image)
    }

    /// Per-simplex Jacobian `J = |h(σ)| / |σ|` with the source measures as
    /// integration weights.
    ///
    /// Fails on degenerate source or image simplices and on orientation
    /// reversal: a global flip of the enclosed signed measure, or an image
    /// simplex folded against its neighbours where the source is not.
    pub fn jacobian_field(&self) -> Result<JacobianField> {
        let weights = self.source.checked_measures()?;
        let image = self.image.measures();
        if let Some(&simplex) = degenerate_simplices(&image).first() {
            return Err(Error::DegenerateImage { simplex });
        }
        let (s, t) = (self.source.signed_volume(), self.image.signed_volume());
        if s != 0.0 && t != 0.0 && (s > 0.0) != (t > 0.0) {
            return Err(Error::OrientationReversal { simplex: None });
        }
        let source_folds = self.source.folded_simplices();
        if let Some(&simplex) =
            self.image.folded_simplices().iter().find(|f| source_folds.binary_search(f).is_err())
        {
            return Err(Error::OrientationReversal { simplex: Some(simplex) });
        }
        let values = image.iter().zip(&weights).map(|(i, w)| i / w).collect();
        Ok(JacobianField { values, weights })
    }

    /// Discrete total distortion `Σ (J − 1)² |σ|`.
    pub fn total_distortion(&self) -> Result<f64> {
        Ok(self.jacobian_field()?.total_distortion())
    }

    /// Checks that the Jacobian is constant and equal to `Vol(N)/Vol(M)` up to
    /// `rel_tol` on every simplex.
    pub fn is_minimal_map(&self, rel_tol: f64) -> Result<MinimalityReport> {
        let field = self.jacobian_field()?;
        let expected = self.image.total_volume() / self.source.total_volume();
        let (worst_simplex, max_deviation) = field.max_relative_deviation(expected);
        Ok(MinimalityReport {
            minimal: max_deviation <= rel_tol,
            max_deviation,
            worst_simplex,
            expected_jacobian: expected,
        })
    }

    /// `second ∘ first`: apply `first`, then `second`. The source of `second`
    /// must coincide with the image of `first`.
    pub fn compose(first: &Self, second: &Self) -> Result<Self> {
        if !first.image.same_combinatorics(&second.source) {
            return Err(Error::Incompatible("composition: combinatorics differ"));
        }
        let tol = POSITION_TOLERANCE * (1.0 + first.image.bounding_box_diagonal());
        let matches = first
            .image
            .vertices()
            .iter()
            .zip(second.source.vertices())
            .all(|(a, b)| vec3::dist(*a, *b) <= tol);
        if !matches {
            return Err(Error::Incompatible("composition: intermediate positions differ"));
        }
        Ok(Self { source: first.source.clone(), image: second.image.clone() })
    }

    /// The inverse map `h(M) → M`.
    pub fn invert(&self) -> Self {
        Self { source: self.image.clone(), image: self.source.clone() }
    }
}

/// The minimum of the map-level total distortion over maps between manifolds
/// of volumes `vol_m` and `vol_n`: `(vol_m − vol_n)² / vol_m`.
pub fn phi_min(vol_m: f64, vol_n: f64) -> Result<f64> {
    if !(vol_m > 0.0 && vol_n > 0.0) {
        return Err(Error::Domain("volumes must be positive"));
    }
    let d = vol_m - vol_n;
    Ok(d * d / vol_m)
}

/// Per-simplex Jacobian values and the source measures they integrate against.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianField {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl JacobianField {
    /// `Σ J |σ|`, which equals the image volume.
    pub fn integral(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(j, w)| j * w).sum()
    }

    /// `Σ J² |σ|`.
    pub fn integral_of_square(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(j, w)| j * j * w).sum()
    }

    pub fn total_distortion(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(j, w)| {
                let d = j - 1.0;
                d * d * w
            })
            .sum()
    }

    /// Largest `|J − expected| / expected` and the simplex attaining it.
    pub fn max_relative_deviation(&self, expected: f64) -> (usize, f64) {
        self.values
            .iter()
            .map(|j| ((j - expected) / expected).abs())
            .enumerate()
            .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Outcome of [`CorrespondenceMap::is_minimal_map`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimalityReport {
    pub minimal: bool,
    pub max_deviation: f64,
    pub worst_simplex: usize,
    pub expected_jacobian: f64,
}
