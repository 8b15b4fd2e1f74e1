//! Morphs, their distortion functionals, and the minimal-morph construction.
//!
//! A [`Morph`] is a time-sampled family of vertex positions on the
//! combinatorics of its source. Frame `k` is the image of the map
//! `h^{t_k}: M → M^{t_k}`; frame 0 is the source itself.

mod schedule;
pub(crate) mod stencil;

pub use schedule::{morph_lower_bound, optimal_schedule, psi_value, VolumeSchedule};

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{Dim, DiscreteManifold, Point};
use crate::maps::{CorrespondenceMap, POSITION_TOLERANCE};
use crate::moser::{make_minimal_map, MoserSolveOptions};
use crate::{vec3, Error, Result};

/// Default number of time samples for constructed morphs.
pub const DEFAULT_FRAMES: usize = 201;

/// Uniform grid of `n` nodes on `[0, 1]` with exact endpoints.
pub fn uniform_times(n: usize) -> Vec<f64> {
    let last = n.saturating_sub(1).max(1) as f64;
    (0..n).map(|k| if k + 1 == n { 1.0 } else { k as f64 / last }).collect()
}

/// A time-sampled morph on fixed combinatorics.
#[derive(Clone, Debug, PartialEq)]
pub struct Morph {
    source: DiscreteManifold,
    times: Vec<f64>,
    frames: Vec<Vec<Point>>,
    /// Source simplex measures.
    weights: Vec<f64>,
    /// Per-frame, per-simplex Jacobian of `h^{t_k}`.
    jacobians: Vec<Vec<f64>>,
}

impl Morph {
    /// Checks every invariant: valid source, a strictly increasing grid from
    /// 0 to 1, frame 0 equal to the source, and every frame map
    /// non-degenerate and orientation preserving.
    pub fn new(source: DiscreteManifold, times: Vec<f64>, frames: Vec<Vec<Point>>) -> Result<Self> {
        let diagnostics = source.validate();
        if !diagnostics.is_valid() {
            return Err(Error::Invalid(format!("morph source: {diagnostics}")));
        }
        if times.len() < 2 {
            return Err(Error::Invalid("a morph needs at least 2 time samples".into()));
        }
        schedule::check_grid(&times)?;
        if frames.len() != times.len() {
            return Err(Error::Invalid(format!(
                "{} frames for {} time samples",
                frames.len(),
                times.len()
            )));
        }
        let tol = POSITION_TOLERANCE * (1.0 + source.bounding_box_diagonal());
        let first_matches = frames[0].len() == source.num_vertices()
            && frames[0].iter().zip(source.vertices()).all(|(a, b)| vec3::dist(*a, *b) <= tol);
        if !first_matches {
            return Err(Error::Invalid("frame 0 must equal the source positions".into()));
        }
        let weights = source.checked_measures()?;
        let mut jacobians = Vec::with_capacity(frames.len());
        jacobians.push(alloc::vec![1.0; weights.len()]);
        for (k, frame) in frames.iter().enumerate().skip(1) {
            let field = CorrespondenceMap::new(source.clone(), frame.clone())
                .and_then(|m| m.jacobian_field())
                .map_err(|e| Error::Frame { index: k, source: Box::new(e) })?;
            jacobians.push(field.values);
        }
        Ok(Self { source, times, frames, weights, jacobians })
    }

    /// Morph `h^t(m) = λ(t)·m` scaling about the origin.
    pub fn from_scale_profile(
        source: DiscreteManifold,
        times: Vec<f64>,
        lambda: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let frames = times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let l = if k == 0 { 1.0 } else { lambda(t) };
                source.vertices().iter().map(|p| vec3::scale(*p, l)).collect()
            })
            .collect();
        Self::new(source, times, frames)
    }

    pub fn source(&self) -> &DiscreteManifold {
        &self.source
    }

    pub fn dim(&self) -> Dim {
        self.source.dim()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[Vec<Point>] {
        &self.frames
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    /// Intermediate state `M^{t_k}`.
    pub fn frame(&self, k: usize) -> DiscreteManifold {
        self.source.with_vertices(self.frames[k].clone()).expect("validated frame")
    }

    /// The map `h^{t_k}: M → M^{t_k}`.
    pub fn frame_map(&self, k: usize) -> CorrespondenceMap {
        CorrespondenceMap::new(self.source.clone(), self.frames[k].clone()).expect("validated frame")
    }

    /// Per-simplex Jacobian of `h^{t_k}`.
    pub fn jacobian(&self, k: usize) -> &[f64] {
        &self.jacobians[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Vol(M^{t_k})` for every frame.
    pub fn volumes(&self) -> Vec<f64> {
        self.jacobians
            .iter()
            .map(|j| j.iter().zip(&self.weights).map(|(j, w)| j * w).sum())
            .collect()
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.frames.len() {
            return Err(Error::InvalidIndex { index: k, len: self.frames.len() });
        }
        Ok(())
    }

    /// Index of the sample at time `t` (within `1e-9`).
    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9)
            .ok_or(Error::TimeNotOnGrid { t })
    }

    /// Total distortion of the transition map `h^{s,t}: M^s → M^t`,
    /// `Σ (J_t/J_s − 1)² J_s |σ|`.
    pub fn pairwise_energy(&self, s_idx: usize, t_idx: usize) -> Result<f64> {
        self.check_index(s_idx)?;
        self.check_index(t_idx)?;
        let (js, jt) = (&self.jacobians[s_idx], &self.jacobians[t_idx]);
        Ok(js
            .iter()
            .zip(jt)
            .zip(&self.weights)
            .map(|((s, t), w)| {
                let d = t / s - 1.0;
                d * d * s * w
            })
            .sum())
    }

    /// Infinitesimal distortion `Σ (dJ/dt)² / J · |σ|` at sample `t_idx`.
    pub fn infinitesimal_distortion(&self, t_idx: usize) -> Result<f64> {
        self.check_index(t_idx)?;
        let st = stencil::derivative_stencil(&self.times, t_idx);
        let j = &self.jacobians;
        Ok((0..self.weights.len())
            .map(|f| {
                let rate = stencil::apply(&st, t_idx, |i| j[i][f]);
                rate * rate / j[t_idx][f] * self.weights[f]
            })
            .sum())
    }

    /// Largest relative deviation of `J_k` from `Vol(M^{t_k})/Vol(M)`, per
    /// frame.
    pub fn jacobian_deviations(&self) -> Vec<f64> {
        let v0 = self.source.total_volume();
        self.volumes()
            .iter()
            .zip(&self.jacobians)
            .map(|(v, j)| {
                let expected = v / v0;
                j.iter().map(|j| ((j - expected) / expected).abs()).fold(0.0, f64::max)
            })
            .collect()
    }

    /// Trapezoid integral of the infinitesimal distortion, with per-sample
    /// volumes and Jacobian deviations.
    pub fn total_distortion(&self) -> DistortionReport {
        let volumes = self.volumes();
        let deviations = self.jacobian_deviations();
        let eps: Vec<f64> = (0..self.times.len())
            .map(|k| self.infinitesimal_distortion(k).expect("index in range"))
            .collect();
        let per_time = self
            .times
            .iter()
            .zip(&volumes)
            .zip(&eps)
            .zip(&deviations)
            .map(|(((&t, &volume), &epsilon), &max_jacobian_deviation)| TimeSample {
                t,
                volume,
                epsilon,
                max_jacobian_deviation,
            })
            .collect();
        DistortionReport {
            per_time,
            phi_total: stencil::trapezoid(&self.times, &eps),
            phi_lower_bound: morph_lower_bound(volumes[0], volumes[volumes.len() - 1]),
        }
    }

    /// Checks that every `J_k` equals `Vol(M^{t_k})/Vol(M)` within `rel_tol`.
    pub fn is_pairwise_minimal(&self, rel_tol: f64) -> PairwiseReport {
        let per_frame = self.jacobian_deviations();
        let max_deviation = per_frame.iter().copied().fold(0.0, f64::max);
        PairwiseReport { minimal: max_deviation <= rel_tol, max_deviation, per_frame }
    }

    /// Total distortion of a pairwise-minimal morph from its volumes alone,
    /// `∫ (dVol/dt)² / Vol dt`.
    ///
    /// The integrand is evaluated as `4 (d√Vol/dt)²` with the same stencils as
    /// [`infinitesimal_distortion`](Self::infinitesimal_distortion), so the two
    /// routes differ only by their `O(Δt²)` truncation errors.
    pub fn pairwise_phi_via_volumes(&self) -> Result<f64> {
        let report = self.is_pairwise_minimal(crate::moser::SURFACE_TOLERANCE);
        if !report.minimal {
            return Err(Error::NotPairwiseMinimal { deviation: report.max_deviation });
        }
        let roots: Vec<f64> = self.volumes().iter().map(|v| v.sqrt()).collect();
        let integrand: Vec<f64> =
            stencil::derivative(&self.times, &roots).iter().map(|d| 4.0 * d * d).collect();
        Ok(stencil::trapezoid(&self.times, &integrand))
    }

    /// Same grid and source, new frames.
    fn with_frames(&self, frames: Vec<Vec<Point>>) -> Result<Self> {
        Self::new(self.source.clone(), self.times.clone(), frames)
    }
}

/// One row of a [`DistortionReport`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSample {
    pub t: f64,
    pub volume: f64,
    pub epsilon: f64,
    pub max_jacobian_deviation: f64,
}

/// Output of [`Morph::total_distortion`].
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionReport {
    pub per_time: Vec<TimeSample>,
    pub phi_total: f64,
    /// `4(√Vol(N) − √Vol(M))²`, the minimum over all morphs.
    pub phi_lower_bound: f64,
}

/// Output of [`Morph::is_pairwise_minimal`].
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseReport {
    pub minimal: bool,
    pub max_deviation: f64,
    pub per_frame: Vec<f64>,
}

/// Replaces every frame map by a distortion-minimal map with the same image.
pub fn pairwise_minimalize(morph: &Morph, opts: &MoserSolveOptions) -> Result<Morph> {
    let mut frames = Vec::with_capacity(morph.num_frames());
    frames.push(morph.frames[0].clone());
    for k in 1..morph.num_frames() {
        let minimal = make_minimal_map(&morph.frame_map(k), opts)
            .map_err(|e| Error::Frame { index: k, source: Box::new(e) })?;
        frames.push(minimal.targets().to_vec());
    }
    morph.with_frames(frames)
}

/// Distortion-minimal morph through the same intermediate shapes (up to
/// scaling about the origin): pairwise-minimalize, then rescale every frame
/// so its volume follows the optimal schedule.
pub fn minimalize(morph: &Morph, opts: &MoserSolveOptions) -> Result<Morph> {
    let pairwise = pairwise_minimalize(morph, opts)?;
    let volumes = pairwise.volumes();
    let last = volumes.len() - 1;
    let schedule = optimal_schedule(volumes[0], volumes[last])?;
    let n = pairwise.dim().n() as f64;
    let frames = pairwise
        .frames
        .iter()
        .enumerate()
        .map(|(k, frame)| {
            if k == 0 || k == last {
                return frame.clone();
            }
            let lambda = (schedule.value_at(pairwise.times[k]) / volumes[k]).powf(1.0 / n);
            frame.iter().map(|p| vec3::scale(*p, lambda)).collect()
        })
        .collect();
    pairwise.with_frames(frames)
}

/// The minimal morph from `M` to `αM` by uniform scaling about the origin,
/// `λ(t) = Vol(M)^{-1/n} [(√Vol(M) − √Vol(N)) t − √Vol(M)]^{2/n}`.
pub fn scaling_morph(manifold: DiscreteManifold, alpha: f64, num_frames: usize) -> Result<Morph> {
    if !(alpha > 0.0) {
        return Err(Error::Domain("alpha must be positive"));
    }
    if num_frames < 2 {
        return Err(Error::Domain("a morph needs at least 2 frames"));
    }
    let n = manifold.dim().n() as f64;
    let vm = manifold.total_volume();
    let vn = alpha.powf(n) * vm;
    let (rm, rn) = (vm.sqrt(), vn.sqrt());
    let times = uniform_times(num_frames);
    let last = num_frames - 1;
    let frames = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let lambda = match k {
                _ if vm == vn => 1.0,
                0 => 1.0,
                k if k == last => alpha,
                _ => vm.powf(-1.0 / n) * (((rm - rn) * t - rm) * ((rm - rn) * t - rm)).powf(1.0 / n),
            };
            manifold.vertices().iter().map(|p| vec3::scale(*p, lambda)).collect()
        })
        .collect();
    Morph::new(manifold, times, frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use core::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn static_morph() -> Morph {
        let m = shapes::unit_square(2);
        let frames = alloc::vec![m.vertices().to_vec(); 5];
        Morph::new(m, uniform_times(5), frames).unwrap()
    }

    #[test]
    fn static_morph_has_no_distortion() {
        let h = static_morph();
        for k in 0..5 {
            assert_eq!(h.infinitesimal_distortion(k).unwrap(), 0.0);
            assert_eq!(h.pairwise_energy(k, 2).unwrap(), 0.0);
        }
        let r = h.total_distortion();
        assert_eq!(r.phi_total, 0.0);
        assert_eq!(h.pairwise_phi_via_volumes().unwrap(), 0.0);
    }

    #[test]
    fn energy_vanishes_on_the_diagonal() {
        let h = scaling_morph(shapes::regular_polygon(16, 1.0), 3.0, 11).unwrap();
        for k in 0..11 {
            assert_eq!(h.pairwise_energy(k, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn energy_from_first_frame_is_map_distortion() {
        let h = scaling_morph(shapes::icosphere(1, 1.0), 2.0, 5).unwrap();
        let e = h.pairwise_energy(0, 4).unwrap();
        let phi = h.frame_map(4).total_distortion().unwrap();
        assert!(rel(e, phi) < 1e-12);
    }

    #[test]
    fn pairwise_minimal_energy_matches_map_minimum() {
        // Circle of circumference 2π scaled so the volumes are 2π and 8π.
        let c = shapes::regular_polygon(64, 1.0);
        let p = c.total_volume();
        let s = 2.0 * PI / p;
        let m = c.scaled_about([0.0; 3], s);
        let times = alloc::vec![0.0, 0.5, 1.0];
        let h = Morph::from_scale_profile(m, times, |t| 1.0 + 3.0 * t).unwrap();
        let v = h.volumes();
        assert!(rel(v[0], 2.0 * PI) < 1e-13 && rel(v[2], 8.0 * PI) < 1e-13);
        assert!(rel(h.pairwise_energy(0, 2).unwrap(), 18.0 * PI) < 1e-12);
        assert!((h.pairwise_energy(0, 2).unwrap() - 56.5487).abs() < 1e-4);
    }

    #[test]
    fn minimal_circle_morph_epsilon_is_constant() {
        // Rescale the 64-gon to circumference 2π so the targets read 8π.
        let c = shapes::regular_polygon(64, 1.0);
        let m = c.scaled_about([0.0; 3], 2.0 * PI / c.total_volume());
        let h = scaling_morph(m, 4.0, 201).unwrap();
        for k in [1, 50, 100, 199] {
            assert!(rel(h.infinitesimal_distortion(k).unwrap(), 8.0 * PI) < 1e-9);
        }
        let r = h.total_distortion();
        assert!(rel(r.phi_total, 8.0 * PI) < 1e-4);
        assert!(rel(r.phi_lower_bound, 8.0 * PI) < 1e-12);
        assert!(rel(h.pairwise_phi_via_volumes().unwrap(), 8.0 * PI) < 1e-4);
    }

    #[test]
    fn minimal_sphere_morph_epsilon() {
        let s = shapes::icosphere(2, 1.0);
        let m = s.scaled_about([0.0; 3], (4.0 * PI / s.total_volume()).sqrt());
        let h = scaling_morph(m, 2.0, 201).unwrap();
        for k in [3, 100, 150] {
            assert!(rel(h.infinitesimal_distortion(k).unwrap(), 16.0 * PI) < 1e-9);
        }
        assert!(rel(h.total_distortion().phi_total, 16.0 * PI) < 1e-6);
        assert!(rel(h.pairwise_phi_via_volumes().unwrap(), 16.0 * PI) < 1e-6);
    }

    #[test]
    fn scaling_morph_profile_and_identity() {
        let h = scaling_morph(shapes::regular_polygon(64, 1.0), 4.0, 11).unwrap();
        // λ(t) = (t+1)² for n = 1, α = 4.
        for (k, &t) in h.times().iter().enumerate() {
            let l = h.frames()[k][0][0];
            assert!(rel(l, (t + 1.0) * (t + 1.0)) < 1e-13);
        }
        assert!(h.is_pairwise_minimal(1e-12).max_deviation < 1e-13);
        let ico = scaling_morph(shapes::icosphere(1, 1.0), 2.0, 11).unwrap();
        for (k, &t) in ico.times().iter().enumerate() {
            let l = vec3::norm(ico.frames()[k][0]);
            assert!(rel(l, t + 1.0) < 1e-13);
        }
        let id = scaling_morph(shapes::unit_square(1), 1.0, 7).unwrap();
        assert_eq!(id.total_distortion().phi_total, 0.0);
    }

    #[test]
    fn rejects_bad_grids() {
        let m = shapes::unit_square(1);
        let frames = alloc::vec![m.vertices().to_vec(); 3];
        let err = Morph::new(m.clone(), alloc::vec![0.0, 0.6, 0.5, 1.0], alloc::vec![m.vertices().to_vec(); 4])
            .unwrap_err();
        match err {
            Error::Invalid(msg) => assert!(msg.contains("t[2]"), "{msg}"),
            e => panic!("{e:?}"),
        }
        assert!(Morph::new(m.clone(), alloc::vec![0.0, 0.5], frames.clone()).is_err());
        let mut bad = frames;
        bad[0][0] = [0.5, 0.5, 0.0];
        assert!(Morph::new(m, alloc::vec![0.0, 0.5, 1.0], bad).is_err());
    }

    #[test]
    fn frame_errors_carry_the_index() {
        let m = shapes::unit_square(1);
        let mut frames = alloc::vec![m.vertices().to_vec(); 3];
        frames[2][1] = frames[2][0];
        let err = Morph::new(m, uniform_times(3), frames).unwrap_err();
        assert!(matches!(err, Error::Frame { index: 2, .. }));
    }

    #[test]
    fn via_volumes_requires_pairwise_minimality() {
        let m = shapes::unit_square(2);
        let mut frames = alloc::vec![m.vertices().to_vec(); 3];
        frames[1][1] = [0.2, 0.0, 0.0];
        let h = Morph::new(m, uniform_times(3), frames).unwrap();
        assert!(matches!(
            h.pairwise_phi_via_volumes(),
            Err(Error::NotPairwiseMinimal { .. })
        ));
        assert!(!h.is_pairwise_minimal(1e-3).minimal);
    }

    #[test]
    fn time_lookup() {
        let h = static_morph();
        assert_eq!(h.time_index(0.5).unwrap(), 2);
        assert_eq!(h.time_index(0.3), Err(Error::TimeNotOnGrid { t: 0.3 }));
        assert!(h.pairwise_energy(0, 9).is_err());
    }
}
