use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::stencil;
use crate::{Error, Result};

/// A prescribed volume trajectory `t ↦ φ(t)` on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub enum VolumeSchedule {
    /// `φ(t) = ((√v0 − √v1)·t − √v0)²`, i.e. `√φ` linear in `t`.
    Quadratic { v0: f64, v1: f64 },
    /// Samples on a strictly increasing grid from 0 to 1, linearly
    /// interpolated in between.
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

impl VolumeSchedule {
    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::Invalid("a sampled schedule needs matching times and values, at least 2".into()));
        }
        check_grid(&times)?;
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Domain("schedule values must be positive"));
        }
        Ok(Self::Sampled { times, values })
    }

    /// Samples `f` on `n` uniform nodes.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let times = super::uniform_times(n);
        let values = times.iter().map(|&t| f(t)).collect();
        Self::sampled(times, values)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            VolumeSchedule::Quadratic { v0, v1 } => {
                let r = (v0.sqrt() - v1.sqrt()) * t - v0.sqrt();
                r * r
            }
            VolumeSchedule::Sampled { times, values } => {
                let k = match times.iter().position(|&s| s >= t) {
                    Some(0) => return values[0],
                    Some(k) => k,
                    None => return values[values.len() - 1],
                };
                let (t0, t1) = (times[k - 1], times[k]);
                let w = (t - t0) / (t1 - t0);
                values[k - 1] * (1.0 - w) + values[k] * w
            }
        }
    }

    pub fn v0(&self) -> f64 {
        match self {
            VolumeSchedule::Quadratic { v0, .. } => *v0,
            VolumeSchedule::Sampled { values, .. } => values[0],
        }
    }

    pub fn v1(&self) -> f64 {
        match self {
            VolumeSchedule::Quadratic { v1, .. } => *v1,
            VolumeSchedule::Sampled { values, .. } => values[values.len() - 1],
        }
    }

    /// Samples the schedule on `n` uniform nodes.
    pub fn sample(&self, n: usize) -> Result<Self> {
        Self::from_fn(n, |t| self.value_at(t))
    }
}

pub(crate) fn check_grid(times: &[f64]) -> Result<()> {
    if times[0] != 0.0 || times[times.len() - 1] != 1.0 {
        return Err(Error::Invalid("time grid must start at 0 and end at 1".into()));
    }
    if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid(alloc::format!(
            "times must be strictly increasing: t[{}] = {} does not exceed t[{}] = {}",
            k + 1,
            times[k + 1],
            k,
            times[k]
        )));
    }
    Ok(())
}

/// Minimizer of `∫₀¹ φ̇²/φ dt` with `φ(0) = v0`, `φ(1) = v1`.
pub fn optimal_schedule(v0: f64, v1: f64) -> Result<VolumeSchedule> {
    if !(v0 > 0.0 && v1 > 0.0) {
        return Err(Error::Domain("volumes must be positive"));
    }
    Ok(VolumeSchedule::Quadratic { v0, v1 })
}

/// `Ψ(φ) = ∫₀¹ φ̇²/φ dt`: exact for the quadratic schedule, second-order
/// differences plus trapezoid for sampled ones.
pub fn psi_value(schedule: &VolumeSchedule) -> Result<f64> {
    match schedule {
        VolumeSchedule::Quadratic { v0, v1 } => {
            let d = v1.sqrt() - v0.sqrt();
            Ok(4.0 * d * d)
        }
        VolumeSchedule::Sampled { times, values } => {
            if values.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Domain("schedule values must be positive"));
            }
            let rate = stencil::derivative(times, values);
            let integrand: Vec<f64> = rate.iter().zip(values).map(|(d, v)| d * d / v).collect();
            Ok(stencil::trapezoid(times, &integrand))
        }
    }
}

/// Closed-form lower bound on the total distortion of any morph between
/// volumes `v0` and `v1`: `4(√v1 − √v0)²`.
pub fn morph_lower_bound(v0: f64, v1: f64) -> f64 {
    let d = v1.sqrt() - v0.sqrt();
    4.0 * d * d
}
