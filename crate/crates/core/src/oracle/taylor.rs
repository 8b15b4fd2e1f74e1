use alloc::vec::Vec;

use crate::morph::Morph;
use crate::{Error, Result};

/// One row of [`taylor_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaylorRow {
    pub offset: f64,
    /// The grid time paired with `t`.
    pub s: f64,
    /// `E_{s,t} / (s − t)²`.
    pub ratio: f64,
}

/// Difference quotients `E_{s,t}/(s − t)²` at sample `t_idx`, one per offset.
///
/// Uses `s = t + offset` when that lies on the grid, otherwise `t − offset`.
pub fn taylor_check(morph: &Morph, t_idx: usize, offsets: &[f64]) -> Result<Vec<TaylorRow>> {
    let times = morph.times();
    let t = *times.get(t_idx).ok_or(Error::InvalidIndex { index: t_idx, len: times.len() })?;
    offsets
        .iter()
        .map(|&offset| {
            if !(offset > 0.0) {
                return Err(Error::Domain("offsets must be positive"));
            }
            let s_idx = morph
                .time_index(t + offset)
                .or_else(|_| morph.time_index(t - offset))?;
            let s = times[s_idx];
            let e = morph.pairwise_energy(s_idx, t_idx)?;
            Ok(TaylorRow { offset, s, ratio: e / ((s - t) * (s - t)) })
        })
        .collect()
}
