//! Second-order finite differences and trapezoid quadrature on possibly
//! nonuniform grids.

use alloc::vec::Vec;

/// Weights of the derivative at `x` of the quadratic through `xs`.
fn lagrange3_derivative(x: f64, xs: [f64; 3]) -> [f64; 3] {
    let [x0, x1, x2] = xs;
    [
        (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2)),
        (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2)),
        (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1)),
    ]
}

/// Stencil `(indices, weights)` for the time derivative at node `k`:
/// central at interior nodes, one-sided three-point at the ends, two-point
/// when the grid has only two nodes.
pub(crate) fn derivative_stencil(times: &[f64], k: usize) -> ([usize; 3], [f64; 3]) {
    let n = times.len();
    debug_assert!(n >= 2 && k < n);
    if n == 2 {
        let w = 1.0 / (times[1] - times[0]);
        return ([0, 1, 1], [-w, w, 0.0]);
    }
    let first = k.saturating_sub(1).min(n - 3);
    let idx = [first, first + 1, first + 2];
    let w = lagrange3_derivative(times[k], [times[idx[0]], times[idx[1]], times[idx[2]]]);
    (idx, w)
}

/// Applies a stencil at node `k` as `Σ w_i (f(i) − f(k))`, which is exactly
/// zero on constant data.
pub(crate) fn apply(stencil: &([usize; 3], [f64; 3]), k: usize, f: impl Fn(usize) -> f64) -> f64 {
    let center = f(k);
    stencil.0.iter().zip(stencil.1).map(|(&i, w)| w * (f(i) - center)).sum()
}

/// Derivative of sampled `values` at every node.
pub(crate) fn derivative(times: &[f64], values: &[f64]) -> Vec<f64> {
    (0..times.len())
        .map(|k| apply(&derivative_stencil(times, k), k, |i| values[i]))
        .collect()
}

/// Trapezoid rule over the grid.
pub(crate) fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}
