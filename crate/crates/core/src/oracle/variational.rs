use alloc::vec::Vec;

use crate::morph::{uniform_times, VolumeSchedule};
use crate::{Error, Result};

/// Discretized minimization of `∫₀¹ φ̇²/φ dt` with fixed endpoint values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariationalProblem {
    pub v0: f64,
    pub v1: f64,
    /// Total number of grid nodes, endpoints included.
    pub num_nodes: usize,
    pub max_iters: usize,
    /// Stop once the largest gradient component, divided by the grid
    /// spacing, falls below this.
    pub grad_tol: f64,
    /// Fallback trial step when no curvature estimate is available.
    pub step: f64,
}

impl VariationalProblem {
    pub fn new(v0: f64, v1: f64, num_nodes: usize) -> Result<Self> {
        let p = Self { v0, v1, num_nodes, max_iters: 200_000, grad_tol: 1e-9, step: 1e-3 };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        if !(self.v0 > 0.0 && self.v1 > 0.0) {
            return Err(Error::Domain("boundary volumes must be positive"));
        }
        if self.num_nodes < 3 {
            return Err(Error::Domain("need at least 3 nodes"));
        }
        if !(self.grad_tol > 0.0 && self.step > 0.0) || self.max_iters == 0 {
            return Err(Error::Domain("descent controls must be positive"));
        }
        Ok(())
    }
}

/// Outcome of [`brute_force_psi_min`]. When `converged` is false the
/// schedule is the last iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiMinimum {
    pub schedule: VolumeSchedule,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Trapezoid discretization of `Ψ` on a piecewise-linear `φ`:
/// `Σ h d_i² (1/φ_i + 1/φ_{i+1}) / 2` with `d_i` the slope on interval `i`.
fn discrete_psi(phi: &[f64], h: f64) -> f64 {
    phi.windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            d * d / (2.0 * h) * (1.0 / w[0] + 1.0 / w[1])
        })
        .sum()
}

fn discrete_psi_gradient(phi: &[f64], h: f64, grad: &mut [f64]) {
    grad.iter_mut().for_each(|g| *g = 0.0);
    for i in 0..phi.len() - 1 {
        let (a, b) = (phi[i], phi[i + 1]);
        let d = b - a;
        let s = 1.0 / a + 1.0 / b;
        grad[i] += -d / h * s - d * d / (2.0 * h * a * a);
        grad[i + 1] += d / h * s - d * d / (2.0 * h * b * b);
    }
    // Endpoints are fixed.
    let n = grad.len();
    grad[0] = 0.0;
    grad[n - 1] = 0.0;
}

/// Minimizes the discretized auxiliary functional over piecewise-linear
/// schedules by projected gradient descent.
///
/// Trial steps use the Barzilai–Borwein estimate, then halve until the
/// Armijo condition holds. Nodes are clamped at `1e-8·min(v0, v1)`.
pub fn brute_force_psi_min(problem: &VariationalProblem) -> Result<PsiMinimum> {
    problem.check()?;
    let n = problem.num_nodes;
    let h = 1.0 / (n - 1) as f64;
    let floor = 1e-8 * problem.v0.min(problem.v1);
    let times = uniform_times(n);
    let mut phi: Vec<f64> =
        times.iter().map(|&t| problem.v0 + (problem.v1 - problem.v0) * t).collect();
    phi[n - 1] = problem.v1;

    let mut grad = alloc::vec![0.0; n];
    let mut trial = phi.clone();
    let mut trial_grad = grad.clone();
    discrete_psi_gradient(&phi, h, &mut grad);
    let mut value = discrete_psi(&phi, h);
    let mut step = problem.step;
    let mut iterations = 0;
    let grad_norm = |g: &[f64]| g.iter().fold(0.0f64, |m, x| m.max(x.abs())) / h;

    while grad_norm(&grad) > problem.grad_tol && iterations < problem.max_iters {
        let mut alpha = step;
        let accepted = loop {
            for i in 1..n - 1 {
                trial[i] = (phi[i] - alpha * grad[i]).max(floor);
            }
            let decrease: f64 = (1..n - 1).map(|i| grad[i] * (trial[i] - phi[i])).sum();
            let next = discrete_psi(&trial, h);
            if next <= value + 1e-4 * decrease {
                break Some(next);
            }
            alpha *= 0.5;
            if alpha < 1e-300 {
                break None;
            }
        };
        let Some(next) = accepted else { break };
        discrete_psi_gradient(&trial, h, &mut trial_grad);
        // Barzilai–Borwein step for the next trial.
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 1..n - 1 {
            let s = trial[i] - phi[i];
            let y = trial_grad[i] - grad[i];
            ss += s * s;
            sy += s * y;
        }
        step = if sy > 0.0 { ss / sy } else { problem.step };
        core::mem::swap(&mut phi, &mut trial);
        core::mem::swap(&mut grad, &mut trial_grad);
        value = next;
        iterations += 1;
    }
    let g = grad_norm(&grad);
    Ok(PsiMinimum {
        schedule: VolumeSchedule::sampled(times, phi)?,
        value,
        iterations,
        grad_norm: g,
        converged: g <= problem.grad_tol,
    })
}

/// Residual of the Euler–Lagrange equation `2φφ̈ − φ̇² = 0` of the
/// auxiliary functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElResidual {
    /// `max |2φφ̈ − φ̇²|` over interior nodes.
    pub max_abs: f64,
    /// `max_abs / max φ²`.
    pub scaled: f64,
}

/// Evaluates the Euler–Lagrange residual at the interior nodes of a sampled
/// schedule with three-point stencils. Quadratic schedules are sampled on
/// 101 uniform nodes first.
pub fn euler_lagrange_residual(schedule: &VolumeSchedule) -> Result<ElResidual> {
    let sampled;
    let (times, values) = match schedule {
        VolumeSchedule::Sampled { times, values } => (times, values),
        VolumeSchedule::Quadratic { .. } => {
            sampled = schedule.sample(101)?;
            match &sampled {
                VolumeSchedule::Sampled { times, values } => (times, values),
                VolumeSchedule::Quadratic { .. } => unreachable!(),
            }
        }
    };
    let mut max_abs: f64 = 0.0;
    for k in 1..times.len().saturating_sub(1) {
        let (x0, x1, x2) = (times[k - 1], times[k], times[k + 1]);
        let (f0, f1, f2) = (values[k - 1], values[k], values[k + 1]);
        let (h0, h1) = (x1 - x0, x2 - x1);
        // Derivatives of the interpolating parabola at x1.
        let first = -h1 / (h0 * (h0 + h1)) * f0 + (h1 - h0) / (h0 * h1) * f1
            + h0 / (h1 * (h0 + h1)) * f2;
        let second = 2.0 * (f0 / (h0 * (h0 + h1)) - f1 / (h0 * h1) + f2 / (h1 * (h0 + h1)));
        max_abs = max_abs.max((2.0 * f1 * second - first * first).abs());
    }
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ElResidual { max_abs, scaled: max_abs / (peak * peak) })
}
