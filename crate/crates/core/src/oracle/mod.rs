//! Independent cross-checks: a brute-force minimizer of the auxiliary
//! volume functional, an Euler–Lagrange residual, Taylor difference
//! quotients, and seeded generators of random maps and morphs.
//!
//! Nothing here calls the closed-form schedule or the morph stencils.

mod random;
mod rng;
mod taylor;
mod variational;

pub use random::{closest_point_on_surface, random_map, random_morph, swirl_map};
pub use rng::SplitMix64;
pub use taylor::{taylor_check, TaylorRow};
pub use variational::{
    brute_force_psi_min, euler_lagrange_residual, ElResidual, PsiMinimum, VariationalProblem,
};
