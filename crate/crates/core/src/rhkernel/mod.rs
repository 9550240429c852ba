//! The 4×4 RH matrix `M` on the positive axis, its hat transform, and the
//! tacnode kernel built from it.

mod frame;
mod kernel;
mod ode;
mod solve;

pub use frame::{mixing, AsymptoticFrame, Half, Polar, SERIES_TERMS};
pub use kernel::{
    axis_jump_residual, bessel_from, bessel_process_kernel, diagonal_threshold, extract_residue, fit_residue, hat_transform,
    symmetry_residuals, tacnode_kernel, HatPoint, KernelValue, ResidueEstimate, SymmetryReport, TacnodeKernel,
    default_residue_radii, FIT_DEGREE, FIT_TOLERANCE, IMAG_TOL, RESIDUE_ANGLE,
};
pub use ode::{integrate, State, Tolerance};
pub use solve::{default_radius, jump, sector, sector_transfer, solve_m_plus, MEvaluation, PointValue, Provenance, RhSolver, SolveConfig};

#[cfg(test)]
mod tests;
