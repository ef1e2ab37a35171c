//! Finite-element solver and control toolkit for the time-harmonic eddy-current
//! system driven by a point dipole.
//!
//! The state equation is the E-based eddy-current system
//!
//! ```text
//! curl(mu^-1 curl E) + i w sigma E = -i w p delta_x0   in Omega
//! div(eps E) = 0                                       in the insulator
//! (mu^-1 curl E) x n = 0,  eps E . n = 0               on the outer boundary
//! ```
//!
//! with a Dirac dipole of intensity `p` at `x0` inside the conductor. The field
//! is represented through the splitting
//!
//! ```text
//! E = Q + grad(eta) + K,
//! ```
//!
//! where `K` is the closed-form fundamental solution of `curl curl - z^2` with
//! `z^2 = -i w mu0 sigma0` (singular part, evaluated analytically), `eta` is a
//! scalar potential supported in the insulator that restores the divergence
//! constraint, and `Q` is a regular edge-element field solved in the
//! divergence-constrained space via a saddle-point system.
//!
//! On top of the state solver sits a box-constrained control problem: choose
//! `p` to track desired fields `E_d`, `H_d` on the observation region (the
//! domain minus a ball around the dipole) under a quadratic cost. The gradient
//! of the reduced cost is assembled from a two-part adjoint state `(T, Psi)`,
//! and a projected-gradient loop drives the optimization.
//!
//! Modules:
//! - [`geometry`]: tagged tetrahedral meshes (generator + MSH import/export),
//!   topology validation, observation masks.
//! - [`kernels`]: the fundamental solution `K`, its curl, the columns of the
//!   dipole matrix `A`, and the cutoff extension used by the optimality system.
//! - [`fem`]: Nedelec/P1 spaces, quadrature, form assembly, sparse solves.
//! - [`state`]: state and adjoint solves, field composition on the mask.
//! - [`optimizer`]: reduced cost/gradient, projected gradient with Armijo.
//! - [`targets`]: target-field evaluators selected by name.
//! - [`config`], [`io`], [`cli`]: run configuration, file formats, commands.

pub mod cli;
pub mod config;
pub mod fem;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod optimizer;
pub mod state;
pub mod targets;

/// Complex scalar used throughout (fields are time-harmonic phasors).
pub type C64 = num_complex::Complex<f64>;
/// Real 3-vector (points, directions, real controls).
pub type Vec3 = nalgebra::Vector3<f64>;
/// Complex 3-vector (field values).
pub type CVec3 = nalgebra::Vector3<C64>;
/// Real 3x3 matrix (material tensors).
pub type Mat3 = nalgebra::Matrix3<f64>;
/// Complex 3x3 matrix (kernel Hessians).
pub type CMat3 = nalgebra::Matrix3<C64>;

/// Bilinear (unconjugated) dot product `sum_i a_i b_i` of complex 3-vectors.
///
/// Weak forms in this crate follow the convention `a . conj(b)`; conjugation
/// is always written explicitly at the call site, never hidden in the product.
#[inline]
pub fn bdot(a: &CVec3, b: &CVec3) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Componentwise conjugate of a complex 3-vector.
#[inline]
pub fn cconj(a: &CVec3) -> CVec3 {
    CVec3::new(a[0].conj(), a[1].conj(), a[2].conj())
}

/// Lift a real 3-vector to a complex one.
#[inline]
pub fn complexify(a: &Vec3) -> CVec3 {
    CVec3::new(C64::new(a[0], 0.0), C64::new(a[1], 0.0), C64::new(a[2], 0.0))
}

/// Apply a real 3x3 tensor to a complex 3-vector.
#[inline]
pub fn apply_real(m: &Mat3, v: &CVec3) -> CVec3 {
    CVec3::new(
        C64::new(m[(0, 0)], 0.0) * v[0] + C64::new(m[(0, 1)], 0.0) * v[1] + C64::new(m[(0, 2)], 0.0) * v[2],
        C64::new(m[(1, 0)], 0.0) * v[0] + C64::new(m[(1, 1)], 0.0) * v[1] + C64::new(m[(1, 2)], 0.0) * v[2],
        C64::new(m[(2, 0)], 0.0) * v[0] + C64::new(m[(2, 1)], 0.0) * v[1] + C64::new(m[(2, 2)], 0.0) * v[2],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bdot_is_unconjugated() {
        let a = CVec3::new(C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        assert_eq!(bdot(&a, &a), C64::new(-1.0, 0.0));
        assert_eq!(bdot(&a, &cconj(&a)), C64::new(1.0, 0.0));
    }
}
