//! State and adjoint solves on an assembled discrete model.
//!
//! The state for a control `p` is the split `E = Q + grad(eta) + K`:
//!
//! - `eta` solves `B eta = Gt p` on the insulator potential space `W`;
//! - `Q` solves the saddle system `[[A+, C^T], [C, 0]] [Q; lambda] = [G p; 0]`;
//! - `K` is evaluated analytically.
//!
//! The right-hand side handed to the saddle solver is first split into a
//! compatible part and a gradient part: the component acting on lifted
//! gradients of `W` functions is moved into the multiplier ahead of the
//! solve (`rhs - C^T B^-1 L^T rhs`, with `L` the gradient lift). `Q` is
//! invariant under the shift, which lives entirely in the multiplier, so a
//! nonvanishing multiplier after the split is a genuine consistency alarm
//! rather than a constant feature of the load.
//!
//! The adjoint pair `(T, Psi)` solves the `a-` saddle system and the `B`
//! system with the tracking residuals as data; since `A- = conj(A+)` and `C`
//! is real, the `A+` factorization is reused through conjugation.
//!
//! `E` is composed pointwise only on the observation region; globally it is
//! merely a distribution and the solver does not pretend otherwise.

use crate::fem::assemble::{
    assemble_a_pair, assemble_aux_rhs, assemble_b, assemble_constraint, assemble_g,
    assemble_g_tilde, assemble_tracking_rhs, AssembledOperator, AssemblyError,
};
use crate::fem::quadrature::tet_rule_high;
use crate::fem::solver::{SaddleLu, SaddleStats, SolverError, SparseLu};
use crate::fem::sparse::{vec_norm, CscMatrix};
use crate::fem::spaces::{EdgeSpace, NodalSpaceW};
use crate::geometry::{classify_observation_region, Mesh, ObservationError, ObservationMask};
use crate::kernels::{ControlVector, DipoleProblem};
use crate::{CVec3, Vec3, C64};
use thiserror::Error;

/// Relative multiplier norm above which a constrained solve is flagged.
pub const MULTIPLIER_WARN_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Observation(#[from] ObservationError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("point ({0}, {1}, {2}) is outside the mesh")]
    OutsideDomain(f64, f64, f64),
    #[error("point ({0}, {1}, {2}) is outside the observation region; the state is not represented near the dipole")]
    OutsideObservationRegion(f64, f64, f64),
}

/// Discrete state: DOF vectors of the regular part `Q` (edge space) and the
/// potential `eta` (W space, zero-extended to the conductor), plus the
/// control that generated them. `K` is implicit through the control.
#[derive(Debug, Clone)]
pub struct StateSplit {
    pub control: ControlVector,
    pub eta: Vec<C64>,
    pub q: Vec<C64>,
    pub q_stats: SaddleStats,
    pub eta_residual: f64,
}

/// Discrete adjoint pair `(T, Psi)`.
#[derive(Debug, Clone)]
pub struct AdjointPair {
    pub t: Vec<C64>,
    pub psi: Vec<C64>,
    pub t_stats: SaddleStats,
    pub psi_residual: f64,
}

/// The three auxiliary lifts: scalar corrections `u_j` and edge interpolants
/// of the cutoff kernel columns, with the constraint defect of
/// `ext_j - grad(u_j)` (an interpolation-error indicator, reported as is).
#[derive(Debug, Clone)]
pub struct AuxLift {
    pub u: [Vec<C64>; 3],
    pub ext: [Vec<C64>; 3],
    pub constraint_rel: [f64; 3],
}

/// One world-space quadrature node of the observation region.
#[derive(Debug, Clone, Copy)]
pub struct MaskQuadPoint {
    pub tet: usize,
    pub x: Vec3,
    pub weight: f64,
}

/// Mesh + problem + assembled operators + cached factorizations. Everything
/// that does not depend on the control is computed once here; individual
/// solves are then triangular backsolves.
pub struct Model {
    pub mesh: Mesh,
    pub problem: DipoleProblem,
    pub mask: ObservationMask,
    pub edge: EdgeSpace,
    pub w: NodalSpaceW,
    pub a_plus: AssembledOperator,
    pub a_minus: AssembledOperator,
    pub b_op: AssembledOperator,
    pub c_mat: CscMatrix,
    /// Columns of the Q load: saddle right-hand side is `G p`.
    pub g_cols: [Vec<C64>; 3],
    /// Columns of the eta load: `B eta = Gt p`.
    pub g_tilde_cols: [Vec<C64>; 3],
    saddle: SaddleLu,
    b_lu: SparseLu,
    mask_quad: Vec<MaskQuadPoint>,
}

impl Model {
    pub fn build(mesh: Mesh, problem: DipoleProblem, residual_tol: f64) -> Result<Self, ModelError> {
        let mask = classify_observation_region(&mesh, &problem.x0, problem.ball_radius)?;
        let edge = EdgeSpace::new(&mesh);
        let w = NodalSpaceW::new(&mesh);
        let (a_plus, a_minus) = assemble_a_pair(&mesh, &edge, &problem)?;
        let b_op = assemble_b(&mesh, &edge, &w, &problem)?;
        let c_mat = assemble_constraint(&mesh, &edge, &w, &problem);
        let g_cols = assemble_g(&mesh, &edge, &problem, &mask);
        let g_tilde_cols = assemble_g_tilde(&mesh, &edge, &w, &problem);
        let saddle = SaddleLu::factor(&a_plus.mat, &c_mat, "a-plus saddle", residual_tol)?;
        let b_lu = SparseLu::factor(b_op.mat.clone(), "b", residual_tol)?;

        let rule = tet_rule_high();
        let mut mask_quad = Vec::with_capacity(mask.len() * rule.len());
        for &t in mask.included_tets() {
            let geom = edge.geom(t);
            let jac = 6.0 * geom.volume;
            for node in rule {
                mask_quad.push(MaskQuadPoint {
                    tet: t,
                    x: geom.from_reference(&mesh, t, &node.coords),
                    weight: node.weight * jac,
                });
            }
        }

        Ok(Model {
            mesh,
            problem,
            mask,
            edge,
            w,
            a_plus,
            a_minus,
            b_op,
            c_mat,
            g_cols,
            g_tilde_cols,
            saddle,
            b_lu,
            mask_quad,
        })
    }

    pub fn mask_quadrature(&self) -> &[MaskQuadPoint] {
        &self.mask_quad
    }

    /// `L^T f` for the gradient lift `L`: the W-space functional picked up by
    /// an edge-space load on lifted gradients.
    fn grad_lift_transpose(&self, f: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.w.n_dofs()];
        for (e, edge) in self.mesh.edges().iter().enumerate() {
            if let Some(d) = self.w.vertex_dof(edge[1]) {
                out[d] += f[e];
            }
            if let Some(d) = self.w.vertex_dof(edge[0]) {
                out[d] -= f[e];
            }
        }
        out
    }

    /// Split off the gradient-acting part of an edge-space load so the saddle
    /// multiplier vanishes for compatible data.
    fn preproject(&self, rhs: &[C64]) -> Result<Vec<C64>, SolverError> {
        let s = self.b_lu.solve(&self.grad_lift_transpose(rhs))?;
        let shift = self.c_mat.transpose_matvec(&s);
        Ok(rhs.iter().zip(&shift).map(|(r, c)| r - c).collect())
    }

    fn rhs_columns_times(cols: &[Vec<C64>; 3], p: &Vec3) -> Vec<C64> {
        let n = cols[0].len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for j in 0..3 {
            if p[j] == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&cols[j]) {
                *o += v * C64::new(p[j], 0.0);
            }
        }
        out
    }

    /// Solve `B eta = Gt p`; returns the DOF vector and the solve residual.
    pub fn solve_eta(&self, control: &ControlVector) -> Result<(Vec<C64>, f64), SolverError> {
        let rhs = Self::rhs_columns_times(&self.g_tilde_cols, &control.p);
        self.b_lu.solve_with_residual(&rhs)
    }

    /// Solve the constrained Q problem for a control.
    pub fn solve_q(&self, control: &ControlVector) -> Result<(Vec<C64>, SaddleStats), SolverError> {
        let rhs = Self::rhs_columns_times(&self.g_cols, &control.p);
        let rhs = self.preproject(&rhs)?;
        let (q, _mult, stats) = self.saddle.solve(&rhs, false)?;
        Ok((q, stats))
    }

    /// Raw saddle access (diagnostics and tests).
    pub fn solve_saddle_raw(
        &self,
        primal_rhs: &[C64],
        conj: bool,
    ) -> Result<(Vec<C64>, Vec<C64>, SaddleStats), SolverError> {
        self.saddle.solve(primal_rhs, conj)
    }

    /// Solve a `B`-system directly (W-space loads).
    pub fn solve_b(&self, rhs: &[C64]) -> Result<Vec<C64>, SolverError> {
        self.b_lu.solve(rhs)
    }

    /// Full state solve: `eta`, `Q` and the control bundled together.
    pub fn solve_state(&self, p: Vec3) -> Result<StateSplit, SolverError> {
        let control = ControlVector::new(p, &self.problem);
        let (eta, eta_residual) = self.solve_eta(&control)?;
        let (q, q_stats) = self.solve_q(&control)?;
        Ok(StateSplit { control, eta, q, q_stats, eta_residual })
    }

    /// `E = Q + grad(eta) + K` at a point of a known tet.
    pub fn eval_e_in_tet(&self, state: &StateSplit, t: usize, x: &Vec3) -> CVec3 {
        let geom = self.edge.geom(t);
        self.edge.eval(t, x, &state.q)
            + self.w.eval_grad(&self.mesh, geom, t, &state.eta)
            + self
                .problem
                .eval_k(x, &state.control)
                .expect("observation points are away from the dipole")
    }

    /// `curl E = curl Q + curl K` at a point of a known tet (the potential
    /// contributes no curl; the discrete curl of Q is constant per tet).
    pub fn eval_curl_e_in_tet(&self, state: &StateSplit, t: usize, x: &Vec3) -> CVec3 {
        self.edge.eval_curl(t, &state.q)
            + self
                .problem
                .eval_curl_k(x, &state.control)
                .expect("observation points are away from the dipole")
    }

    /// Compose `E` at an arbitrary point of the observation region.
    pub fn compose_e(&self, state: &StateSplit, x: &Vec3) -> Result<CVec3, FieldError> {
        let t = self.locate_masked(x)?;
        Ok(self.eval_e_in_tet(state, t, x))
    }

    /// Compose `curl E` at an arbitrary point of the observation region.
    pub fn compose_curl_e(&self, state: &StateSplit, x: &Vec3) -> Result<CVec3, FieldError> {
        let t = self.locate_masked(x)?;
        Ok(self.eval_curl_e_in_tet(state, t, x))
    }

    fn locate_masked(&self, x: &Vec3) -> Result<usize, FieldError> {
        let t = self
            .mesh
            .locate(x)
            .ok_or(FieldError::OutsideDomain(x[0], x[1], x[2]))?;
        if !self.mask.contains(t) {
            return Err(FieldError::OutsideObservationRegion(x[0], x[1], x[2]));
        }
        Ok(t)
    }

    /// Solve the adjoint pair for a given state and target fields.
    /// `target(tet, x)` returns `(E_d, H_d)` at observation points.
    pub fn solve_adjoint(
        &self,
        state: &StateSplit,
        target: &dyn Fn(usize, &Vec3) -> (CVec3, CVec3),
        nu_e: f64,
        nu_h: f64,
    ) -> Result<AdjointPair, SolverError> {
        let field = |t: usize, x: &Vec3| {
            (self.eval_e_in_tet(state, t, x), self.eval_curl_e_in_tet(state, t, x))
        };
        let (r_t, r_psi) = assemble_tracking_rhs(
            &self.mesh,
            &self.mask,
            &self.edge,
            &self.w,
            &self.problem,
            &field,
            target,
            nu_e,
            nu_h,
        );
        let r_t = self.preproject(&r_t)?;
        // the a- saddle is the conjugate of the a+ saddle (C real)
        let (t, _mult, t_stats) = self.saddle.solve(&r_t, true)?;
        let (psi, psi_residual) = self.b_lu.solve_with_residual(&r_psi)?;
        Ok(AdjointPair { t, psi, t_stats, psi_residual })
    }

    /// Build the auxiliary lifts: for each column, solve
    /// `b[u_j, xi] = int eps A^(j) . grad xi` and interpolate the cutoff
    /// extension into the edge space.
    pub fn build_aux_lift(&self) -> Result<AuxLift, SolverError> {
        let rhs = assemble_aux_rhs(&self.mesh, &self.edge, &self.w, &self.problem);
        let mut u: [Vec<C64>; 3] = Default::default();
        let mut ext: [Vec<C64>; 3] = Default::default();
        let mut constraint_rel = [0.0; 3];
        for j in 0..3 {
            u[j] = self.b_lu.solve(&rhs[j])?;
            ext[j] = self
                .edge
                .interpolate(&self.mesh, |x| self.problem.eval_extension_column(j, x));
            let lift = self.edge.grad_lift(&self.mesh, &self.w, &u[j]);
            let diff: Vec<C64> = ext[j].iter().zip(&lift).map(|(a, b)| a - b).collect();
            let defect = vec_norm(&self.c_mat.matvec(&diff));
            let scale = vec_norm(&rhs[j]).max(f64::MIN_POSITIVE);
            constraint_rel[j] = defect / scale;
        }
        Ok(AuxLift { u, ext, constraint_rel })
    }

    /// `a-[t, w] = conj(w)^T A- t` for DOF vectors.
    pub fn a_minus_form(&self, t_dofs: &[C64], w_dofs: &[C64]) -> C64 {
        let at = self.a_minus.mat.matvec(t_dofs);
        w_dofs.iter().zip(&at).map(|(w, v)| w.conj() * v).sum()
    }

    /// `b[psi, xi] = conj(xi)^T B psi` for DOF vectors.
    pub fn b_form(&self, psi: &[C64], xi: &[C64]) -> C64 {
        let bp = self.b_op.mat.matvec(psi);
        xi.iter().zip(&bp).map(|(x, v)| x.conj() * v).sum()
    }
}
