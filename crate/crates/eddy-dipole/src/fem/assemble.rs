//! Assembly of the sesquilinear forms and load functionals.
//!
//! Forms (all tested against real bases, so conjugation never appears in the
//! assembled entries):
//!
//! ```text
//! a+-[w, v] = int mu^-1 curl w . curl conj(v)  +-  i omega int_{conductor} sigma w . conj(v)
//! b[u, xi]  = int_{insulator} eps grad u . grad conj(xi)
//! c[v, xi]  = int_{insulator} eps v . grad conj(xi)      (the V-constraint)
//! ```
//!
//! Loads: the eta right-hand side `Gt` with columns `-int eps A^(j) . grad xi`,
//! and the Q right-hand side `G` with contrast volume terms over the
//! observation region plus the outer-boundary term
//! `int_Gamma (n x mu0^-1 curl A^(j)) . v`. Both satisfy `rhs(p) = G p`.
//!
//! Local matrices are computed for `i <= j` and mirrored, so declared
//! symmetries hold exactly, not just to rounding.

use super::quadrature::{tet_rule_high, tet_rule_low, tri_rule};
use super::sparse::CscMatrix;
use super::spaces::{EdgeSpace, NodalSpaceW};
use crate::geometry::{face_area_normal, FaceTag, Mesh, ObservationMask, RegionTag};
use crate::kernels::DipoleProblem;
use crate::{apply_real, bdot, complexify, CVec3, Mat3, Vec3, C64};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("declared {kind:?} symmetry violated: defect {defect:.3e} vs scale {scale:.3e}")]
    SymmetryViolated { kind: SymmetryKind, defect: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryKind {
    Hermitian,
    ComplexSymmetric,
    General,
}

/// A sparse operator with a verified symmetry claim.
#[derive(Debug)]
pub struct AssembledOperator {
    pub mat: CscMatrix,
    pub symmetry: SymmetryKind,
}

impl AssembledOperator {
    pub fn new(mat: CscMatrix, symmetry: SymmetryKind) -> Result<Self, AssemblyError> {
        let scale = mat.max_abs();
        let defect = match symmetry {
            SymmetryKind::Hermitian => mat.hermitian_defect(),
            SymmetryKind::ComplexSymmetric => mat.transpose_defect(),
            SymmetryKind::General => 0.0,
        };
        if defect > 1e-13 * scale {
            return Err(AssemblyError::SymmetryViolated { kind: symmetry, defect, scale });
        }
        Ok(AssembledOperator { mat, symmetry })
    }
}

/// Curl-curl stiffness (weighted by a per-region tensor) and conductor mass
/// (weighted likewise), as real triplet lists shared by `a+` and `a-`.
fn edge_form_parts(
    mesh: &Mesh,
    edge: &EdgeSpace,
    mu_inv: impl Fn(RegionTag) -> Mat3,
    sigma: impl Fn(RegionTag) -> Mat3,
) -> (Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>) {
    let rule = tet_rule_low();
    let mut stiff = Vec::new();
    let mut mass = Vec::new();
    for t in 0..mesh.n_tets() {
        let geom = edge.geom(t);
        let dofs = edge.tet_dofs(t);
        let curls = edge.curls(t);
        let minv = mu_inv(mesh.region(t));
        for i in 0..6 {
            let mc = minv * curls[i];
            for j in i..6 {
                let v = geom.volume * mc.dot(&curls[j]);
                stiff.push((dofs[i].edge, dofs[j].edge, v));
                if i != j {
                    stiff.push((dofs[j].edge, dofs[i].edge, v));
                }
            }
        }
        if mesh.region(t) == RegionTag::Conductor {
            let sg = sigma(RegionTag::Conductor);
            let jac = 6.0 * geom.volume;
            let mut local = [[0.0; 6]; 6];
            for node in rule {
                let x = geom.from_reference(mesh, t, &node.coords);
                let basis = edge.basis_at(t, &x);
                for i in 0..6 {
                    let sb = sg * basis[i];
                    for j in i..6 {
                        local[i][j] += node.weight * jac * sb.dot(&basis[j]);
                    }
                }
            }
            for i in 0..6 {
                for j in i..6 {
                    mass.push((dofs[i].edge, dofs[j].edge, local[i][j]));
                    if i != j {
                        mass.push((dofs[j].edge, dofs[i].edge, local[i][j]));
                    }
                }
            }
        }
    }
    (stiff, mass)
}

fn combine(n: usize, stiff: &[(usize, usize, f64)], mass: &[(usize, usize, f64)], omega: f64, sign: f64) -> CscMatrix {
    let mut trips: Vec<(usize, usize, C64)> = Vec::with_capacity(stiff.len() + mass.len());
    trips.extend(stiff.iter().map(|&(i, j, v)| (i, j, C64::new(v, 0.0))));
    trips.extend(mass.iter().map(|&(i, j, v)| (i, j, C64::new(0.0, sign * omega * v))));
    CscMatrix::from_triplets(n, n, trips)
}

/// `a+` and `a-` assembled from shared real parts, so that one is exactly the
/// entrywise conjugate of the other.
pub fn assemble_a_pair(
    mesh: &Mesh,
    edge: &EdgeSpace,
    problem: &DipoleProblem,
) -> Result<(AssembledOperator, AssembledOperator), AssemblyError> {
    let m = &problem.materials;
    let (stiff, mass) = edge_form_parts(mesh, edge, |r| *m.mu_inv(r), |r| *m.sigma(r));
    let n = edge.n_dofs();
    let plus = combine(n, &stiff, &mass, problem.omega, 1.0);
    let minus = combine(n, &stiff, &mass, problem.omega, -1.0);
    Ok((
        AssembledOperator::new(plus, SymmetryKind::ComplexSymmetric)?,
        AssembledOperator::new(minus, SymmetryKind::ComplexSymmetric)?,
    ))
}

pub fn assemble_a_plus(
    mesh: &Mesh,
    edge: &EdgeSpace,
    problem: &DipoleProblem,
) -> Result<AssembledOperator, AssemblyError> {
    Ok(assemble_a_pair(mesh, edge, problem)?.0)
}

pub fn assemble_a_minus(
    mesh: &Mesh,
    edge: &EdgeSpace,
    problem: &DipoleProblem,
) -> Result<AssembledOperator, AssemblyError> {
    Ok(assemble_a_pair(mesh, edge, problem)?.1)
}

/// Unweighted curl seminorm matrix: `int curl w . curl v` over the domain.
/// Used by the coercivity diagnostics.
pub fn assemble_unweighted_curl_matrix(mesh: &Mesh, edge: &EdgeSpace) -> CscMatrix {
    let id = Mat3::identity();
    let (stiff, _) = edge_form_parts(mesh, edge, |_| id, |_| id);
    CscMatrix::from_triplets(
        edge.n_dofs(),
        edge.n_dofs(),
        stiff.iter().map(|&(i, j, v)| (i, j, C64::new(v, 0.0))).collect(),
    )
}

/// Unweighted conductor mass matrix: `int_{conductor} w . v`.
pub fn assemble_conductor_mass_matrix(mesh: &Mesh, edge: &EdgeSpace) -> CscMatrix {
    let id = Mat3::identity();
    let (_, mass) = edge_form_parts(mesh, edge, |_| id, |_| id);
    CscMatrix::from_triplets(
        edge.n_dofs(),
        edge.n_dofs(),
        mass.iter().map(|&(i, j, v)| (i, j, C64::new(v, 0.0))).collect(),
    )
}

/// eps-weighted P1 stiffness on `W` (real, Hermitian, positive definite).
pub fn assemble_b(
    mesh: &Mesh,
    edge: &EdgeSpace,
    w: &NodalSpaceW,
    problem: &DipoleProblem,
) -> Result<AssembledOperator, AssemblyError> {
    let mut trips: Vec<(usize, usize, C64)> = Vec::new();
    for t in 0..mesh.n_tets() {
        if mesh.region(t) != RegionTag::Insulator {
            continue;
        }
        let geom = edge.geom(t);
        let eps = problem.materials.eps(RegionTag::Insulator);
        let tet = &mesh.tets()[t];
        for i in 0..4 {
            let Some(di) = w.vertex_dof(tet[i]) else { continue };
            let eg = eps * geom.grads[i];
            for j in i..4 {
                let Some(dj) = w.vertex_dof(tet[j]) else { continue };
                let v = C64::new(geom.volume * eg.dot(&geom.grads[j]), 0.0);
                trips.push((di, dj, v));
                if i != j {
                    trips.push((dj, di, v));
                }
            }
        }
    }
    AssembledOperator::new(
        CscMatrix::from_triplets(w.n_dofs(), w.n_dofs(), trips),
        SymmetryKind::Hermitian,
    )
}

/// Constraint block: `C[xi, v] = int_{insulator} eps v . grad xi`, one row
/// per `W` DOF. Imposing `C v = 0` is the discrete divergence constraint
/// together with the vanishing normal trace on the outer boundary.
pub fn assemble_constraint(
    mesh: &Mesh,
    edge: &EdgeSpace,
    w: &NodalSpaceW,
    problem: &DipoleProblem,
) -> CscMatrix {
    let rule = tet_rule_low();
    let mut trips: Vec<(usize, usize, C64)> = Vec::new();
    for t in 0..mesh.n_tets() {
        if mesh.region(t) != RegionTag::Insulator {
            continue;
        }
        let geom = edge.geom(t);
        let eps = problem.materials.eps(RegionTag::Insulator);
        let tet = &mesh.tets()[t];
        let dofs = edge.tet_dofs(t);
        let jac = 6.0 * geom.volume;
        // integrand is linear in x; the low rule is exact
        let mut local = [[0.0; 6]; 4];
        for node in rule {
            let x = geom.from_reference(mesh, t, &node.coords);
            let basis = edge.basis_at(t, &x);
            for (l, row) in local.iter_mut().enumerate() {
                let eg = eps * geom.grads[l];
                for (k, cell) in row.iter_mut().enumerate() {
                    *cell += node.weight * jac * basis[k].dot(&eg);
                }
            }
        }
        for (l, row) in local.iter().enumerate() {
            let Some(d) = w.vertex_dof(tet[l]) else { continue };
            for (k, &v) in row.iter().enumerate() {
                trips.push((d, dofs[k].edge, C64::new(v, 0.0)));
            }
        }
    }
    CscMatrix::from_triplets(w.n_dofs(), edge.n_dofs(), trips)
}

/// Columns of the eta load: `Gt[., j] = -int_{insulator} A^(j) . (eps grad xi)`,
/// so that the eta right-hand side for a control `p` is `Gt p`.
pub fn assemble_g_tilde(
    mesh: &Mesh,
    edge: &EdgeSpace,
    w: &NodalSpaceW,
    problem: &DipoleProblem,
) -> [Vec<C64>; 3] {
    let rule = tet_rule_high();
    let mut cols = [
        vec![C64::new(0.0, 0.0); w.n_dofs()],
        vec![C64::new(0.0, 0.0); w.n_dofs()],
        vec![C64::new(0.0, 0.0); w.n_dofs()],
    ];
    for t in 0..mesh.n_tets() {
        if mesh.region(t) != RegionTag::Insulator {
            continue;
        }
        let geom = edge.geom(t);
        let eps = problem.materials.eps(RegionTag::Insulator);
        let tet = &mesh.tets()[t];
        let jac = 6.0 * geom.volume;
        for node in rule {
            let x = geom.from_reference(mesh, t, &node.coords);
            let n_mat = problem
                .n_matrix(&x)
                .expect("insulator quadrature points are away from the dipole");
            let coupling = problem.coupling();
            for (l, &vtx) in tet.iter().enumerate() {
                let Some(d) = w.vertex_dof(vtx) else { continue };
                let eg = complexify(&(eps * geom.grads[l]));
                for (j, col) in cols.iter_mut().enumerate() {
                    let a_col = CVec3::new(n_mat[(0, j)], n_mat[(1, j)], n_mat[(2, j)]) * coupling;
                    col[d] -= node.weight * jac * bdot(&a_col, &eg);
                }
            }
        }
    }
    cols
}

/// Columns of the Q load: contrast volume terms over the observation region
/// plus the outer-boundary curl pairing, so that the saddle right-hand side
/// for a control `p` is `G p`.
pub fn assemble_g(
    mesh: &Mesh,
    edge: &EdgeSpace,
    problem: &DipoleProblem,
    mask: &ObservationMask,
) -> [Vec<C64>; 3] {
    let n = edge.n_dofs();
    let mut cols = [
        vec![C64::new(0.0, 0.0); n],
        vec![C64::new(0.0, 0.0); n],
        vec![C64::new(0.0, 0.0); n],
    ];
    let m = &problem.materials;
    let mu0_inv = 1.0 / problem.mu0;
    let rule = tet_rule_high();

    // Volume terms act only where the material contrast is nonzero.
    for &t in mask.included_tets() {
        let region = mesh.region(t);
        let dmu = m.mu_inv(region) - Mat3::identity() * mu0_inv;
        let dsig = m.sigma(region) - Mat3::identity() * problem.sigma0;
        let has_mu = dmu.norm() > 0.0;
        let has_sig = dsig.norm() > 0.0;
        if !has_mu && !has_sig {
            continue;
        }
        let geom = edge.geom(t);
        let dofs = edge.tet_dofs(t);
        let curls = edge.curls(t);
        let jac = 6.0 * geom.volume;
        for node in rule {
            let x = geom.from_reference(mesh, t, &node.coords);
            let basis = edge.basis_at(t, &x);
            for j in 0..3 {
                let mut mu_term = CVec3::zeros();
                if has_mu {
                    let curl_a = problem.eval_curl_a_column(j, &x).expect("masked point");
                    mu_term = apply_real(&dmu, &curl_a);
                }
                let mut sig_term = CVec3::zeros();
                if has_sig {
                    let a_col = problem.eval_a_column(j, &x).expect("masked point");
                    sig_term = apply_real(&dsig, &a_col) * C64::new(0.0, problem.omega);
                }
                for (k, dof) in dofs.iter().enumerate() {
                    let mut contrib = C64::new(0.0, 0.0);
                    if has_mu {
                        contrib -= bdot(&mu_term, &complexify(&curls[k]));
                    }
                    if has_sig {
                        contrib -= bdot(&sig_term, &complexify(&basis[k]));
                    }
                    cols[j][dof.edge] += node.weight * jac * contrib;
                }
            }
        }
    }

    // Outer-boundary term: int_Gamma (n x mu0^-1 curl A^(j)) . v.
    let trule = tri_rule();
    for face in mesh.boundary_faces().iter().filter(|f| f.tag == FaceTag::Gamma) {
        let [va, vb, vc] = face.vertices;
        let (pa, pb, pc) = (mesh.vertices()[va], mesh.vertices()[vb], mesh.vertices()[vc]);
        let area_n = face_area_normal(mesh.vertices(), &face.vertices);
        let area = area_n.norm();
        let n_hat = area_n / area;
        let t = face.tet;
        let dofs = edge.tet_dofs(t);
        for node in trule {
            let x = pa + (pb - pa) * node.coords[0] + (pc - pa) * node.coords[1];
            let basis = edge.basis_at(t, &x);
            for j in 0..3 {
                let curl_a = problem.eval_curl_a_column(j, &x).expect("boundary is away from the dipole");
                let pairing = complexify(&n_hat).cross(&curl_a) * C64::new(mu0_inv, 0.0);
                for (k, dof) in dofs.iter().enumerate() {
                    cols[j][dof.edge] +=
                        node.weight * 2.0 * area * bdot(&pairing, &complexify(&basis[k]));
                }
            }
        }
    }
    cols
}

/// Load vector of the auxiliary lift problems: `+int_{insulator} eps A^(j) . grad xi`.
pub fn assemble_aux_rhs(
    mesh: &Mesh,
    edge: &EdgeSpace,
    w: &NodalSpaceW,
    problem: &DipoleProblem,
) -> [Vec<C64>; 3] {
    // Same integral as the eta load up to sign.
    let cols = assemble_g_tilde(mesh, edge, w, problem);
    cols.map(|col| col.into_iter().map(|v| -v).collect())
}

/// Tracking right-hand sides of the adjoint pair, integrated over the mask:
///
/// ```text
/// r_T(v)  = nu_E int (E - E_d) . v  +  nu_H int (mu^-1 curl E - H_d) . mu^-1 curl v
/// r_Psi(xi) = nu_E int (E - E_d) . grad xi
/// ```
///
/// `field` returns `(E, curl E)` at a point of a masked tet; `target` returns
/// `(E_d, H_d)`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_tracking_rhs(
    mesh: &Mesh,
    mask: &ObservationMask,
    edge: &EdgeSpace,
    w: &NodalSpaceW,
    problem: &DipoleProblem,
    field: &dyn Fn(usize, &Vec3) -> (CVec3, CVec3),
    target: &dyn Fn(usize, &Vec3) -> (CVec3, CVec3),
    nu_e: f64,
    nu_h: f64,
) -> (Vec<C64>, Vec<C64>) {
    let rule = tet_rule_high();
    let mut r_t = vec![C64::new(0.0, 0.0); edge.n_dofs()];
    let mut r_psi = vec![C64::new(0.0, 0.0); w.n_dofs()];
    for &t in mask.included_tets() {
        let geom = edge.geom(t);
        let dofs = edge.tet_dofs(t);
        let curls = edge.curls(t);
        let mu_inv = problem.materials.mu_inv(mesh.region(t));
        let tet = &mesh.tets()[t];
        let jac = 6.0 * geom.volume;
        let insulator = mesh.region(t) == RegionTag::Insulator;
        for node in rule {
            let x = geom.from_reference(mesh, t, &node.coords);
            let (e, curl_e) = field(t, &x);
            let (e_d, h_d) = target(t, &x);
            let e_res = (e - e_d) * C64::new(nu_e, 0.0);
            let h_res = (apply_real(mu_inv, &curl_e) - h_d) * C64::new(nu_h, 0.0);
            let wj = node.weight * jac;
            if nu_e != 0.0 || nu_h != 0.0 {
                let basis = edge.basis_at(t, &x);
                for (k, dof) in dofs.iter().enumerate() {
                    let mut v = C64::new(0.0, 0.0);
                    if nu_e != 0.0 {
                        v += bdot(&e_res, &complexify(&basis[k]));
                    }
                    if nu_h != 0.0 {
                        v += bdot(&h_res, &complexify(&(mu_inv * curls[k])));
                    }
                    r_t[dof.edge] += wj * v;
                }
            }
            if nu_e != 0.0 && insulator {
                for (l, &vtx) in tet.iter().enumerate() {
                    if let Some(d) = w.vertex_dof(vtx) {
                        r_psi[d] += wj * bdot(&e_res, &complexify(&geom.grads[l]));
                    }
                }
            }
        }
    }
    (r_t, r_psi)
}
