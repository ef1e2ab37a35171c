//! Discrete spaces: lowest-order Nedelec (first kind) edge elements on tets
//! and the P1 space `W` of insulator potentials vanishing on the interface.
//!
//! Edge degrees of freedom are circulations along global edges oriented from
//! the lower to the higher vertex index, which makes tangential continuity
//! automatic and the assembly independent of tet enumeration. On a tet with
//! barycentric functions `lambda_i` the basis of the edge from local vertex
//! `a` to `b` is `lambda_a grad lambda_b - lambda_b grad lambda_a`, whose
//! curl is the constant `2 grad lambda_a x grad lambda_b`.

use crate::geometry::{Mesh, RegionTag, LOCAL_EDGES};
use crate::{CVec3, Vec3, C64};

/// Affine geometry of one tet: barycentric gradients and offsets, volume.
#[derive(Debug, Clone)]
pub struct TetGeom {
    pub grads: [Vec3; 4],
    pub consts: [f64; 4],
    pub volume: f64,
}

impl TetGeom {
    pub fn new(mesh: &Mesh, t: usize) -> Self {
        let tet = &mesh.tets()[t];
        let p0 = mesh.vertices()[tet[0]];
        let m = nalgebra::Matrix3::from_columns(&[
            mesh.vertices()[tet[1]] - p0,
            mesh.vertices()[tet[2]] - p0,
            mesh.vertices()[tet[3]] - p0,
        ]);
        let det = m.determinant();
        let inv = m.try_inverse().expect("non-degenerate tet");
        // rows of the inverse are the gradients of lambda_1..3
        let mut grads = [Vec3::zeros(); 4];
        for i in 0..3 {
            grads[i + 1] = Vec3::new(inv[(i, 0)], inv[(i, 1)], inv[(i, 2)]);
        }
        grads[0] = -(grads[1] + grads[2] + grads[3]);
        let mut consts = [0.0; 4];
        for i in 0..4 {
            consts[i] = 1.0 - grads[i].dot(&mesh.vertices()[tet[i]]);
        }
        TetGeom { grads, consts, volume: det / 6.0 }
    }

    #[inline]
    pub fn barycentric(&self, x: &Vec3) -> [f64; 4] {
        [
            self.consts[0] + self.grads[0].dot(x),
            self.consts[1] + self.grads[1].dot(x),
            self.consts[2] + self.grads[2].dot(x),
            self.consts[3] + self.grads[3].dot(x),
        ]
    }

    /// Map a reference-tet point (unit tet coordinates) to world coordinates.
    pub fn from_reference(&self, mesh: &Mesh, t: usize, coords: &[f64; 3]) -> Vec3 {
        let tet = &mesh.tets()[t];
        let p0 = mesh.vertices()[tet[0]];
        p0 + (mesh.vertices()[tet[1]] - p0) * coords[0]
            + (mesh.vertices()[tet[2]] - p0) * coords[1]
            + (mesh.vertices()[tet[3]] - p0) * coords[2]
    }
}

/// One edge DOF of a tet: local endpoints ordered by global vertex index,
/// plus the global edge id.
#[derive(Debug, Clone, Copy)]
pub struct TetEdge {
    pub local_a: usize,
    pub local_b: usize,
    pub edge: usize,
}

/// Lowest-order Nedelec space: one DOF per mesh edge.
#[derive(Debug)]
pub struct EdgeSpace {
    n_dofs: usize,
    tet_edges: Vec<[TetEdge; 6]>,
    geoms: Vec<TetGeom>,
}

impl EdgeSpace {
    pub fn new(mesh: &Mesh) -> Self {
        let tet_edges = (0..mesh.n_tets())
            .map(|t| {
                let tet = &mesh.tets()[t];
                let ids = mesh.tet_edges(t);
                let mut out = [TetEdge { local_a: 0, local_b: 0, edge: 0 }; 6];
                for (k, le) in LOCAL_EDGES.iter().enumerate() {
                    let (mut a, mut b) = (le[0], le[1]);
                    if tet[a] > tet[b] {
                        std::mem::swap(&mut a, &mut b);
                    }
                    out[k] = TetEdge { local_a: a, local_b: b, edge: ids[k] };
                }
                out
            })
            .collect();
        let geoms = (0..mesh.n_tets()).map(|t| TetGeom::new(mesh, t)).collect();
        EdgeSpace { n_dofs: mesh.n_edges(), tet_edges, geoms }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn tet_dofs(&self, t: usize) -> &[TetEdge; 6] {
        &self.tet_edges[t]
    }

    pub fn geom(&self, t: usize) -> &TetGeom {
        &self.geoms[t]
    }

    /// Values of the six basis functions of tet `t` at `x`.
    pub fn basis_at(&self, t: usize, x: &Vec3) -> [Vec3; 6] {
        let g = &self.geoms[t];
        let lam = g.barycentric(x);
        let mut out = [Vec3::zeros(); 6];
        for (k, te) in self.tet_edges[t].iter().enumerate() {
            out[k] = g.grads[te.local_b] * lam[te.local_a] - g.grads[te.local_a] * lam[te.local_b];
        }
        out
    }

    /// Constant curls of the six basis functions of tet `t`.
    pub fn curls(&self, t: usize) -> [Vec3; 6] {
        let g = &self.geoms[t];
        let mut out = [Vec3::zeros(); 6];
        for (k, te) in self.tet_edges[t].iter().enumerate() {
            out[k] = 2.0 * g.grads[te.local_a].cross(&g.grads[te.local_b]);
        }
        out
    }

    /// Evaluate a DOF vector as a field at `x` inside tet `t`.
    pub fn eval(&self, t: usize, x: &Vec3, dofs: &[C64]) -> CVec3 {
        let basis = self.basis_at(t, x);
        let mut out = CVec3::zeros();
        for (k, te) in self.tet_edges[t].iter().enumerate() {
            out += crate::complexify(&basis[k]) * dofs[te.edge];
        }
        out
    }

    /// Curl of a DOF vector on tet `t` (constant there).
    pub fn eval_curl(&self, t: usize, dofs: &[C64]) -> CVec3 {
        let curls = self.curls(t);
        let mut out = CVec3::zeros();
        for (k, te) in self.tet_edges[t].iter().enumerate() {
            out += crate::complexify(&curls[k]) * dofs[te.edge];
        }
        out
    }

    /// Edge interpolant of a smooth field: circulation along each edge by
    /// Gauss quadrature, oriented low-to-high vertex.
    pub fn interpolate(&self, mesh: &Mesh, f: impl Fn(&Vec3) -> CVec3) -> Vec<C64> {
        let rule = super::quadrature::segment_rule();
        mesh.edges()
            .iter()
            .map(|e| {
                let (pa, pb) = (mesh.vertices()[e[0]], mesh.vertices()[e[1]]);
                let d = pb - pa;
                let mut acc = C64::new(0.0, 0.0);
                for &(s, w) in rule {
                    let x = pa + d * s;
                    acc += crate::bdot(&f(&x), &crate::complexify(&d)) * w;
                }
                acc
            })
            .collect()
    }

    /// DOF vector of the gradient of a `W` function (exact for P1 inputs:
    /// the circulation of a gradient is the potential difference).
    pub fn grad_lift(&self, mesh: &Mesh, w: &NodalSpaceW, w_dofs: &[C64]) -> Vec<C64> {
        mesh.edges()
            .iter()
            .map(|e| {
                let vb = w.vertex_dof(e[1]).map(|d| w_dofs[d]).unwrap_or(C64::new(0.0, 0.0));
                let va = w.vertex_dof(e[0]).map(|d| w_dofs[d]).unwrap_or(C64::new(0.0, 0.0));
                vb - va
            })
            .collect()
    }
}

/// P1 space on the insulator with zero trace on the interface: one DOF per
/// insulator-incident vertex not on `Gamma_C`. Functions extend by zero to
/// the conductor, so their gradients vanish on conductor tets.
#[derive(Debug)]
pub struct NodalSpaceW {
    vertex_to_dof: Vec<Option<usize>>,
    dof_to_vertex: Vec<usize>,
}

impl NodalSpaceW {
    pub fn new(mesh: &Mesh) -> Self {
        let insulator = mesh.insulator_vertices();
        let on_interface = mesh.gamma_c_vertices();
        let mut vertex_to_dof = vec![None; mesh.n_vertices()];
        let mut dof_to_vertex = Vec::new();
        for v in 0..mesh.n_vertices() {
            if insulator[v] && !on_interface[v] {
                vertex_to_dof[v] = Some(dof_to_vertex.len());
                dof_to_vertex.push(v);
            }
        }
        NodalSpaceW { vertex_to_dof, dof_to_vertex }
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_to_vertex.len()
    }

    pub fn vertex_dof(&self, v: usize) -> Option<usize> {
        self.vertex_to_dof[v]
    }

    pub fn dof_vertex(&self, d: usize) -> usize {
        self.dof_to_vertex[d]
    }

    /// Value of a DOF vector at `x` in tet `t` (zero on conductor tets).
    pub fn eval(&self, mesh: &Mesh, geom: &TetGeom, t: usize, x: &Vec3, dofs: &[C64]) -> C64 {
        if mesh.region(t) == RegionTag::Conductor {
            return C64::new(0.0, 0.0);
        }
        let lam = geom.barycentric(x);
        let mut acc = C64::new(0.0, 0.0);
        for (l, &v) in mesh.tets()[t].iter().enumerate() {
            if let Some(d) = self.vertex_to_dof[v] {
                acc += dofs[d] * lam[l];
            }
        }
        acc
    }

    /// Gradient of a DOF vector on tet `t` (constant; zero on conductor tets).
    pub fn eval_grad(&self, mesh: &Mesh, geom: &TetGeom, t: usize, dofs: &[C64]) -> CVec3 {
        let mut acc = CVec3::zeros();
        if mesh.region(t) == RegionTag::Conductor {
            return acc;
        }
        for (l, &v) in mesh.tets()[t].iter().enumerate() {
            if let Some(d) = self.vertex_to_dof[v] {
                acc += crate::complexify(&geom.grads[l]) * dofs[d];
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_nested_box_mesh;

    fn setup() -> (Mesh, EdgeSpace, NodalSpaceW) {
        let mesh = generate_nested_box_mesh(1.0, 0.5, 4).unwrap();
        let edge = EdgeSpace::new(&mesh);
        let w = NodalSpaceW::new(&mesh);
        (mesh, edge, w)
    }

    #[test]
    fn barycentrics_partition_unity() {
        let (mesh, edge, _) = setup();
        for t in [0, 17, 137] {
            let g = edge.geom(t);
            let x = mesh.tet_centroid(t);
            let lam = g.barycentric(&x);
            assert!((lam.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(lam.iter().all(|&l| (l - 0.25).abs() < 1e-12));
        }
    }

    #[test]
    fn edge_basis_has_unit_circulation_on_its_own_edge() {
        let (mesh, edge, _) = setup();
        let rule = crate::fem::quadrature::segment_rule();
        for t in [3, 99, 200] {
            for (k, te) in edge.tet_dofs(t).iter().enumerate() {
                let e = mesh.edges()[te.edge];
                let (pa, pb) = (mesh.vertices()[e[0]], mesh.vertices()[e[1]]);
                for (m, other) in edge.tet_dofs(t).iter().enumerate() {
                    // circulation of basis m along edge k
                    let mut circ = 0.0;
                    for &(s, w) in rule {
                        let x = pa + (pb - pa) * s;
                        circ += w * edge.basis_at(t, &x)[m].dot(&(pb - pa));
                    }
                    let expect = if m == k { 1.0 } else { 0.0 };
                    assert!(
                        (circ - expect).abs() < 1e-12,
                        "tet {t} edge {k} basis {m}: {circ}"
                    );
                    let _ = other;
                }
            }
        }
    }

    #[test]
    fn constant_fields_are_reproduced() {
        // interpolation of a constant vector field is exact in Nedelec-1
        let (mesh, edge, _) = setup();
        let c = Vec3::new(0.3, -0.7, 0.2);
        let dofs = edge.interpolate(&mesh, |_| crate::complexify(&c));
        for t in [0, 50, 100] {
            let x = mesh.tet_centroid(t);
            let v = edge.eval(t, &x, &dofs);
            assert!((v - crate::complexify(&c)).norm() < 1e-12);
            assert!(edge.eval_curl(t, &dofs).norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_lift_reproduces_p1_gradients() {
        let (mesh, edge, w) = setup();
        // an arbitrary W function
        let dofs: Vec<C64> = (0..w.n_dofs())
            .map(|d| C64::new((d % 7) as f64 * 0.1, (d % 5) as f64 * -0.2))
            .collect();
        let lifted = edge.grad_lift(&mesh, &w, &dofs);
        for t in 0..mesh.n_tets() {
            let g = edge.geom(t);
            let grad_direct = w.eval_grad(&mesh, g, t, &dofs);
            let x = mesh.tet_centroid(t);
            let grad_lifted = edge.eval(t, &x, &lifted);
            if mesh.region(t) == RegionTag::Insulator {
                assert!(
                    (grad_direct - grad_lifted).norm() <= 1e-12 * (1.0 + grad_direct.norm()),
                    "tet {t}"
                );
            }
            // the lift is curl-free everywhere
            assert!(edge.eval_curl(t, &lifted).norm() < 1e-10);
        }
    }

    #[test]
    fn w_space_excludes_interface_and_conductor_vertices() {
        let (mesh, _, w) = setup();
        let on_gc = mesh.gamma_c_vertices();
        let ins = mesh.insulator_vertices();
        for v in 0..mesh.n_vertices() {
            match w.vertex_dof(v) {
                Some(_) => assert!(ins[v] && !on_gc[v]),
                None => assert!(!ins[v] || on_gc[v]),
            }
        }
        // n = 4, b = 0.5: 125 vertices total, 1 interior conductor vertex,
        // 26 interface vertices
        assert_eq!(mesh.n_vertices(), 125);
        assert_eq!(w.n_dofs(), 125 - 1 - 26);
    }
}
