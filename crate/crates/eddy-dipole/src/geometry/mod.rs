//! Tagged tetrahedral meshes of the two-material geometry.
//!
//! A [`Mesh`] owns vertices, positively oriented tets with a per-tet region
//! tag (conductor or insulator), a globally consistent edge numbering (every
//! edge stored as `(min_vertex, max_vertex)`), and the derived boundary and
//! interface faces. Construction validates the geometric assumptions the
//! solver relies on: the conductor is strictly interior (no conductor tet
//! touches the outer boundary, not even through a vertex), and every face is
//! either interior, on the outer boundary `Gamma`, or on the
//! conductor/insulator interface `Gamma_C`, never both.

mod generate;
mod msh;
mod observation;
mod topology;

pub use generate::generate_nested_box_mesh;
pub use msh::{export_msh, import_msh, MshError};
pub use observation::{classify_observation_region, ObservationError, ObservationMask};
pub use topology::{validate_topology, TopologyReport};

use crate::Vec3;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RegionTag {
    Conductor,
    Insulator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceTag {
    /// Outer boundary of the computational domain.
    Gamma,
    /// Conductor/insulator interface.
    GammaC,
}

/// A tagged surface triangle. The stored winding encodes the face normal by
/// the right-hand rule: outward for `Gamma`, conductor-to-insulator for
/// `GammaC`. `tet` is the owning tet (the conductor-side one on `GammaC`).
#[derive(Debug, Clone, Copy)]
pub struct BoundaryFace {
    pub vertices: [usize; 3],
    pub tag: FaceTag,
    pub tet: usize,
}

/// Structured-grid metadata kept by the generator for O(1) point location.
#[derive(Debug, Clone, Copy)]
pub struct StructuredGrid {
    pub origin: Vec3,
    pub spacing: f64,
    pub cells_per_axis: usize,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("vertex index {0} out of range in tet {1}")]
    VertexOutOfRange(usize, usize),
    #[error("tet {0} is degenerate (zero volume)")]
    DegenerateTet(usize),
    #[error("face shared by more than two tets ({0}, {1}, ...)")]
    NonManifold(usize, usize),
    #[error("conductor touches Gamma: tet {0} has vertex {1} on the outer boundary")]
    ConductorTouchesGamma(usize, usize),
    #[error(
        "inner box boundary at {b} is not aligned with the grid of spacing {h}; smallest valid n is {suggestion}"
    )]
    InnerBoxNotResolvable { b: f64, h: f64, suggestion: usize },
    #[error("no grid up to n = {0} resolves the inner box boundary")]
    NoAlignedGrid(usize),
    #[error("require 0 < inner_half_width < outer_half_width, got {inner} and {outer}")]
    BadBoxDimensions { inner: f64, outer: f64 },
    #[error("n_cells_per_axis must be at least 4, got {0}")]
    TooFewCells(usize),
}

pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    tet_region: Vec<RegionTag>,
    boundary_faces: Vec<BoundaryFace>,
    edges: Vec<[usize; 2]>,
    tet_edges: Vec<[usize; 6]>,
    grid: Option<StructuredGrid>,
}

impl Mesh {
    /// Assemble a mesh from raw vertices, tets and region tags. Tets are
    /// reoriented to positive volume, edges and tagged faces are derived, and
    /// the geometric invariants are checked.
    pub fn build(
        vertices: Vec<Vec3>,
        mut tets: Vec<[usize; 4]>,
        tet_region: Vec<RegionTag>,
    ) -> Result<Self, MeshError> {
        assert_eq!(tets.len(), tet_region.len());
        for (t, tet) in tets.iter_mut().enumerate() {
            for &v in tet.iter() {
                if v >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange(v, t));
                }
            }
            let vol6 = signed_volume6(&vertices, tet);
            if vol6 == 0.0 {
                return Err(MeshError::DegenerateTet(t));
            }
            if vol6 < 0.0 {
                tet.swap(2, 3);
            }
        }

        // Global edges as sorted vertex pairs.
        let mut edge_set: Vec<[usize; 2]> = Vec::with_capacity(tets.len() * 6);
        for tet in &tets {
            for le in LOCAL_EDGES {
                let (a, b) = (tet[le[0]], tet[le[1]]);
                edge_set.push([a.min(b), a.max(b)]);
            }
        }
        edge_set.sort_unstable();
        edge_set.dedup();
        let edge_index: HashMap<[usize; 2], usize> =
            edge_set.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let tet_edges: Vec<[usize; 6]> = tets
            .iter()
            .map(|tet| {
                let mut ids = [0usize; 6];
                for (k, le) in LOCAL_EDGES.iter().enumerate() {
                    let (a, b) = (tet[le[0]], tet[le[1]]);
                    ids[k] = edge_index[&[a.min(b), a.max(b)]];
                }
                ids
            })
            .collect();

        // Face incidence: each sorted triple maps to the owning tets.
        let mut face_map: HashMap<[usize; 3], Vec<(usize, usize)>> = HashMap::new();
        for (t, tet) in tets.iter().enumerate() {
            for l in 0..4 {
                let mut f = [tet[(l + 1) % 4], tet[(l + 2) % 4], tet[(l + 3) % 4]];
                f.sort_unstable();
                face_map.entry(f).or_default().push((t, l));
            }
        }

        let mut boundary_faces = Vec::new();
        for (key, owners) in &face_map {
            match owners.as_slice() {
                [(t, l)] => {
                    boundary_faces.push(BoundaryFace {
                        vertices: outward_face(&vertices, &tets[*t], *l),
                        tag: FaceTag::Gamma,
                        tet: *t,
                    });
                }
                [(t1, l1), (t2, l2)] => {
                    let (r1, r2) = (tet_region[*t1], tet_region[*t2]);
                    if r1 != r2 {
                        let (tc, lc) = if r1 == RegionTag::Conductor { (*t1, *l1) } else { (*t2, *l2) };
                        boundary_faces.push(BoundaryFace {
                            vertices: outward_face(&vertices, &tets[tc], lc),
                            tag: FaceTag::GammaC,
                            tet: tc,
                        });
                    }
                }
                many => {
                    let _ = key;
                    return Err(MeshError::NonManifold(many[0].0, many[1].0));
                }
            }
        }
        // Deterministic face order regardless of hash-map iteration.
        boundary_faces.sort_by_key(|f| {
            let mut v = f.vertices;
            v.sort_unstable();
            (v, f.tet)
        });

        // The conductor must stay clear of the outer boundary.
        let mut on_gamma = vec![false; vertices.len()];
        for f in boundary_faces.iter().filter(|f| f.tag == FaceTag::Gamma) {
            for &v in &f.vertices {
                on_gamma[v] = true;
            }
        }
        for (t, tet) in tets.iter().enumerate() {
            if tet_region[t] == RegionTag::Conductor {
                if let Some(&v) = tet.iter().find(|&&v| on_gamma[v]) {
                    return Err(MeshError::ConductorTouchesGamma(t, v));
                }
            }
        }

        Ok(Mesh {
            vertices,
            tets,
            tet_region,
            boundary_faces,
            edges: edge_set,
            tet_edges,
            grid: None,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn region(&self, tet: usize) -> RegionTag {
        self.tet_region[tet]
    }

    pub fn regions(&self) -> &[RegionTag] {
        &self.tet_region
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge ids of tet `t`, ordered as [`LOCAL_EDGES`].
    pub fn tet_edges(&self, t: usize) -> &[usize; 6] {
        &self.tet_edges[t]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        signed_volume6(&self.vertices, &self.tets[t]) / 6.0
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_tets()).map(|t| self.tet_volume(t)).sum()
    }

    pub fn tet_centroid(&self, t: usize) -> Vec3 {
        let tet = &self.tets[t];
        (self.vertices[tet[0]] + self.vertices[tet[1]] + self.vertices[tet[2]] + self.vertices[tet[3]])
            / 4.0
    }

    pub fn grid(&self) -> Option<&StructuredGrid> {
        self.grid.as_ref()
    }

    pub(crate) fn set_grid(&mut self, grid: StructuredGrid) {
        self.grid = Some(grid);
    }

    /// Vertices lying on the conductor/insulator interface.
    pub fn gamma_c_vertices(&self) -> Vec<bool> {
        let mut flag = vec![false; self.n_vertices()];
        for f in self.boundary_faces.iter().filter(|f| f.tag == FaceTag::GammaC) {
            for &v in &f.vertices {
                flag[v] = true;
            }
        }
        flag
    }

    /// Vertices incident to at least one insulator tet.
    pub fn insulator_vertices(&self) -> Vec<bool> {
        let mut flag = vec![false; self.n_vertices()];
        for (t, tet) in self.tets.iter().enumerate() {
            if self.tet_region[t] == RegionTag::Insulator {
                for &v in tet {
                    flag[v] = true;
                }
            }
        }
        flag
    }

    /// Barycentric coordinates of `x` with respect to tet `t`.
    pub fn barycentric(&self, t: usize, x: &Vec3) -> [f64; 4] {
        let tet = &self.tets[t];
        let p0 = self.vertices[tet[0]];
        let m = nalgebra::Matrix3::from_columns(&[
            self.vertices[tet[1]] - p0,
            self.vertices[tet[2]] - p0,
            self.vertices[tet[3]] - p0,
        ]);
        let rhs = x - p0;
        let lam = m.lu().solve(&rhs).expect("non-degenerate tet");
        [1.0 - lam[0] - lam[1] - lam[2], lam[0], lam[1], lam[2]]
    }

    /// Find a tet containing `x` (within a small tolerance on barycentric
    /// coordinates). Uses the structured-grid fast path when available.
    pub fn locate(&self, x: &Vec3) -> Option<usize> {
        const TOL: f64 = 1e-10;
        if let Some(g) = &self.grid {
            let n = g.cells_per_axis as isize;
            let cell = |c: f64, o: f64| -> isize {
                (((c - o) / g.spacing).floor() as isize).clamp(0, n - 1)
            };
            let (i, j, k) = (cell(x[0], g.origin[0]), cell(x[1], g.origin[1]), cell(x[2], g.origin[2]));
            // Points on cell boundaries may belong to a neighboring cell.
            for di in -1..=1isize {
                for dj in -1..=1isize {
                    for dk in -1..=1isize {
                        let (ci, cj, ck) = (i + di, j + dj, k + dk);
                        if ci < 0 || cj < 0 || ck < 0 || ci >= n || cj >= n || ck >= n {
                            continue;
                        }
                        let cell_id = ((ci * n + cj) * n + ck) as usize;
                        for t in cell_id * 6..cell_id * 6 + 6 {
                            if self.barycentric(t, x).iter().all(|&l| l >= -TOL) {
                                return Some(t);
                            }
                        }
                    }
                }
            }
            return None;
        }
        (0..self.n_tets()).find(|&t| self.barycentric(t, x).iter().all(|&l| l >= -TOL))
    }
}

fn signed_volume6(vertices: &[Vec3], tet: &[usize; 4]) -> f64 {
    let p0 = vertices[tet[0]];
    nalgebra::Matrix3::from_columns(&[
        vertices[tet[1]] - p0,
        vertices[tet[2]] - p0,
        vertices[tet[3]] - p0,
    ])
    .determinant()
}

/// The face of tet `t` opposite local vertex `l`, wound so that the
/// right-hand normal points away from the opposite vertex.
fn outward_face(vertices: &[Vec3], tet: &[usize; 4], l: usize) -> [usize; 3] {
    let mut f = [tet[(l + 1) % 4], tet[(l + 2) % 4], tet[(l + 3) % 4]];
    let n = (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]]));
    if n.dot(&(vertices[tet[l]] - vertices[f[0]])) > 0.0 {
        f.swap(1, 2);
    }
    f
}

/// Area-weighted normal of a wound triangle (right-hand rule, |n| = area).
pub fn face_area_normal(vertices: &[Vec3], face: &[usize; 3]) -> Vec3 {
    0.5 * (vertices[face[1]] - vertices[face[0]]).cross(&(vertices[face[2]] - vertices[face[0]]))
}

/// Euclidean distance from a point to a triangle.
pub fn point_triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    // Ericson, "Real-Time Collision Detection", closest-point-on-triangle.
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (p - a).norm();
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (p - b).norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (p - (a + ab * v)).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (p - c).norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (p - (a + ac * w)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + (c - b) * w)).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (p - (a + ab * v + ac * w)).norm()
}
