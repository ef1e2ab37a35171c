//! Connectivity diagnostics.
//!
//! The model assumes a connected conductor, a connected insulator and a
//! connected interface (the multi-conductor case with flux constraints is out
//! of scope), so a disconnected interface is a hard failure. This is a
//! diagnostic pass: findings are reported, not thrown.

use super::{FaceTag, Mesh, RegionTag};
use std::collections::HashMap;

#[derive(Debug, Clone, serde::Serialize)]
pub struct TopologyReport {
    pub conductor_tets: usize,
    pub insulator_tets: usize,
    pub gamma_c_faces: usize,
    pub conductor_connected: bool,
    pub insulator_connected: bool,
    pub gamma_c_connected: bool,
    pub failures: Vec<String>,
}

impl TopologyReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }

    fn n_components(&mut self, members: impl Iterator<Item = usize>) -> usize {
        let mut roots: Vec<usize> = members.map(|m| self.find(m)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }
}

/// Face-connectivity of each region's tet set and edge-connectivity of the
/// interface face set.
pub fn validate_topology(mesh: &Mesh) -> TopologyReport {
    let mut failures = Vec::new();

    // Region connectivity through shared faces.
    let mut face_owner: HashMap<[usize; 3], usize> = HashMap::new();
    let mut uf = UnionFind::new(mesh.n_tets());
    for (t, tet) in mesh.tets().iter().enumerate() {
        for l in 0..4 {
            let mut f = [tet[(l + 1) % 4], tet[(l + 2) % 4], tet[(l + 3) % 4]];
            f.sort_unstable();
            match face_owner.get(&f) {
                Some(&other) if mesh.region(other) == mesh.region(t) => uf.union(t, other),
                Some(_) => {}
                None => {
                    face_owner.insert(f, t);
                }
            }
        }
    }
    let conductor: Vec<usize> = (0..mesh.n_tets())
        .filter(|&t| mesh.region(t) == RegionTag::Conductor)
        .collect();
    let insulator: Vec<usize> = (0..mesh.n_tets())
        .filter(|&t| mesh.region(t) == RegionTag::Insulator)
        .collect();

    let conductor_connected = !conductor.is_empty() && uf.n_components(conductor.iter().copied()) == 1;
    let insulator_connected = !insulator.is_empty() && uf.n_components(insulator.iter().copied()) == 1;

    if conductor.is_empty() {
        failures.push("empty conductor".into());
    } else if !conductor_connected {
        failures.push("conductor region is not face-connected".into());
    }
    if insulator.is_empty() {
        failures.push("empty insulator".into());
    } else if !insulator_connected {
        failures.push("insulator region is not face-connected".into());
    }

    // Interface connectivity through shared edges.
    let gamma_c: Vec<&super::BoundaryFace> = mesh
        .boundary_faces()
        .iter()
        .filter(|f| f.tag == FaceTag::GammaC)
        .collect();
    let mut fuf = UnionFind::new(gamma_c.len());
    let mut edge_owner: HashMap<[usize; 2], usize> = HashMap::new();
    for (i, f) in gamma_c.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f.vertices[k], f.vertices[(k + 1) % 3]);
            let e = [a.min(b), a.max(b)];
            match edge_owner.get(&e) {
                Some(&other) => fuf.union(i, other),
                None => {
                    edge_owner.insert(e, i);
                }
            }
        }
    }
    let gamma_c_connected = !gamma_c.is_empty() && fuf.n_components(0..gamma_c.len()) == 1;
    if gamma_c.is_empty() {
        if !conductor.is_empty() {
            failures.push("interface Gamma_C is empty".into());
        }
    } else if !gamma_c_connected {
        failures.push(format!(
            "interface Gamma_C has {} components; the multi-conductor case is unsupported",
            fuf.n_components(0..gamma_c.len())
        ));
    }

    TopologyReport {
        conductor_tets: conductor.len(),
        insulator_tets: insulator.len(),
        gamma_c_faces: gamma_c.len(),
        conductor_connected,
        insulator_connected,
        gamma_c_connected,
        failures,
    }
}
