//! ASCII MSH v2.2 import and export.
//!
//! Physical tags: volume 1 = conductor, volume 2 = insulator, surface
//! 10 = outer boundary, 11 = conductor/insulator interface. Import rebuilds
//! the interface from tet adjacency and cross-checks it against the surface
//! elements in the file, so a file with inconsistent tags is rejected rather
//! than trusted.

use super::{FaceTag, Mesh, RegionTag};
use crate::Vec3;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub const TAG_CONDUCTOR: i64 = 1;
pub const TAG_INSULATOR: i64 = 2;
pub const TAG_GAMMA: i64 = 10;
pub const TAG_GAMMA_C: i64 = 11;

#[derive(Debug, Error)]
pub enum MshError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {0}: {1}")]
    Parse(usize, String),
    #[error("unsupported MSH version {0}, need 2.2 ascii")]
    Version(String),
    #[error("unsupported element order: element(s) {0:?} are quadratic tets (type 11)")]
    QuadraticTets(Vec<i64>),
    #[error("non-tet volume or unsupported element type {ty}: element(s) {ids:?}")]
    UnsupportedElementType { ty: i64, ids: Vec<i64> },
    #[error("unknown physical tag {tag} on element(s) {ids:?}")]
    UnknownTag { tag: i64, ids: Vec<i64> },
    #[error("surface tags inconsistent with tet adjacency: element(s) {0:?}")]
    InconsistentSurfaceTags(Vec<i64>),
    #[error("missing section {0}")]
    MissingSection(&'static str),
    #[error(transparent)]
    Mesh(#[from] super::MeshError),
}

pub fn export_msh(mesh: &Mesh, path: &Path) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    writeln!(out, "$Nodes\n{}", mesh.n_vertices()).unwrap();
    for (i, v) in mesh.vertices().iter().enumerate() {
        writeln!(out, "{} {} {} {}", i + 1, v[0], v[1], v[2]).unwrap();
    }
    out.push_str("$EndNodes\n");
    writeln!(out, "$Elements\n{}", mesh.n_tets() + mesh.boundary_faces().len()).unwrap();
    let mut id = 1;
    for f in mesh.boundary_faces() {
        let tag = match f.tag {
            FaceTag::Gamma => TAG_GAMMA,
            FaceTag::GammaC => TAG_GAMMA_C,
        };
        writeln!(
            out,
            "{id} 2 2 {tag} {tag} {} {} {}",
            f.vertices[0] + 1,
            f.vertices[1] + 1,
            f.vertices[2] + 1
        )
        .unwrap();
        id += 1;
    }
    for (t, tet) in mesh.tets().iter().enumerate() {
        let tag = match mesh.region(t) {
            RegionTag::Conductor => TAG_CONDUCTOR,
            RegionTag::Insulator => TAG_INSULATOR,
        };
        writeln!(
            out,
            "{id} 4 2 {tag} {tag} {} {} {} {}",
            tet[0] + 1,
            tet[1] + 1,
            tet[2] + 1,
            tet[3] + 1
        )
        .unwrap();
        id += 1;
    }
    out.push_str("$EndElements\n");
    std::fs::write(path, out)
}

pub fn import_msh(path: &Path) -> Result<Mesh, MshError> {
    let text = std::fs::read_to_string(path)?;
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;

    let find_section = |name: &'static str, from: usize| -> Result<usize, MshError> {
        lines[from..]
            .iter()
            .position(|l| l.trim() == name)
            .map(|p| from + p)
            .ok_or(MshError::MissingSection(name))
    };

    // $MeshFormat
    let fmt_at = find_section("$MeshFormat", 0)?;
    let fmt = lines
        .get(fmt_at + 1)
        .ok_or(MshError::MissingSection("$MeshFormat"))?
        .trim();
    let mut parts = fmt.split_whitespace();
    let version = parts.next().unwrap_or("");
    let file_type = parts.next().unwrap_or("");
    if version != "2.2" || file_type != "0" {
        return Err(MshError::Version(fmt.to_string()));
    }

    // $Nodes
    i = find_section("$Nodes", i)?;
    let n_nodes: usize = lines[i + 1]
        .trim()
        .parse()
        .map_err(|_| MshError::Parse(i + 2, "node count".into()))?;
    let mut id_to_index: HashMap<i64, usize> = HashMap::with_capacity(n_nodes);
    let mut vertices = Vec::with_capacity(n_nodes);
    for k in 0..n_nodes {
        let ln = i + 2 + k;
        let mut it = lines[ln].split_whitespace();
        let parse_err = || MshError::Parse(ln + 1, "node line".into());
        let id: i64 = it.next().ok_or_else(parse_err)?.parse().map_err(|_| parse_err())?;
        let x: f64 = it.next().ok_or_else(parse_err)?.parse().map_err(|_| parse_err())?;
        let y: f64 = it.next().ok_or_else(parse_err)?.parse().map_err(|_| parse_err())?;
        let z: f64 = it.next().ok_or_else(parse_err)?.parse().map_err(|_| parse_err())?;
        id_to_index.insert(id, vertices.len());
        vertices.push(Vec3::new(x, y, z));
    }
    i += 2 + n_nodes;

    // $Elements
    i = find_section("$Elements", i)?;
    let n_elems: usize = lines[i + 1]
        .trim()
        .parse()
        .map_err(|_| MshError::Parse(i + 2, "element count".into()))?;

    let mut tets: Vec<[usize; 4]> = Vec::new();
    let mut regions: Vec<RegionTag> = Vec::new();
    let mut surf_tagged: Vec<(i64, [usize; 3], i64)> = Vec::new(); // (elem id, sorted verts, tag)
    let mut quadratic: Vec<i64> = Vec::new();
    let mut unsupported: HashMap<i64, Vec<i64>> = HashMap::new();
    let mut unknown_tag: HashMap<i64, Vec<i64>> = HashMap::new();

    for k in 0..n_elems {
        let ln = i + 2 + k;
        let parse_err = |what: &str| MshError::Parse(ln + 1, what.into());
        let toks: Vec<&str> = lines
            .get(ln)
            .ok_or_else(|| parse_err("unexpected end of file"))?
            .split_whitespace()
            .collect();
        if toks.len() < 3 {
            return Err(parse_err("short element line"));
        }
        let id: i64 = toks[0].parse().map_err(|_| parse_err("element id"))?;
        let ty: i64 = toks[1].parse().map_err(|_| parse_err("element type"))?;
        let n_tags: usize = toks[2].parse().map_err(|_| parse_err("tag count"))?;
        let tag: i64 = if n_tags > 0 {
            toks.get(3).ok_or_else(|| parse_err("tag"))?.parse().map_err(|_| parse_err("tag"))?
        } else {
            -1
        };
        let nodes = &toks[3 + n_tags..];
        let node_idx = |s: &str| -> Result<usize, MshError> {
            let nid: i64 = s.parse().map_err(|_| parse_err("node id"))?;
            id_to_index
                .get(&nid)
                .copied()
                .ok_or_else(|| parse_err("unknown node id"))
        };
        match ty {
            4 => {
                if nodes.len() != 4 {
                    return Err(parse_err("tet needs 4 nodes"));
                }
                let region = match tag {
                    TAG_CONDUCTOR => RegionTag::Conductor,
                    TAG_INSULATOR => RegionTag::Insulator,
                    other => {
                        unknown_tag.entry(other).or_default().push(id);
                        continue;
                    }
                };
                tets.push([
                    node_idx(nodes[0])?,
                    node_idx(nodes[1])?,
                    node_idx(nodes[2])?,
                    node_idx(nodes[3])?,
                ]);
                regions.push(region);
            }
            2 => {
                if nodes.len() != 3 {
                    return Err(parse_err("triangle needs 3 nodes"));
                }
                if tag != TAG_GAMMA && tag != TAG_GAMMA_C {
                    unknown_tag.entry(tag).or_default().push(id);
                    continue;
                }
                let mut f = [node_idx(nodes[0])?, node_idx(nodes[1])?, node_idx(nodes[2])?];
                f.sort_unstable();
                surf_tagged.push((id, f, tag));
            }
            11 => quadratic.push(id),
            other => unsupported.entry(other).or_default().push(id),
        }
    }

    if !quadratic.is_empty() {
        return Err(MshError::QuadraticTets(quadratic));
    }
    if let Some((&ty, _)) = unsupported.iter().next() {
        return Err(MshError::UnsupportedElementType { ty, ids: unsupported.remove(&ty).unwrap() });
    }
    if let Some((&tag, _)) = unknown_tag.iter().next() {
        return Err(MshError::UnknownTag { tag, ids: unknown_tag.remove(&tag).unwrap() });
    }

    let mesh = Mesh::build(vertices, tets, regions)?;

    // Cross-check the file's surface tags against the derived faces.
    let mut derived: HashMap<[usize; 3], FaceTag> = HashMap::new();
    for f in mesh.boundary_faces() {
        let mut v = f.vertices;
        v.sort_unstable();
        derived.insert(v, f.tag);
    }
    let mut offending: Vec<i64> = Vec::new();
    for (id, f, tag) in &surf_tagged {
        let expect = match *tag {
            TAG_GAMMA => FaceTag::Gamma,
            _ => FaceTag::GammaC,
        };
        if derived.get(f) != Some(&expect) {
            offending.push(*id);
        }
    }
    if !offending.is_empty() {
        offending.sort_unstable();
        return Err(MshError::InconsistentSurfaceTags(offending));
    }
    Ok(mesh)
}
