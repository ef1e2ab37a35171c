//! VTU (XML unstructured grid) export of the composed fields.
//!
//! Cells are the masked tets only: the state is square-integrable there and
//! nowhere else. Per-cell data carries the real and imaginary parts of `E`
//! and `curl E` evaluated at the tet centroid.

use crate::state::{Model, StateSplit};
use crate::CVec3;
use std::fmt::Write as _;
use std::path::Path;

pub fn write_vtu(path: &Path, model: &Model, state: &StateSplit) -> std::io::Result<()> {
    let mesh = &model.mesh;
    let included = model.mask.included_tets();

    // compress the vertex list to the masked tets
    let mut vertex_map = vec![usize::MAX; mesh.n_vertices()];
    let mut points = Vec::new();
    for &t in included {
        for &v in &mesh.tets()[t] {
            if vertex_map[v] == usize::MAX {
                vertex_map[v] = points.len();
                points.push(mesh.vertices()[v]);
            }
        }
    }

    let mut e_re = Vec::with_capacity(included.len());
    let mut e_im = Vec::with_capacity(included.len());
    let mut c_re = Vec::with_capacity(included.len());
    let mut c_im = Vec::with_capacity(included.len());
    for &t in included {
        let x = mesh.tet_centroid(t);
        let e = model.eval_e_in_tet(state, t, &x);
        let c = model.eval_curl_e_in_tet(state, t, &x);
        let split = |v: &CVec3| ([v[0].re, v[1].re, v[2].re], [v[0].im, v[1].im, v[2].im]);
        let (er, ei) = split(&e);
        let (cr, ci) = split(&c);
        e_re.push(er);
        e_im.push(ei);
        c_re.push(cr);
        c_im.push(ci);
    }

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\"?>\n");
    out.push_str("<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">\n");
    out.push_str("  <UnstructuredGrid>\n");
    writeln!(
        out,
        "    <Piece NumberOfPoints=\"{}\" NumberOfCells=\"{}\">",
        points.len(),
        included.len()
    )
    .unwrap();
    out.push_str("      <Points>\n        <DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">\n");
    for p in &points {
        writeln!(out, "          {} {} {}", p[0], p[1], p[2]).unwrap();
    }
    out.push_str("        </DataArray>\n      </Points>\n      <Cells>\n");
    out.push_str("        <DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n");
    for &t in included {
        let tet = &mesh.tets()[t];
        writeln!(
            out,
            "          {} {} {} {}",
            vertex_map[tet[0]], vertex_map[tet[1]], vertex_map[tet[2]], vertex_map[tet[3]]
        )
        .unwrap();
    }
    out.push_str("        </DataArray>\n        <DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n");
    for i in 1..=included.len() {
        writeln!(out, "          {}", 4 * i).unwrap();
    }
    out.push_str("        </DataArray>\n        <DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n");
    for _ in included {
        out.push_str("          10\n");
    }
    out.push_str("        </DataArray>\n      </Cells>\n      <CellData>\n");
    for (name, data) in [("E_re", &e_re), ("E_im", &e_im), ("curlE_re", &c_re), ("curlE_im", &c_im)] {
        writeln!(
            out,
            "        <DataArray type=\"Float64\" Name=\"{name}\" NumberOfComponents=\"3\" format=\"ascii\">"
        )
        .unwrap();
        for v in data {
            writeln!(out, "          {} {} {}", v[0], v[1], v[2]).unwrap();
        }
        out.push_str("        </DataArray>\n");
    }
    out.push_str("      </CellData>\n    </Piece>\n  </UnstructuredGrid>\n</VTKFile>\n");
    std::fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::solver::DEFAULT_RESIDUAL_TOL;
    use crate::geometry::generate_nested_box_mesh;
    use crate::kernels::{DipoleProblem, Materials};
    use crate::Vec3;

    #[test]
    fn vtu_has_masked_cells_and_zero_fields_for_zero_control() {
        let mesh = generate_nested_box_mesh(1.0, 0.5, 4).unwrap();
        let problem = DipoleProblem::new(
            1.0,
            1.0,
            1.0,
            Vec3::zeros(),
            0.2,
            Materials::homogeneous(1.0, 1.0),
        )
        .unwrap();
        let model = Model::build(mesh, problem, DEFAULT_RESIDUAL_TOL).unwrap();
        let state = model.solve_state(Vec3::zeros()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fields.vtu");
        write_vtu(&path, &model, &state).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains(&format!("NumberOfCells=\"{}\"", model.mask.len())));
        assert!(text.contains("Name=\"E_re\""));
        // zero control: all field entries are exactly 0
        let data_zeros = text
            .split("Name=\"E_re\"")
            .nth(1)
            .unwrap()
            .lines()
            .skip(1)
            .take(3)
            .all(|l| l.trim() == "0 0 0");
        assert!(data_zeros);
    }
}
