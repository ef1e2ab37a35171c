//! Structured tetrahedral meshes of nested boxes.
//!
//! The canonical test geometry is the cube `[-a, a]^3` with the inner cube
//! `[-b, b]^3` tagged as conductor: it satisfies every geometric assumption
//! of the model (simply connected domain, connected interface, conductor
//! strictly interior) and needs no external mesher. Each grid hex is split
//! into the six Kuhn tets sharing the main diagonal, which is face-compatible
//! across neighboring hexes.

use super::{Mesh, MeshError, RegionTag, StructuredGrid};
use crate::Vec3;

/// The six tets of the Kuhn split, as paths from corner 000 to corner 111.
/// Corners are bit-coded (bit 0 = x, bit 1 = y, bit 2 = z).
const KUHN_TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Mesh the cube `[-a, a]^3` with `n` cells per axis and tag cells by a
/// predicate on the cell index.
pub(super) fn generate_box_mesh(
    outer_half_width: f64,
    n: usize,
    region_of_cell: impl Fn(usize, usize, usize) -> RegionTag,
) -> Result<Mesh, MeshError> {
    let a = outer_half_width;
    let h = 2.0 * a / n as f64;
    let nv = n + 1;
    let mut vertices = Vec::with_capacity(nv * nv * nv);
    for i in 0..nv {
        for j in 0..nv {
            for k in 0..nv {
                vertices.push(Vec3::new(
                    -a + h * i as f64,
                    -a + h * j as f64,
                    -a + h * k as f64,
                ));
            }
        }
    }
    let vid = |i: usize, j: usize, k: usize| (i * nv + j) * nv + k;

    let mut tets = Vec::with_capacity(6 * n * n * n);
    let mut regions = Vec::with_capacity(6 * n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let corner = |bits: usize| {
                    vid(
                        i + (bits & 1),
                        j + ((bits >> 1) & 1),
                        k + ((bits >> 2) & 1),
                    )
                };
                let region = region_of_cell(i, j, k);
                for kt in KUHN_TETS {
                    tets.push([corner(kt[0]), corner(kt[1]), corner(kt[2]), corner(kt[3])]);
                    regions.push(region);
                }
            }
        }
    }
    let mut mesh = Mesh::build(vertices, tets, regions)?;
    mesh.set_grid(StructuredGrid {
        origin: Vec3::new(-a, -a, -a),
        spacing: h,
        cells_per_axis: n,
    });
    Ok(mesh)
}

/// Structured mesh of `[-a, a]^3` with the inner cube `[-b, b]^3` tagged as
/// conductor. The inner boundary must lie on grid planes; otherwise the call
/// is rejected with the smallest grid resolution that aligns.
pub fn generate_nested_box_mesh(
    outer_half_width: f64,
    inner_half_width: f64,
    n_cells_per_axis: usize,
) -> Result<Mesh, MeshError> {
    let (a, b, n) = (outer_half_width, inner_half_width, n_cells_per_axis);
    if !(b > 0.0 && b < a) {
        return Err(MeshError::BadBoxDimensions { inner: b, outer: a });
    }
    let lo = match aligned_layer(a, b, n) {
        Some(lo) => lo,
        None => {
            let suggestion = (4..=4096)
                .find(|&m| aligned_layer(a, b, m).is_some())
                .ok_or(MeshError::NoAlignedGrid(4096))?;
            return Err(MeshError::InnerBoxNotResolvable {
                b,
                h: 2.0 * a / n as f64,
                suggestion,
            });
        }
    };
    if n < 4 {
        return Err(MeshError::TooFewCells(n));
    }
    let hi = n - lo;
    generate_box_mesh(a, n, |i, j, k| {
        if (lo..hi).contains(&i) && (lo..hi).contains(&j) && (lo..hi).contains(&k) {
            RegionTag::Conductor
        } else {
            RegionTag::Insulator
        }
    })
}

/// Number of cell layers between the outer boundary and the inner box, if the
/// planes `|x_i| = b` land on grid planes and leave at least one layer.
fn aligned_layer(a: f64, b: f64, n: usize) -> Option<usize> {
    let exact = n as f64 * (a - b) / (2.0 * a);
    let lo = exact.round();
    if (exact - lo).abs() <= 1e-9 * n as f64 && lo >= 1.0 && 2.0 * lo < n as f64 {
        Some(lo as usize)
    } else {
        None
    }
}
