//! Target fields `(E_d, H_d)` for the tracking functional.
//!
//! Each variant implements [`TargetField`] and is selected by its kind name;
//! [`KINDS`] lists the registered builders. Targets are only ever evaluated
//! at observation points, where the composed state is square-integrable, so
//! the manufactured variant can delegate to a stored state split.

use crate::state::{Model, StateSplit};
use crate::{apply_real, CVec3, Vec3, C64};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("unknown target kind '{0}'; available: {1}")]
    UnknownKind(String, String),
    #[error("manufactured target control ({0}, {1}, {2}) exceeds the admissible box |p_i| <= {3}")]
    InadmissibleReference(f64, f64, f64, f64),
    #[error("sampled grid does not cover the observation region: grid box {grid:?}, required {required:?}")]
    GridTooSmall { grid: [[f64; 2]; 3], required: [[f64; 2]; 3] },
    #[error("failed to read grid file {path}: {source}")]
    GridRead { path: PathBuf, source: std::io::Error },
    #[error("failed to parse grid file {path}: {source}")]
    GridParse { path: PathBuf, source: serde_json::Error },
    #[error("grid file {0}: value arrays must have nx*ny*nz entries and at least two samples per axis")]
    GridShape(PathBuf),
    #[error(transparent)]
    Solver(#[from] crate::fem::solver::SolverError),
}

/// Desired fields evaluated at a point of a masked tet.
pub trait TargetField {
    fn eval(&self, tet: usize, x: &Vec3) -> (CVec3, CVec3);
    fn kind(&self) -> &'static str;
}

/// Declarative target selection, stored in the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Constant complex vectors on the whole observation region.
    ConstantField { e_d: [[f64; 2]; 3], h_d: [[f64; 2]; 3] },
    /// Fields of a reference control, computed by the same discrete model:
    /// `E_d = E(p_ref)`, `H_d = mu^-1 curl E(p_ref)`.
    DipoleManufactured { p_ref: [f64; 3] },
    /// Samples on a regular grid with trilinear interpolation.
    SampledGrid { path: PathBuf },
}

impl TargetSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TargetSpec::ConstantField { .. } => "constant-field",
            TargetSpec::DipoleManufactured { .. } => "dipole-manufactured",
            TargetSpec::SampledGrid { .. } => "sampled-grid",
        }
    }
}

/// The registered target kinds.
pub const KINDS: [&str; 3] = ["constant-field", "dipole-manufactured", "sampled-grid"];

/// Build the evaluator named by the spec against a model. `p_max` bounds the
/// manufactured reference control.
pub fn build_target<'a>(
    spec: &TargetSpec,
    model: &'a Model,
    p_max: f64,
) -> Result<Box<dyn TargetField + 'a>, TargetError> {
    match spec {
        TargetSpec::ConstantField { e_d, h_d } => Ok(Box::new(ConstantTarget {
            e: to_cvec(e_d),
            h: to_cvec(h_d),
        })),
        TargetSpec::DipoleManufactured { p_ref } => {
            if p_ref.iter().any(|c| c.abs() > p_max) {
                return Err(TargetError::InadmissibleReference(
                    p_ref[0], p_ref[1], p_ref[2], p_max,
                ));
            }
            let state = model.solve_state(Vec3::new(p_ref[0], p_ref[1], p_ref[2]))?;
            Ok(Box::new(ManufacturedTarget { model, state }))
        }
        TargetSpec::SampledGrid { path } => Ok(Box::new(GridTarget::load(path, model)?)),
    }
}

fn to_cvec(v: &[[f64; 2]; 3]) -> CVec3 {
    CVec3::new(
        C64::new(v[0][0], v[0][1]),
        C64::new(v[1][0], v[1][1]),
        C64::new(v[2][0], v[2][1]),
    )
}

struct ConstantTarget {
    e: CVec3,
    h: CVec3,
}

impl TargetField for ConstantTarget {
    fn eval(&self, _tet: usize, _x: &Vec3) -> (CVec3, CVec3) {
        (self.e, self.h)
    }

    fn kind(&self) -> &'static str {
        "constant-field"
    }
}

struct ManufacturedTarget<'a> {
    model: &'a Model,
    state: StateSplit,
}

impl TargetField for ManufacturedTarget<'_> {
    fn eval(&self, tet: usize, x: &Vec3) -> (CVec3, CVec3) {
        let e = self.model.eval_e_in_tet(&self.state, tet, x);
        let mu_inv = self.model.problem.materials.mu_inv(self.model.mesh.region(tet));
        let h = apply_real(mu_inv, &self.model.eval_curl_e_in_tet(&self.state, tet, x));
        (e, h)
    }

    fn kind(&self) -> &'static str {
        "dipole-manufactured"
    }
}

#[derive(Debug, Deserialize)]
struct GridFile {
    nx: usize,
    ny: usize,
    nz: usize,
    origin: [f64; 3],
    spacing: [f64; 3],
    e_re: Vec<[f64; 3]>,
    e_im: Vec<[f64; 3]>,
    h_re: Vec<[f64; 3]>,
    h_im: Vec<[f64; 3]>,
}

/// Regular-grid samples with trilinear interpolation.
pub struct GridTarget {
    file: GridFile,
}

impl GridTarget {
    fn load(path: &Path, model: &Model) -> Result<Self, TargetError> {
        let text = std::fs::read_to_string(path).map_err(|source| TargetError::GridRead {
            path: path.to_path_buf(),
            source,
        })?;
        let file: GridFile = serde_json::from_str(&text).map_err(|source| TargetError::GridParse {
            path: path.to_path_buf(),
            source,
        })?;
        let n = file.nx * file.ny * file.nz;
        if file.nx < 2
            || file.ny < 2
            || file.nz < 2
            || [&file.e_re, &file.e_im, &file.h_re, &file.h_im]
                .iter()
                .any(|v| v.len() != n)
        {
            return Err(TargetError::GridShape(path.to_path_buf()));
        }
        // the grid must cover the bounding box of the masked tets
        let mut lo = Vec3::from_element(f64::INFINITY);
        let mut hi = Vec3::from_element(f64::NEG_INFINITY);
        for &t in model.mask.included_tets() {
            for &v in &model.mesh.tets()[t] {
                let p = model.mesh.vertices()[v];
                lo = lo.inf(&p);
                hi = hi.sup(&p);
            }
        }
        let mut grid_box = [[0.0; 2]; 3];
        let mut required = [[0.0; 2]; 3];
        let mut covered = true;
        for d in 0..3 {
            let gmin = file.origin[d];
            let gmax = file.origin[d] + file.spacing[d] * ([file.nx, file.ny, file.nz][d] - 1) as f64;
            grid_box[d] = [gmin, gmax];
            required[d] = [lo[d], hi[d]];
            let tol = 1e-12 * (1.0 + gmax.abs() + gmin.abs());
            if gmin > lo[d] + tol || gmax < hi[d] - tol {
                covered = false;
            }
        }
        if !covered {
            return Err(TargetError::GridTooSmall { grid: grid_box, required });
        }
        Ok(GridTarget { file })
    }

    fn sample(&self, i: usize, j: usize, k: usize) -> (CVec3, CVec3) {
        let f = &self.file;
        let idx = (i * f.ny + j) * f.nz + k;
        let c = |re: &[f64; 3], im: &[f64; 3]| {
            CVec3::new(
                C64::new(re[0], im[0]),
                C64::new(re[1], im[1]),
                C64::new(re[2], im[2]),
            )
        };
        (c(&f.e_re[idx], &f.e_im[idx]), c(&f.h_re[idx], &f.h_im[idx]))
    }
}

impl TargetField for GridTarget {
    fn eval(&self, _tet: usize, x: &Vec3) -> (CVec3, CVec3) {
        let f = &self.file;
        let dims = [f.nx, f.ny, f.nz];
        let mut cell = [0usize; 3];
        let mut frac = [0.0; 3];
        for d in 0..3 {
            let t = (x[d] - f.origin[d]) / f.spacing[d];
            let i = (t.floor() as isize).clamp(0, dims[d] as isize - 2) as usize;
            cell[d] = i;
            frac[d] = (t - i as f64).clamp(0.0, 1.0);
        }
        let mut e = CVec3::zeros();
        let mut h = CVec3::zeros();
        for di in 0..2 {
            for dj in 0..2 {
                for dk in 0..2 {
                    let wx = if di == 0 { 1.0 - frac[0] } else { frac[0] };
                    let wy = if dj == 0 { 1.0 - frac[1] } else { frac[1] };
                    let wz = if dk == 0 { 1.0 - frac[2] } else { frac[2] };
                    let w = C64::new(wx * wy * wz, 0.0);
                    let (ev, hv) = self.sample(cell[0] + di, cell[1] + dj, cell[2] + dk);
                    e += ev * w;
                    h += hv * w;
                }
            }
        }
        (e, h)
    }

    fn kind(&self) -> &'static str {
        "sampled-grid"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::solver::DEFAULT_RESIDUAL_TOL;
    use crate::geometry::generate_nested_box_mesh;
    use crate::kernels::{DipoleProblem, Materials};

    fn model() -> Model {
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
        Model::build(mesh, problem, DEFAULT_RESIDUAL_TOL).unwrap()
    }

    #[test]
    fn constant_target_is_constant() {
        let m = model();
        let spec = TargetSpec::ConstantField {
            e_d: [[1.0, 0.5], [0.0, 0.0], [0.0, -1.0]],
            h_d: [[0.0, 0.0], [2.0, 0.0], [0.0, 0.0]],
        };
        let t = build_target(&spec, &m, 1.0).unwrap();
        let (e, h) = t.eval(0, &Vec3::new(0.9, 0.9, 0.9));
        assert_eq!(e[0], C64::new(1.0, 0.5));
        assert_eq!(h[1], C64::new(2.0, 0.0));
        assert_eq!(t.kind(), "constant-field");
    }

    #[test]
    fn manufactured_target_requires_admissible_reference() {
        let m = model();
        let spec = TargetSpec::DipoleManufactured { p_ref: [2.0, 0.0, 0.0] };
        match build_target(&spec, &m, 1.0) {
            Err(TargetError::InadmissibleReference(..)) => {}
            Err(other) => panic!("unexpected error {other}"),
            Ok(_) => panic!("inadmissible reference was accepted"),
        };
    }

    #[test]
    fn manufactured_target_matches_its_own_state() {
        let m = model();
        let spec = TargetSpec::DipoleManufactured { p_ref: [0.3, -0.2, 0.5] };
        let t = build_target(&spec, &m, 1.0).unwrap();
        let state = m.solve_state(Vec3::new(0.3, -0.2, 0.5)).unwrap();
        let qp = m.mask_quadrature()[17];
        let (e_d, _) = t.eval(qp.tet, &qp.x);
        let e = m.eval_e_in_tet(&state, qp.tet, &qp.x);
        assert!((e - e_d).norm() <= 1e-12 * e.norm());
    }

    #[test]
    fn grid_target_interpolates_and_checks_coverage() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.json");
        // linear field sampled on a coarse grid: trilinear interpolation is exact
        let (nx, ny, nz) = (3usize, 3usize, 3usize);
        let origin = [-1.0, -1.0, -1.0];
        let spacing = [1.0, 1.0, 1.0];
        let mut e_re = Vec::new();
        let mut zeros = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let x = origin[0] + i as f64;
                    let y = origin[1] + j as f64;
                    let z = origin[2] + k as f64;
                    e_re.push([x + 2.0 * y, z, x - y + z]);
                    zeros.push([0.0, 0.0, 0.0]);
                }
            }
        }
        let file = serde_json::json!({
            "nx": nx, "ny": ny, "nz": nz,
            "origin": origin, "spacing": spacing,
            "e_re": e_re, "e_im": zeros, "h_re": zeros, "h_im": zeros,
        });
        std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        let spec = TargetSpec::SampledGrid { path: path.clone() };
        let t = build_target(&spec, &m, 1.0).unwrap();
        let x = Vec3::new(0.3, -0.4, 0.7);
        let (e, _) = t.eval(0, &x);
        assert!((e[0] - C64::new(x[0] + 2.0 * x[1], 0.0)).norm() < 1e-12);
        assert!((e[1] - C64::new(x[2], 0.0)).norm() < 1e-12);

        // a grid that stops short of the observation box is rejected
        let small = serde_json::json!({
            "nx": 2, "ny": 2, "nz": 2,
            "origin": [-0.5, -0.5, -0.5], "spacing": [1.0, 1.0, 1.0],
            "e_re": vec![[0.0f64; 3]; 8], "e_im": vec![[0.0f64; 3]; 8], "h_re": vec![[0.0f64; 3]; 8], "h_im": vec![[0.0f64; 3]; 8],
        });
        let small_path = dir.path().join("small.json");
        std::fs::write(&small_path, serde_json::to_string(&small).unwrap()).unwrap();
        match build_target(&TargetSpec::SampledGrid { path: small_path }, &m, 1.0) {
            Err(TargetError::GridTooSmall { .. }) => {}
            Err(other) => panic!("unexpected error {other}"),
            Ok(_) => panic!("undersized grid was accepted"),
        };
    }
}
