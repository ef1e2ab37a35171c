//! Run configuration: one JSON file describes the mesh source, the physical
//! problem, the control box, the cost weights, the target fields and the
//! solver knobs, so an experiment reproduces from a single artifact.

use crate::geometry::{generate_nested_box_mesh, import_msh, Mesh};
use crate::kernels::{DipoleProblem, Materials, ProblemError};
use crate::targets::TargetSpec;
use crate::{Mat3, Vec3};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("failed to parse config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("p_max must be positive, got {0}")]
    NonPositivePMax(f64),
    #[error("weight {0} must be nonnegative, got {1}")]
    NegativeWeight(&'static str, f64),
    #[error("control p = ({0}, {1}, {2}) is not admissible for |p_i| <= {3}")]
    InadmissibleControl(f64, f64, f64, f64),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Mesh(#[from] crate::geometry::MeshError),
    #[error(transparent)]
    Msh(#[from] crate::geometry::MshError),
}

/// Where the mesh comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeshConfig {
    /// Nested-box generator.
    Generated {
        outer_half_width: f64,
        inner_half_width: f64,
        n_cells_per_axis: usize,
    },
    /// ASCII MSH v2.2 file with the canonical physical tags.
    Msh { path: PathBuf },
}

/// A material tensor: a scalar multiple of the identity or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TensorSpec {
    Scalar(f64),
    Matrix([[f64; 3]; 3]),
}

impl TensorSpec {
    pub fn to_matrix(&self) -> Mat3 {
        match self {
            TensorSpec::Scalar(s) => Mat3::identity() * *s,
            TensorSpec::Matrix(m) => {
                Mat3::from_fn(|i, j| m[i][j])
            }
        }
    }
}

/// Per-region tensors; omitted entries default to the homogeneous constants
/// (`mu0`, `sigma0`, unit permittivity).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionMaterials {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<TensorSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<TensorSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<TensorSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsConfig {
    #[serde(default)]
    pub conductor: RegionMaterials,
    #[serde(default)]
    pub insulator: RegionMaterials,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub mu0: f64,
    pub sigma0: f64,
    pub omega: f64,
    pub x0: [f64; 3],
    pub ball_radius: f64,
    #[serde(default)]
    pub materials: MaterialsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    /// Dipole intensity used by solve-state / solve-adjoint / export-vtu.
    #[serde(default)]
    pub p: [f64; 3],
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub nu_e: f64,
    pub nu_h: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relative residual accepted from the direct solves.
    pub residual_tol: f64,
    /// Stationarity tolerance of the projected-gradient loop.
    pub stationarity_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { residual_tol: 1e-10, stationarity_tol: 1e-10, max_iterations: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub problem: ProblemConfig,
    pub control: ControlConfig,
    pub weights: WeightsConfig,
    pub targets: TargetSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.control.p_max > 0.0) {
            return Err(ConfigError::NonPositivePMax(self.control.p_max));
        }
        for (name, v) in [
            ("nu_e", self.weights.nu_e),
            ("nu_h", self.weights.nu_h),
            ("nu", self.weights.nu),
        ] {
            if v < 0.0 {
                return Err(ConfigError::NegativeWeight(name, v));
            }
        }
        let p = self.control.p;
        if p.iter().any(|c| c.abs() > self.control.p_max) {
            return Err(ConfigError::InadmissibleControl(p[0], p[1], p[2], self.control.p_max));
        }
        // constants and tensors are validated in build_problem
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<Mesh, ConfigError> {
        match &self.mesh {
            MeshConfig::Generated { outer_half_width, inner_half_width, n_cells_per_axis } => {
                Ok(generate_nested_box_mesh(*outer_half_width, *inner_half_width, *n_cells_per_axis)?)
            }
            MeshConfig::Msh { path } => Ok(import_msh(path)?),
        }
    }

    pub fn build_problem(&self) -> Result<DipoleProblem, ConfigError> {
        let pc = &self.problem;
        let scalar = |o: &Option<TensorSpec>, dflt: f64| {
            o.as_ref().map(|t| t.to_matrix()).unwrap_or_else(|| Mat3::identity() * dflt)
        };
        let mats = Materials::new(
            [
                scalar(&self.problem.materials.conductor.mu, pc.mu0),
                scalar(&self.problem.materials.insulator.mu, pc.mu0),
            ],
            [
                scalar(&self.problem.materials.conductor.sigma, pc.sigma0),
                scalar(&self.problem.materials.insulator.sigma, pc.sigma0),
            ],
            [
                scalar(&self.problem.materials.conductor.eps, 1.0),
                scalar(&self.problem.materials.insulator.eps, 1.0),
            ],
        )?;
        Ok(DipoleProblem::new(
            pc.mu0,
            pc.sigma0,
            pc.omega,
            Vec3::new(pc.x0[0], pc.x0[1], pc.x0[2]),
            pc.ball_radius,
            mats,
        )?)
    }

    pub fn control_p(&self) -> Vec3 {
        Vec3::new(self.control.p[0], self.control.p[1], self.control.p[2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunConfig {
        RunConfig {
            mesh: MeshConfig::Generated {
                outer_half_width: 1.0,
                inner_half_width: 0.5,
                n_cells_per_axis: 4,
            },
            problem: ProblemConfig {
                mu0: 1.0,
                sigma0: 1.0,
                omega: 1.0,
                x0: [0.0; 3],
                ball_radius: 0.2,
                materials: MaterialsConfig::default(),
            },
            control: ControlConfig { p: [0.1, 0.0, -0.2], p_max: 1.0 },
            weights: WeightsConfig { nu_e: 1.0, nu_h: 1.0, nu: 0.01 },
            targets: TargetSpec::DipoleManufactured { p_ref: [0.3, -0.2, 0.5] },
            solver: SolverConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = sample();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        // and once more through the serialized form
        let text2 = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&serde_json::to_string(&sample()).unwrap()).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(serde_json::from_value::<RunConfig>(v).is_err());
    }

    #[test]
    fn inadmissible_control_is_rejected() {
        let mut cfg = sample();
        cfg.control.p = [2.0, 0.0, 0.0];
        assert!(matches!(cfg.validate(), Err(ConfigError::InadmissibleControl(..))));
    }

    #[test]
    fn negative_weight_is_rejected() {
        let mut cfg = sample();
        cfg.weights.nu = -1.0;
        assert!(matches!(cfg.validate(), Err(ConfigError::NegativeWeight("nu", _))));
    }

    #[test]
    fn material_overrides_flow_into_the_problem() {
        let mut cfg = sample();
        cfg.problem.materials.insulator.mu = Some(TensorSpec::Scalar(2.0));
        let problem = cfg.build_problem().unwrap();
        let mu_i = problem.materials.mu(crate::geometry::RegionTag::Insulator);
        assert_eq!(mu_i[(0, 0)], 2.0);
        // conductor stays pinned to the homogeneity constants
        let mu_c = problem.materials.mu(crate::geometry::RegionTag::Conductor);
        assert_eq!(mu_c[(0, 0)], 1.0);
    }

    #[test]
    fn conductor_override_must_match_the_constants() {
        let mut cfg = sample();
        cfg.problem.materials.conductor.sigma = Some(TensorSpec::Scalar(3.0));
        assert!(cfg.build_problem().is_err());
    }
}
