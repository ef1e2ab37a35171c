//! Observation region: the domain minus the ball around the dipole.
//!
//! Tracking functionals integrate only where the state is square-integrable,
//! i.e. away from the kernel singularity. A tet enters the mask when every
//! vertex is at distance `>= r` from the dipole; tets cut by the sphere are
//! excluded entirely, which is conservative and avoids curved-boundary
//! quadrature. Under refinement the mask fills the complement of the ball.

use super::{point_triangle_distance, FaceTag, Mesh, RegionTag};
use crate::Vec3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObservationError {
    #[error("dipole location ({0}, {1}, {2}) is not inside the conductor")]
    DipoleOutsideConductor(f64, f64, f64),
    #[error("ball of radius {r} around the dipole is not strictly inside the conductor (distance to the interface is {dist}); the homogeneity condition cannot hold")]
    BallNotInsideConductor { r: f64, dist: f64 },
    #[error("observation mask is empty")]
    EmptyMask,
}

/// Tets entirely outside the closed ball `B_r(x0)`, by the vertex criterion.
#[derive(Debug, Clone)]
pub struct ObservationMask {
    included: Vec<usize>,
    is_included: Vec<bool>,
}

impl ObservationMask {
    pub fn included_tets(&self) -> &[usize] {
        &self.included
    }

    pub fn contains(&self, tet: usize) -> bool {
        self.is_included[tet]
    }

    pub fn len(&self) -> usize {
        self.included.len()
    }

    pub fn is_empty(&self) -> bool {
        self.included.is_empty()
    }
}

pub fn classify_observation_region(
    mesh: &Mesh,
    x0: &Vec3,
    r: f64,
) -> Result<ObservationMask, ObservationError> {
    let home = mesh
        .locate(x0)
        .filter(|&t| mesh.region(t) == RegionTag::Conductor)
        .ok_or(ObservationError::DipoleOutsideConductor(x0[0], x0[1], x0[2]))?;
    let _ = home;

    // Strict interiority: the ball must not reach the interface.
    let mut dist = f64::INFINITY;
    for f in mesh.boundary_faces().iter().filter(|f| f.tag == FaceTag::GammaC) {
        let d = point_triangle_distance(
            x0,
            &mesh.vertices()[f.vertices[0]],
            &mesh.vertices()[f.vertices[1]],
            &mesh.vertices()[f.vertices[2]],
        );
        dist = dist.min(d);
    }
    if !(dist > r) {
        return Err(ObservationError::BallNotInsideConductor { r, dist });
    }

    let mut included = Vec::new();
    let mut is_included = vec![false; mesh.n_tets()];
    for (t, tet) in mesh.tets().iter().enumerate() {
        if tet.iter().all(|&v| (mesh.vertices()[v] - x0).norm() >= r) {
            included.push(t);
            is_included[t] = true;
        }
    }
    if included.is_empty() {
        return Err(ObservationError::EmptyMask);
    }
    Ok(ObservationMask { included, is_included })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_nested_box_mesh;
    use proptest::prelude::*;

    fn mesh8() -> Mesh {
        generate_nested_box_mesh(1.0, 0.5, 8).unwrap()
    }

    #[test]
    fn zero_radius_includes_every_tet() {
        let m = mesh8();
        let mask = classify_observation_region(&m, &Vec3::zeros(), 0.0).unwrap();
        assert_eq!(mask.len(), m.n_tets());
    }

    #[test]
    fn oversized_ball_is_rejected() {
        let m = mesh8();
        let err = classify_observation_region(&m, &Vec3::zeros(), 0.6).unwrap_err();
        assert!(matches!(err, ObservationError::BallNotInsideConductor { .. }));
    }

    #[test]
    fn dipole_in_insulator_is_rejected() {
        let m = mesh8();
        let err = classify_observation_region(&m, &Vec3::new(0.9, 0.0, 0.0), 0.1).unwrap_err();
        assert!(matches!(err, ObservationError::DipoleOutsideConductor(..)));
    }

    // Brute-force cross-check of the partition and the shape of the excluded set.
    #[test]
    fn excluded_tets_form_a_connected_cluster_around_the_dipole() {
        let m = mesh8();
        let x0 = Vec3::zeros();
        let r = 0.2;
        let mask = classify_observation_region(&m, &x0, r).unwrap();

        let excluded: Vec<usize> = (0..m.n_tets()).filter(|&t| !mask.contains(t)).collect();
        assert_eq!(excluded.len() + mask.len(), m.n_tets());
        // independent distance check over all tets
        for t in 0..m.n_tets() {
            let near = m.tets()[t].iter().any(|&v| (m.vertices()[v] - x0).norm() < r);
            assert_eq!(near, !mask.contains(t));
        }
        // the dipole's own tet is excluded
        let home = m.locate(&x0).unwrap();
        assert!(!mask.contains(home));
        // vertex-connectivity of the excluded cluster, grown from the home tet
        let mut vertex_mark = vec![false; m.n_vertices()];
        let mut reached = vec![false; m.n_tets()];
        reached[home] = true;
        for &v in &m.tets()[home] {
            vertex_mark[v] = true;
        }
        loop {
            let mut grew = false;
            for &t in &excluded {
                if !reached[t] && m.tets()[t].iter().any(|&v| vertex_mark[v]) {
                    reached[t] = true;
                    for &v in &m.tets()[t] {
                        vertex_mark[v] = true;
                    }
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        assert!(excluded.iter().all(|&t| reached[t]), "excluded cluster is connected");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn mask_shrinks_monotonically_in_r(r1 in 0.0f64..0.4, r2 in 0.0f64..0.4) {
            let (r1, r2) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let m = generate_nested_box_mesh(1.0, 0.5, 4).unwrap();
            let m1 = classify_observation_region(&m, &Vec3::zeros(), r1).unwrap();
            let m2 = classify_observation_region(&m, &Vec3::zeros(), r2).unwrap();
            for &t in m2.included_tets() {
                prop_assert!(m1.contains(t));
            }
        }
    }
}
