//! Quadrature rules on the reference tetrahedron, triangle and segment.
//!
//! The simplex rules are conical (Stroud) products of one-dimensional
//! Gauss-Jacobi rules, so every weight is positive; positivity matters because
//! the tracking cost is a quadrature of `|.|^2` and must stay nonnegative.
//! With `n` points per direction the product rule is exact to degree `2n - 1`:
//! the 8-point tet rule covers the polynomial mass/stiffness integrands
//! (degree <= 2), the 27-point tet and 9-point triangle rules cover the smooth
//! kernel integrands at the degree-4 accuracy the assembly requires.

/// Gauss-Legendre on [0,1], 2 points (degree 3).
const GL2: [(f64, f64); 2] = [
    (2.11324865405187134e-1, 5.0e-1),
    (7.88675134594812866e-1, 5.0e-1),
];

/// Gauss-Legendre on [0,1], 3 points (degree 5).
const GL3: [(f64, f64); 3] = [
    (1.12701665379258298e-1, 2.77777777777777901e-1),
    (5.0e-1, 4.44444444444444142e-1),
    (8.87298334620741702e-1, 2.77777777777777901e-1),
];

/// Gauss-Legendre on [0,1], 4 points (degree 7); used for edge circulations.
const GL4: [(f64, f64); 4] = [
    (6.94318442029737137e-2, 1.73927422568726897e-1),
    (3.30009478207571871e-1, 3.26072577431273103e-1),
    (6.69990521792428129e-1, 3.26072577431273103e-1),
    (9.30568155797026231e-1, 1.73927422568726897e-1),
];

/// Gauss-Jacobi on [0,1] with weight (1-x), 2 points.
const GJ1_2: [(f64, f64); 2] = [
    (1.55051025721682167e-1, 3.18041381743977170e-1),
    (6.44948974278317877e-1, 1.81958618256022830e-1),
];

/// Gauss-Jacobi on [0,1] with weight (1-x), 3 points.
const GJ1_3: [(f64, f64); 3] = [
    (8.85879595127039288e-2, 2.00931913738959605e-1),
    (4.09466864440734768e-1, 2.29241106359586194e-1),
    (7.87659461760847002e-1, 6.98269799014541726e-2),
];

/// Gauss-Jacobi on [0,1] with weight (1-x)^2, 2 points.
const GJ2_2: [(f64, f64); 2] = [
    (1.22514822655441502e-1, 2.32547451253508008e-1),
    (5.44151844011225294e-1, 1.00785882079825320e-1),
];

/// Gauss-Jacobi on [0,1] with weight (1-x)^2, 3 points.
const GJ2_3: [(f64, f64); 3] = [
    (7.29940240731496992e-2, 1.57136361064886459e-1),
    (3.47003766038351813e-1, 1.46246269259866113e-1),
    (7.05002209888498377e-1, 2.99507030085807147e-2),
];

/// A quadrature node on the reference tetrahedron (barycentric-free form:
/// coordinates in the unit tet `x,y,z >= 0, x+y+z <= 1`).
#[derive(Debug, Clone, Copy)]
pub struct TetNode {
    pub coords: [f64; 3],
    pub weight: f64,
}

/// A quadrature node on the reference triangle `x,y >= 0, x+y <= 1`.
#[derive(Debug, Clone, Copy)]
pub struct TriNode {
    pub coords: [f64; 2],
    pub weight: f64,
}

fn tet_conical(u_rule: &[(f64, f64)], v_rule: &[(f64, f64)], w_rule: &[(f64, f64)]) -> Vec<TetNode> {
    let mut nodes = Vec::with_capacity(u_rule.len() * v_rule.len() * w_rule.len());
    for &(u, wu) in u_rule {
        for &(v, wv) in v_rule {
            for &(t, wt) in w_rule {
                nodes.push(TetNode {
                    coords: [u, v * (1.0 - u), t * (1.0 - u) * (1.0 - v)],
                    weight: wu * wv * wt,
                });
            }
        }
    }
    nodes
}

fn tri_conical(u_rule: &[(f64, f64)], v_rule: &[(f64, f64)]) -> Vec<TriNode> {
    let mut nodes = Vec::with_capacity(u_rule.len() * v_rule.len());
    for &(u, wu) in u_rule {
        for &(v, wv) in v_rule {
            nodes.push(TriNode {
                coords: [u, v * (1.0 - u)],
                weight: wu * wv,
            });
        }
    }
    nodes
}

/// 8-point rule on the reference tet, exact to degree 3. Weights sum to 1/6.
pub fn tet_rule_low() -> &'static [TetNode] {
    static RULE: std::sync::OnceLock<Vec<TetNode>> = std::sync::OnceLock::new();
    RULE.get_or_init(|| tet_conical(&GJ2_2, &GJ1_2, &GL2))
}

/// 27-point rule on the reference tet, exact to degree 5. Weights sum to 1/6.
pub fn tet_rule_high() -> &'static [TetNode] {
    static RULE: std::sync::OnceLock<Vec<TetNode>> = std::sync::OnceLock::new();
    RULE.get_or_init(|| tet_conical(&GJ2_3, &GJ1_3, &GL3))
}

/// 9-point rule on the reference triangle, exact to degree 5. Weights sum to 1/2.
pub fn tri_rule() -> &'static [TriNode] {
    static RULE: std::sync::OnceLock<Vec<TriNode>> = std::sync::OnceLock::new();
    RULE.get_or_init(|| tri_conical(&GJ1_3, &GL3))
}

/// 4-point Gauss-Legendre on [0,1], exact to degree 7.
pub fn segment_rule() -> &'static [(f64, f64)] {
    &GL4
}
