//! Six-node straight-sided triangle.
//!
//! Local node order: three vertices, then the midpoints of edges 0-1, 1-2, 2-0.

/// Degree-4 symmetric rule on the reference triangle: (barycentric, weight),
/// weights summing to one.
pub const QUADRATURE: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.108_103_018_168_070;
    const B1: f64 = 0.445_948_490_915_965;
    const W1: f64 = 0.223_381_589_678_011;
    const A2: f64 = 0.816_847_572_980_459;
    const B2: f64 = 0.091_576_213_509_771;
    const W2: f64 = 0.109_951_743_655_322;
    [
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Affine map data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    pub area: f64,
    /// Cartesian gradients of the barycentric coordinates.
    pub grad_l: [[f64; 2]; 3],
}

impl Geometry {
    /// Returns `None` for a non-positive Jacobian.
    pub fn new(p: [[f64; 2]; 3]) -> Option<Self> {
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        if det.is_nan() || det <= 0.0 {
            return None;
        }
        let grad_l = [
            [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det],
            [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det],
            [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det],
        ];
        Some(Geometry { area: 0.5 * det, grad_l })
    }

    pub fn jacobian(p: [[f64; 2]; 3]) -> f64 {
        (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])
    }

    /// Cartesian shape-function gradients at a barycentric point.
    pub fn shape_gradients(&self, l: [f64; 3]) -> [[f64; 2]; 6] {
        let g = &self.grad_l;
        let mut out = [[0.0; 2]; 6];
        for i in 0..3 {
            for c in 0..2 {
                out[i][c] = (4.0 * l[i] - 1.0) * g[i][c];
            }
        }
        for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            for c in 0..2 {
                out[3 + k][c] = 4.0 * (l[i] * g[j][c] + l[j] * g[i][c]);
            }
        }
        out
    }
}

pub fn shape_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Scalar mass ∫ N_a N_b dA.
pub fn scalar_mass(geo: &Geometry) -> [[f64; 6]; 6] {
    let mut m = [[0.0; 6]; 6];
    for (l, w) in QUADRATURE {
        let n = shape_values(l);
        for a in 0..6 {
            for b in 0..6 {
                m[a][b] += w * geo.area * n[a] * n[b];
            }
        }
    }
    m
}

/// Scalar Laplacian ∫ ∇N_a·∇N_b dA.
pub fn scalar_stiffness(geo: &Geometry) -> [[f64; 6]; 6] {
    let mut k = [[0.0; 6]; 6];
    for (l, w) in QUADRATURE {
        let g = geo.shape_gradients(l);
        for a in 0..6 {
            for b in 0..6 {
                k[a][b] += w * geo.area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    }
    k
}

/// Plane-stress stiffness ∫ Bᵀ D B dA on DOFs ordered (u_X, u_Y) per node.
pub fn plane_stiffness(geo: &Geometry, d: &[[f64; 3]; 3]) -> [[f64; 12]; 12] {
    let mut k = [[0.0; 12]; 12];
    for (l, w) in QUADRATURE {
        let g = geo.shape_gradients(l);
        let mut b = [[0.0; 12]; 3];
        for a in 0..6 {
            b[0][2 * a] = g[a][0];
            b[1][2 * a + 1] = g[a][1];
            b[2][2 * a] = g[a][1];
            b[2][2 * a + 1] = g[a][0];
        }
        let mut db = [[0.0; 12]; 3];
        for i in 0..3 {
            for j in 0..12 {
                db[i][j] = d[i][0] * b[0][j] + d[i][1] * b[1][j] + d[i][2] * b[2][j];
            }
        }
        for i in 0..12 {
            for j in 0..12 {
                k[i][j] += w * geo.area * (b[0][i] * db[0][j] + b[1][i] * db[1][j] + b[2][i] * db[2][j]);
            }
        }
    }
    k
}
