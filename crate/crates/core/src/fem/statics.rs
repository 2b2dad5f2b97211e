use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sparse::{norm, Skyline};
use super::{element_displacement, element_strain, FeSpace, Model, SystemMatrices};
use crate::error::{Error, Result};
use crate::mesh::BoundaryTag;

/// Where a constraint or load acts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Every node on edges with this tag.
    Tag(BoundaryTag),
    /// A node of the quadratic space.
    Node(usize),
    /// The node nearest to a position.
    Point([f64; 2]),
}

/// Prescribed displacement. Out-of-plane problems use slot 0 for u_Z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prescribed {
    /// Fixed components; `None` leaves a component free.
    Components([Option<f64>; 2]),
    /// u(X) = value + gradient · X on every targeted node, all components.
    Linear { value: [f64; 2], gradient: [[f64; 2]; 2] },
}

impl Prescribed {
    pub const FIXED: Prescribed = Prescribed::Components([Some(0.0), Some(0.0)]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub target: Target,
    pub value: Prescribed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Load {
    /// Uniform surface traction [N/m²] on tagged edges, times the thickness.
    Traction { tag: BoundaryTag, traction: [f64; 2] },
    /// Concentrated force [N] at a position, spread consistently over the
    /// containing element.
    Point { at: [f64; 2], force: [f64; 2] },
}

/// Displacement solution of K u = f.
#[derive(Debug, Clone)]
pub struct StaticSolution {
    space: Arc<FeSpace>,
    model: Model,
    u: Vec<f64>,
    residual: f64,
}

impl StaticSolution {
    pub fn displacements(&self) -> &[f64] {
        &self.u
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    /// Relative residual ‖K_ff u_f − f_f‖ / ‖f_f‖ of the free block.
    pub fn relative_residual(&self) -> f64 {
        self.residual
    }

    pub fn displacement_at(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        let (e, l) = self.space.locate(p).ok_or(Error::OutsideMesh { x: p[0], y: p[1] })?;
        Ok(element_displacement(self.model, &self.space, &self.u, e, l))
    }

    /// [ε_XX, ε_YY, ε_XY] in-plane, [ε_XZ, ε_YZ, 0] out-of-plane.
    pub fn strain_at(&self, p: [f64; 2]) -> Result<[f64; 3]> {
        let (e, l) = self.space.locate(p).ok_or(Error::OutsideMesh { x: p[0], y: p[1] })?;
        Ok(element_strain(self.model, &self.space, &self.u, e, l))
    }

    /// Strain at each element centroid.
    pub fn element_strains(&self) -> Vec<[f64; 3]> {
        (0..self.space.elements().len())
            .map(|e| element_strain(self.model, &self.space, &self.u, e, [1.0 / 3.0; 3]))
            .collect()
    }
}

fn target_nodes(space: &FeSpace, t: &Target) -> Result<Vec<usize>> {
    match *t {
        Target::Tag(tag) => {
            let nodes = space.tagged_nodes(tag);
            if nodes.is_empty() {
                return Err(Error::InvalidParameter(format!("no boundary edges tagged `{tag}`")));
            }
            Ok(nodes)
        }
        Target::Node(i) if i < space.node_count() => Ok(vec![i]),
        Target::Node(i) => Err(Error::InvalidParameter(format!("node {i} does not exist"))),
        Target::Point(p) => Ok(vec![space.nearest_node(p)]),
    }
}

/// Solves the static problem with Dirichlet conditions eliminated.
pub fn solve_static(sys: &SystemMatrices, loads: &[Load], constraints: &[Constraint]) -> Result<StaticSolution> {
    let space = sys.space();
    let nc = sys.model().components();
    let n = sys.dof_count();
    let thickness = sys.thickness();

    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for c in constraints {
        for node in target_nodes(space, &c.target)? {
            let p = space.points()[node];
            for comp in 0..nc {
                let v = match c.value {
                    Prescribed::Components(v) => v[comp],
                    Prescribed::Linear { value, gradient } => {
                        Some(value[comp] + gradient[comp][0] * p[0] + gradient[comp][1] * p[1])
                    }
                };
                if let Some(v) = v {
                    fixed[node * nc + comp] = Some(v);
                }
            }
        }
    }

    let mut f = vec![0.0; n];
    for load in loads {
        match *load {
            Load::Traction { tag, traction } => {
                let mut any = false;
                for (nodes, t) in space.boundary() {
                    if *t != tag {
                        continue;
                    }
                    any = true;
                    let (a, b) = (space.points()[nodes[0]], space.points()[nodes[1]]);
                    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    for (node, w) in nodes.iter().zip([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]) {
                        for comp in 0..nc {
                            f[node * nc + comp] += w * len * thickness * traction[comp];
                        }
                    }
                }
                if !any {
                    return Err(Error::InvalidParameter(format!("no boundary edges tagged `{tag}`")));
                }
            }
            Load::Point { at, force } => {
                let (e, l) = space.locate(at).ok_or(Error::OutsideMesh { x: at[0], y: at[1] })?;
                let shape = super::element::shape_values(l);
                for (node, s) in space.elements()[e].iter().zip(shape) {
                    for comp in 0..nc {
                        f[node * nc + comp] += s * force[comp];
                    }
                }
            }
        }
    }

    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let uc: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
    let kuc = sys.stiffness().mul_vec(&uc);
    let rhs: Vec<f64> = free.iter().map(|&i| f[i] - kuc[i]).collect();
    let mut u = uc;
    let mut residual = 0.0;
    if !free.is_empty() {
        let kff = sys.stiffness().submatrix(&free);
        let fac = Skyline::factor(&kff)?;
        let mut x = fac.solve(&rhs);
        let scale = norm(&rhs);
        if scale > 0.0 {
            for _ in 0..3 {
                let kx = kff.mul_vec(&x);
                let r: Vec<f64> = rhs.iter().zip(&kx).map(|(a, b)| a - b).collect();
                residual = norm(&r) / scale;
                if residual <= 1e-12 {
                    break;
                }
                let dx = fac.solve(&r);
                for (xi, d) in x.iter_mut().zip(dx) {
                    *xi += d;
                }
            }
            let kx = kff.mul_vec(&x);
            let r: Vec<f64> = rhs.iter().zip(&kx).map(|(a, b)| a - b).collect();
            residual = norm(&r) / scale;
            if residual > 1e-10 {
                return Err(Error::NoConvergence(format!("static residual {residual:e} above 1e-10")));
            }
        }
        for (i, &dof) in free.iter().enumerate() {
            u[dof] = x[i];
        }
    }
    Ok(StaticSolution { space: Arc::clone(space), model: sys.model(), u, residual })
}
