//! Linear elastodynamics on quadratic triangles.
//!
//! Two 2D models are provided: `InPlane` (plane stress, DOFs u_X, u_Y) and
//! `OutOfPlane` (antiplane shear, DOF u_Z). Geometry enters through an
//! [`FeSpace`], which inserts edge midpoints into a linear [`Mesh`].

mod bloch;
pub(crate) mod eigen;
pub mod element;
mod modal;
pub mod sparse;
mod statics;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::IsotropicMaterial;
use crate::mesh::{edge_key, BoundaryTag, Mesh, PointLocator};
use element::Geometry;
use sparse::Csr;

pub use bloch::{band_structure, solve_bloch, BandOptions, BandStructure, FamilyBands, Gap, MIN_RELATIVE_GAP};
pub(crate) use modal::fix_sign;
pub use modal::{solve_modes, solve_modes_with, ModeOptions, DEGENERACY_SPLIT};
pub use statics::{solve_static, Constraint, Load, Prescribed, StaticSolution, Target};

/// Displacement model of the 2D reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    InPlane,
    OutOfPlane,
}

impl Model {
    pub const BOTH: [Model; 2] = [Model::InPlane, Model::OutOfPlane];

    /// DOFs per node.
    pub fn components(self) -> usize {
        match self {
            Model::InPlane => 2,
            Model::OutOfPlane => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Model::InPlane => "in_plane",
            Model::OutOfPlane => "out_of_plane",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "in_plane" => Ok(Model::InPlane),
            "out_of_plane" => Ok(Model::OutOfPlane),
            other => Err(format!("unknown model `{other}` (expected in_plane or out_of_plane)")),
        }
    }
}

/// Quadratic Lagrange space on a mesh: vertices first, then edge midpoints.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    points: Vec<[f64; 2]>,
    elements: Vec<[usize; 6]>,
    geometry: Vec<Geometry>,
    /// (vertex a, vertex b, midpoint) of each boundary edge.
    boundary: Vec<([usize; 3], BoundaryTag)>,
    periodic: Vec<(usize, usize)>,
    locator: PointLocator,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>) -> Result<Self> {
        let mut points = mesh.nodes().to_vec();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut elements = Vec::with_capacity(mesh.element_count());
        let mut geometry = Vec::with_capacity(mesh.element_count());
        for (e, tri) in mesh.elements().iter().enumerate() {
            let p = tri.map(|v| mesh.nodes()[v]);
            let geo = Geometry::new(p).ok_or(Error::InvertedElement { element: e, jacobian: Geometry::jacobian(p) })?;
            geometry.push(geo);
            let mut mids = [0; 3];
            for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                let key = edge_key(tri[i], tri[j]);
                mids[k] = *midpoint.entry(key).or_insert_with(|| {
                    let (a, b) = (mesh.nodes()[key.0], mesh.nodes()[key.1]);
                    points.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
                    points.len() - 1
                });
            }
            elements.push([tri[0], tri[1], tri[2], mids[0], mids[1], mids[2]]);
        }
        let boundary: Vec<_> = mesh
            .boundary()
            .iter()
            .map(|e| ([e.nodes[0], e.nodes[1], midpoint[&edge_key(e.nodes[0], e.nodes[1])]], e.tag))
            .collect();

        let mut periodic = mesh.periodic_pairs().to_vec();
        if !periodic.is_empty() {
            let partner: HashMap<usize, usize> = periodic.iter().copied().collect();
            let right_mid: HashMap<(usize, usize), usize> = boundary
                .iter()
                .filter(|(_, t)| *t == BoundaryTag::PeriodicRight)
                .map(|(n, _)| (edge_key(n[0], n[1]), n[2]))
                .collect();
            for (n, tag) in &boundary {
                if *tag != BoundaryTag::PeriodicLeft {
                    continue;
                }
                let (a, b) = (partner[&n[0]], partner[&n[1]]);
                let mid = right_mid.get(&edge_key(a, b)).ok_or_else(|| {
                    Error::InvalidMesh(format!("periodic_left edge ({}, {}) has no right partner edge", n[0], n[1]))
                })?;
                periodic.push((n[2], *mid));
            }
        }
        let locator = PointLocator::new(&mesh);
        Ok(FeSpace { mesh, points, elements, geometry, boundary, periodic, locator })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn node_count(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn elements(&self) -> &[[usize; 6]] {
        &self.elements
    }

    pub fn geometry(&self, element: usize) -> &Geometry {
        &self.geometry[element]
    }

    pub fn boundary(&self) -> &[([usize; 3], BoundaryTag)] {
        &self.boundary
    }

    /// Left/right node pairs including edge midpoints.
    pub fn periodic_pairs(&self) -> &[(usize, usize)] {
        &self.periodic
    }

    /// All nodes (vertices and midpoints) on edges with the given tag.
    pub fn tagged_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut out: Vec<usize> = self.boundary.iter().filter(|(_, t)| *t == tag).flat_map(|(n, _)| *n).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        self.locator.locate(&self.mesh, p)
    }

    pub fn nearest_node(&self, p: [f64; 2]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, q) in self.points.iter().enumerate() {
            let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

/// Assembled stiffness and mass for one model.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    space: Arc<FeSpace>,
    model: Model,
    thickness: f64,
    materials: Vec<IsotropicMaterial>,
    k: Csr,
    m: Csr,
}

impl SystemMatrices {
    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.space.mesh()
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    /// Material of every region id.
    pub fn materials(&self) -> &[IsotropicMaterial] {
        &self.materials
    }

    pub fn material_of(&self, element: usize) -> &IsotropicMaterial {
        &self.materials[self.mesh().regions()[element] as usize]
    }

    pub fn stiffness(&self) -> &Csr {
        &self.k
    }

    pub fn mass(&self) -> &Csr {
        &self.m
    }

    pub fn dof_count(&self) -> usize {
        self.k.dim()
    }

    /// Global DOF of a node component.
    pub fn dof(&self, node: usize, component: usize) -> usize {
        node * self.model.components() + component
    }
}

/// Assembles a homogeneous body.
pub fn assemble(mesh: &Arc<Mesh>, mat: &IsotropicMaterial, model: Model, thickness: f64) -> Result<SystemMatrices> {
    assemble_regions(mesh, std::slice::from_ref(mat), model, thickness)
}

/// Assembles with one material per region id.
pub fn assemble_regions(
    mesh: &Arc<Mesh>,
    materials: &[IsotropicMaterial],
    model: Model,
    thickness: f64,
) -> Result<SystemMatrices> {
    if !(thickness.is_finite() && thickness > 0.0) {
        return Err(Error::InvalidParameter(format!("thickness must be positive, got {thickness:e}")));
    }
    if let Some(&r) = mesh.regions().iter().find(|&&r| r as usize >= materials.len()) {
        return Err(Error::InvalidParameter(format!("region {r} has no material ({} supplied)", materials.len())));
    }
    let space = Arc::new(FeSpace::new(Arc::clone(mesh))?);
    let nc = model.components();
    let n = space.node_count() * nc;
    let per = 36 * nc * nc;
    let mut kt = Vec::with_capacity(space.elements().len() * per);
    let mut mt = Vec::with_capacity(space.elements().len() * per);
    for (e, nodes) in space.elements().iter().enumerate() {
        let mat = &materials[mesh.regions()[e] as usize];
        let geo = space.geometry(e);
        let ms = element::scalar_mass(geo);
        let rho_t = mat.density() * thickness;
        match model {
            Model::InPlane => {
                let ke = element::plane_stiffness(geo, &mat.plane_stress_matrix());
                for a in 0..6 {
                    for b in 0..6 {
                        for c in 0..2 {
                            for d in 0..2 {
                                kt.push((2 * nodes[a] + c, 2 * nodes[b] + d, thickness * ke[2 * a + c][2 * b + d]));
                            }
                            mt.push((2 * nodes[a] + c, 2 * nodes[b] + c, rho_t * ms[a][b]));
                        }
                    }
                }
            }
            Model::OutOfPlane => {
                let ks = element::scalar_stiffness(geo);
                let mu_t = mat.shear_modulus() * thickness;
                for a in 0..6 {
                    for b in 0..6 {
                        kt.push((nodes[a], nodes[b], mu_t * ks[a][b]));
                        mt.push((nodes[a], nodes[b], rho_t * ms[a][b]));
                    }
                }
            }
        }
    }
    Ok(SystemMatrices {
        space,
        model,
        thickness,
        materials: materials.to_vec(),
        k: Csr::from_triplets(n, kt),
        m: Csr::from_triplets(n, mt),
    })
}

/// Symmetric strain at a point of an element, from nodal DOFs.
///
/// In-plane: [ε_XX, ε_YY, ε_XY]; out-of-plane: [ε_XZ, ε_YZ, 0].
pub(crate) fn element_strain(sys_model: Model, space: &FeSpace, u: &[f64], element: usize, l: [f64; 3]) -> [f64; 3] {
    let g = space.geometry(element).shape_gradients(l);
    let nodes = &space.elements()[element];
    match sys_model {
        Model::InPlane => {
            let (mut exx, mut eyy, mut gxy) = (0.0, 0.0, 0.0);
            for a in 0..6 {
                let (ux, uy) = (u[2 * nodes[a]], u[2 * nodes[a] + 1]);
                exx += g[a][0] * ux;
                eyy += g[a][1] * uy;
                gxy += g[a][1] * ux + g[a][0] * uy;
            }
            [exx, eyy, 0.5 * gxy]
        }
        Model::OutOfPlane => {
            let (mut dx, mut dy) = (0.0, 0.0);
            for a in 0..6 {
                dx += g[a][0] * u[nodes[a]];
                dy += g[a][1] * u[nodes[a]];
            }
            [0.5 * dx, 0.5 * dy, 0.0]
        }
    }
}

/// Displacement at a point of an element; out-of-plane fills slot 0.
pub(crate) fn element_displacement(model: Model, space: &FeSpace, u: &[f64], element: usize, l: [f64; 3]) -> [f64; 2] {
    let n = element::shape_values(l);
    let nodes = &space.elements()[element];
    let mut out = [0.0; 2];
    for a in 0..6 {
        match model {
            Model::InPlane => {
                out[0] += n[a] * u[2 * nodes[a]];
                out[1] += n[a] * u[2 * nodes[a] + 1];
            }
            Model::OutOfPlane => out[0] += n[a] * u[nodes[a]],
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, GeometrySpec, Shape};

    fn square(h: f64) -> Arc<Mesh> {
        let spec =
            GeometrySpec::new(Shape::Rectangle { width: 1e-6, height: 1e-6, periodic: false, interfaces: vec![] }, h);
        Arc::new(generate(&spec).unwrap())
    }

    #[test]
    fn total_mass_matches_density() {
        let mat = IsotropicMaterial::diamond();
        let t = 0.5e-6;
        let sys = assemble(&square(0.2e-6), &mat, Model::InPlane, t).unwrap();
        let ones_x: Vec<f64> = (0..sys.dof_count()).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let total = sys.mass().quadratic_form(&ones_x);
        let expected = mat.density() * 1e-12 * t;
        assert!((total - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn matrices_are_symmetric() {
        for model in Model::BOTH {
            let sys = assemble(&square(0.25e-6), &IsotropicMaterial::diamond(), model, 1.0).unwrap();
            assert!(sys.stiffness().asymmetry() < 1e-12);
            assert!(sys.mass().asymmetry() < 1e-12);
        }
    }

    #[test]
    fn rigid_motions_have_zero_energy() {
        let sys = assemble(&square(0.25e-6), &IsotropicMaterial::diamond(), Model::InPlane, 1.0).unwrap();
        let pts = sys.space().points();
        let rot: Vec<f64> = pts.iter().flat_map(|p| [-p[1], p[0]]).collect();
        let k = sys.stiffness();
        let scale = k.diagonal().iter().cloned().fold(0.0, f64::max) * sparse::dot(&rot, &rot);
        assert!(k.quadratic_form(&rot).abs() < 1e-12 * scale);
    }

    #[test]
    fn missing_region_material_rejected() {
        let spec = GeometrySpec::new(
            Shape::Rectangle { width: 1e-6, height: 0.2e-6, periodic: true, interfaces: vec![0.5e-6] },
            0.1e-6,
        );
        let mesh = Arc::new(generate(&spec).unwrap());
        let err = assemble(&mesh, &IsotropicMaterial::diamond(), Model::InPlane, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn periodic_midpoints_are_paired() {
        let spec = GeometrySpec::new(
            Shape::Rectangle { width: 1e-6, height: 0.4e-6, periodic: true, interfaces: vec![] },
            0.1e-6,
        );
        let mesh = Arc::new(generate(&spec).unwrap());
        let space = FeSpace::new(mesh).unwrap();
        assert_eq!(space.periodic_pairs().len(), 2 * 4 + 1);
        for &(l, r) in space.periodic_pairs() {
            let (pl, pr) = (space.points()[l], space.points()[r]);
            assert_eq!(pl[1], pr[1]);
            assert!((pr[0] - pl[0] - 1e-6).abs() < 1e-15);
        }
    }
}
