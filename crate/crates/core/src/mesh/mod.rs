//! Two-dimensional triangulations of the cavity geometries.
//!
//! A [`Mesh`] is an immutable linear triangulation of a mid-plane cross
//! section. Boundary edges carry a [`BoundaryTag`]; unit cells additionally
//! carry the node pairing used by the Floquet condition. Quadratic elements
//! are built on top of this by the `fem` module.

mod generate;
mod geometry;
mod io;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::generate;
pub use geometry::{
    BridgeParams, CavityLayout, CavityParams, GeometrySpec, Shape, Termination, UnitCellParams, WedgeParams,
};
pub use io::{load, read_mesh, save, write_mesh};

/// Label of a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    Free,
    Clamped,
    PeriodicLeft,
    PeriodicRight,
    Load,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 5] = [
        BoundaryTag::Free,
        BoundaryTag::Clamped,
        BoundaryTag::PeriodicLeft,
        BoundaryTag::PeriodicRight,
        BoundaryTag::Load,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Free => "free",
            BoundaryTag::Clamped => "clamped",
            BoundaryTag::PeriodicLeft => "periodic_left",
            BoundaryTag::PeriodicRight => "periodic_right",
            BoundaryTag::Load => "load",
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        BoundaryTag::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| format!("unknown boundary tag `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// Linear triangulation with region ids, tagged boundary and periodic pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    regions: Vec<u32>,
    boundary: Vec<BoundaryEdge>,
    periodic_pairs: Vec<(usize, usize)>,
}

/// Absolute tolerance for periodic partners [m].
pub const PERIODIC_TOLERANCE: f64 = 1e-9;

impl Mesh {
    /// Builds a mesh and checks every invariant.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        elements: Vec<[usize; 3]>,
        regions: Vec<u32>,
        boundary: Vec<BoundaryEdge>,
        periodic_pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let mesh = Mesh { nodes, elements, regions, boundary, periodic_pairs };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn regions(&self) -> &[u32] {
        &self.regions
    }

    pub fn boundary(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn periodic_pairs(&self) -> &[(usize, usize)] {
        &self.periodic_pairs
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn signed_area(&self, element: usize) -> f64 {
        let [a, b, c] = self.elements[element];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.signed_area(e)).sum()
    }

    /// (min X, min Y, max X, max Y)
    pub fn bounding_box(&self) -> [f64; 4] {
        let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &self.nodes {
            bb[0] = bb[0].min(p[0]);
            bb[1] = bb[1].min(p[1]);
            bb[2] = bb[2].max(p[0]);
            bb[3] = bb[3].max(p[1]);
        }
        bb
    }

    pub fn diameter(&self) -> f64 {
        let bb = self.bounding_box();
        ((bb[2] - bb[0]).powi(2) + (bb[3] - bb[1]).powi(2)).sqrt()
    }

    /// X offset between periodic partners, if the mesh is a unit cell.
    pub fn lattice_constant(&self) -> Option<f64> {
        self.periodic_pairs.first().map(|&(l, r)| self.nodes[r][0] - self.nodes[l][0])
    }

    /// Nodes touched by boundary edges with the given tag, ascending.
    pub fn tagged_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut out: Vec<usize> = self.boundary.iter().filter(|e| e.tag == tag).flat_map(|e| e.nodes).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn nearest_node(&self, p: [f64; 2]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, q) in self.nodes.iter().enumerate() {
            let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n < 3 || self.elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no elements".into()));
        }
        if self.regions.len() != self.elements.len() {
            return Err(Error::InvalidMesh(format!(
                "{} region ids for {} elements",
                self.regions.len(),
                self.elements.len()
            )));
        }
        for (i, p) in self.nodes.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::InvalidMesh(format!("node {i} has non-finite coordinates")));
            }
        }
        for (e, tri) in self.elements.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!("element {e} references a missing node")));
            }
            let area = self.signed_area(e);
            if area.is_nan() || area <= 0.0 {
                return Err(Error::InvalidMesh(format!("element {e} has non-positive signed area {area:e}")));
            }
        }
        self.check_node_spacing()?;
        self.check_boundary()?;
        self.check_periodic_pairs()?;
        Ok(())
    }

    fn check_node_spacing(&self) -> Result<()> {
        let tol = 1e-6 * self.diameter();
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let cell = |p: [f64; 2]| ((p[0] / tol).floor() as i64, (p[1] / tol).floor() as i64);
        for (i, &p) in self.nodes.iter().enumerate() {
            let (cx, cy) = cell(p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(others) = grid.get(&(cx + dx, cy + dy)) {
                        for &j in others {
                            let q = self.nodes[j];
                            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                            if d < tol {
                                return Err(Error::InvalidMesh(format!("nodes {j} and {i} are closer than {tol:e} m")));
                            }
                        }
                    }
                }
            }
            grid.entry((cx, cy)).or_default().push(i);
        }
        Ok(())
    }

    fn check_boundary(&self) -> Result<()> {
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.elements {
            for k in 0..3 {
                *edge_count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut tagged: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for (i, e) in self.boundary.iter().enumerate() {
            let key = edge_key(e.nodes[0], e.nodes[1]);
            match edge_count.get(&key) {
                Some(1) => {}
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary edge {i} ({}, {}) is not a boundary edge of the triangulation",
                        e.nodes[0], e.nodes[1]
                    )))
                }
            }
            if tagged.insert(key, e.tag).is_some() {
                return Err(Error::InvalidMesh(format!("boundary edge {i} is tagged twice")));
            }
        }
        let mut untagged: Vec<_> =
            edge_count.iter().filter(|&(k, &c)| c == 1 && !tagged.contains_key(k)).map(|(k, _)| *k).collect();
        if !untagged.is_empty() {
            untagged.sort_unstable();
            return Err(Error::InvalidMesh(format!("boundary edge ({}, {}) has no tag", untagged[0].0, untagged[0].1)));
        }
        if let Some((k, c)) = edge_count.iter().find(|&(_, &c)| c > 2) {
            return Err(Error::InvalidMesh(format!("edge ({}, {}) is shared by {c} elements", k.0, k.1)));
        }
        // closed loops: every boundary vertex has even boundary degree
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for e in &self.boundary {
            *degree.entry(e.nodes[0]).or_insert(0) += 1;
            *degree.entry(e.nodes[1]).or_insert(0) += 1;
        }
        if let Some((v, _)) = degree.iter().find(|&(_, &d)| d % 2 == 1) {
            return Err(Error::InvalidMesh(format!("boundary is not closed at node {v}")));
        }
        Ok(())
    }

    fn check_periodic_pairs(&self) -> Result<()> {
        if self.periodic_pairs.is_empty() {
            return Ok(());
        }
        let n = self.nodes.len();
        let lattice = match self.lattice_constant() {
            Some(a) if a > 0.0 && self.periodic_pairs[0].0 < n && self.periodic_pairs[0].1 < n => a,
            _ => return Err(Error::InvalidMesh("periodic pairs do not define a positive lattice constant".into())),
        };
        let mut seen_left = vec![false; n];
        let mut seen_right = vec![false; n];
        for (i, &(l, r)) in self.periodic_pairs.iter().enumerate() {
            if l >= n || r >= n {
                return Err(Error::InvalidMesh(format!("periodic pair {i} references a missing node")));
            }
            if seen_left[l] || seen_right[r] {
                return Err(Error::InvalidMesh(format!("periodic pair {i} reuses a node")));
            }
            seen_left[l] = true;
            seen_right[r] = true;
            let (pl, pr) = (self.nodes[l], self.nodes[r]);
            if (pl[1] - pr[1]).abs() > PERIODIC_TOLERANCE || (pr[0] - pl[0] - lattice).abs() > PERIODIC_TOLERANCE {
                return Err(Error::InvalidMesh(format!("periodic pair {i} ({l}, {r}) is not a lattice translate")));
            }
        }
        for v in self.tagged_nodes(BoundaryTag::PeriodicLeft) {
            if !seen_left[v] {
                return Err(Error::InvalidMesh(format!("periodic_left node {v} has no partner")));
            }
        }
        Ok(())
    }
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[inline]
pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Bucket grid over element bounding boxes for point location.
#[derive(Debug, Clone)]
pub struct PointLocator {
    origin: [f64; 2],
    cell: f64,
    dims: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let bb = mesh.bounding_box();
        let ne = mesh.element_count().max(1);
        let (w, h) = ((bb[2] - bb[0]).max(1e-30), (bb[3] - bb[1]).max(1e-30));
        let cell = (w * h / ne as f64).sqrt().max(w.max(h) / 4096.0);
        let dims = [((w / cell).ceil() as usize).max(1), ((h / cell).ceil() as usize).max(1)];
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        let origin = [bb[0], bb[1]];
        for (e, tri) in mesh.elements().iter().enumerate() {
            let ps = tri.map(|v| mesh.nodes()[v]);
            let lo = [
                ps.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
                ps.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
            ];
            let hi = [
                ps.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
                ps.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
            ];
            let i0 = Self::clamp_index((lo[0] - origin[0]) / cell, dims[0]);
            let i1 = Self::clamp_index((hi[0] - origin[0]) / cell, dims[0]);
            let j0 = Self::clamp_index((lo[1] - origin[1]) / cell, dims[1]);
            let j1 = Self::clamp_index((hi[1] - origin[1]) / cell, dims[1]);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * dims[0] + i].push(e as u32);
                }
            }
        }
        PointLocator { origin, cell, dims, buckets }
    }

    fn clamp_index(x: f64, dim: usize) -> usize {
        if x <= 0.0 {
            0
        } else {
            (x.floor() as usize).min(dim - 1)
        }
    }

    /// Element containing `p` and its barycentric coordinates.
    pub fn locate(&self, mesh: &Mesh, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let fx = (p[0] - self.origin[0]) / self.cell;
        let fy = (p[1] - self.origin[1]) / self.cell;
        if fx < -1e-9 || fy < -1e-9 || fx > self.dims[0] as f64 + 1e-9 || fy > self.dims[1] as f64 + 1e-9 {
            return None;
        }
        let i = Self::clamp_index(fx, self.dims[0]);
        let j = Self::clamp_index(fy, self.dims[1]);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &e in &self.buckets[j * self.dims[0] + i] {
            let e = e as usize;
            let bary = barycentric(mesh, e, p);
            let worst = bary.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= 0.0 {
                return Some((e, bary));
            }
            if best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((e, bary, worst));
            }
        }
        // accept points on an edge up to rounding
        best.filter(|b| b.2 > -1e-10).map(|(e, bary, _)| (e, bary))
    }
}

pub(crate) fn barycentric(mesh: &Mesh, element: usize, p: [f64; 2]) -> [f64; 3] {
    let [a, b, c] = mesh.elements()[element].map(|v| mesh.nodes()[v]);
    let total = signed_area(a, b, c);
    let l0 = signed_area(p, b, c) / total;
    let l1 = signed_area(a, p, c) / total;
    [l0, l1, 1.0 - l0 - l1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Mesh {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let elements = vec![[0, 1, 2], [0, 2, 3]];
        let boundary = vec![
            BoundaryEdge { nodes: [0, 1], tag: BoundaryTag::Free },
            BoundaryEdge { nodes: [1, 2], tag: BoundaryTag::Load },
            BoundaryEdge { nodes: [2, 3], tag: BoundaryTag::Free },
            BoundaryEdge { nodes: [3, 0], tag: BoundaryTag::Clamped },
        ];
        Mesh::new(nodes, elements, vec![0, 0], boundary, vec![]).unwrap()
    }

    #[test]
    fn square_is_valid() {
        let m = square();
        assert!((m.area() - 1.0).abs() < 1e-15);
        assert_eq!(m.tagged_nodes(BoundaryTag::Clamped), vec![0, 3]);
    }

    #[test]
    fn inverted_element_is_named() {
        let m = square();
        let mut elements = m.elements().to_vec();
        elements[1] = [0, 3, 2];
        let err =
            Mesh::new(m.nodes().to_vec(), elements, vec![0, 0], m.boundary().to_vec(), vec![]).unwrap_err().to_string();
        assert!(err.contains("element 1"), "{err}");
    }

    #[test]
    fn untagged_boundary_rejected() {
        let m = square();
        let mut boundary = m.boundary().to_vec();
        boundary.pop();
        let err = Mesh::new(m.nodes().to_vec(), m.elements().to_vec(), vec![0, 0], boundary, vec![]);
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn coincident_nodes_rejected() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 1.0 + 1e-9]];
        let elements = vec![[0, 1, 2], [0, 2, 3]];
        let m = square();
        let err = Mesh::new(nodes, elements, vec![0, 0], m.boundary().to_vec(), vec![]);
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn locate_finds_containing_element() {
        let m = square();
        let loc = PointLocator::new(&m);
        let (e, bary) = loc.locate(&m, [0.75, 0.25]).unwrap();
        assert_eq!(e, 0);
        assert!(bary.iter().all(|&b| b >= 0.0));
        assert!(loc.locate(&m, [1.5, 0.5]).is_none());
        assert!(loc.locate(&m, [1.0, 0.5]).is_some());
    }

    #[test]
    fn tag_round_trips_through_str() {
        for t in BoundaryTag::ALL {
            assert_eq!(t.as_str().parse::<BoundaryTag>().unwrap(), t);
        }
        assert!("mirror".parse::<BoundaryTag>().is_err());
    }
}
