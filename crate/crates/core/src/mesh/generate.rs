use std::collections::{HashMap, HashSet};

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::geometry::{EdgeLabel, Outline, Piece};
use super::{edge_key, signed_area, BoundaryEdge, BoundaryTag, GeometrySpec, Mesh, Shape};
use crate::error::{Error, Result};

/// Triangulates a geometry. Deterministic for a given spec.
pub fn generate(spec: &GeometrySpec) -> Result<Mesh> {
    spec.validate()?;
    match &spec.shape {
        Shape::Rectangle { width, height, periodic, interfaces } => {
            rectangle(*width, *height, *periodic, interfaces, spec.h)
        }
        _ => {
            let outline = spec.outline()?;
            let sizing =
                Sizing { h: spec.h, hot: spec.hot_size(), grading: spec.grading, hotspots: outline.hotspots.clone() };
            let reduced = triangulate(&outline, &sizing)?;
            finish(reduced, &outline)
        }
    }
}

fn rectangle(width: f64, height: f64, periodic: bool, interfaces: &[f64], h: f64) -> Result<Mesh> {
    let mut breaks = vec![0.0];
    breaks.extend_from_slice(interfaces);
    breaks.push(width);
    let mut xs = vec![0.0];
    let mut column_region = Vec::new();
    for (layer, w) in breaks.windows(2).enumerate() {
        let n = ((w[1] - w[0]) / h - 1e-9).ceil().max(1.0) as usize;
        for i in 1..=n {
            xs.push(if i == n { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / n as f64 });
            column_region.push(layer as u32);
        }
    }
    let ny = (height / h - 1e-9).ceil().max(1.0) as usize;
    let ys: Vec<f64> = (0..=ny).map(|j| -height / 2.0 + height * j as f64 / ny as f64).collect();
    let nx = xs.len() - 1;
    let id = |i: usize, j: usize| j * (nx + 1) + i;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in &ys {
        for &x in &xs {
            nodes.push([x, y]);
        }
    }
    let mut elements = Vec::with_capacity(2 * nx * ny);
    let mut regions = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            elements.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            regions.extend([column_region[i]; 2]);
        }
    }
    let (left, right) = if periodic {
        (BoundaryTag::PeriodicLeft, BoundaryTag::PeriodicRight)
    } else {
        (BoundaryTag::Clamped, BoundaryTag::Load)
    };
    let mut boundary = Vec::new();
    for i in 0..nx {
        boundary.push(BoundaryEdge { nodes: [id(i, 0), id(i + 1, 0)], tag: BoundaryTag::Free });
        boundary.push(BoundaryEdge { nodes: [id(i + 1, ny), id(i, ny)], tag: BoundaryTag::Free });
    }
    for j in 0..ny {
        boundary.push(BoundaryEdge { nodes: [id(nx, j), id(nx, j + 1)], tag: right });
        boundary.push(BoundaryEdge { nodes: [id(0, j + 1), id(0, j)], tag: left });
    }
    let pairs = if periodic { (0..=ny).map(|j| (id(0, j), id(nx, j))).collect() } else { Vec::new() };
    Mesh::new(nodes, elements, regions, boundary, pairs)
}

struct Sizing {
    h: f64,
    hot: f64,
    grading: f64,
    hotspots: Vec<([f64; 2], [f64; 2])>,
}

impl Sizing {
    fn at(&self, p: [f64; 2]) -> f64 {
        let d = self.hotspots.iter().map(|&(a, b)| point_segment_distance(p, a, b)).fold(f64::INFINITY, f64::min);
        self.h.min(self.hot + self.grading * d)
    }
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (qx, qy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
}

/// Points along a piece, excluding its end point.
fn discretize(piece: &Piece, sizing: &Sizing) -> Vec<[f64; 2]> {
    match *piece {
        Piece::Line { a, b } => {
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            let at = |t: f64| [a[0] + (b[0] - a[0]) * (t / len), a[1] + (b[1] - a[1]) * (t / len)];
            let mut ts = Vec::new();
            let mut t = 0.0;
            while t < len {
                let mut step = sizing.at(at(t));
                step = step.min(sizing.at(at((t + step).min(len))));
                t += step;
                ts.push(t);
            }
            let m = ts.len();
            if m > 1 && ts[m - 1] - len > 0.5 * (ts[m - 1] - ts[m - 2]) {
                ts.pop();
            }
            let scale = len / ts[ts.len() - 1];
            let mut out = vec![a];
            for &t in &ts[..ts.len() - 1] {
                out.push(at(t * scale));
            }
            out
        }
        Piece::Arc { center, radius, start, end } => {
            let mid = 0.5 * (start + end);
            let s = [start, mid, end]
                .iter()
                .map(|&t| sizing.at(super::geometry::polar(center, radius, t)))
                .fold(f64::INFINITY, f64::min);
            let chord = s / (4.0 * radius);
            let by_chord = if chord < 2.0 { 2.0 * (1.0 - chord).acos() } else { std::f64::consts::PI };
            let step = by_chord.min(s / radius);
            let n = ((end - start).abs() / step).ceil().max(1.0) as usize;
            (0..n)
                .map(|i| super::geometry::polar(center, radius, start + (end - start) * i as f64 / n as f64))
                .collect()
        }
    }
}

struct Ring {
    points: Vec<[f64; 2]>,
    /// Segment i joins point i to point i+1 (cyclic).
    labels: Vec<EdgeLabel>,
}

impl Ring {
    fn segment(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        let n = self.points.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = self.segment(i);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn distance(&self, p: [f64; 2]) -> f64 {
        (0..self.points.len())
            .map(|i| {
                let (a, b) = self.segment(i);
                point_segment_distance(p, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn build_ring(outline: &Outline, sizing: &Sizing) -> Ring {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (piece, label) in &outline.pieces {
        let pts = discretize(piece, sizing);
        labels.extend(std::iter::repeat_n(*label, pts.len()));
        points.extend(pts);
    }
    Ring { points, labels }
}

fn interior_points(ring: &Ring, sizing: &Sizing) -> Vec<[f64; 2]> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &ring.points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let mut out = Vec::new();
    let mut stack = vec![(lo[0], lo[1], side, 0u32)];
    while let Some((x0, y0, s, depth)) = stack.pop() {
        if x0 > hi[0] || y0 > hi[1] {
            continue;
        }
        let c = [x0 + s / 2.0, y0 + s / 2.0];
        let local = sizing.at(c);
        if s > 1.4 * local && depth < 24 {
            let half = s / 2.0;
            // reverse push so that cells pop in a fixed raster order
            for (dx, dy) in [(1.0, 1.0), (0.0, 1.0), (1.0, 0.0), (0.0, 0.0)] {
                stack.push((x0 + dx * half, y0 + dy * half, half, depth + 1));
            }
        } else if ring.contains(c) && ring.distance(c) > 0.6 * local {
            out.push(c);
        }
    }
    out
}

struct Reduced {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    edges: Vec<([usize; 2], EdgeLabel)>,
}

fn triangulate(outline: &Outline, sizing: &Sizing) -> Result<Reduced> {
    let ring = build_ring(outline, sizing);
    let inner = interior_points(&ring, sizing);
    let meshing = |e: spade::InsertionError| Error::Meshing(e.to_string());

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(ring.points.len());
    for p in &ring.points {
        handles.push(cdt.insert(Point2::new(p[0], p[1])).map_err(meshing)?);
    }
    for i in 0..handles.len() {
        let (a, b) = (handles[i], handles[(i + 1) % handles.len()]);
        if a == b || !cdt.can_add_constraint(a, b) {
            return Err(Error::Meshing(format!("outline segment {i} cannot be inserted")));
        }
        cdt.add_constraint(a, b);
    }
    for p in &inner {
        cdt.insert(Point2::new(p[0], p[1])).map_err(meshing)?;
    }
    let start = cdt.num_vertices();
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(25.0))
        .exclude_outer_faces(true)
        .with_max_allowed_area(0.6 * sizing.h * sizing.h)
        .with_min_required_area(0.02 * sizing.hot * sizing.hot)
        .with_max_additional_vertices(4 * start + 1000);
    let result = cdt.refine(params);
    let excluded: HashSet<usize> = result.excluded_faces.iter().map(|f| f.index()).collect();

    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut faces = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix().index()) {
            continue;
        }
        faces.push(face.vertices().map(|v| v.fix().index()));
    }
    let mut used: Vec<usize> = faces.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    let mut nodes = Vec::with_capacity(used.len());
    for (new, &old) in used.iter().enumerate() {
        remap.insert(old, new);
        let p = cdt.vertex(spade::handles::FixedVertexHandle::from_index(old)).position();
        nodes.push([p.x, p.y]);
    }
    let mut elements: Vec<[usize; 3]> = faces.iter().map(|f| f.map(|v| remap[&v])).collect();
    for tri in &mut elements {
        if signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]) < 0.0 {
            tri.swap(1, 2);
        }
    }

    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in &elements {
        for k in 0..3 {
            *count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    let mut boundary: Vec<[usize; 2]> = Vec::new();
    for tri in &elements {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if count[&edge_key(a, b)] == 1 {
                boundary.push([a, b]);
            }
        }
    }
    let mut edges = Vec::with_capacity(boundary.len());
    for e in boundary {
        let (p, q) = (nodes[e[0]], nodes[e[1]]);
        let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let (mut best, mut best_d) = (0, f64::INFINITY);
        for i in 0..ring.points.len() {
            let (a, b) = ring.segment(i);
            let d = point_segment_distance(mid, a, b);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        let (a, b) = ring.segment(best);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if best_d > 1e-6 * len {
            return Err(Error::Meshing("triangulation boundary departs from the outline".into()));
        }
        edges.push((e, ring.labels[best]));
    }
    Ok(Reduced { nodes, elements, edges })
}

fn seam_nodes(r: &Reduced, seam: EdgeLabel) -> HashSet<usize> {
    r.edges.iter().filter(|(_, l)| *l == seam).flat_map(|(e, _)| *e).collect()
}

/// Reflects the domain across a seam and glues the copy on.
fn mirror(
    r: Reduced,
    seam: EdgeLabel,
    reflect: impl Fn([f64; 2]) -> [f64; 2],
    retag: impl Fn(EdgeLabel) -> EdgeLabel,
) -> Reduced {
    let on_seam = seam_nodes(&r, seam);
    let n = r.nodes.len();
    let mut nodes = r.nodes.clone();
    let mut image = vec![0usize; n];
    for (i, &p) in r.nodes.iter().enumerate() {
        if on_seam.contains(&i) {
            image[i] = i;
        } else {
            image[i] = nodes.len();
            nodes.push(reflect(p));
        }
    }
    let mut elements = r.elements.clone();
    elements.extend(r.elements.iter().map(|t| [image[t[0]], image[t[2]], image[t[1]]]));
    let mut edges: Vec<_> = r.edges.iter().filter(|(_, l)| *l != seam).copied().collect();
    edges.extend(r.edges.iter().filter(|(_, l)| *l != seam).map(|(e, l)| ([image[e[1]], image[e[0]]], retag(*l))));
    Reduced { nodes, elements, edges }
}

fn finish(mut r: Reduced, outline: &Outline) -> Result<Mesh> {
    // pin seam nodes exactly onto their lines
    for i in seam_nodes(&r, EdgeLabel::SeamY) {
        r.nodes[i][1] = 0.0;
    }
    if let Some(c) = outline.mirror_x {
        for i in seam_nodes(&r, EdgeLabel::SeamX) {
            r.nodes[i][0] = c;
        }
    }
    if outline.mirror_y {
        r = mirror(r, EdgeLabel::SeamY, |p| [p[0], -p[1]], |l| l);
    }
    if let Some(c) = outline.mirror_x {
        let retag = |l| match l {
            EdgeLabel::Tag(BoundaryTag::PeriodicLeft) => EdgeLabel::Tag(BoundaryTag::PeriodicRight),
            other => other,
        };
        r = mirror(r, EdgeLabel::SeamX, |p| [2.0 * c - p[0], p[1]], retag);
    }
    let mut boundary = Vec::with_capacity(r.edges.len());
    for (nodes, label) in &r.edges {
        match label {
            EdgeLabel::Tag(tag) => boundary.push(BoundaryEdge { nodes: *nodes, tag: *tag }),
            _ => return Err(Error::Meshing("unresolved symmetry seam on the boundary".into())),
        }
    }
    let pairs = periodic_pairs(&r.nodes, &boundary)?;
    let regions = vec![0; r.elements.len()];
    Mesh::new(r.nodes, r.elements, regions, boundary, pairs)
}

fn periodic_pairs(nodes: &[[f64; 2]], boundary: &[BoundaryEdge]) -> Result<Vec<(usize, usize)>> {
    let collect = |tag: BoundaryTag| {
        let mut v: Vec<usize> = boundary.iter().filter(|e| e.tag == tag).flat_map(|e| e.nodes).collect();
        v.sort_unstable();
        v.dedup();
        v.sort_by(|&a, &b| nodes[a][1].total_cmp(&nodes[b][1]));
        v
    };
    let left = collect(BoundaryTag::PeriodicLeft);
    let right = collect(BoundaryTag::PeriodicRight);
    if left.len() != right.len() {
        return Err(Error::Meshing(format!("{} left and {} right periodic nodes", left.len(), right.len())));
    }
    Ok(left.into_iter().zip(right).collect())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::mesh::{CavityParams, UnitCellParams, WedgeParams};

    fn rect(h: f64) -> GeometrySpec {
        GeometrySpec::new(Shape::Rectangle { width: 1e-6, height: 1e-6, periodic: false, interfaces: vec![] }, h)
    }

    #[test]
    fn rectangle_counts_and_area() {
        let m = generate(&rect(0.1e-6)).unwrap();
        assert!(m.element_count() >= 200);
        assert!((m.area() - 1e-12).abs() < 1e-9 * 1e-12);
    }

    #[test]
    fn layered_rectangle_regions() {
        let spec = GeometrySpec::new(
            Shape::Rectangle { width: 1e-6, height: 0.1e-6, periodic: true, interfaces: vec![0.3e-6] },
            0.05e-6,
        );
        let m = generate(&spec).unwrap();
        for (e, tri) in m.elements().iter().enumerate() {
            let cx = tri.iter().map(|&v| m.nodes()[v][0]).sum::<f64>() / 3.0;
            assert_eq!(m.regions()[e], u32::from(cx > 0.3e-6));
        }
        assert_eq!(m.lattice_constant(), Some(1e-6));
    }

    #[test]
    fn wedge_tip_is_loaded() {
        let spec = GeometrySpec::new(
            Shape::Wedge(WedgeParams { half_angle: 0.15 * PI, tip_width: 10e-9, length: 4e-6 }),
            0.2e-6,
        );
        let m = generate(&spec).unwrap();
        let min_x = m.nodes().iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        assert_eq!(min_x, 0.0);
        let load = m.tagged_nodes(BoundaryTag::Load);
        assert!(!load.is_empty());
        assert!(load.iter().all(|&v| m.nodes()[v][0] == 0.0));
    }

    #[test]
    fn unit_cell_pairs_cover_left_edge() {
        let spec = GeometrySpec::new(Shape::UnitCell(UnitCellParams::reference()), 0.1e-6);
        let m = generate(&spec).unwrap();
        let left = m.tagged_nodes(BoundaryTag::PeriodicLeft);
        assert_eq!(m.periodic_pairs().len(), left.len());
        for &(l, r) in m.periodic_pairs() {
            assert_eq!(m.nodes()[l][1], m.nodes()[r][1]);
            assert!((m.nodes()[r][0] - m.nodes()[l][0] - 1.925e-6).abs() < 1e-9);
        }
    }

    #[test]
    fn cavity_meshes() {
        let spec = GeometrySpec::new(Shape::Cavity(CavityParams::reference()), 0.1e-6);
        let m = generate(&spec).unwrap();
        let exact = spec.analytic_area().unwrap();
        assert!((m.area() - exact).abs() < 5e-3 * exact);
        assert!(!m.tagged_nodes(BoundaryTag::Clamped).is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GeometrySpec::new(Shape::UnitCell(UnitCellParams::reference()), 0.1e-6);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }
}
