//! Parametric outlines of the meshed cross sections.
//!
//! Every non-rectangular shape is described on its symmetry-reduced domain
//! (a half or a quarter) as a closed chain of straight and circular pieces.
//! The generator triangulates that domain and mirrors it back.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::BoundaryTag;
use crate::error::{Error, Result};

/// Full description of a mesh to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub shape: Shape,
    /// Target element edge length away from hot-spots [m].
    pub h: f64,
    /// Element size reduction at strain hot-spots (≥ 1).
    pub refinement: f64,
    /// Growth of the element size per unit distance from a hot-spot.
    pub grading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Shape {
    /// X ∈ [0, width], Y ∈ [−height/2, height/2]. Interfaces split the strip
    /// into regions numbered from the left.
    Rectangle {
        width: f64,
        height: f64,
        periodic: bool,
        interfaces: Vec<f64>,
    },
    Wedge(WedgeParams),
    Bridge(BridgeParams),
    UnitCell(UnitCellParams),
    Cavity(CavityParams),
}

/// Truncated wedge, tip edge at X = 0, opening towards +X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeParams {
    pub half_angle: f64,
    pub tip_width: f64,
    pub length: f64,
}

/// Symmetric neck of width d between two tapers, clamped at X = ±length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeParams {
    /// Width at the waist [m].
    pub d: f64,
    /// Radius of the waist rounding [m].
    pub r_prime: f64,
    /// Taper angle of the straight flanks [rad].
    pub theta: f64,
    /// Half length [m].
    pub length: f64,
}

/// Phononic-crystal cell spanning X ∈ [0, a], Y ∈ [−height/2, height/2]:
/// a mass block joined to its neighbours by bridges of width b, with the
/// concave corners rounded to radius r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCellParams {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    /// Total bridge length per cell (two halves at the cell ends) [m].
    pub gap: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Free,
    Clamped,
}

/// Defect cavity: a rounded waist of width d between two tapered pads of
/// height e and flat length c, embedded in a finite phononic mirror.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub d: f64,
    pub c: f64,
    pub e: f64,
    pub r_prime: f64,
    pub theta: f64,
    /// Mirror cells; their fillet radius R doubles as the pad fillet.
    pub mirror: UnitCellParams,
    pub mirror_cells: usize,
    pub termination: Termination,
}

impl UnitCellParams {
    /// Mirror cell with (A, B, R) = (1.925, 0.2, 0.29) µm.
    pub fn reference() -> Self {
        UnitCellParams { a: 1.925e-6, b: 0.2e-6, r: 0.29e-6, gap: 0.7e-6, height: 1.925e-6 }
    }
}

/// X positions along the cavity axis (X ≥ 0 half).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityLayout {
    /// End of the straight taper, start of the flat pad top.
    pub taper_end: f64,
    /// Right face of the pad.
    pub pad_end: f64,
    /// Left edge of the first mirror cell (mid-bridge).
    pub first_cell: f64,
    /// Terminating face of the mirror.
    pub end: f64,
}

impl CavityParams {
    pub fn layout(&self) -> CavityLayout {
        let m = &self.mirror;
        let (x1, y1) = waist_arc_end(self.d, self.r_prime, self.theta);
        let taper_end = x1 + (self.e / 2.0 - y1) / self.theta.tan();
        let pad_end = taper_end + self.c;
        let first_cell = pad_end + m.gap / 2.0;
        CavityLayout { taper_end, pad_end, first_cell, end: first_cell + m.a * self.mirror_cells as f64 }
    }

    /// (d, c, e, r′, R) = (50, 400, 960, 375, 290) nm.
    pub fn reference() -> Self {
        CavityParams {
            d: 50e-9,
            c: 400e-9,
            e: 960e-9,
            r_prime: 375e-9,
            theta: 0.25 * PI,
            mirror: UnitCellParams::reference(),
            mirror_cells: 4,
            termination: Termination::Clamped,
        }
    }
}

/// Edge label on the reduced domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EdgeLabel {
    Tag(BoundaryTag),
    /// Symmetry seam Y = 0.
    SeamY,
    /// Symmetry seam X = const.
    SeamX,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Piece {
    Line {
        a: [f64; 2],
        b: [f64; 2],
    },
    /// Traversed from angle `start` to `end` (either direction).
    Arc {
        center: [f64; 2],
        radius: f64,
        start: f64,
        end: f64,
    },
}

impl Piece {
    pub(crate) fn start(&self) -> [f64; 2] {
        match *self {
            Piece::Line { a, .. } => a,
            Piece::Arc { center, radius, start, .. } => polar(center, radius, start),
        }
    }

    #[cfg(test)]
    pub(crate) fn end(&self) -> [f64; 2] {
        match *self {
            Piece::Line { b, .. } => b,
            Piece::Arc { center, radius, end, .. } => polar(center, radius, end),
        }
    }

    fn reversed(self) -> Piece {
        match self {
            Piece::Line { a, b } => Piece::Line { a: b, b: a },
            Piece::Arc { center, radius, start, end } => Piece::Arc { center, radius, start: end, end: start },
        }
    }

    /// ∫ ½(x dy − y dx) along the piece.
    fn green_area(&self) -> f64 {
        match *self {
            Piece::Line { a, b } => 0.5 * (a[0] * b[1] - b[0] * a[1]),
            Piece::Arc { center: [cx, cy], radius: r, start: t0, end: t1 } => {
                0.5 * (r * r * (t1 - t0) + cx * r * (t1.sin() - t0.sin()) + cy * r * (t0.cos() - t1.cos()))
            }
        }
    }
}

pub(crate) fn polar(c: [f64; 2], r: f64, t: f64) -> [f64; 2] {
    [c[0] + r * t.cos(), c[1] + r * t.sin()]
}

/// Reduced domain handed to the generator.
#[derive(Debug, Clone)]
pub(crate) struct Outline {
    pub pieces: Vec<(Piece, EdgeLabel)>,
    /// Mirror about Y = 0 after meshing.
    pub mirror_y: bool,
    /// Mirror about X = c after meshing, with the tag map applied to the copy.
    pub mirror_x: Option<f64>,
    /// Segments around which the element size is reduced.
    pub hotspots: Vec<([f64; 2], [f64; 2])>,
}

impl Outline {
    fn new(mirror_y: bool, mirror_x: Option<f64>) -> Self {
        Outline { pieces: Vec::new(), mirror_y, mirror_x, hotspots: Vec::new() }
    }

    fn line(&mut self, a: [f64; 2], b: [f64; 2], label: EdgeLabel) {
        self.pieces.push((Piece::Line { a, b }, label));
    }

    fn extend_reversed(&mut self, chain: Vec<Piece>, label: EdgeLabel) {
        for p in chain.into_iter().rev() {
            self.pieces.push((p.reversed(), label));
        }
    }

    /// Area of the full (unreduced) domain.
    pub(crate) fn full_area(&self) -> f64 {
        let reduced: f64 = self.pieces.iter().map(|(p, _)| p.green_area()).sum();
        let mut factor = 1.0;
        if self.mirror_y {
            factor *= 2.0;
        }
        if self.mirror_x.is_some() {
            factor *= 2.0;
        }
        reduced.abs() * factor
    }
}

const FREE: EdgeLabel = EdgeLabel::Tag(BoundaryTag::Free);

fn positive(name: &str, v: f64, problems: &mut Vec<String>) {
    if !(v.is_finite() && v > 0.0) {
        problems.push(format!("{name} must be positive, got {v:e}"));
    }
}

fn angle(name: &str, v: f64, problems: &mut Vec<String>) {
    if !(v.is_finite() && v > 0.0 && v < FRAC_PI_2) {
        problems.push(format!("{name} must lie in (0, pi/2), got {v}"));
    }
}

impl GeometrySpec {
    pub fn new(shape: Shape, h: f64) -> Self {
        let (refinement, grading) = match shape {
            Shape::Wedge(_) => (40.0, 0.2),
            Shape::Bridge(_) | Shape::Cavity(_) => (8.0, 0.25),
            _ => (1.0, 0.25),
        };
        GeometrySpec { shape, h, refinement, grading }
    }

    /// Local element size at the hot-spots.
    pub fn hot_size(&self) -> f64 {
        self.h / self.refinement
    }

    /// Checks parameter domains, feasibility and resolution.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        positive("h", self.h, &mut problems);
        if !(self.refinement.is_finite() && self.refinement >= 1.0) {
            problems.push(format!("refinement must be >= 1, got {}", self.refinement));
        }
        positive("grading", self.grading, &mut problems);
        match &self.shape {
            Shape::Rectangle { width, height, interfaces, .. } => {
                positive("width", *width, &mut problems);
                positive("height", *height, &mut problems);
                let mut prev = 0.0;
                for &x in interfaces {
                    if !(x > prev && x < *width) {
                        problems.push(format!("interfaces must increase strictly inside (0, width), got {x:e}"));
                    }
                    prev = x;
                }
            }
            Shape::Wedge(w) => {
                angle("half_angle", w.half_angle, &mut problems);
                positive("tip_width", w.tip_width, &mut problems);
                positive("length", w.length, &mut problems);
            }
            Shape::Bridge(b) => {
                positive("d", b.d, &mut problems);
                positive("r_prime", b.r_prime, &mut problems);
                angle("theta", b.theta, &mut problems);
                positive("length", b.length, &mut problems);
            }
            Shape::UnitCell(c) => cell_domains(c, &mut problems),
            Shape::Cavity(c) => {
                positive("d", c.d, &mut problems);
                positive("c", c.c, &mut problems);
                positive("e", c.e, &mut problems);
                positive("r_prime", c.r_prime, &mut problems);
                angle("theta", c.theta, &mut problems);
                cell_domains(&c.mirror, &mut problems);
                if c.mirror_cells == 0 {
                    problems.push("mirror_cells must be at least 1".into());
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidParameter(problems.join("; ")));
        }
        self.check_feasible()?;
        self.check_resolution()
    }

    fn check_feasible(&self) -> Result<()> {
        let fail = |m: String| Err(Error::GeometrySelfIntersection(m));
        match &self.shape {
            Shape::Rectangle { .. } | Shape::Wedge(_) => Ok(()),
            Shape::Bridge(b) => {
                if b.d >= 2.0 * b.r_prime {
                    return fail(format!("d = {:e} must be below 2 r' = {:e}", b.d, 2.0 * b.r_prime));
                }
                if b.length <= b.r_prime * b.theta.sin() {
                    return fail("bridge length ends inside the waist rounding".into());
                }
                Ok(())
            }
            Shape::UnitCell(c) => cell_feasible(c),
            Shape::Cavity(c) => {
                if c.d >= 2.0 * c.r_prime {
                    return fail(format!("d = {:e} must be below 2 r' = {:e}", c.d, 2.0 * c.r_prime));
                }
                cell_feasible(&c.mirror)?;
                let (_, y1) = waist_arc_end(c.d, c.r_prime, c.theta);
                if c.e / 2.0 <= y1 {
                    return fail("pad height e is below the end of the waist rounding".into());
                }
                let m = &c.mirror;
                if c.e / 2.0 < m.b / 2.0 + m.r {
                    return fail("pad height e leaves no room for the fillet R".into());
                }
                if c.e > m.height {
                    return fail("pad height e exceeds the mirror cell height".into());
                }
                Ok(())
            }
        }
    }

    fn check_resolution(&self) -> Result<()> {
        let hot = self.hot_size();
        let mut cold: Vec<(&str, f64)> = Vec::new();
        let mut hot_features: Vec<(&str, f64)> = Vec::new();
        match &self.shape {
            Shape::Rectangle { width, height, .. } => {
                cold.push(("width", *width));
                cold.push(("height", *height));
            }
            Shape::Wedge(w) => {
                hot_features.push(("tip_width", w.tip_width));
                cold.push(("length", w.length));
            }
            Shape::Bridge(b) => {
                hot_features.push(("d", b.d));
                cold.push(("length", b.length));
            }
            Shape::UnitCell(c) => {
                cold.push(("b", c.b));
                cold.push(("mass length a - gap", c.a - c.gap));
            }
            Shape::Cavity(c) => {
                hot_features.push(("d", c.d));
                cold.push(("b", c.mirror.b));
                cold.push(("c", c.c));
                cold.push(("mass length a - gap", c.mirror.a - c.mirror.gap));
            }
        }
        for (name, size) in cold {
            if self.h > size {
                return Err(Error::FeatureUnresolved(format!("h = {:e} exceeds {name} = {size:e}", self.h)));
            }
        }
        for (name, size) in hot_features {
            if hot > size {
                return Err(Error::FeatureUnresolved(format!("h / refinement = {hot:e} exceeds {name} = {size:e}")));
            }
        }
        Ok(())
    }

    /// Area of the exact (curved) outline [m²].
    pub fn analytic_area(&self) -> Result<f64> {
        self.validate()?;
        match &self.shape {
            Shape::Rectangle { width, height, .. } => Ok(width * height),
            _ => Ok(self.outline()?.full_area()),
        }
    }

    pub(crate) fn outline(&self) -> Result<Outline> {
        match &self.shape {
            Shape::Rectangle { .. } => Err(Error::InvalidParameter("rectangles have no outline".into())),
            Shape::Wedge(w) => Ok(wedge_outline(w, self.hot_size())),
            Shape::Bridge(b) => Ok(bridge_outline(b)),
            Shape::UnitCell(c) => Ok(cell_outline(c)),
            Shape::Cavity(c) => Ok(cavity_outline(c)),
        }
    }
}

fn cell_domains(c: &UnitCellParams, problems: &mut Vec<String>) {
    positive("a", c.a, problems);
    positive("b", c.b, problems);
    positive("gap", c.gap, problems);
    positive("height", c.height, problems);
    if !(c.r.is_finite() && c.r >= 0.0) {
        problems.push(format!("r must be non-negative, got {:e}", c.r));
    }
}

fn cell_feasible(c: &UnitCellParams) -> Result<()> {
    let fail = |m: String| Err(Error::GeometrySelfIntersection(m));
    if c.b >= c.a {
        return fail(format!("b = {:e} must be below a = {:e}", c.b, c.a));
    }
    if c.b + 2.0 * c.r >= c.height {
        return fail(format!("b + 2r = {:e} must be below the cell height {:e}", c.b + 2.0 * c.r, c.height));
    }
    if c.gap >= c.a {
        return fail(format!("gap = {:e} must be below a = {:e}", c.gap, c.a));
    }
    if c.gap < 2.0 * c.r {
        return fail(format!("gap = {:e} cannot hold two fillets of radius {:e}", c.gap, c.r));
    }
    Ok(())
}

/// End point of the waist rounding, where the straight taper begins.
pub(crate) fn waist_arc_end(d: f64, r: f64, theta: f64) -> (f64, f64) {
    (r * theta.sin(), d / 2.0 + r * (1.0 - theta.cos()))
}

/// Upper profile from (0, d/2) through the waist rounding to the taper start.
fn waist_arc(d: f64, r: f64, theta: f64) -> Piece {
    Piece::Arc { center: [0.0, d / 2.0 + r], radius: r, start: -FRAC_PI_2, end: -FRAC_PI_2 + theta }
}

fn wedge_outline(w: &WedgeParams, hot: f64) -> Outline {
    let half_tip = w.tip_width / 2.0;
    let top = half_tip + w.length * w.half_angle.tan();
    let mut o = Outline::new(true, None);
    o.line([0.0, 0.0], [w.length, 0.0], EdgeLabel::SeamY);
    o.line([w.length, 0.0], [w.length, top], EdgeLabel::Tag(BoundaryTag::Clamped));
    o.line([w.length, top], [0.0, half_tip], FREE);
    o.line([0.0, half_tip], [0.0, 0.0], EdgeLabel::Tag(BoundaryTag::Load));
    o.hotspots.push(([0.0, 0.0], [0.0, half_tip.max(hot)]));
    o
}

fn bridge_outline(b: &BridgeParams) -> Outline {
    let (x1, y1) = waist_arc_end(b.d, b.r_prime, b.theta);
    let y_end = y1 + (b.length - x1) * b.theta.tan();
    let mut o = Outline::new(true, Some(0.0));
    o.line([0.0, 0.0], [b.length, 0.0], EdgeLabel::SeamY);
    o.line([b.length, 0.0], [b.length, y_end], EdgeLabel::Tag(BoundaryTag::Clamped));
    let chain = vec![waist_arc(b.d, b.r_prime, b.theta), Piece::Line { a: [x1, y1], b: [b.length, y_end] }];
    o.extend_reversed(chain, FREE);
    o.line([0.0, b.d / 2.0], [0.0, 0.0], EdgeLabel::SeamX);
    o.hotspots.push(([0.0, 0.0], [0.0, b.d / 2.0]));
    o
}

/// Upper boundary of one full cell starting mid-bridge at x0, left to right.
fn cell_top(c: &UnitCellParams, x0: f64) -> Vec<Piece> {
    let (hb, hh, r) = (c.b / 2.0, c.height / 2.0, c.r);
    let xl = x0 + c.gap / 2.0;
    let xr = x0 + c.a - c.gap / 2.0;
    let mut out = Vec::new();
    push_line(&mut out, [x0, hb], [xl - r, hb]);
    if r > 0.0 {
        out.push(Piece::Arc { center: [xl - r, hb + r], radius: r, start: -FRAC_PI_2, end: 0.0 });
    }
    out.push(Piece::Line { a: [xl, hb + r], b: [xl, hh] });
    out.push(Piece::Line { a: [xl, hh], b: [xr, hh] });
    out.push(Piece::Line { a: [xr, hh], b: [xr, hb + r] });
    if r > 0.0 {
        out.push(Piece::Arc { center: [xr + r, hb + r], radius: r, start: PI, end: 1.5 * PI });
    }
    push_line(&mut out, [xr + r, hb], [x0 + c.a, hb]);
    out
}

fn push_line(out: &mut Vec<Piece>, a: [f64; 2], b: [f64; 2]) {
    if (b[0] - a[0]).abs() + (b[1] - a[1]).abs() > 0.0 {
        out.push(Piece::Line { a, b });
    }
}

fn cell_outline(c: &UnitCellParams) -> Outline {
    let half = c.a / 2.0;
    let (hb, hh) = (c.b / 2.0, c.height / 2.0);
    // left half of the cell top, up to the mass midline
    let chain: Vec<Piece> = cell_top(c, 0.0)
        .into_iter()
        .take_while(|p| p.start()[0] < half)
        .map(|p| match p {
            Piece::Line { a, b } if b[0] > half => Piece::Line { a, b: [half, b[1]] },
            other => other,
        })
        .collect();
    let mut o = Outline::new(true, Some(half));
    o.line([0.0, 0.0], [half, 0.0], EdgeLabel::SeamY);
    o.line([half, 0.0], [half, hh], EdgeLabel::SeamX);
    o.extend_reversed(chain, FREE);
    o.line([0.0, hb], [0.0, 0.0], EdgeLabel::Tag(BoundaryTag::PeriodicLeft));
    o
}

fn cavity_outline(c: &CavityParams) -> Outline {
    let m = &c.mirror;
    let (x1, y1) = waist_arc_end(c.d, c.r_prime, c.theta);
    let he = c.e / 2.0;
    let CavityLayout { taper_end: xt, pad_end: xp, first_cell: x0, end: x_end } = c.layout();
    let hb = m.b / 2.0;

    let mut chain = vec![waist_arc(c.d, c.r_prime, c.theta), Piece::Line { a: [x1, y1], b: [xt, he] }];
    chain.push(Piece::Line { a: [xt, he], b: [xp, he] });
    chain.push(Piece::Line { a: [xp, he], b: [xp, hb + m.r] });
    if m.r > 0.0 {
        chain.push(Piece::Arc { center: [xp + m.r, hb + m.r], radius: m.r, start: PI, end: 1.5 * PI });
    }
    push_line(&mut chain, [xp + m.r, hb], [x0, hb]);
    for j in 0..c.mirror_cells {
        chain.extend(cell_top(m, x0 + m.a * j as f64));
    }

    let end_tag = match c.termination {
        Termination::Free => BoundaryTag::Free,
        Termination::Clamped => BoundaryTag::Clamped,
    };
    let mut o = Outline::new(true, Some(0.0));
    o.line([0.0, 0.0], [x_end, 0.0], EdgeLabel::SeamY);
    o.line([x_end, 0.0], [x_end, hb], EdgeLabel::Tag(end_tag));
    o.extend_reversed(chain, FREE);
    o.line([0.0, c.d / 2.0], [0.0, 0.0], EdgeLabel::SeamX);
    o.hotspots.push(([0.0, 0.0], [0.0, c.d / 2.0]));
    o
}
