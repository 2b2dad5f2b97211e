//! Line-oriented text format.
//!
//! ```text
//! v <X> <Y>
//! t <i> <j> <k> [region]
//! b <i> <j> <tag>
//! p <left> <right>
//! ```
//! Records appear in the order v, t, b, p; `#` starts a comment. Floats are
//! written in shortest round-trip form so that a reload is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{BoundaryEdge, BoundaryTag, Mesh};
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &Mesh, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# phonocav mesh: {} nodes, {} elements", mesh.node_count(), mesh.element_count())?;
    for p in mesh.nodes() {
        writeln!(w, "v {:e} {:e}", p[0], p[1])?;
    }
    for (tri, &region) in mesh.elements().iter().zip(mesh.regions()) {
        if region == 0 {
            writeln!(w, "t {} {} {}", tri[0], tri[1], tri[2])?;
        } else {
            writeln!(w, "t {} {} {} {}", tri[0], tri[1], tri[2], region)?;
        }
    }
    for e in mesh.boundary() {
        writeln!(w, "b {} {} {}", e.nodes[0], e.nodes[1], e.tag)?;
    }
    for &(l, r) in mesh.periodic_pairs() {
        writeln!(w, "p {l} {r}")?;
    }
    w.flush()
}

pub fn save(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_mesh(mesh, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_mesh(BufReader::new(file))
}

pub fn read_mesh<R: Read>(r: R) -> Result<Mesh> {
    let mut nodes = Vec::new();
    let mut elements = Vec::new();
    let mut regions = Vec::new();
    let mut boundary = Vec::new();
    let mut pairs = Vec::new();
    let mut stage = 0u8;
    let mut last_line = 0;
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: lineno, message };
        let mut fields = content.split_whitespace();
        let kind = fields.next().unwrap_or_default();
        let rest: Vec<&str> = fields.collect();
        let order = match kind {
            "v" => 0,
            "t" => 1,
            "b" => 2,
            "p" => 3,
            other => return Err(err(format!("unknown record `{other}`"))),
        };
        if order < stage {
            return Err(err(format!("`{kind}` record out of order")));
        }
        stage = order;
        let index = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad index `{s}`")));
        match (kind, rest.len()) {
            ("v", 2) => {
                let mut p = [0.0; 2];
                for (k, s) in rest.iter().enumerate() {
                    p[k] = s.parse::<f64>().map_err(|_| err(format!("bad coordinate `{s}`")))?;
                }
                nodes.push(p);
            }
            ("t", 3 | 4) => {
                elements.push([index(rest[0])?, index(rest[1])?, index(rest[2])?]);
                let region = match rest.get(3) {
                    Some(s) => s.parse::<u32>().map_err(|_| err(format!("bad region `{s}`")))?,
                    None => 0,
                };
                regions.push(region);
            }
            ("b", 3) => {
                let tag: BoundaryTag = rest[2].parse().map_err(err)?;
                boundary.push(BoundaryEdge { nodes: [index(rest[0])?, index(rest[1])?], tag });
            }
            ("p", 2) => pairs.push((index(rest[0])?, index(rest[1])?)),
            _ => return Err(err(format!("wrong field count for `{kind}` record"))),
        }
    }
    if nodes.is_empty() {
        return Err(Error::Parse { line: last_line.max(1), message: "no nodes in mesh file".into() });
    }
    if elements.is_empty() {
        return Err(Error::Parse { line: last_line.max(1), message: "no elements in mesh file".into() });
    }
    Mesh::new(nodes, elements, regions, boundary, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str =
        "v 0 0\nv 1 0\nv 1 1\nv 0 1\nt 0 1 2\nt 0 2 3\nb 0 1 free\nb 1 2 load\nb 2 3 free\nb 3 0 clamped\n";

    #[test]
    fn parses_square() {
        let m = read_mesh(SQUARE.as_bytes()).unwrap();
        assert_eq!(m.element_count(), 2);
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        assert_eq!(read_mesh(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn empty_file_fails_at_line_one() {
        match read_mesh("".as_bytes()) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_token_reports_line() {
        let text = SQUARE.replace("v 1 1", "v 1 x");
        match read_mesh(text.as_bytes()) {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_triangle_names_element() {
        let text = SQUARE.replace("t 0 2 3", "t 0 2 2");
        let err = read_mesh(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
        assert!(err.to_string().contains("element 1"), "{err}");
    }

    #[test]
    fn out_of_order_records_rejected() {
        let text = format!("t 0 1 2\n{SQUARE}");
        assert!(matches!(read_mesh(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }
}
