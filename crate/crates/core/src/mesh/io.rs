//! Line-oriented mesh text format.
//!
//! ```text
//! # comment
//! dim 2
//! node <id> <x> <y> [<z>]
//! region <name> <solid|third_medium>
//! element <id> <T1|Q1|H1> <region> <n0> <n1> ...
//! nodeset <name> <id...>
//! mirror <x|y|z> <coordinate>
//! ```
//!
//! `mirror` declares a symmetry plane of a partial model; it only affects
//! the domain extent.

use std::io::{BufRead, Write};

use super::{Element, ElementKind, Mesh, MirrorPlane, NodeSet, Region, RegionRole};
use crate::error::MeshError;

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

pub fn load_mesh(reader: impl BufRead) -> Result<Mesh, MeshError> {
    let mut dim = None;
    let mut nodes: Vec<Option<[f64; 3]>> = Vec::new();
    let mut regions: Vec<Region> = Vec::new();
    let mut elements: Vec<(usize, Element)> = Vec::new();
    let mut node_sets: Vec<(usize, NodeSet)> = Vec::new();
    let mut mirrors = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let keyword = toks.next().unwrap_or_default();
        match keyword {
            "dim" => {
                let d: usize = num(toks.next(), lineno, "dimension")?;
                if d != 2 && d != 3 {
                    return Err(parse_err(lineno, format!("dimension must be 2 or 3, got {d}")));
                }
                if dim.is_some() {
                    return Err(parse_err(lineno, "duplicate dim header"));
                }
                dim = Some(d);
            }
            "node" => {
                let d = dim.ok_or_else(|| parse_err(lineno, "node before dim header"))?;
                let id: usize = num(toks.next(), lineno, "node id")?;
                let mut x = [0.0; 3];
                for (a, slot) in x.iter_mut().enumerate().take(d) {
                    *slot = num(toks.next(), lineno, &format!("coordinate {a}"))?;
                }
                if toks.next().is_some() {
                    return Err(parse_err(lineno, "too many coordinates"));
                }
                if id >= nodes.len() {
                    nodes.resize(id + 1, None);
                }
                if nodes[id].replace(x).is_some() {
                    return Err(parse_err(lineno, format!("duplicate node {id}")));
                }
            }
            "region" => {
                let name = toks.next().ok_or_else(|| parse_err(lineno, "missing region name"))?;
                let role = match toks.next() {
                    Some("solid") => RegionRole::Solid,
                    Some("third_medium") => RegionRole::ThirdMedium,
                    other => return Err(parse_err(lineno, format!("unknown region role {other:?}"))),
                };
                if regions.iter().any(|r| r.name == name) {
                    return Err(parse_err(lineno, format!("duplicate region '{name}'")));
                }
                regions.push(Region {
                    name: name.to_string(),
                    role,
                });
            }
            "element" => {
                let id: usize = num(toks.next(), lineno, "element id")?;
                let kind_tok = toks.next().ok_or_else(|| parse_err(lineno, "missing element kind"))?;
                let kind = ElementKind::parse(kind_tok)
                    .ok_or_else(|| parse_err(lineno, format!("unknown element kind '{kind_tok}'")))?;
                let region_name = toks.next().ok_or_else(|| parse_err(lineno, "missing region"))?;
                let region = regions
                    .iter()
                    .position(|r| r.name == region_name)
                    .ok_or_else(|| parse_err(lineno, format!("undeclared region '{region_name}'")))?;
                let conn = toks
                    .map(|t| num::<usize>(Some(t), lineno, "node index"))
                    .collect::<Result<Vec<_>, _>>()?;
                if conn.len() != kind.nodes() {
                    return Err(parse_err(
                        lineno,
                        format!("{} expects {} nodes, got {}", kind.name(), kind.nodes(), conn.len()),
                    ));
                }
                elements.push((
                    lineno,
                    Element {
                        id,
                        kind,
                        nodes: conn,
                        region,
                    },
                ));
            }
            "nodeset" => {
                let name = toks.next().ok_or_else(|| parse_err(lineno, "missing node set name"))?;
                let ids = toks
                    .map(|t| num::<usize>(Some(t), lineno, "node index"))
                    .collect::<Result<Vec<_>, _>>()?;
                node_sets.push((
                    lineno,
                    NodeSet {
                        name: name.to_string(),
                        nodes: ids,
                    },
                ));
            }
            "mirror" => {
                let axis = match toks.next() {
                    Some("x") => 0,
                    Some("y") => 1,
                    Some("z") => 2,
                    other => return Err(parse_err(lineno, format!("unknown mirror axis {other:?}"))),
                };
                let coordinate = num(toks.next(), lineno, "mirror coordinate")?;
                mirrors.push(MirrorPlane { axis, coordinate });
            }
            other => return Err(parse_err(lineno, format!("unknown keyword '{other}'"))),
        }
    }

    let dim = dim.ok_or_else(|| parse_err(0, "missing dim header"))?;
    let nodes = nodes
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.ok_or_else(|| MeshError::Invalid(format!("node ids are not dense: {i} missing"))))
        .collect::<Result<Vec<_>, _>>()?;

    elements.sort_by_key(|(_, e)| e.id);
    for (i, (line, e)) in elements.iter().enumerate() {
        if e.id != i {
            return Err(parse_err(*line, format!("element ids are not dense: expected {i}, got {}", e.id)));
        }
        if e.kind.dim() != dim {
            return Err(parse_err(*line, format!("{} element in a {dim}D mesh", e.kind.name())));
        }
        if let Some(&bad) = e.nodes.iter().find(|&&n| n >= nodes.len()) {
            return Err(MeshError::UndefinedNode {
                line: *line,
                element: e.id,
                node: bad,
            });
        }
    }
    for (line, s) in &node_sets {
        if let Some(&bad) = s.nodes.iter().find(|&&n| n >= nodes.len()) {
            return Err(parse_err(*line, format!("node set '{}' references undefined node {bad}", s.name)));
        }
    }

    let mesh = Mesh {
        dim,
        nodes,
        elements: elements.into_iter().map(|(_, e)| e).collect(),
        regions,
        node_sets: node_sets.into_iter().map(|(_, s)| s).collect(),
        mirrors,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Writes the mesh so that [`load_mesh`] reproduces it exactly; coordinates
/// use the shortest round-trip decimal form.
pub fn write_mesh(mesh: &Mesh, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "# tmc mesh")?;
    writeln!(w, "dim {}", mesh.dim)?;
    for m in &mesh.mirrors {
        writeln!(w, "mirror {} {}", ["x", "y", "z"][m.axis], m.coordinate)?;
    }
    for r in &mesh.regions {
        writeln!(w, "region {} {}", r.name, r.role.name())?;
    }
    for (i, x) in mesh.nodes.iter().enumerate() {
        write!(w, "node {i}")?;
        for c in &x[..mesh.dim] {
            write!(w, " {c}")?;
        }
        writeln!(w)?;
    }
    for e in &mesh.elements {
        write!(w, "element {} {} {}", e.id, e.kind.name(), mesh.regions[e.region].name)?;
        for n in &e.nodes {
            write!(w, " {n}")?;
        }
        writeln!(w)?;
    }
    for s in &mesh.node_sets {
        write!(w, "nodeset {}", s.name)?;
        for n in &s.nodes {
            write!(w, " {n}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# one triangle
dim 2
node 0 0 0
node 1 1 0
node 2 0 1
region body solid
element 0 T1 body 0 1 2
";

    #[test]
    fn minimal_file() {
        let m = load_mesh(MINIMAL.as_bytes()).unwrap();
        assert_eq!(m.elements.len(), 1);
        assert_eq!(m.nodes.len(), 3);
        assert_eq!(m.regions[0].role, RegionRole::Solid);
    }

    #[test]
    fn undefined_node_is_reported_with_line() {
        let text = MINIMAL.replace("element 0 T1 body 0 1 2", "element 0 T1 body 0 1 99");
        let err = load_mesh(text.as_bytes()).unwrap_err();
        assert_eq!(
            err,
            MeshError::UndefinedNode {
                line: 7,
                element: 0,
                node: 99
            }
        );
        assert!(err.to_string().contains("undefined node"));
    }

    #[test]
    fn clockwise_element_is_rejected() {
        let text = MINIMAL.replace("element 0 T1 body 0 1 2", "element 0 T1 body 0 2 1");
        assert!(matches!(
            load_mesh(text.as_bytes()),
            Err(MeshError::NegativeJacobian { element: 0, .. })
        ));
    }

    #[test]
    fn malformed_lines() {
        let bad = MINIMAL.replace("node 1 1 0", "node 1 one 0");
        assert!(matches!(load_mesh(bad.as_bytes()), Err(MeshError::Parse { line: 4, .. })));
        let bad = format!("{MINIMAL}bogus 1 2\n");
        assert!(matches!(load_mesh(bad.as_bytes()), Err(MeshError::Parse { line: 8, .. })));
        let bad = MINIMAL.replace("element 0 T1 body 0 1 2", "element 0 Q1 body 0 1 2");
        assert!(matches!(load_mesh(bad.as_bytes()), Err(MeshError::Parse { line: 7, .. })));
        let bad = MINIMAL.replace("dim 2\n", "");
        assert!(load_mesh(bad.as_bytes()).is_err());
    }
}
