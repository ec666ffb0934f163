use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{MeshError, MeshTopology};
use crate::geom::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Gmsh22,
    NodeEle,
    Native,
}

impl MeshFormat {
    /// Guess from the file extension: `.msh`, `.node`/`.ele`, anything else native.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("msh") => Self::Gmsh22,
            Some("node") | Some("ele") => Self::NodeEle,
            _ => Self::Native,
        }
    }
}

impl FromStr for MeshFormat {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gmsh" | "gmsh22" | "gmsh22-ascii" | "msh" => Ok(Self::Gmsh22),
            "node-ele" | "tetgen" | "triangle" => Ok(Self::NodeEle),
            "native" => Ok(Self::Native),
            other => Err(MeshError::InvalidParameter(format!("unknown mesh format '{other}'"))),
        }
    }
}

fn read(path: &Path) -> Result<String, MeshError> {
    std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<MeshTopology, MeshError> {
    match format {
        MeshFormat::Gmsh22 => parse_gmsh22(&read(path)?),
        MeshFormat::Native => parse_native(&read(path)?),
        MeshFormat::NodeEle => {
            let node: PathBuf = path.with_extension("node");
            let ele: PathBuf = path.with_extension("ele");
            parse_node_ele(&read(&node)?, &read(&ele)?)
        }
    }
}

fn perr(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

/// Non-empty, non-comment lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_num<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("invalid {what} '{tok}'")))
}

fn parse_point<'a>(toks: &mut impl Iterator<Item = &'a str>, n: usize, line: usize) -> Result<Point, MeshError> {
    let mut p = [0.0; 3];
    for c in p.iter_mut().take(n) {
        *c = parse_num(toks.next(), line, "coordinate")?;
    }
    Ok(p)
}

pub fn parse_native(text: &str) -> Result<MeshTopology, MeshError> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let mut t = header.split_whitespace();
    let dim: usize = parse_num(t.next(), ln, "dimension")?;
    let nv: usize = parse_num(t.next(), ln, "vertex count")?;
    let ne: usize = parse_num(t.next(), ln, "element count")?;
    if dim != 2 && dim != 3 {
        return Err(MeshError::Dimension(dim));
    }
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "unexpected end of vertex list"))?;
        let mut t = l.split_whitespace();
        vertices.push(parse_point(&mut t, dim, ln)?);
        if t.next().is_some() {
            return Err(perr(ln, "too many coordinates"));
        }
    }
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "unexpected end of element list"))?;
        let el = l
            .split_whitespace()
            .map(|tok| parse_num::<usize>(Some(tok), ln, "vertex index"))
            .collect::<Result<Vec<_>, _>>()?;
        elements.push(el);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(perr(ln, "trailing data after element list"));
    }
    MeshTopology::new(dim, vertices, elements)
}

pub fn write_native(mesh: &MeshTopology) -> String {
    let dim = mesh.dim();
    let mut s = format!("{} {} {}\n", dim, mesh.n_vertices(), mesh.n_elements());
    for p in mesh.vertices() {
        let coords: Vec<String> = p[..dim].iter().map(|c| format!("{c:?}")).collect();
        s.push_str(&coords.join(" "));
        s.push('\n');
    }
    for el in mesh.elements() {
        let ids: Vec<String> = el.iter().map(|v| v.to_string()).collect();
        s.push_str(&ids.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse_gmsh22(text: &str) -> Result<MeshTopology, MeshError> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).collect();
    let mut pos = 0;
    let mut node_ids: HashMap<usize, usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut tris: Vec<Vec<usize>> = Vec::new();
    let mut tets: Vec<Vec<usize>> = Vec::new();
    let mut raw_elements: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut saw_nodes = false;
    let next = |pos: &mut usize, what: &str| -> Result<(usize, &str), MeshError> {
        let ln = lines.get(*pos).map(|l| l.0).unwrap_or(lines.len());
        let r = lines
            .get(*pos)
            .copied()
            .ok_or_else(|| perr(ln, format!("unexpected end of file in {what}")));
        *pos += 1;
        r
    };
    while pos < lines.len() {
        let (ln, l) = lines[pos];
        pos += 1;
        match l {
            "" => {}
            "$MeshFormat" => {
                let (ln, v) = next(&mut pos, "$MeshFormat")?;
                let mut t = v.split_whitespace();
                let version: f64 = parse_num(t.next(), ln, "format version")?;
                let ftype: u32 = parse_num(t.next(), ln, "file type")?;
                if !(2.0..3.0).contains(&version) {
                    return Err(perr(ln, format!("unsupported MSH version {version}")));
                }
                if ftype != 0 {
                    return Err(perr(ln, "binary MSH files are not supported"));
                }
                let (ln, end) = next(&mut pos, "$MeshFormat")?;
                if end != "$EndMeshFormat" {
                    return Err(perr(ln, "expected $EndMeshFormat"));
                }
            }
            "$Nodes" => {
                saw_nodes = true;
                let (ln, c) = next(&mut pos, "$Nodes")?;
                let n: usize = parse_num(Some(c), ln, "node count")?;
                for _ in 0..n {
                    let (ln, l) = next(&mut pos, "$Nodes")?;
                    let mut t = l.split_whitespace();
                    let id: usize = parse_num(t.next(), ln, "node id")?;
                    let p = parse_point(&mut t, 3, ln)?;
                    if node_ids.insert(id, vertices.len()).is_some() {
                        return Err(perr(ln, format!("duplicate node id {id}")));
                    }
                    vertices.push(p);
                }
                let (ln, end) = next(&mut pos, "$Nodes")?;
                if end != "$EndNodes" {
                    return Err(perr(ln, "expected $EndNodes"));
                }
            }
            "$Elements" => {
                let (ln, c) = next(&mut pos, "$Elements")?;
                let n: usize = parse_num(Some(c), ln, "element count")?;
                for _ in 0..n {
                    let (ln, l) = next(&mut pos, "$Elements")?;
                    let mut t = l.split_whitespace();
                    let _id: usize = parse_num(t.next(), ln, "element id")?;
                    let kind: u32 = parse_num(t.next(), ln, "element type")?;
                    let ntags: usize = parse_num(t.next(), ln, "tag count")?;
                    for _ in 0..ntags {
                        let _: i64 = parse_num(t.next(), ln, "tag")?;
                    }
                    let nodes = match kind {
                        1 | 15 => continue,
                        2 => 3,
                        3 | 4 => 4,
                        other => {
                            return Err(MeshError::UnsupportedElement {
                                line: ln,
                                kind: format!("gmsh type {other}"),
                            })
                        }
                    };
                    let mut el = Vec::with_capacity(nodes);
                    for _ in 0..nodes {
                        el.push(parse_num::<usize>(t.next(), ln, "node reference")?);
                    }
                    if t.next().is_some() {
                        return Err(perr(ln, "too many node references"));
                    }
                    raw_elements.push((ln, el.clone()));
                    if kind == 4 {
                        tets.push(el);
                    } else {
                        tris.push(el);
                    }
                }
                let (ln, end) = next(&mut pos, "$Elements")?;
                if end != "$EndElements" {
                    return Err(perr(ln, "expected $EndElements"));
                }
            }
            s if s.starts_with('$') && !s.starts_with("$End") => {
                // skip unknown sections
                let end = format!("$End{}", &s[1..]);
                while pos < lines.len() && lines[pos].1 != end {
                    pos += 1;
                }
                if pos == lines.len() {
                    return Err(perr(ln, format!("section {s} is not terminated")));
                }
                pos += 1;
            }
            other => return Err(perr(ln, format!("unexpected line '{other}'"))),
        }
    }
    if !saw_nodes {
        return Err(perr(lines.len().max(1), "missing $Nodes section"));
    }
    let (dim, chosen) = if tets.is_empty() { (2, tris) } else { (3, tets) };
    let mut elements = Vec::with_capacity(chosen.len());
    for el in chosen {
        let mapped = el
            .iter()
            .map(|id| {
                node_ids.get(id).copied().ok_or_else(|| {
                    let ln = raw_elements.iter().find(|(_, e)| e == &el).map(|x| x.0).unwrap_or(0);
                    perr(ln, format!("unknown node id {id}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        elements.push(mapped);
    }
    if dim == 2 {
        if let Some(p) = vertices.iter().find(|p| p[2] != 0.0) {
            return Err(MeshError::InvalidParameter(format!(
                "2D mesh has a vertex off the z = 0 plane: {p:?}"
            )));
        }
    }
    MeshTopology::new(dim, vertices, elements)
}

pub fn write_gmsh22(mesh: &MeshTopology) -> String {
    let mut s = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.n_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} {:?}", i + 1, p[0], p[1], p[2]);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.n_elements());
    for (k, el) in mesh.elements().enumerate() {
        let kind = match (mesh.dim(), el.len()) {
            (3, _) => 4,
            (_, 3) => 2,
            _ => 3,
        };
        let ids: Vec<String> = el.iter().map(|v| (v + 1).to_string()).collect();
        let _ = writeln!(s, "{} {} 2 0 0 {}", k + 1, kind, ids.join(" "));
    }
    s.push_str("$EndElements\n");
    s
}

/// Triangle/TetGen `.node` + `.ele` pair. Index base (0 or 1) follows the
/// first node id.
pub fn parse_node_ele(node: &str, ele: &str) -> Result<MeshTopology, MeshError> {
    let mut lines = content_lines(node);
    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty .node file"))?;
    let mut t = header.split_whitespace();
    let nv: usize = parse_num(t.next(), ln, "vertex count")?;
    let dim: usize = parse_num(t.next(), ln, "dimension")?;
    if dim != 2 && dim != 3 {
        return Err(MeshError::Dimension(dim));
    }
    let mut ids = HashMap::with_capacity(nv);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "unexpected end of .node file"))?;
        let mut t = l.split_whitespace();
        let id: usize = parse_num(t.next(), ln, "vertex id")?;
        ids.insert(id, vertices.len());
        vertices.push(parse_point(&mut t, dim, ln)?);
    }
    let mut lines = content_lines(ele);
    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty .ele file"))?;
    let mut t = header.split_whitespace();
    let ne: usize = parse_num(t.next(), ln, "element count")?;
    let per: usize = parse_num(t.next(), ln, "nodes per element")?;
    let expected = if dim == 2 { 3 } else { 4 };
    if per != expected {
        return Err(MeshError::UnsupportedElement {
            line: ln,
            kind: format!("{per}-node element in a {dim}D .ele file"),
        });
    }
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "unexpected end of .ele file"))?;
        let mut t = l.split_whitespace();
        let _id: usize = parse_num(t.next(), ln, "element id")?;
        let mut el = Vec::with_capacity(per);
        for _ in 0..per {
            let id: usize = parse_num(t.next(), ln, "vertex reference")?;
            el.push(
                *ids.get(&id)
                    .ok_or_else(|| perr(ln, format!("unknown vertex id {id}")))?,
            );
        }
        elements.push(el);
    }
    MeshTopology::new(dim, vertices, elements)
}
