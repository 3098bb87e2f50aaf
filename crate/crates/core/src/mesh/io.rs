//! OBJ and PLY readers, PLY writers for decorated meshes, field previews
//! and polyline overlays.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Point;

use super::TriMesh;

/// Loads an OBJ or PLY file (dispatching on the extension).
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let (positions, triangles) = match ext.as_str() {
        "obj" => parse_obj(std::str::from_utf8(&bytes).map_err(|_| parse_err(0, "OBJ is not UTF-8"))?)?,
        "ply" => parse_ply(&bytes)?,
        other => return Err(Error::InvalidParameter(format!("unsupported mesh extension `{other}`"))),
    };
    TriMesh::new(positions, triangles)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn fan_triangulate(poly: &[u32], out: &mut Vec<[u32; 3]>) {
    for k in 1..poly.len().saturating_sub(1) {
        out.push([poly[0], poly[k], poly[k + 1]]);
    }
}

pub fn parse_obj(text: &str) -> Result<(Vec<Point>, Vec<[u32; 3]>)> {
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for x in &mut c {
                    *x = tok
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err(lineno, "bad vertex"))?;
                }
                positions.push(Point::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for t in tok {
                    let idx = t.split('/').next().unwrap_or_default();
                    let k: i64 = idx.parse().map_err(|_| parse_err(lineno, format!("bad face index `{t}`")))?;
                    let resolved = if k < 0 { positions.len() as i64 + k } else { k - 1 };
                    if resolved < 0 {
                        return Err(parse_err(lineno, "face index out of range"));
                    }
                    poly.push(resolved as u32);
                }
                if poly.len() < 3 {
                    return Err(parse_err(lineno, "face with fewer than 3 vertices"));
                }
                fan_triangulate(&poly, &mut triangles);
            }
            _ => {}
        }
    }
    Ok((positions, triangles))
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

pub fn parse_ply(bytes: &[u8]) -> Result<(Vec<Point>, Vec<[u32; 3]>)> {
    let header_end = find_subslice(bytes, b"end_header")
        .ok_or_else(|| parse_err(0, "missing end_header"))?;
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|_| parse_err(0, "header is not UTF-8"))?;
    let mut body_start = header_end + b"end_header".len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }
    let mut lines = header.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(1, "missing ply magic")),
    }
    let mut binary = false;
    let mut elements: Vec<Element> = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["format", "ascii", _] => binary = false,
            ["format", "binary_little_endian", _] => binary = true,
            ["format", other, _] => return Err(parse_err(lineno, format!("unsupported format {other}"))),
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| parse_err(lineno, "bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, name] => {
                let el = elements.last_mut().ok_or_else(|| parse_err(lineno, "property before element"))?;
                let ct = Scalar::parse(ct).ok_or_else(|| parse_err(lineno, "bad list count type"))?;
                let it = Scalar::parse(it).ok_or_else(|| parse_err(lineno, "bad list item type"))?;
                el.props.push(Property::List(name.to_string(), ct, it));
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or_else(|| parse_err(lineno, "property before element"))?;
                let ty = Scalar::parse(ty).ok_or_else(|| parse_err(lineno, "bad property type"))?;
                el.props.push(Property::Scalar(name.to_string(), ty));
            }
            _ => {}
        }
    }
    let body = &bytes[body_start..];
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    if binary {
        let mut off = 0usize;
        let take = |off: &mut usize, n: usize| -> Result<&[u8]> {
            let s = body.get(*off..*off + n).ok_or_else(|| parse_err(0, "truncated binary body"))?;
            *off += n;
            Ok(s)
        };
        for el in &elements {
            for _ in 0..el.count {
                let mut xyz = [0.0; 3];
                let mut poly: Vec<u32> = Vec::new();
                for p in &el.props {
                    match p {
                        Property::Scalar(name, ty) => {
                            let v = ty.read_le(take(&mut off, ty.size())?);
                            set_coord(name, v, &mut xyz);
                        }
                        Property::List(name, ct, it) => {
                            let n = ct.read_le(take(&mut off, ct.size())?) as usize;
                            for _ in 0..n {
                                let v = it.read_le(take(&mut off, it.size())?);
                                if is_index_list(name) {
                                    poly.push(v as u32);
                                }
                            }
                        }
                    }
                }
                collect(el, xyz, &poly, &mut positions, &mut triangles, 0)?;
            }
        }
    } else {
        let text = std::str::from_utf8(body).map_err(|_| parse_err(0, "ascii body is not UTF-8"))?;
        let header_lines = header.lines().count() + 1;
        let mut rows = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        for el in &elements {
            for _ in 0..el.count {
                let (i, row) = rows.next().ok_or_else(|| parse_err(0, "truncated ascii body"))?;
                let lineno = header_lines + i + 1;
                let mut vals = row.split_whitespace().map(|s| {
                    s.parse::<f64>().map_err(|_| parse_err(lineno, format!("bad number `{s}`")))
                });
                let mut next = || vals.next().unwrap_or_else(|| Err(parse_err(lineno, "missing value")));
                let mut xyz = [0.0; 3];
                let mut poly = Vec::new();
                for p in &el.props {
                    match p {
                        Property::Scalar(name, _) => set_coord(name, next()?, &mut xyz),
                        Property::List(name, _, _) => {
                            let n = next()? as usize;
                            for _ in 0..n {
                                let v = next()?;
                                if is_index_list(name) {
                                    poly.push(v as u32);
                                }
                            }
                        }
                    }
                }
                collect(el, xyz, &poly, &mut positions, &mut triangles, lineno)?;
            }
        }
    }
    Ok((positions, triangles))
}

fn is_index_list(name: &str) -> bool {
    name == "vertex_indices" || name == "vertex_index"
}

fn set_coord(name: &str, v: f64, xyz: &mut [f64; 3]) {
    match name {
        "x" => xyz[0] = v,
        "y" => xyz[1] = v,
        "z" => xyz[2] = v,
        _ => {}
    }
}

fn collect(
    el: &Element,
    xyz: [f64; 3],
    poly: &[u32],
    positions: &mut Vec<Point>,
    triangles: &mut Vec<[u32; 3]>,
    line: usize,
) -> Result<()> {
    match el.name.as_str() {
        "vertex" => positions.push(Point::new(xyz[0], xyz[1], xyz[2])),
        "face" => {
            if poly.len() < 3 {
                return Err(parse_err(line, "face with fewer than 3 vertices"));
            }
            fan_triangulate(poly, triangles);
        }
        _ => {}
    }
    Ok(())
}

fn find_subslice(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

/// Binary little-endian PLY with per-vertex position and normal, an optional
/// per-vertex `field` scalar, and an optional per-face `region` label.
pub fn write_ply(
    path: impl AsRef<Path>,
    mesh: &TriMesh,
    regions: Option<&[u32]>,
    field: Option<&[f64]>,
) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_ply_to(&mut w, mesh, regions, field)?;
    w.flush()?;
    Ok(())
}

pub fn write_ply_to(
    w: &mut impl Write,
    mesh: &TriMesh,
    regions: Option<&[u32]>,
    field: Option<&[f64]>,
) -> Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format binary_little_endian 1.0")?;
    writeln!(w, "element vertex {}", mesh.vertex_count())?;
    for p in ["x", "y", "z", "nx", "ny", "nz"] {
        writeln!(w, "property float {p}")?;
    }
    if field.is_some() {
        writeln!(w, "property float field")?;
    }
    writeln!(w, "element face {}", mesh.face_count())?;
    writeln!(w, "property list uchar uint vertex_indices")?;
    if regions.is_some() {
        writeln!(w, "property uint region")?;
    }
    writeln!(w, "end_header")?;
    for (v, (p, n)) in mesh.positions().iter().zip(mesh.normals()).enumerate() {
        for c in [p.x, p.y, p.z, n.x, n.y, n.z] {
            w.write_all(&(c as f32).to_le_bytes())?;
        }
        if let Some(field) = field {
            w.write_all(&(field[v] as f32).to_le_bytes())?;
        }
    }
    for (f, t) in mesh.triangles().iter().enumerate() {
        w.write_all(&[3u8])?;
        for &v in t {
            w.write_all(&v.to_le_bytes())?;
        }
        if let Some(regions) = regions {
            w.write_all(&regions[f].to_le_bytes())?;
        }
    }
    Ok(())
}

/// ASCII line-set PLY (vertices plus `edge` elements) for polyline overlays.
pub fn write_polylines_ply(path: impl AsRef<Path>, lines: &[(Vec<Point>, bool)]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let vcount: usize = lines.iter().map(|(p, _)| p.len()).sum();
    let ecount: usize = lines
        .iter()
        .map(|(p, closed)| if *closed && p.len() > 2 { p.len() } else { p.len().saturating_sub(1) })
        .sum();
    writeln!(w, "ply\nformat ascii 1.0")?;
    writeln!(w, "element vertex {vcount}")?;
    writeln!(w, "property float x\nproperty float y\nproperty float z")?;
    writeln!(w, "element edge {ecount}")?;
    writeln!(w, "property int vertex1\nproperty int vertex2\nend_header")?;
    for (pts, _) in lines {
        for p in pts {
            writeln!(w, "{} {} {}", p.x as f32, p.y as f32, p.z as f32)?;
        }
    }
    let mut base = 0usize;
    for (pts, closed) in lines {
        let n = pts.len();
        for k in 0..n.saturating_sub(1) {
            writeln!(w, "{} {}", base + k, base + k + 1)?;
        }
        if *closed && n > 2 {
            writeln!(w, "{} {}", base + n - 1, base)?;
        }
        base += n;
    }
    w.flush()?;
    Ok(())
}
