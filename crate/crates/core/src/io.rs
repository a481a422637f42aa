//! Mesh files: OFF, OBJ, PLY (ASCII and binary little endian) and the exact
//! text format `xmesh`.
//!
//! Binary64 formats are read exactly, every double being a rational. Writing
//! them refuses coordinates that are not doubles unless `lossy` is set.
//! Per-triangle flags travel as face colors (OFF), a `close` group (OBJ), a
//! `close` face property (PLY) or `# close` comment lines (xmesh).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::geom::{format_rational, is_f64_exact, parse_rational, rat_from_f64, rat_to_f64, ExactPoint, Rational};
use crate::mesh::{build_mesh, Mesh, MeshError};
use crate::proximity::FeaturePair;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
    Ply,
    PlyBinary,
    Xmesh,
}

impl MeshFormat {
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "off" => MeshFormat::Off,
            "obj" => MeshFormat::Obj,
            "ply" => MeshFormat::Ply,
            "ply-binary" | "plyb" => MeshFormat::PlyBinary,
            "xmesh" => MeshFormat::Xmesh,
            _ => return None,
        })
    }

    /// By extension; `.ply` means ASCII PLY when writing and either variant
    /// when reading.
    pub fn from_path(p: &Path) -> Option<Self> {
        Self::from_name(p.extension()?.to_str()?)
    }

    pub fn is_exact(self) -> bool {
        self == MeshFormat::Xmesh
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("vertex {vertex} has a coordinate that is not a binary64 value")]
    PrecisionLoss { vertex: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Parsed contents: the mesh and the set of flagged triangle indices.
#[derive(Debug)]
pub struct MeshFile {
    pub mesh: Mesh,
    pub flags: BTreeSet<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct WriteOptions {
    pub lossy: bool,
    /// Triangle ids (of the mesh being written) to flag.
    pub flags: Option<BTreeSet<usize>>,
}

fn perr(line: usize, column: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        column,
        msg: msg.into(),
    }
}

/// Whitespace-separated tokens of a line with their 1-based columns.
fn tokens(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(b)) => {
                out.push((b + 1, &s[b..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(b) = start {
        out.push((b + 1, &s[b..]));
    }
    out
}

fn parse_f64_coord(tok: &str, line: usize, col: usize) -> Result<Rational, IoError> {
    let v: f64 = tok.parse().map_err(|_| perr(line, col, format!("bad number `{tok}`")))?;
    if !v.is_finite() {
        return Err(perr(line, col, "non-finite coordinate"));
    }
    Ok(rat_from_f64(v))
}

fn parse_index(tok: &str, line: usize, col: usize) -> Result<usize, IoError> {
    tok.parse().map_err(|_| perr(line, col, format!("bad index `{tok}`")))
}

fn fan(poly: &[usize], out: &mut Vec<[usize; 3]>) {
    for i in 1..poly.len() - 1 {
        out.push([poly[0], poly[i], poly[i + 1]]);
    }
}

fn finish(points: Vec<ExactPoint>, tris: Vec<[usize; 3]>, flags: BTreeSet<usize>) -> Result<MeshFile, IoError> {
    Ok(MeshFile {
        mesh: build_mesh(points, tris)?,
        flags,
    })
}

/// Meaningful lines with 1-based numbers; `#` starts a comment.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

fn parse_counts(line: usize, toks: &[(usize, &str)], n: usize) -> Result<Vec<usize>, IoError> {
    if toks.len() < n {
        return Err(perr(line, 1, format!("expected {n} counts")));
    }
    toks[..n].iter().map(|&(c, t)| parse_index(t, line, c)).collect()
}

fn read_off(text: &str) -> Result<MeshFile, IoError> {
    let mut lines = content_lines(text);
    let (ln, first) = lines.next().ok_or_else(|| perr(1, 1, "empty file"))?;
    let mut toks = tokens(first);
    if toks.first().map(|t| t.1) == Some("OFF") {
        toks.remove(0);
    } else {
        return Err(perr(ln, 1, "missing OFF header"));
    }
    let (ln, counts) = if toks.is_empty() {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln + 1, 1, "missing counts"))?;
        (ln, tokens(l))
    } else {
        (ln, toks)
    };
    let c = parse_counts(ln, &counts, 2)?;
    let (nv, nf) = (c[0], c[1]);
    let mut points = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, 1, "missing vertex lines"))?;
        let t = tokens(l);
        if t.len() < 3 {
            return Err(perr(ln, 1, "vertex needs three coordinates"));
        }
        let x = parse_f64_coord(t[0].1, ln, t[0].0)?;
        let y = parse_f64_coord(t[1].1, ln, t[1].0)?;
        let z = parse_f64_coord(t[2].1, ln, t[2].0)?;
        points.push(ExactPoint::new(x, y, z));
    }
    let mut tris = Vec::with_capacity(nf);
    let mut flags = BTreeSet::new();
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, 1, "missing face lines"))?;
        let t = tokens(l);
        let k = parse_index(t[0].1, ln, t[0].0)?;
        if k < 3 || t.len() < k + 1 {
            return Err(perr(ln, 1, "face needs at least three indices"));
        }
        let mut poly = Vec::with_capacity(k);
        for &(c, s) in &t[1..=k] {
            let i = parse_index(s, ln, c)?;
            if i >= nv {
                return Err(perr(ln, c, format!("index {i} out of range")));
            }
            poly.push(i);
        }
        let before = tris.len();
        fan(&poly, &mut tris);
        let color: Vec<&str> = t[k + 1..].iter().map(|x| x.1).collect();
        if color.len() >= 3 && color[..3] == ["255", "0", "0"] {
            flags.extend(before..tris.len());
        }
    }
    finish(points, tris, flags)
}

fn read_obj(text: &str) -> Result<MeshFile, IoError> {
    let mut points = Vec::new();
    let mut tris = Vec::new();
    let mut flags = BTreeSet::new();
    let mut in_close = false;
    for (ln, l) in content_lines(text) {
        let t = tokens(l);
        match t[0].1 {
            "v" => {
                if t.len() < 4 {
                    return Err(perr(ln, 1, "vertex needs three coordinates"));
                }
                let x = parse_f64_coord(t[1].1, ln, t[1].0)?;
                let y = parse_f64_coord(t[2].1, ln, t[2].0)?;
                let z = parse_f64_coord(t[3].1, ln, t[3].0)?;
                points.push(ExactPoint::new(x, y, z));
            }
            "g" | "o" => in_close = t.get(1).map(|x| x.1) == Some("close"),
            "f" => {
                let mut poly = Vec::new();
                for &(c, s) in &t[1..] {
                    let head = s.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| perr(ln, c, format!("bad index `{s}`")))?;
                    let n = points.len() as i64;
                    let idx = if i > 0 { i - 1 } else { n + i };
                    if i == 0 || idx < 0 || idx >= n {
                        return Err(perr(ln, c, format!("index {i} out of range")));
                    }
                    poly.push(idx as usize);
                }
                if poly.len() < 3 {
                    return Err(perr(ln, 1, "face needs at least three indices"));
                }
                let before = tris.len();
                fan(&poly, &mut tris);
                if in_close {
                    flags.extend(before..tris.len());
                }
            }
            _ => {}
        }
    }
    finish(points, tris, flags)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PlyType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            PlyType::I8 => b[0] as i8 as f64,
            PlyType::U8 => b[0] as f64,
            PlyType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyType::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyType::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyType::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum PlyProp {
    Scalar(String, PlyType),
    List(String, PlyType, PlyType),
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: usize,
    props: Vec<PlyProp>,
}

/// Reads one element's values, either from ASCII tokens or binary bytes.
enum PlySource<'a> {
    Ascii(std::iter::Peekable<Box<dyn Iterator<Item = (usize, Vec<(usize, &'a str)>)> + 'a>>),
    Binary(&'a [u8], usize),
}

impl PlySource<'_> {
    /// Values of one element record: scalars as one-entry vectors, lists in
    /// full.
    fn record(&mut self, props: &[PlyProp]) -> Result<Vec<Vec<f64>>, IoError> {
        match self {
            PlySource::Ascii(lines) => {
                let (ln, toks) = lines.next().ok_or_else(|| perr(0, 1, "unexpected end of PLY data"))?;
                let mut it = toks.into_iter();
                let mut next = |ln: usize| -> Result<f64, IoError> {
                    let (c, s) = it.next().ok_or_else(|| perr(ln, 1, "record too short"))?;
                    s.parse::<f64>().map_err(|_| perr(ln, c, format!("bad number `{s}`")))
                };
                let mut out = Vec::with_capacity(props.len());
                for p in props {
                    match p {
                        PlyProp::Scalar(..) => out.push(vec![next(ln)?]),
                        PlyProp::List(..) => {
                            let n = next(ln)? as usize;
                            out.push((0..n).map(|_| next(ln)).collect::<Result<_, _>>()?);
                        }
                    }
                }
                Ok(out)
            }
            PlySource::Binary(data, pos) => {
                let mut take = |t: PlyType| -> Result<f64, IoError> {
                    let s = t.size();
                    if *pos + s > data.len() {
                        return Err(perr(0, *pos + 1, "unexpected end of PLY data"));
                    }
                    let v = t.read(&data[*pos..*pos + s]);
                    *pos += s;
                    Ok(v)
                };
                let mut out = Vec::with_capacity(props.len());
                for p in props {
                    match p {
                        PlyProp::Scalar(_, t) => out.push(vec![take(*t)?]),
                        PlyProp::List(_, ct, it) => {
                            let n = take(*ct)? as usize;
                            out.push((0..n).map(|_| take(*it)).collect::<Result<_, _>>()?);
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

fn read_ply(bytes: &[u8]) -> Result<MeshFile, IoError> {
    // Header is ASCII up to and including the end_header line.
    let marker = b"end_header";
    let hend = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| perr(1, 1, "missing end_header"))?;
    let body_start = bytes[hend..]
        .iter()
        .position(|&b| b == b'\n')
        .map(|i| hend + i + 1)
        .unwrap_or(bytes.len());
    let header = std::str::from_utf8(&bytes[..hend]).map_err(|_| perr(1, 1, "header is not ASCII"))?;
    let mut binary = false;
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut header_lines = 0;
    for (i, l) in header.lines().enumerate() {
        header_lines = i + 1;
        let ln = i + 1;
        let t = tokens(l);
        if t.is_empty() {
            continue;
        }
        match t[0].1 {
            "ply" | "comment" | "obj_info" => {}
            "format" => match t.get(1).map(|x| x.1) {
                Some("ascii") => binary = false,
                Some("binary_little_endian") => binary = true,
                Some(f) => return Err(IoError::UnsupportedFormat(format!("PLY {f}"))),
                None => return Err(perr(ln, 1, "format needs a value")),
            },
            "element" => {
                if t.len() < 3 {
                    return Err(perr(ln, 1, "element needs a name and a count"));
                }
                elements.push(PlyElement {
                    name: t[1].1.to_string(),
                    count: parse_index(t[2].1, ln, t[2].0)?,
                    props: Vec::new(),
                });
            }
            "property" => {
                let el = elements.last_mut().ok_or_else(|| perr(ln, 1, "property before element"))?;
                let ty = |k: usize| -> Result<PlyType, IoError> {
                    let (c, s) = *t.get(k).ok_or_else(|| perr(ln, 1, "truncated property"))?;
                    PlyType::parse(s).ok_or_else(|| perr(ln, c, format!("unknown type `{s}`")))
                };
                if t.get(1).map(|x| x.1) == Some("list") {
                    let name = t.get(4).ok_or_else(|| perr(ln, 1, "truncated property"))?.1;
                    el.props.push(PlyProp::List(name.to_string(), ty(2)?, ty(3)?));
                } else {
                    let name = t.get(2).ok_or_else(|| perr(ln, 1, "truncated property"))?.1;
                    el.props.push(PlyProp::Scalar(name.to_string(), ty(1)?));
                }
            }
            other => return Err(perr(ln, 1, format!("unknown header keyword `{other}`"))),
        }
    }
    let body = &bytes[body_start..];
    let mut src = if binary {
        PlySource::Binary(body, 0)
    } else {
        let text = std::str::from_utf8(body).map_err(|_| perr(header_lines + 1, 1, "body is not ASCII"))?;
        let it: Box<dyn Iterator<Item = (usize, Vec<(usize, &str)>)>> = Box::new(
            text.lines()
                .enumerate()
                .map(move |(i, l)| (header_lines + 2 + i, tokens(l)))
                .filter(|(_, t)| !t.is_empty()),
        );
        PlySource::Ascii(it.peekable())
    };
    let mut points = Vec::new();
    let mut tris = Vec::new();
    let mut flags = BTreeSet::new();
    for el in &elements {
        let pos = |name: &str| {
            el.props.iter().position(|p| match p {
                PlyProp::Scalar(n, _) | PlyProp::List(n, _, _) => n == name,
            })
        };
        match el.name.as_str() {
            "vertex" => {
                let (x, y, z) = match (pos("x"), pos("y"), pos("z")) {
                    (Some(x), Some(y), Some(z)) => (x, y, z),
                    _ => return Err(perr(1, 1, "vertex element needs x, y, z")),
                };
                for _ in 0..el.count {
                    let r = src.record(&el.props)?;
                    let c = |k: usize| -> Result<Rational, IoError> {
                        let v = r[k][0];
                        if !v.is_finite() {
                            return Err(perr(0, 1, "non-finite coordinate"));
                        }
                        Ok(rat_from_f64(v))
                    };
                    points.push(ExactPoint::new(c(x)?, c(y)?, c(z)?));
                }
            }
            "face" => {
                let vi = pos("vertex_indices")
                    .or_else(|| pos("vertex_index"))
                    .ok_or_else(|| perr(1, 1, "face element needs vertex_indices"))?;
                let flag = pos("close");
                for _ in 0..el.count {
                    let r = src.record(&el.props)?;
                    let poly: Vec<usize> = r[vi].iter().map(|&v| v as usize).collect();
                    if poly.len() < 3 || poly.iter().any(|&i| i >= points.len()) {
                        return Err(perr(0, 1, "bad face record"));
                    }
                    let before = tris.len();
                    fan(&poly, &mut tris);
                    if flag.is_some_and(|f| r[f][0] != 0.0) {
                        flags.extend(before..tris.len());
                    }
                }
            }
            _ => {
                for _ in 0..el.count {
                    src.record(&el.props)?;
                }
            }
        }
    }
    finish(points, tris, flags)
}

fn read_xmesh(text: &str) -> Result<MeshFile, IoError> {
    let mut flags = BTreeSet::new();
    for (i, l) in text.lines().enumerate() {
        if let Some(rest) = l.trim().strip_prefix("# close") {
            for (c, s) in tokens(rest) {
                flags.insert(parse_index(s, i + 1, c + 7)?);
            }
        }
    }
    let mut lines = content_lines(text);
    let (ln, head) = lines.next().ok_or_else(|| perr(1, 1, "empty file"))?;
    let t = tokens(head);
    if t.first().map(|x| x.1) != Some("xmesh") || t.len() != 3 {
        return Err(perr(ln, 1, "expected `xmesh <vertices> <triangles>`"));
    }
    let nv = parse_index(t[1].1, ln, t[1].0)?;
    let nt = parse_index(t[2].1, ln, t[2].0)?;
    let mut points = Vec::with_capacity(nv);
    let mut last = ln;
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(last + 1, 1, "missing vertex lines"))?;
        last = ln;
        let t = tokens(l);
        if t.len() != 3 {
            return Err(perr(ln, 1, "vertex needs three rationals"));
        }
        let c = |k: usize| parse_rational(t[k].1).ok_or_else(|| perr(ln, t[k].0, format!("bad rational `{}`", t[k].1)));
        points.push(ExactPoint::new(c(0)?, c(1)?, c(2)?));
    }
    let mut tris = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next().ok_or_else(|| perr(last + 1, 1, "missing triangle lines"))?;
        last = ln;
        let t = tokens(l);
        if t.len() != 3 {
            return Err(perr(ln, 1, "triangle needs three indices"));
        }
        let mut tri = [0; 3];
        for k in 0..3 {
            let i = parse_index(t[k].1, ln, t[k].0)?;
            if i >= nv {
                return Err(perr(ln, t[k].0, format!("index {i} out of range")));
            }
            tri[k] = i;
        }
        tris.push(tri);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(perr(ln, 1, "trailing data"));
    }
    finish(points, tris, flags)
}

pub fn parse_mesh(bytes: &[u8], format: MeshFormat) -> Result<MeshFile, IoError> {
    let text = || std::str::from_utf8(bytes).map_err(|_| perr(1, 1, "file is not UTF-8"));
    match format {
        MeshFormat::Off => read_off(text()?),
        MeshFormat::Obj => read_obj(text()?),
        MeshFormat::Ply | MeshFormat::PlyBinary => read_ply(bytes),
        MeshFormat::Xmesh => read_xmesh(text()?),
    }
}

pub fn read_mesh(path: &Path, format: Option<MeshFormat>) -> Result<MeshFile, IoError> {
    let format = format
        .or_else(|| MeshFormat::from_path(path))
        .ok_or_else(|| IoError::UnsupportedFormat(path.display().to_string()))?;
    parse_mesh(&std::fs::read(path)?, format)
}

/// Shortest text that reads back as the same double.
fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn coords_f64(m: &Mesh, lossy: bool) -> Result<Vec<[f64; 3]>, IoError> {
    m.vertices()
        .map(|v| {
            let p = m.point(v);
            let c = [&p.x, &p.y, &p.z];
            if !lossy && !c.iter().all(|x| is_f64_exact(x)) {
                return Err(IoError::PrecisionLoss { vertex: v });
            }
            let f = c.map(|x| rat_to_f64(x).unwrap_or(f64::NAN));
            if f.iter().any(|x| !x.is_finite()) {
                return Err(IoError::PrecisionLoss { vertex: v });
            }
            Ok(f)
        })
        .collect()
}

pub fn emit_mesh(m: &Mesh, format: MeshFormat, opts: &WriteOptions) -> Result<Vec<u8>, IoError> {
    let mut map = vec![usize::MAX; m.vertex_capacity()];
    for (i, v) in m.vertices().enumerate() {
        map[v] = i;
    }
    let tris: Vec<(bool, [usize; 3])> = m
        .triangles()
        .map(|(id, t)| (opts.flags.as_ref().is_some_and(|f| f.contains(&id)), t.map(|v| map[v])))
        .collect();
    let annotate = opts.flags.is_some();
    let nv = m.num_vertices();
    let mut s = String::new();
    match format {
        MeshFormat::Xmesh => {
            let _ = writeln!(s, "xmesh {} {}", nv, tris.len());
            for v in m.vertices() {
                let p = m.point(v);
                let _ = writeln!(s, "{} {} {}", format_rational(&p.x), format_rational(&p.y), format_rational(&p.z));
            }
            for (_, t) in &tris {
                let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
            }
            let flagged: Vec<String> = tris
                .iter()
                .enumerate()
                .filter(|(_, t)| t.0)
                .map(|(i, _)| i.to_string())
                .collect();
            for chunk in flagged.chunks(32) {
                let _ = writeln!(s, "# close {}", chunk.join(" "));
            }
        }
        MeshFormat::Off => {
            let c = coords_f64(m, opts.lossy)?;
            let _ = writeln!(s, "OFF\n{} {} 0", nv, tris.len());
            for p in &c {
                let _ = writeln!(s, "{} {} {}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]));
            }
            for (f, t) in &tris {
                let _ = write!(s, "3 {} {} {}", t[0], t[1], t[2]);
                if annotate {
                    s.push_str(if *f { " 255 0 0" } else { " 200 200 200" });
                }
                s.push('\n');
            }
        }
        MeshFormat::Obj => {
            let c = coords_f64(m, opts.lossy)?;
            for p in &c {
                let _ = writeln!(s, "v {} {} {}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]));
            }
            let mut group = "";
            for (f, t) in &tris {
                let g = if *f { "close" } else { "mesh" };
                if annotate && g != group {
                    let _ = writeln!(s, "g {g}");
                    group = g;
                }
                let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
            }
        }
        MeshFormat::Ply | MeshFormat::PlyBinary => {
            let c = coords_f64(m, opts.lossy)?;
            let bin = format == MeshFormat::PlyBinary;
            let _ = writeln!(s, "ply");
            let _ = writeln!(s, "format {} 1.0", if bin { "binary_little_endian" } else { "ascii" });
            let _ = writeln!(s, "element vertex {nv}");
            for a in ["x", "y", "z"] {
                let _ = writeln!(s, "property double {a}");
            }
            let _ = writeln!(s, "element face {}", tris.len());
            let _ = writeln!(s, "property list uchar int vertex_indices");
            if annotate {
                let _ = writeln!(s, "property uchar close");
            }
            let _ = writeln!(s, "end_header");
            if bin {
                let mut out = s.into_bytes();
                for p in &c {
                    for x in p {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
                for (f, t) in &tris {
                    out.push(3);
                    for &i in t {
                        out.extend_from_slice(&(i as i32).to_le_bytes());
                    }
                    if annotate {
                        out.push(*f as u8);
                    }
                }
                return Ok(out);
            }
            for p in &c {
                let _ = writeln!(s, "{} {} {}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]));
            }
            for (f, t) in &tris {
                let _ = write!(s, "3 {} {} {}", t[0], t[1], t[2]);
                if annotate {
                    let _ = write!(s, " {}", *f as u8);
                }
                s.push('\n');
            }
        }
    }
    Ok(s.into_bytes())
}

pub fn write_mesh(m: &Mesh, path: &Path, format: Option<MeshFormat>, opts: &WriteOptions) -> Result<(), IoError> {
    let format = format
        .or_else(|| MeshFormat::from_path(path))
        .ok_or_else(|| IoError::UnsupportedFormat(path.display().to_string()))?;
    std::fs::write(path, emit_mesh(m, format, opts)?)?;
    Ok(())
}

/// Triangles holding a feature of some pair: the triangle itself, or every
/// triangle incident to the vertex or edge.
pub fn annotate_close_features(m: &Mesh, pairs: &[FeaturePair]) -> BTreeSet<usize> {
    use crate::geom::Feature;
    let mut out = BTreeSet::new();
    for p in pairs {
        for f in [p.a, p.b] {
            match f {
                Feature::Vertex(v) => out.extend(m.vertex_triangles(v).iter().copied()),
                Feature::Edge([a, b]) => out.extend(m.edge_triangles(a, b).iter().copied()),
                Feature::Triangle(t) => out.extend(m.find_triangle(t)),
            }
        }
    }
    out
}
