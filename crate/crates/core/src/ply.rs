//! PLY reader and writer for coloured point clouds.
//!
//! Supports `ascii 1.0` and `binary_little_endian 1.0`. The vertex element must
//! carry `x`, `y`, `z` (any scalar type) and `red`, `green`, `blue` (`uchar`).
//! Other scalar vertex properties are kept and written back; list properties
//! and non-vertex elements are skipped with a warning.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use log::warn;

use crate::cloud::{bits_for, Geometry, PointCloud, MAX_BIT_DEPTH};
use crate::error::{Error, PlyError, Result};

const BIT_DEPTH_COMMENT: &str = "fgbd bit_depth";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    Char,
    UChar,
    Short,
    UShort,
    Int,
    UInt,
    Float,
    Double,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        use ScalarType::*;
        Some(match name {
            "char" | "int8" => Char,
            "uchar" | "uint8" => UChar,
            "short" | "int16" => Short,
            "ushort" | "uint16" => UShort,
            "int" | "int32" => Int,
            "uint" | "uint32" => UInt,
            "float" | "float32" => Float,
            "double" | "float64" => Double,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        use ScalarType::*;
        match self {
            Char => "char",
            UChar => "uchar",
            Short => "short",
            UShort => "ushort",
            Int => "int",
            UInt => "uint",
            Float => "float",
            Double => "double",
        }
    }

    fn size(self) -> usize {
        use ScalarType::*;
        match self {
            Char | UChar => 1,
            Short | UShort => 2,
            Int | UInt | Float => 4,
            Double => 8,
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, ScalarType::Float | ScalarType::Double)
    }

    fn range(self) -> (f64, f64) {
        use ScalarType::*;
        match self {
            Char => (i8::MIN as f64, i8::MAX as f64),
            UChar => (0.0, u8::MAX as f64),
            Short => (i16::MIN as f64, i16::MAX as f64),
            UShort => (0.0, u16::MAX as f64),
            Int => (i32::MIN as f64, i32::MAX as f64),
            UInt => (0.0, u32::MAX as f64),
            Float | Double => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        use ScalarType::*;
        match self {
            Char => b[0] as i8 as f64,
            UChar => b[0] as f64,
            Short => i16::from_le_bytes([b[0], b[1]]) as f64,
            UShort => u16::from_le_bytes([b[0], b[1]]) as f64,
            Int => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            UInt => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Float => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Double => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }

    fn write_le<W: Write>(self, v: f64, w: &mut W) -> std::io::Result<()> {
        use ScalarType::*;
        match self {
            Char => w.write_all(&(v as i8).to_le_bytes()),
            UChar => w.write_all(&(v as u8).to_le_bytes()),
            Short => w.write_all(&(v as i16).to_le_bytes()),
            UShort => w.write_all(&(v as u16).to_le_bytes()),
            Int => w.write_all(&(v as i32).to_le_bytes()),
            UInt => w.write_all(&(v as u32).to_le_bytes()),
            Float => w.write_all(&(v as f32).to_le_bytes()),
            Double => w.write_all(&v.to_le_bytes()),
        }
    }
}

/// A scalar vertex property carried through load/save untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtraProperty {
    pub name: String,
    pub ty: ScalarType,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
enum PropKind {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    bit_depth: Option<u32>,
    body_offset: usize,
}

fn header_err(msg: impl Into<String>) -> Error {
    PlyError::Header(msg.into()).into()
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0usize;
    let mut next_line = || -> Option<String> {
        if pos >= bytes.len() {
            return None;
        }
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| pos + i);
        let line = String::from_utf8_lossy(&bytes[pos..end]).trim_end_matches('\r').to_string();
        pos = (end + 1).min(bytes.len());
        Some(line)
    };

    if next_line().as_deref().map(str::trim) != Some("ply") {
        return Err(header_err("missing `ply` magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut bit_depth = None;
    loop {
        let line = next_line().ok_or_else(|| header_err("missing end_header"))?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            None => continue,
            Some("end_header") => break,
            Some("comment") => {
                let rest = line.trim_start()["comment".len()..].trim();
                if let Some(v) = rest.strip_prefix(BIT_DEPTH_COMMENT) {
                    bit_depth = v.trim().parse().ok();
                }
            }
            Some("obj_info") => {}
            Some("format") => {
                let f = tok.next().ok_or_else(|| header_err("format line without type"))?;
                format = Some(match f {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    other => return Err(PlyError::Format(other.to_string()).into()),
                });
            }
            Some("element") => {
                let name = tok.next().ok_or_else(|| header_err("element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| header_err(format!("element `{name}` without a valid count")))?;
                elements.push(Element { name: name.to_string(), count, props: Vec::new() });
            }
            Some("property") => {
                let elem = elements
                    .last_mut()
                    .ok_or_else(|| header_err("property before any element"))?;
                let words: Vec<&str> = tok.collect();
                let unsupported = |name: &str, ty: &str| -> Error {
                    PlyError::UnsupportedType { name: name.to_string(), ty: ty.to_string() }.into()
                };
                let prop = match words.as_slice() {
                    ["list", c, i, name] => {
                        let count = ScalarType::parse(c).ok_or_else(|| unsupported(name, c))?;
                        let item = ScalarType::parse(i).ok_or_else(|| unsupported(name, i))?;
                        if !count.is_integer() {
                            return Err(unsupported(name, c));
                        }
                        Property { name: name.to_string(), kind: PropKind::List { count, item } }
                    }
                    [ty, name] => {
                        let t = ScalarType::parse(ty).ok_or_else(|| unsupported(name, ty))?;
                        Property { name: name.to_string(), kind: PropKind::Scalar(t) }
                    }
                    _ => return Err(header_err(format!("bad property line `{line}`"))),
                };
                elem.props.push(prop);
            }
            Some(other) => return Err(header_err(format!("unknown keyword `{other}`"))),
        }
    }
    let format = format.ok_or_else(|| header_err("no format line"))?;
    Ok(Header { format, elements, bit_depth, body_offset: pos })
}

/// Pulls scalar values out of the body, one element record at a time.
trait BodyReader {
    /// Starts the next record; `false` when the body is exhausted.
    fn begin_record(&mut self) -> Result<bool>;
    fn scalar(&mut self, ty: ScalarType) -> Result<Option<f64>>;
}

struct AsciiBody<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    tokens: Vec<&'a str>,
    cursor: usize,
    line_no: usize,
    header_lines: usize,
}

impl<'a> BodyReader for AsciiBody<'a> {
    fn begin_record(&mut self) -> Result<bool> {
        for (i, line) in self.lines.by_ref() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            self.tokens = toks;
            self.cursor = 0;
            self.line_no = self.header_lines + i + 1;
            return Ok(true);
        }
        Ok(false)
    }

    fn scalar(&mut self, ty: ScalarType) -> Result<Option<f64>> {
        let Some(tok) = self.tokens.get(self.cursor) else {
            return Err(PlyError::Value { line: self.line_no, msg: "too few values".into() }.into());
        };
        self.cursor += 1;
        let v: f64 = tok.parse().map_err(|_| PlyError::Value {
            line: self.line_no,
            msg: format!("`{tok}` is not a number"),
        })?;
        let (lo, hi) = ty.range();
        if ty.is_integer() && (v.fract() != 0.0 || v < lo || v > hi) {
            return Err(PlyError::Value {
                line: self.line_no,
                msg: format!("`{tok}` is not a valid {}", ty.name()),
            }
            .into());
        }
        Ok(Some(v))
    }
}

struct BinaryBody<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BodyReader for BinaryBody<'a> {
    fn begin_record(&mut self) -> Result<bool> {
        Ok(self.pos < self.bytes.len())
    }

    fn scalar(&mut self, ty: ScalarType) -> Result<Option<f64>> {
        let n = ty.size();
        if self.pos + n > self.bytes.len() {
            return Ok(None);
        }
        let v = ty.read_le(&self.bytes[self.pos..self.pos + n]);
        self.pos += n;
        Ok(Some(v))
    }
}

/// Reads one record. `Ok(None)` means the body ended early.
fn read_record(body: &mut dyn BodyReader, elem: &Element, out: &mut Vec<f64>) -> Result<Option<()>> {
    out.clear();
    if !body.begin_record()? {
        return Ok(None);
    }
    for p in &elem.props {
        match p.kind {
            PropKind::Scalar(t) => match body.scalar(t)? {
                Some(v) => out.push(v),
                None => return Ok(None),
            },
            PropKind::List { count, item } => {
                let Some(n) = body.scalar(count)? else { return Ok(None) };
                for _ in 0..n as usize {
                    if body.scalar(item)?.is_none() {
                        return Ok(None);
                    }
                }
                out.push(f64::NAN);
            }
        }
    }
    Ok(Some(()))
}

/// Parses a complete PLY file held in memory.
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let body_bytes = &bytes[header.body_offset..];
    let text;
    let mut body: Box<dyn BodyReader> = match header.format {
        PlyFormat::Ascii => {
            text = std::str::from_utf8(body_bytes)
                .map_err(|_| PlyError::Value { line: 0, msg: "ascii body is not UTF-8".into() })?;
            let header_lines = bytes[..header.body_offset].iter().filter(|&&b| b == b'\n').count();
            Box::new(AsciiBody { lines: text.lines().enumerate(), tokens: Vec::new(), cursor: 0, line_no: 0, header_lines })
        }
        PlyFormat::BinaryLittleEndian => Box::new(BinaryBody { bytes: body_bytes, pos: 0 }),
    };

    let vi = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| header_err("no vertex element"))?;
    let vertex = &header.elements[vi];
    let find = |name: &'static str| -> Result<(usize, ScalarType)> {
        let i = vertex
            .props
            .iter()
            .position(|p| p.name == name)
            .ok_or(PlyError::MissingProperty(name))?;
        match vertex.props[i].kind {
            PropKind::Scalar(t) => Ok((i, t)),
            PropKind::List { .. } => Err(PlyError::UnsupportedType { name: name.into(), ty: "list".into() }.into()),
        }
    };
    let pos_idx = [find("x")?, find("y")?, find("z")?];
    let col_idx = [find("red")?, find("green")?, find("blue")?];
    for (i, t) in col_idx {
        if t != ScalarType::UChar {
            return Err(PlyError::UnsupportedType { name: vertex.props[i].name.clone(), ty: t.name().into() }.into());
        }
    }
    let known: Vec<usize> = pos_idx.iter().chain(&col_idx).map(|p| p.0).collect();
    let mut extra: Vec<(usize, ExtraProperty)> = Vec::new();
    for (i, p) in vertex.props.iter().enumerate() {
        if known.contains(&i) {
            continue;
        }
        match p.kind {
            PropKind::Scalar(ty) => extra.push((i, ExtraProperty { name: p.name.clone(), ty, values: Vec::new() })),
            PropKind::List { .. } => warn!("skipping list property `{}` on vertex element", p.name),
        }
    }

    let mut record = Vec::new();
    for e in &header.elements[..vi] {
        warn!("skipping {} `{}` elements", e.count, e.name);
        for _ in 0..e.count {
            if read_record(body.as_mut(), e, &mut record)?.is_none() {
                return Err(PlyError::Truncated { expected: vertex.count, read: 0 }.into());
            }
        }
    }
    for e in &header.elements[vi + 1..] {
        warn!("ignoring {} `{}` elements after the vertex data", e.count, e.name);
    }

    let mut positions = Vec::with_capacity(vertex.count);
    let mut colors = Vec::with_capacity(vertex.count);
    for n in 0..vertex.count {
        if read_record(body.as_mut(), vertex, &mut record)?.is_none() {
            return Err(PlyError::Truncated { expected: vertex.count, read: n }.into());
        }
        positions.push(pos_idx.map(|(i, _)| record[i]));
        colors.push(col_idx.map(|(i, _)| record[i]));
        for (i, e) in extra.iter_mut() {
            e.values.push(record[*i]);
        }
    }
    let extra: Vec<ExtraProperty> = extra.into_iter().map(|(_, e)| e).collect();

    let integer_coords = pos_idx.iter().all(|(_, t)| t.is_integer());
    let max_coord = positions.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    let non_negative = positions.iter().flatten().all(|&v| v >= 0.0);
    let fits = max_coord < (1u64 << MAX_BIT_DEPTH) as f64;
    let pc = if integer_coords && non_negative && fits {
        let coords: Vec<[u32; 3]> = positions.iter().map(|p| p.map(|v| v as u32)).collect();
        let needed = bits_for(max_coord as u32);
        let b = header.bit_depth.filter(|&b| b >= needed && b <= MAX_BIT_DEPTH).unwrap_or(needed);
        PointCloud::from_voxels(coords, colors, b)?
    } else {
        PointCloud::from_float(positions, colors)?
    };
    Ok(pc.with_extra(extra))
}

pub fn load_ply<R: Read>(mut reader: R) -> Result<PointCloud> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    parse_ply(&bytes)
}

pub fn load_ply_path(path: impl AsRef<Path>) -> Result<PointCloud> {
    load_ply(File::open(path)?)
}

/// Rounds a pipeline colour to the stored 8-bit value (half rounds up).
pub fn color_to_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Writes `pc` as PLY. Voxel coordinates are stored as `int`, float
/// coordinates as `double`, colours as `uchar`.
pub fn save_ply<W: Write>(pc: &PointCloud, format: PlyFormat, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(w, "ply\nformat {fmt} 1.0")?;
    let coord_ty = match pc.geometry() {
        Geometry::Voxel { bit_depth, .. } => {
            writeln!(w, "comment {BIT_DEPTH_COMMENT} {bit_depth}")?;
            ScalarType::Int
        }
        Geometry::Float(_) => ScalarType::Double,
    };
    writeln!(w, "element vertex {}", pc.len())?;
    for axis in ["x", "y", "z"] {
        writeln!(w, "property {} {axis}", coord_ty.name())?;
    }
    for ch in ["red", "green", "blue"] {
        writeln!(w, "property uchar {ch}")?;
    }
    for e in pc.extra_properties() {
        writeln!(w, "property {} {}", e.ty.name(), e.name)?;
    }
    writeln!(w, "end_header")?;

    let position = |i: usize| -> [f64; 3] {
        match pc.geometry() {
            Geometry::Voxel { coords, .. } => coords[i].map(f64::from),
            Geometry::Float(p) => p[i],
        }
    };
    for (i, c) in pc.colors().iter().enumerate() {
        let p = position(i);
        let rgb = c.map(color_to_u8);
        match format {
            PlyFormat::Ascii => {
                match pc.geometry() {
                    Geometry::Voxel { coords, .. } => {
                        let g = coords[i];
                        write!(w, "{} {} {}", g[0], g[1], g[2])?;
                    }
                    Geometry::Float(_) => write!(w, "{} {} {}", p[0], p[1], p[2])?,
                }
                write!(w, " {} {} {}", rgb[0], rgb[1], rgb[2])?;
                for e in pc.extra_properties() {
                    write!(w, " {}", e.values[i])?;
                }
                writeln!(w)?;
            }
            PlyFormat::BinaryLittleEndian => {
                for v in p {
                    coord_ty.write_le(v, &mut w)?;
                }
                w.write_all(&rgb)?;
                for e in pc.extra_properties() {
                    e.ty.write_le(e.values[i], &mut w)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_ply_path(pc: &PointCloud, format: PlyFormat, path: impl AsRef<Path>) -> Result<()> {
    save_ply(pc, format, File::create(path)?)
}

pub fn to_bytes(pc: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let mut out = Vec::new();
    save_ply(pc, format, &mut out).expect("writing to a Vec cannot fail");
    out
}
