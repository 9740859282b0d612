//! PLY reader/writer for `ascii 1.0` and `binary_little_endian 1.0`.
//!
//! Only the `vertex` element is decoded. Other elements are skipped, as are
//! vertex properties other than x/y/z and red/green/blue.

use std::io::Write;

use chrono::{DateTime, Utc};
use log::warn;

use super::{format_epoch, parse_epoch, CloudError, CloudFormat, Point3, PointCloud, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
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
    fn parse(name: &str) -> Option<Scalar> {
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

    fn is_float(self) -> bool {
        matches!(self, Scalar::F32 | Scalar::F64)
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

#[derive(Clone, Debug)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    X,
    Y,
    Z,
    Red,
    Green,
    Blue,
    Skip,
}

struct Header {
    elements: Vec<Element>,
    epoch: Option<DateTime<Utc>>,
    source: Option<String>,
    body_offset: usize,
}

fn header_error(msg: impl Into<String>) -> CloudError {
    CloudError::MalformedHeader(msg.into())
}

fn parse_header(bytes: &[u8], expected: CloudFormat) -> Result<Header> {
    let end = find_end_header(bytes).ok_or_else(|| header_error("missing end_header"))?;
    let text = std::str::from_utf8(&bytes[..end.0]).map_err(|_| header_error("header is not valid UTF-8"))?;
    let mut lines = text.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(header_error("missing `ply` magic"));
    }

    let mut elements: Vec<Element> = Vec::new();
    let mut epoch = None;
    let mut source = None;
    let mut saw_format = false;
    for line in lines {
        let mut words = line.split_whitespace();
        match words.next() {
            None => continue,
            Some("format") => {
                let fmt = words.next().unwrap_or_default();
                let version = words.next().unwrap_or_default();
                let got = match fmt {
                    "ascii" => CloudFormat::PlyAscii,
                    "binary_little_endian" => CloudFormat::PlyBinaryLe,
                    other => return Err(header_error(format!("unsupported PLY format `{other}`"))),
                };
                if version != "1.0" {
                    return Err(header_error(format!("unsupported PLY version `{version}`")));
                }
                if got != expected {
                    return Err(header_error(format!("header declares {got:?}, caller asked for {expected:?}")));
                }
                saw_format = true;
            }
            Some("comment") => {
                let rest = line["comment".len()..].trim();
                if let Some(t) = rest.strip_prefix("epoch ") {
                    epoch = Some(parse_epoch(t).ok_or_else(|| header_error(format!("bad epoch comment `{t}`")))?);
                } else if let Some(s) = rest.strip_prefix("source ") {
                    source = Some(s.to_string());
                }
            }
            Some("obj_info") => {}
            Some("element") => {
                let name = words.next().ok_or_else(|| header_error("element without name"))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| header_error(format!("element `{name}` has no valid count")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| header_error("property before any element"))?;
                let ty = words.next().ok_or_else(|| header_error("property without type"))?;
                let prop = if ty == "list" {
                    let count = words.next().and_then(Scalar::parse);
                    let item = words.next().and_then(Scalar::parse);
                    match (count, item, words.next()) {
                        (Some(count), Some(item), Some(_name)) => Property::List { count, item },
                        _ => return Err(header_error(format!("bad list property `{line}`"))),
                    }
                } else {
                    let ty = Scalar::parse(ty).ok_or_else(|| header_error(format!("unknown property type `{ty}`")))?;
                    let name = words.next().ok_or_else(|| header_error("property without name"))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                element.properties.push(prop);
            }
            Some(other) => return Err(header_error(format!("unexpected header keyword `{other}`"))),
        }
    }
    if !saw_format {
        return Err(header_error("missing format line"));
    }
    Ok(Header {
        elements,
        epoch,
        source,
        body_offset: end.1,
    })
}

/// Returns (header text end, body start).
fn find_end_header(bytes: &[u8]) -> Option<(usize, usize)> {
    let needle = b"end_header";
    let mut from = 0;
    while let Some(pos) = bytes[from..].windows(needle.len()).position(|w| w == needle) {
        let at = from + pos;
        let line_start = at == 0 || bytes[at - 1] == b'\n';
        let rest = &bytes[at + needle.len()..];
        if line_start {
            if rest.starts_with(b"\r\n") {
                return Some((at, at + needle.len() + 2));
            }
            if rest.starts_with(b"\n") {
                return Some((at, at + needle.len() + 1));
            }
        }
        from = at + needle.len();
    }
    None
}

/// Maps vertex properties onto point fields and validates required ones.
fn vertex_roles(element: &Element) -> Result<Vec<Role>> {
    let mut roles = Vec::with_capacity(element.properties.len());
    let mut seen = [false; 3];
    for prop in &element.properties {
        let role = match prop {
            Property::Scalar { name, ty } => match name.as_str() {
                "x" | "y" | "z" => {
                    if !ty.is_float() {
                        return Err(header_error(format!("vertex property `{name}` must be float or double")));
                    }
                    let axis = (name.as_bytes()[0] - b'x') as usize;
                    seen[axis] = true;
                    [Role::X, Role::Y, Role::Z][axis]
                }
                "red" | "green" | "blue" if *ty == Scalar::U8 => match name.as_str() {
                    "red" => Role::Red,
                    "green" => Role::Green,
                    _ => Role::Blue,
                },
                _ => {
                    warn!("skipping unknown PLY vertex property `{name}`");
                    Role::Skip
                }
            },
            Property::List { .. } => {
                warn!("skipping list property on PLY vertex element");
                Role::Skip
            }
        };
        roles.push(role);
    }
    if let Some(axis) = seen.iter().position(|s| !s) {
        return Err(header_error(format!(
            "vertex element lacks required property `{}`",
            ["x", "y", "z"][axis]
        )));
    }
    Ok(roles)
}

struct PointBuilder {
    xyz: [f64; 3],
    rgb: [u8; 3],
    color_mask: u8,
}

impl PointBuilder {
    fn new() -> Self {
        Self {
            xyz: [0.0; 3],
            rgb: [0; 3],
            color_mask: 0,
        }
    }

    fn set(&mut self, role: Role, v: f64) {
        match role {
            Role::X => self.xyz[0] = v,
            Role::Y => self.xyz[1] = v,
            Role::Z => self.xyz[2] = v,
            Role::Red => {
                self.rgb[0] = v as u8;
                self.color_mask |= 1;
            }
            Role::Green => {
                self.rgb[1] = v as u8;
                self.color_mask |= 2;
            }
            Role::Blue => {
                self.rgb[2] = v as u8;
                self.color_mask |= 4;
            }
            Role::Skip => {}
        }
    }

    fn finish(self, record: usize) -> Result<Point3> {
        let p = Point3::from_array(self.xyz);
        if !p.is_finite() {
            return Err(CloudError::NonFiniteValue { record });
        }
        Ok(if self.color_mask == 7 { p.with_color(self.rgb) } else { p })
    }
}

pub(super) fn parse(bytes: &[u8], format: CloudFormat) -> Result<PointCloud> {
    let header = parse_header(bytes, format)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| header_error("no vertex element"))?;
    let roles = vertex_roles(&header.elements[vertex_pos])?;
    let body = &bytes[header.body_offset..];
    let points = match format {
        CloudFormat::PlyAscii => parse_ascii_body(body, &header.elements, vertex_pos, &roles)?,
        CloudFormat::PlyBinaryLe => parse_binary_body(body, &header.elements, vertex_pos, &roles)?,
        CloudFormat::XyzText => unreachable!("xyz handled elsewhere"),
    };
    Ok(PointCloud {
        points,
        epoch: header.epoch.unwrap_or(DateTime::<Utc>::UNIX_EPOCH),
        source_label: header.source.unwrap_or_default(),
    })
}

fn parse_ascii_body(body: &[u8], elements: &[Element], vertex_pos: usize, roles: &[Role]) -> Result<Vec<Point3>> {
    let text = std::str::from_utf8(body).map_err(|_| CloudError::InvalidRecord {
        record: 0,
        message: "ASCII PLY body is not valid UTF-8".into(),
    })?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut points = Vec::new();
    for (ei, element) in elements.iter().enumerate() {
        if ei == vertex_pos {
            points.reserve(element.count);
        }
        for record in 1..=element.count {
            let line = lines.next().ok_or_else(|| {
                header_error(format!(
                    "element `{}` declares {} records, body holds {}",
                    element.name,
                    element.count,
                    record - 1
                ))
            })?;
            if ei != vertex_pos {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let mut builder = PointBuilder::new();
            for (prop, role) in element.properties.iter().zip(roles) {
                match prop {
                    Property::Scalar { .. } => {
                        let v = next_number(&mut tokens, record)?;
                        builder.set(*role, v);
                    }
                    Property::List { .. } => {
                        let n = next_number(&mut tokens, record)? as usize;
                        for _ in 0..n {
                            next_number(&mut tokens, record)?;
                        }
                    }
                }
            }
            points.push(builder.finish(record)?);
        }
    }
    if lines.next().is_some() {
        return Err(header_error("body holds more records than the header declares"));
    }
    Ok(points)
}

fn next_number<'a>(tokens: &mut impl Iterator<Item = &'a str>, record: usize) -> Result<f64> {
    let tok = tokens.next().ok_or_else(|| CloudError::InvalidRecord {
        record,
        message: "too few values".into(),
    })?;
    tok.parse::<f64>().map_err(|_| CloudError::InvalidRecord {
        record,
        message: format!("`{tok}` is not a number"),
    })
}

fn parse_binary_body(body: &[u8], elements: &[Element], vertex_pos: usize, roles: &[Role]) -> Result<Vec<Point3>> {
    let mut cursor = 0usize;
    let mut points = Vec::new();
    for (ei, element) in elements.iter().enumerate() {
        let truncated = |record: usize| {
            header_error(format!(
                "element `{}` declares {} records, binary body ends in record {}",
                element.name, element.count, record
            ))
        };
        if ei == vertex_pos {
            points.reserve(element.count);
        }
        for record in 1..=element.count {
            let mut builder = PointBuilder::new();
            for (pi, prop) in element.properties.iter().enumerate() {
                match prop {
                    Property::Scalar { ty, .. } => {
                        let n = ty.size();
                        let chunk = body.get(cursor..cursor + n).ok_or_else(|| truncated(record))?;
                        if ei == vertex_pos {
                            builder.set(roles[pi], ty.read_le(chunk));
                        }
                        cursor += n;
                    }
                    Property::List { count, item } => {
                        let n = count.size();
                        let chunk = body.get(cursor..cursor + n).ok_or_else(|| truncated(record))?;
                        let len = count.read_le(chunk) as usize;
                        cursor += n + len * item.size();
                        if cursor > body.len() {
                            return Err(truncated(record));
                        }
                    }
                }
            }
            if ei == vertex_pos {
                points.push(builder.finish(record)?);
            }
        }
    }
    if cursor != body.len() {
        return Err(header_error(format!(
            "binary body has {} trailing bytes beyond the declared records",
            body.len() - cursor
        )));
    }
    Ok(points)
}

pub(super) fn write<W: Write>(cloud: &PointCloud, format: CloudFormat, mut out: W) -> Result<()> {
    let colored = !cloud.points.is_empty() && cloud.points.iter().all(|p| p.color.is_some());
    let fmt = match format {
        CloudFormat::PlyAscii => "ascii",
        CloudFormat::PlyBinaryLe => "binary_little_endian",
        CloudFormat::XyzText => unreachable!("xyz handled elsewhere"),
    };
    let mut header = format!("ply\nformat {fmt} 1.0\ncomment epoch {}\n", format_epoch(&cloud.epoch));
    if !cloud.source_label.is_empty() && !cloud.source_label.contains('\n') {
        header.push_str(&format!("comment source {}\n", cloud.source_label));
    }
    header.push_str(&format!(
        "element vertex {}\nproperty double x\nproperty double y\nproperty double z\n",
        cloud.len()
    ));
    if colored {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    header.push_str("end_header\n");
    out.write_all(header.as_bytes())?;

    let mut buf = Vec::with_capacity(64 * 1024);
    for p in &cloud.points {
        match format {
            CloudFormat::PlyAscii => {
                use std::fmt::Write as _;
                let mut line = String::new();
                let _ = write!(line, "{} {} {}", p.x, p.y, p.z);
                if let (true, Some([r, g, b])) = (colored, p.color) {
                    let _ = write!(line, " {r} {g} {b}");
                }
                line.push('\n');
                buf.extend_from_slice(line.as_bytes());
            }
            _ => {
                for v in p.xyz() {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
                if let (true, Some(rgb)) = (colored, p.color) {
                    buf.extend_from_slice(&rgb);
                }
            }
        }
        if buf.len() >= 60 * 1024 {
            out.write_all(&buf)?;
            buf.clear();
        }
    }
    out.write_all(&buf)?;
    Ok(())
}
