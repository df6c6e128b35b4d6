//! PLY reader (ascii and binary, any endianness) and binary PLY writer.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlyData {
    pub vertices: Vec<[f64; 3]>,
    pub normals: Option<Vec<[f64; 3]>>,
    pub faces: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Format {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
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
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
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

    fn decode(self, b: &[u8], fmt: Format) -> f64 {
        macro_rules! num {
            ($t:ty, $n:expr) => {{
                let a: [u8; $n] = b[..$n].try_into().unwrap();
                (if fmt == Format::BinaryBe {
                    <$t>::from_be_bytes(a)
                } else {
                    <$t>::from_le_bytes(a)
                }) as f64
            }};
        }
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => num!(i16, 2),
            Scalar::U16 => num!(u16, 2),
            Scalar::I32 => num!(i32, 4),
            Scalar::U32 => num!(u32, 4),
            Scalar::F32 => num!(f32, 4),
            Scalar::F64 => num!(f64, 8),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

/// Sequential value source over the body, ascii tokens or binary bytes.
struct Body<'a> {
    fmt: Format,
    bytes: &'a [u8],
    pos: usize,
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl Body<'_> {
    fn next(&mut self, ty: Scalar) -> Option<f64> {
        match self.fmt {
            Format::Ascii => self.tokens.next()?.parse().ok(),
            _ => {
                let n = ty.size();
                let b = self.bytes.get(self.pos..self.pos + n)?;
                self.pos += n;
                Some(ty.decode(b, self.fmt))
            }
        }
    }
}

pub fn parse(data: &[u8], path: &Path) -> Result<PlyData> {
    let bad = |m: &str| Error::format(path, m.to_string());
    let header_end = find_header_end(data).ok_or_else(|| bad("missing end_header"))?;
    let header = std::str::from_utf8(&data[..header_end.0]).map_err(|_| bad("header is not utf-8"))?;
    let mut lines = header.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(bad("missing `ply` magic"));
    }
    let mut fmt = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["format", f, _] => {
                fmt = Some(match *f {
                    "ascii" => Format::Ascii,
                    "binary_little_endian" => Format::BinaryLe,
                    "binary_big_endian" => Format::BinaryBe,
                    _ => return Err(bad("unknown format")),
                })
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| bad("bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", c, i, name] => {
                let el = elements.last_mut().ok_or_else(|| bad("property before element"))?;
                el.props.push(Property::List {
                    name: name.to_string(),
                    count: Scalar::parse(c).ok_or_else(|| bad("bad list count type"))?,
                    item: Scalar::parse(i).ok_or_else(|| bad("bad list item type"))?,
                });
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or_else(|| bad("property before element"))?;
                el.props.push(Property::Scalar {
                    name: name.to_string(),
                    ty: Scalar::parse(ty).ok_or_else(|| bad("bad property type"))?,
                });
            }
            _ => {}
        }
    }
    let fmt = fmt.ok_or_else(|| bad("missing format line"))?;
    let body_bytes = &data[header_end.1..];
    let text = if fmt == Format::Ascii {
        std::str::from_utf8(body_bytes).map_err(|_| bad("ascii body is not utf-8"))?
    } else {
        ""
    };
    let mut body = Body {
        fmt,
        bytes: body_bytes,
        pos: 0,
        tokens: text.split_ascii_whitespace(),
    };

    let mut out = PlyData::default();
    for el in &elements {
        let col = |n: &str| {
            el.props
                .iter()
                .position(|p| matches!(p, Property::Scalar { name, .. } if name == n))
        };
        let xyz = [col("x"), col("y"), col("z")];
        let nxyz = [col("nx"), col("ny"), col("nz")];
        let has_normals = el.name == "vertex" && nxyz.iter().all(Option::is_some);
        if has_normals {
            out.normals = Some(Vec::with_capacity(el.count));
        }
        let mut row = vec![0.0; el.props.len()];
        for _ in 0..el.count {
            let mut list = Vec::new();
            for (k, prop) in el.props.iter().enumerate() {
                match prop {
                    Property::Scalar { ty, .. } => {
                        row[k] = body.next(*ty).ok_or_else(|| bad("truncated body"))?;
                    }
                    Property::List { name, count, item } => {
                        let n = body.next(*count).ok_or_else(|| bad("truncated body"))? as usize;
                        let keep = name == "vertex_indices" || name == "vertex_index";
                        for _ in 0..n {
                            let v = body.next(*item).ok_or_else(|| bad("truncated body"))?;
                            if keep {
                                list.push(v as usize);
                            }
                        }
                    }
                }
            }
            if el.name == "vertex" {
                if xyz.iter().any(Option::is_none) {
                    return Err(bad("vertex element lacks x/y/z"));
                }
                out.vertices.push(std::array::from_fn(|i| row[xyz[i].unwrap()]));
                if let Some(ns) = out.normals.as_mut() {
                    ns.push(std::array::from_fn(|i| row[nxyz[i].unwrap()]));
                }
            } else if el.name == "face" {
                out.faces.push(list);
            }
        }
    }
    let nv = out.vertices.len();
    if out.faces.iter().flatten().any(|&i| i >= nv) {
        return Err(bad("face index out of range"));
    }
    Ok(out)
}

/// Returns (end of header text, start of body).
fn find_header_end(data: &[u8]) -> Option<(usize, usize)> {
    let needle = b"end_header";
    let at = data.windows(needle.len()).position(|w| w == needle)?;
    let mut body = at + needle.len();
    if data.get(body) == Some(&b'\r') {
        body += 1;
    }
    if data.get(body) == Some(&b'\n') {
        body += 1;
    }
    Some((at, body))
}

pub fn read(path: &Path) -> Result<PlyData> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse(&data, path)
}

/// Binary little-endian PLY with float positions, optional float normals and
/// `uchar`/`int` triangle lists.
pub fn encode(vertices: &[[f64; 3]], normals: Option<&[[f64; 3]]>, triangles: &[[usize; 3]]) -> Vec<u8> {
    let mut h = String::from("ply\nformat binary_little_endian 1.0\ncomment implicit-filter\n");
    h.push_str(&format!("element vertex {}\n", vertices.len()));
    h.push_str("property float x\nproperty float y\nproperty float z\n");
    if normals.is_some() {
        h.push_str("property float nx\nproperty float ny\nproperty float nz\n");
    }
    h.push_str(&format!("element face {}\n", triangles.len()));
    h.push_str("property list uchar int vertex_indices\nend_header\n");
    let mut out = h.into_bytes();
    for (i, v) in vertices.iter().enumerate() {
        for c in v {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        if let Some(ns) = normals {
            for c in &ns[i] {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
    }
    for t in triangles {
        out.push(3);
        for &i in t {
            out.extend_from_slice(&(i as i32).to_le_bytes());
        }
    }
    out
}

pub fn write(
    path: &Path,
    vertices: &[[f64; 3]],
    normals: Option<&[[f64; 3]]>,
    triangles: &[[usize; 3]],
) -> Result<()> {
    std::fs::write(path, encode(vertices, normals, triangles)).map_err(|e| Error::io(path, e))
}
