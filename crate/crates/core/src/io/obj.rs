use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjData {
    pub vertices: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    /// Triangles (polygons are fan-triangulated) indexing `vertices`.
    pub triangles: Vec<[usize; 3]>,
}

pub fn parse(text: &str, path: &Path) -> Result<ObjData> {
    let mut out = ObjData::default();
    for (lineno, line) in text.lines().enumerate() {
        let bad = || Error::format(path, format!("line {}: malformed record", lineno + 1));
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some(kind @ ("v" | "vn")) => {
                let is_v = kind == "v";
                let mut c = [0.0; 3];
                for x in &mut c {
                    *x = tok.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
                }
                if is_v {
                    out.vertices.push(c);
                } else {
                    out.normals.push(c);
                }
            }
            Some("f") => {
                let mut idx = Vec::new();
                for t in tok {
                    let first = t.split('/').next().unwrap_or("");
                    let i: i64 = first.parse().map_err(|_| bad())?;
                    let n = out.vertices.len() as i64;
                    let i = if i < 0 { n + i } else { i - 1 };
                    if i < 0 || i >= n {
                        return Err(bad());
                    }
                    idx.push(i as usize);
                }
                if idx.len() < 3 {
                    return Err(bad());
                }
                for k in 1..idx.len() - 1 {
                    out.triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<ObjData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

/// ASCII OBJ with `v`, optional `vn` (same indexing as `v`) and `f` records.
pub fn encode(vertices: &[[f64; 3]], normals: Option<&[[f64; 3]]>, triangles: &[[usize; 3]]) -> String {
    let mut s = String::with_capacity(vertices.len() * 64 + triangles.len() * 32);
    for v in vertices {
        let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
    }
    if let Some(ns) = normals {
        for n in ns {
            let _ = writeln!(s, "vn {} {} {}", n[0], n[1], n[2]);
        }
    }
    for t in triangles {
        let [a, b, c] = t.map(|i| i + 1);
        if normals.is_some() {
            let _ = writeln!(s, "f {a}//{a} {b}//{b} {c}//{c}");
        } else {
            let _ = writeln!(s, "f {a} {b} {c}");
        }
    }
    s
}

pub fn write(
    path: &Path,
    vertices: &[[f64; 3]],
    normals: Option<&[[f64; 3]]>,
    triangles: &[[usize; 3]],
) -> Result<()> {
    std::fs::write(path, encode(vertices, normals, triangles)).map_err(|e| Error::io(path, e))
}
