//! Iso-surface extraction with marching cubes and mesh surface sampling.
//!
//! Cell corners are numbered 0..8 as (x,y,z) offsets
//! `000 100 110 010 001 101 111 011`; edges 0..12 join corners
//! `01 12 23 30 45 56 67 74 04 15 26 37`.

mod field;
mod tables;

use std::collections::HashMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use field::{BoxSdf, ConstantField, ImplicitField, SphereSdf};

use crate::error::{Error, Result};
use crate::io;
use tables::{EDGE_TABLE, TRIANGLE_TABLE};

/// Triangles below this area are dropped.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Edge crossings are snapped to a node when the sliver they would form is
/// about this small.
const SNAP_AREA: f64 = 1e-10;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub normals: Option<Vec<[f64; 3]>>,
}

impl Mesh {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self {
            vertices,
            triangles,
            normals: None,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::input(format!("triangle {t:?} indexes past {n} vertices")));
        }
        if let Some(ns) = &self.normals {
            if ns.len() != n {
                return Err(Error::input("normal count differs from vertex count"));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, t: usize) -> [[f64; 3]; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    /// Unnormalized face normal (twice the area).
    pub fn face_cross(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.triangle(t);
        cross(&sub(&b, &a), &sub(&c, &a))
    }

    pub fn face_area(&self, t: usize) -> f64 {
        0.5 * norm(&self.face_cross(t))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.face_area(t)).sum()
    }

    /// `V - E + F` over referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        let mut edges = std::collections::HashSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                used[t[k]] = true;
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - edges.len() as i64 + self.triangles.len() as i64
    }

    /// True when every edge is shared by exactly two triangles.
    pub fn is_closed(&self) -> bool {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        !count.is_empty() && count.values().all(|&c| c == 2)
    }

    /// Reads an OBJ or PLY mesh, triangulating polygons.
    pub fn read(path: &Path) -> Result<Self> {
        let mesh = match io::extension(path).as_str() {
            "obj" => {
                let d = io::obj::read(path)?;
                let normals = (d.normals.len() == d.vertices.len() && !d.normals.is_empty()).then_some(d.normals);
                Self {
                    vertices: d.vertices,
                    triangles: d.triangles,
                    normals,
                }
            }
            "ply" => {
                let d = io::ply::read(path)?;
                let mut triangles = Vec::new();
                for f in &d.faces {
                    for k in 1..f.len().saturating_sub(1) {
                        triangles.push([f[0], f[k], f[k + 1]]);
                    }
                }
                Self {
                    vertices: d.vertices,
                    triangles,
                    normals: d.normals,
                }
            }
            other => return Err(Error::format(path, format!("unsupported mesh extension `{other}`"))),
        };
        mesh.validate().map_err(|e| Error::format(path, e.to_string()))?;
        Ok(mesh)
    }

    /// Writes ASCII OBJ or binary PLY depending on the extension.
    pub fn write(&self, path: &Path) -> Result<()> {
        let normals = self.normals.as_deref();
        match io::extension(path).as_str() {
            "obj" => io::obj::write(path, &self.vertices, normals, &self.triangles),
            "ply" => io::ply::write(path, &self.vertices, normals, &self.triangles),
            other => Err(Error::format(path, format!("unsupported mesh extension `{other}`"))),
        }
    }

    /// Axis-aligned cube `[-half, half]^3` as 12 outward-facing triangles.
    pub fn cube(half: f64) -> Self {
        let vertices = (0..8)
            .map(|i| [i & 1, (i >> 1) & 1, (i >> 2) & 1].map(|b| if b == 1 { half } else { -half }))
            .collect();
        let quads = [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ];
        let triangles = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        Self {
            vertices,
            triangles,
            normals: None,
        }
    }
}

/// Regular sampling grid: `resolution` nodes per axis spanning `min..=max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub resolution: usize,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::cube(256, 0.55)
    }
}

impl GridSpec {
    pub fn cube(resolution: usize, half: f64) -> Self {
        Self {
            resolution,
            min: [-half; 3],
            max: [half; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 8 {
            return Err(Error::input(format!("grid resolution {} is below 8", self.resolution)));
        }
        if (0..3).any(|i| !(self.max[i] > self.min[i]) || !self.min[i].is_finite() || !self.max[i].is_finite()) {
            return Err(Error::input("grid bounds must be finite with min < max"));
        }
        Ok(())
    }

    pub fn spacing(&self) -> [f64; 3] {
        std::array::from_fn(|i| (self.max[i] - self.min[i]) / (self.resolution - 1) as f64)
    }

    pub fn cell_diagonal(&self) -> f64 {
        norm(&self.spacing())
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let h = self.spacing();
        [
            self.min[0] + i as f64 * h[0],
            self.min[1] + j as f64 * h[1],
            self.min[2] + k as f64 * h[2],
        ]
    }
}

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Each cell edge as (offset of its lower node, axis).
const EDGES: [([usize; 3], usize); 12] = [
    ([0, 0, 0], 0),
    ([1, 0, 0], 1),
    ([0, 1, 0], 0),
    ([0, 0, 0], 1),
    ([0, 0, 1], 0),
    ([1, 0, 1], 1),
    ([0, 1, 1], 0),
    ([0, 0, 1], 1),
    ([0, 0, 0], 2),
    ([1, 0, 0], 2),
    ([1, 1, 0], 2),
    ([0, 1, 0], 2),
];

/// Samples `field` on `grid`, z-slab by z-slab. Index `(k * n + j) * n + i`.
pub fn sample_grid(field: &dyn ImplicitField, grid: &GridSpec) -> Result<Vec<f64>> {
    grid.validate()?;
    let n = grid.resolution;
    let slabs: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let pts: Vec<[f64; 3]> = (0..n * n).map(|ji| grid.node(ji % n, ji / n, k)).collect();
            field.values(&pts)
        })
        .collect();
    let values: Vec<f64> = slabs.concat();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { term: "grid", index: i });
    }
    Ok(values)
}

/// Extracts the `iso` level set of `field` over `grid`.
///
/// Cells whose corner is below `iso` count as inside. Triangles wind
/// counter-clockwise seen from the side where the field is larger, and vertex
/// normals are the normalized field gradient.
pub fn marching_cubes(field: &dyn ImplicitField, grid: &GridSpec, iso: f64) -> Result<Mesh> {
    if !iso.is_finite() {
        return Err(Error::input("iso level must be finite"));
    }
    let values = sample_grid(field, grid)?;
    let mut mesh = polygonize(&values, grid, iso);
    if mesh.is_empty() {
        log::warn!("no crossing of iso level {iso} inside the grid; mesh is empty");
        return Ok(mesh);
    }
    let grads = field.gradients(&mesh.vertices);
    mesh.normals = Some(
        grads
            .iter()
            .map(|g| {
                let n = norm(g);
                if n > 0.0 && n.is_finite() {
                    g.map(|v| v / n)
                } else {
                    [0.0; 3]
                }
            })
            .collect(),
    );
    Ok(mesh)
}

/// Marching cubes over precomputed node values (see [`sample_grid`]).
pub fn polygonize(values: &[f64], grid: &GridSpec, iso: f64) -> Mesh {
    let n = grid.resolution;
    assert_eq!(values.len(), n * n * n, "value count does not match grid");
    let idx = |i: usize, j: usize, k: usize| (k * n + j) * n + i;
    let inside = |v: f64| v < iso;

    // One vertex per crossing edge, numbered in (node index, axis) order.
    // Crossings within `snap` of a node move onto it and are shared, so
    // slivers around near-iso nodes collapse instead of leaving holes.
    let h = grid.spacing();
    let snap = (SNAP_AREA.sqrt() / h[0].min(h[1]).min(h[2])).clamp(1e-3, 0.1);
    let node_key = |a: usize| 3 * n * n * n + a;
    let per_slab: Vec<Vec<(usize, usize, [f64; 3])>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::new();
            for j in 0..n {
                for i in 0..n {
                    let a = idx(i, j, k);
                    for axis in 0..3 {
                        let mut o = [i, j, k];
                        o[axis] += 1;
                        if o[axis] >= n {
                            continue;
                        }
                        let b = idx(o[0], o[1], o[2]);
                        let (va, vb) = (values[a], values[b]);
                        if inside(va) == inside(vb) {
                            continue;
                        }
                        let t = (iso - va) / (vb - va);
                        let pa = grid.node(i, j, k);
                        let pb = grid.node(o[0], o[1], o[2]);
                        let (key, p) = if t < snap {
                            (node_key(a), pa)
                        } else if t > 1.0 - snap {
                            (node_key(b), pb)
                        } else {
                            (3 * a + axis, std::array::from_fn(|c| pa[c] + t * (pb[c] - pa[c])))
                        };
                        out.push((3 * a + axis, key, p));
                    }
                }
            }
            out
        })
        .collect();
    let mut vertices = Vec::new();
    let mut by_key = HashMap::new();
    let mut edge_vertex = HashMap::new();
    for (edge, key, p) in per_slab.into_iter().flatten() {
        let v = *by_key.entry(key).or_insert_with(|| {
            vertices.push(p);
            vertices.len() - 1
        });
        edge_vertex.insert(edge, v);
    }

    let triangles: Vec<[usize; 3]> = (0..n - 1)
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::new();
            for j in 0..n - 1 {
                for i in 0..n - 1 {
                    let mut case = 0usize;
                    for (c, o) in CORNERS.iter().enumerate() {
                        if inside(values[idx(i + o[0], j + o[1], k + o[2])]) {
                            case |= 1 << c;
                        }
                    }
                    if EDGE_TABLE[case] == 0 {
                        continue;
                    }
                    let edge_id = |e: usize| {
                        let (o, axis) = EDGES[e];
                        edge_vertex[&(3 * idx(i + o[0], j + o[1], k + o[2]) + axis)]
                    };
                    for tri in TRIANGLE_TABLE[case].chunks(3) {
                        if tri[0] < 0 {
                            break;
                        }
                        // Reverse the table winding so faces point toward increasing values.
                        let t = [edge_id(tri[0] as usize), edge_id(tri[2] as usize), edge_id(tri[1] as usize)];
                        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                            continue;
                        }
                        let area = 0.5 * norm(&cross(
                            &sub(&vertices[t[1]], &vertices[t[0]]),
                            &sub(&vertices[t[2]], &vertices[t[0]]),
                        ));
                        if area >= MIN_TRIANGLE_AREA {
                            out.push(t);
                        }
                    }
                }
            }
            out
        })
        .flatten()
        .collect();

    compact(vertices, drop_fins(triangles))
}

/// Removes pairs of triangles over the same three vertices, which snapping
/// can produce and which enclose no area.
fn drop_fins(triangles: Vec<[usize; 3]>) -> Vec<[usize; 3]> {
    let key = |t: &[usize; 3]| {
        let mut k = *t;
        k.sort_unstable();
        k
    };
    let mut count: HashMap<[usize; 3], usize> = HashMap::new();
    for t in &triangles {
        *count.entry(key(t)).or_default() += 1;
    }
    if count.len() == triangles.len() {
        return triangles;
    }
    triangles.into_iter().filter(|t| count[&key(t)] == 1).collect()
}

/// Drops vertices no triangle references.
fn compact(vertices: Vec<[f64; 3]>, mut triangles: Vec<[usize; 3]>) -> Mesh {
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::new();
    for t in triangles.iter_mut() {
        for v in t.iter_mut() {
            if remap[*v] == usize::MAX {
                remap[*v] = kept.len();
                kept.push(vertices[*v]);
            }
            *v = remap[*v];
        }
    }
    Mesh {
        vertices: kept,
        triangles,
        normals: None,
    }
}

/// Points sampled uniformly by area, with a unit normal per point.
///
/// Normals interpolate the vertex normals when the mesh has them and are the
/// face normal otherwise.
pub fn sample_mesh_surface(mesh: &Mesh, n: usize, seed: u64) -> Result<(Vec<[f64; 3]>, Vec<[f64; 3]>)> {
    mesh.validate()?;
    if mesh.is_empty() {
        return Err(Error::input("cannot sample an empty mesh"));
    }
    let areas: Vec<f64> = (0..mesh.triangles.len()).map(|t| mesh.face_area(t)).collect();
    let choose = WeightedIndex::new(&areas).map_err(|e| Error::input(format!("mesh areas: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let t = choose.sample(&mut rng);
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        let w = [1.0 - s, s * (1.0 - r2), s * r2];
        let [a, b, c] = mesh.triangle(t);
        points.push(std::array::from_fn(|i| w[0] * a[i] + w[1] * b[i] + w[2] * c[i]));
        let face = unit(&mesh.face_cross(t));
        let nrm = match &mesh.normals {
            Some(ns) => {
                let tri = mesh.triangles[t];
                let v: [f64; 3] = std::array::from_fn(|i| (0..3).map(|k| w[k] * ns[tri[k]][i]).sum());
                if norm(&v) > 1e-12 {
                    unit(&v)
                } else {
                    face
                }
            }
            None => face,
        };
        normals.push(nrm);
    }
    Ok((points, normals))
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &[f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn unit(a: &[f64; 3]) -> [f64; 3] {
    let n = norm(a);
    if n > 0.0 {
        a.map(|v| v / n)
    } else {
        [0.0; 3]
    }
}
