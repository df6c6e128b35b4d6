//! Seeded samples of simple analytic surfaces, with their exact normals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type OrientedPoints = (Vec<[f64; 3]>, Vec<[f64; 3]>);

/// Uniform samples on the sphere of `radius` centered at the origin.
pub fn sphere_surface(n: usize, radius: f64, seed: u64) -> OrientedPoints {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    while points.len() < n {
        let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r < 1e-12 {
            continue;
        }
        let u = v.map(|x| x / r);
        points.push(u.map(|x| x * radius));
        normals.push(u);
    }
    (points, normals)
}

/// Uniform samples on the surface of the cube `[-half, half]^3`.
pub fn cube_surface(n: usize, half: f64, seed: u64) -> OrientedPoints {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let face = rng.random_range(0..6usize);
        let axis = face / 2;
        let sign = if face % 2 == 0 { -1.0 } else { 1.0 };
        let mut p = [0.0; 3];
        p[axis] = sign * half;
        p[(axis + 1) % 3] = rng.random_range(-half..=half);
        p[(axis + 2) % 3] = rng.random_range(-half..=half);
        let mut nrm = [0.0; 3];
        nrm[axis] = sign;
        points.push(p);
        normals.push(nrm);
    }
    (points, normals)
}
