//! Scalar fields that can be meshed.

use rayon::prelude::*;

use crate::net::MlpField;
use crate::scalar::Real;

/// A 3D scalar field evaluated in batches of `f64` points.
pub trait ImplicitField: Sync {
    fn values(&self, points: &[[f64; 3]]) -> Vec<f64>;

    fn gradients(&self, points: &[[f64; 3]]) -> Vec<[f64; 3]>;
}

const NET_CHUNK: usize = 4096;

impl<T: Real> ImplicitField for MlpField<T> {
    fn values(&self, points: &[[f64; 3]]) -> Vec<f64> {
        points
            .par_chunks(NET_CHUNK)
            .flat_map_iter(|chunk| {
                let pts: Vec<[T; 3]> = chunk.iter().map(|p| p.map(T::lit)).collect();
                MlpField::values(self, &pts).into_iter().map(|v| v.to_f64_lossy())
            })
            .collect()
    }

    fn gradients(&self, points: &[[f64; 3]]) -> Vec<[f64; 3]> {
        points
            .par_chunks(NET_CHUNK)
            .flat_map_iter(|chunk| {
                let pts: Vec<[T; 3]> = chunk.iter().map(|p| p.map(T::lit)).collect();
                self.eval_batch(&pts)
                    .into_iter()
                    .map(|s| s.gradient.map(|g| g.to_f64_lossy()))
            })
            .collect()
    }
}

/// Exact signed distance to a sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSdf {
    pub center: [f64; 3],
    pub radius: f64,
}

impl SphereSdf {
    pub fn new(radius: f64) -> Self {
        Self {
            center: [0.0; 3],
            radius,
        }
    }

    pub fn distance(&self, p: &[f64; 3]) -> f64 {
        dist(p, &self.center) - self.radius
    }
}

impl ImplicitField for SphereSdf {
    fn values(&self, points: &[[f64; 3]]) -> Vec<f64> {
        points.iter().map(|p| self.distance(p)).collect()
    }

    fn gradients(&self, points: &[[f64; 3]]) -> Vec<[f64; 3]> {
        points
            .iter()
            .map(|p| {
                let r = std::array::from_fn(|i| p[i] - self.center[i]);
                let n = dist(&r, &[0.0; 3]);
                if n > 0.0 {
                    r.map(|v| v / n)
                } else {
                    [0.0, 0.0, 1.0]
                }
            })
            .collect()
    }
}

/// Exact signed distance to an axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSdf {
    pub center: [f64; 3],
    pub half_extent: [f64; 3],
}

impl BoxSdf {
    pub fn cube(half: f64) -> Self {
        Self {
            center: [0.0; 3],
            half_extent: [half; 3],
        }
    }

    pub fn distance(&self, p: &[f64; 3]) -> f64 {
        let q: [f64; 3] = std::array::from_fn(|i| (p[i] - self.center[i]).abs() - self.half_extent[i]);
        let outside = q.map(|v| v.max(0.0));
        let inside = q[0].max(q[1]).max(q[2]).min(0.0);
        dist(&outside, &[0.0; 3]) + inside
    }

    fn gradient(&self, p: &[f64; 3]) -> [f64; 3] {
        let d: [f64; 3] = std::array::from_fn(|i| p[i] - self.center[i]);
        let q: [f64; 3] = std::array::from_fn(|i| d[i].abs() - self.half_extent[i]);
        let sign = d.map(|v| if v < 0.0 { -1.0 } else { 1.0 });
        if q.iter().any(|&v| v > 0.0) {
            let o = q.map(|v| v.max(0.0));
            let n = dist(&o, &[0.0; 3]);
            std::array::from_fn(|i| sign[i] * o[i] / n)
        } else {
            let mut axis = 0;
            for i in 1..3 {
                if q[i] > q[axis] {
                    axis = i;
                }
            }
            let mut g = [0.0; 3];
            g[axis] = sign[axis];
            g
        }
    }
}

impl ImplicitField for BoxSdf {
    fn values(&self, points: &[[f64; 3]]) -> Vec<f64> {
        points.iter().map(|p| self.distance(p)).collect()
    }

    fn gradients(&self, points: &[[f64; 3]]) -> Vec<[f64; 3]> {
        points.iter().map(|p| self.gradient(p)).collect()
    }
}

/// A constant field, useful for the no-crossing case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField(pub f64);

impl ImplicitField for ConstantField {
    fn values(&self, points: &[[f64; 3]]) -> Vec<f64> {
        vec![self.0; points.len()]
    }

    fn gradients(&self, points: &[[f64; 3]]) -> Vec<[f64; 3]> {
        vec![[0.0; 3]; points.len()]
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_distance_examples() {
        let b = BoxSdf::cube(0.5);
        assert_eq!(b.distance(&[0.0; 3]), -0.5);
        assert_eq!(b.distance(&[1.0, 0.0, 0.0]), 0.5);
        assert!((b.distance(&[1.0, 1.0, 0.0]) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.gradient(&[0.1, 0.3, -0.2]), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn analytic_gradients_match_fd() {
        let h = 1e-6;
        let fields: [&dyn ImplicitField; 2] = [&SphereSdf::new(0.4), &BoxSdf::cube(0.3)];
        for f in fields {
            for p in [[0.21, -0.13, 0.05], [0.5, 0.41, -0.37], [-0.05, 0.02, 0.29]] {
                let g = f.gradients(&[p])[0];
                for i in 0..3 {
                    let mut a = p;
                    let mut b = p;
                    a[i] += h;
                    b[i] -= h;
                    let fd = (f.values(&[a])[0] - f.values(&[b])[0]) / (2.0 * h);
                    assert!((fd - g[i]).abs() < 1e-6, "{p:?} {i}: {fd} vs {}", g[i]);
                }
            }
        }
    }

    #[test]
    fn network_field_matches_direct_evaluation() {
        let net = MlpField::<f64>::plane(&[0.0, 0.6, 0.8], -0.1, 100.0).unwrap();
        let pts = vec![[0.1, 0.2, 0.3], [-0.5, 0.0, 1.0]];
        let v = ImplicitField::values(&net, &pts);
        assert!((v[0] - (0.12 + 0.24 - 0.1)).abs() < 1e-12);
        let g = ImplicitField::gradients(&net, &pts);
        assert!((g[1][1] - 0.6).abs() < 1e-12 && (g[1][2] - 0.8).abs() < 1e-12);
    }
}
