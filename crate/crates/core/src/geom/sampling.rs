//! Query sampling around the input points.
//!
//! Each input point spawns `per_point` queries drawn from an isotropic
//! Gaussian whose standard deviation is the distance to the point's
//! `sigma_k`-th nearest neighbour. Every query caches its nearest input point
//! and the neighbourhood of that point, which the filtering losses reuse for
//! the whole run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub per_point: usize,
    pub sigma_k: usize,
    /// Neighbourhood size cached per query.
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            per_point: 25,
            sigma_k: 50,
            k_neighbors: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryBatch<T, const D: usize> {
    pub queries: Vec<[T; D]>,
    /// Nearest input point of each query.
    pub nn_index: Vec<usize>,
    /// Row-major `len() x k` neighbourhoods of `nn_index`, nearest first.
    pub neighbor_indices: Vec<usize>,
    pub k: usize,
}

impl<T: Real, const D: usize> QueryBatch<T, D> {
    pub fn empty(k: usize) -> Self {
        Self {
            queries: Vec::new(),
            nn_index: Vec::new(),
            neighbor_indices: Vec::new(),
            k,
        }
    }

    /// Builds a batch for explicit query positions.
    pub fn from_queries(cloud: &PointCloud<T, D>, queries: Vec<[T; D]>, k: usize) -> Result<Self> {
        if k == 0 || k > cloud.len() {
            return Err(Error::input(format!(
                "neighbourhood size {k} invalid for a cloud of {} points",
                cloud.len()
            )));
        }
        let mut nn_index = Vec::with_capacity(queries.len());
        let mut neighbor_indices = Vec::with_capacity(queries.len() * k);
        for q in &queries {
            let nn = cloud.nearest(q);
            nn_index.push(nn);
            neighbor_indices.extend(cloud.knn(&cloud.points()[nn], k)?);
        }
        Ok(Self {
            queries,
            nn_index,
            neighbor_indices,
            k,
        })
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbor_indices[i * self.k..(i + 1) * self.k]
    }

    /// Sub-batch with the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let mut out = Self::empty(self.k);
        for &r in rows {
            out.queries.push(self.queries[r]);
            out.nn_index.push(self.nn_index[r]);
            out.neighbor_indices.extend_from_slice(self.neighbors(r));
        }
        out
    }
}

/// Per-point standard deviation: distance to the `sigma_k`-th nearest
/// neighbour, not counting the point itself.
pub fn sample_sigmas<T: Real, const D: usize>(
    cloud: &PointCloud<T, D>,
    sigma_k: usize,
) -> Result<Vec<T>> {
    if sigma_k == 0 {
        return Err(Error::input("sigma_k must be at least 1"));
    }
    cloud
        .points()
        .iter()
        .map(|p| {
            let nn = cloud.tree().knn_with_dist2(p, sigma_k + 1);
            if nn.len() < sigma_k + 1 {
                return Err(Error::input(format!(
                    "sigma_k = {sigma_k} needs more than {} points",
                    cloud.len()
                )));
            }
            Ok(nn[sigma_k].1.sqrt())
        })
        .collect()
}

pub fn sample_queries<T: Real, const D: usize>(
    cloud: &PointCloud<T, D>,
    cfg: &SamplingConfig,
) -> Result<QueryBatch<T, D>> {
    if cfg.per_point == 0 {
        return Ok(QueryBatch::empty(cfg.k_neighbors));
    }
    let sigmas = sample_sigmas(cloud, cfg.sigma_k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut queries = Vec::with_capacity(cloud.len() * cfg.per_point);
    for (p, &s) in cloud.points().iter().zip(&sigmas) {
        for _ in 0..cfg.per_point {
            queries.push(std::array::from_fn(|i| {
                let z: f64 = rng.sample(StandardNormal);
                p[i] + s * T::lit(z)
            }));
        }
    }
    QueryBatch::from_queries(cloud, queries, cfg.k_neighbors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vector::dist2;

    fn lattice() -> PointCloud<f64, 3> {
        let d = 0.05;
        let pts = (0..400)
            .map(|i| [(i % 20) as f64 * d, (i / 20) as f64 * d, 0.0])
            .collect();
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn zero_per_point_is_empty() {
        let cfg = SamplingConfig {
            per_point: 0,
            ..Default::default()
        };
        assert!(sample_queries(&lattice(), &cfg).unwrap().is_empty());
    }

    #[test]
    fn sigma_is_distance_to_kth_neighbour() {
        let cloud = lattice();
        let sigma_k = 12;
        let sig = sample_sigmas(&cloud, sigma_k).unwrap();
        for (i, p) in cloud.points().iter().enumerate() {
            let mut d: Vec<f64> = cloud
                .points()
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| dist2(p, q))
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(sig[i], d[sigma_k - 1].sqrt());
        }
    }

    #[test]
    fn sample_spread_follows_sigma() {
        let cloud = lattice();
        let cfg = SamplingConfig {
            per_point: 400,
            sigma_k: 12,
            k_neighbors: 4,
            seed: 9,
        };
        let sig = sample_sigmas(&cloud, cfg.sigma_k).unwrap();
        let batch = sample_queries(&cloud, &cfg).unwrap();
        let p = cloud.points()[210];
        let qs = &batch.queries[210 * 400..211 * 400];
        let var = qs.iter().map(|q| dist2(q, &p)).sum::<f64>() / (3.0 * 400.0);
        assert!((var.sqrt() / sig[210] - 1.0).abs() < 0.08);
    }

    #[test]
    fn deterministic_and_consistent() {
        let cloud = lattice();
        let cfg = SamplingConfig {
            per_point: 3,
            sigma_k: 10,
            k_neighbors: 8,
            seed: 42,
        };
        let a = sample_queries(&cloud, &cfg).unwrap();
        let b = sample_queries(&cloud, &cfg).unwrap();
        assert_eq!(a, b);
        for i in 0..a.len() {
            let q = a.queries[i];
            let best = (0..cloud.len())
                .min_by(|&x, &y| {
                    dist2(&q, &cloud.points()[x])
                        .partial_cmp(&dist2(&q, &cloud.points()[y]))
                        .unwrap()
                        .then(x.cmp(&y))
                })
                .unwrap();
            assert_eq!(a.nn_index[i], best);
            assert!(a.neighbors(i).contains(&a.nn_index[i]));
        }
        let c = sample_queries(&cloud, &SamplingConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.queries, c.queries);
    }

    #[test]
    fn sigma_k_too_large() {
        let cloud = PointCloud::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(sample_sigmas(&cloud, 3).is_err());
        assert!(sample_sigmas(&cloud, 2).is_ok());
    }
}
