use super::kdtree::KdTree;
use super::vector::is_finite;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Raw input points together with their spatial index.
///
/// Immutable after construction; all queries are `&self`.
#[derive(Debug, Clone)]
pub struct PointCloud<T, const D: usize> {
    tree: KdTree<T, D>,
}

/// Maps original coordinates to normalized ones: `(p - center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTransform<T, const D: usize> {
    pub center: [T; D],
    pub scale: T,
}

impl<T: Real, const D: usize> NormalizationTransform<T, D> {
    pub fn identity() -> Self {
        Self {
            center: [T::zero(); D],
            scale: T::one(),
        }
    }

    pub fn apply(&self, p: &[T; D]) -> [T; D] {
        std::array::from_fn(|i| (p[i] - self.center[i]) / self.scale)
    }

    pub fn invert(&self, p: &[T; D]) -> [T; D] {
        std::array::from_fn(|i| p[i] * self.scale + self.center[i])
    }
}

impl<T: Real, const D: usize> PointCloud<T, D> {
    pub fn new(points: Vec<[T; D]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::input("point cloud is empty"));
        }
        if let Some(i) = points.iter().position(|p| !is_finite(p)) {
            return Err(Error::input(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self {
            tree: KdTree::new(points),
        })
    }

    pub fn points(&self) -> &[[T; D]] {
        self.tree.points()
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn tree(&self) -> &KdTree<T, D> {
        &self.tree
    }

    /// Indices of the `k` nearest points, nearest first, ties by lower index.
    pub fn knn(&self, query: &[T; D], k: usize) -> Result<Vec<usize>> {
        if k > self.len() {
            return Err(Error::input(format!(
                "asked for {k} neighbours in a cloud of {} points",
                self.len()
            )));
        }
        Ok(self.tree.knn(query, k))
    }

    pub fn nearest(&self, query: &[T; D]) -> usize {
        self.tree.nearest(query).0
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> ([T; D], [T; D]) {
        let mut lo = [T::infinity(); D];
        let mut hi = [T::neg_infinity(); D];
        for p in self.points() {
            for i in 0..D {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }

    /// Centers the bounding box at the origin and scales the largest
    /// half-extent to 0.5.
    pub fn normalize(&self) -> Result<(Self, NormalizationTransform<T, D>)> {
        let (lo, hi) = self.bounds();
        let center: [T; D] = std::array::from_fn(|i| (lo[i] + hi[i]) * T::lit(0.5));
        let extent = (0..D).map(|i| hi[i] - lo[i]).fold(T::zero(), T::max);
        if !(extent > T::zero()) {
            return Err(Error::input("point cloud has zero extent"));
        }
        let transform = NormalizationTransform {
            center,
            scale: extent,
        };
        let points = self.points().iter().map(|p| transform.apply(p)).collect();
        Ok((Self::new(points)?, transform))
    }

    pub fn transformed(&self, t: &NormalizationTransform<T, D>) -> Result<Self> {
        Self::new(self.points().iter().map(|p| t.apply(p)).collect())
    }
}
