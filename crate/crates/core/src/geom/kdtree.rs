//! Exact k-nearest-neighbour search with a median-split kd-tree.
//!
//! Results are ordered by `(squared distance, index)`, so equidistant points
//! are always reported lowest index first.

use std::cmp::Ordering;

use super::vector::dist2;
use crate::scalar::Real;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: T, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree<T, const D: usize> {
    points: Vec<[T; D]>,
    order: Vec<usize>,
    nodes: Vec<Node<T>>,
}

/// Bounded candidate list kept sorted by `(d2, index)`.
struct Candidates<T> {
    k: usize,
    items: Vec<(T, usize)>,
}

impl<T: Real> Candidates<T> {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn full(&self) -> bool {
        self.items.len() == self.k
    }

    #[inline]
    fn worst(&self) -> T {
        if self.full() {
            self.items[self.k - 1].0
        } else {
            T::infinity()
        }
    }

    #[inline]
    fn offer(&mut self, d2: T, idx: usize) {
        if self.full() {
            let (wd, wi) = self.items[self.k - 1];
            if d2 > wd || (d2 == wd && idx > wi) {
                return;
            }
        }
        let pos = self
            .items
            .partition_point(|&(d, i)| d < d2 || (d == d2 && i < idx));
        self.items.insert(pos, (d2, idx));
        self.items.truncate(self.k);
    }
}

impl<T: Real, const D: usize> KdTree<T, D> {
    pub fn new(points: Vec<[T; D]>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            Self::build(&points, &mut order, 0, points.len(), &mut nodes);
        }
        Self {
            points,
            order,
            nodes,
        }
    }

    fn build(
        points: &[[T; D]],
        order: &mut [usize],
        start: usize,
        end: usize,
        nodes: &mut Vec<Node<T>>,
    ) -> usize {
        let id = nodes.len();
        if end - start <= LEAF_SIZE {
            nodes.push(Node::Leaf { start, end });
            return id;
        }
        // Split along the axis of largest spread.
        let mut dim = 0;
        let mut best = T::neg_infinity();
        for d in 0..D {
            let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
            for &i in &order[start..end] {
                lo = lo.min(points[i][d]);
                hi = hi.max(points[i][d]);
            }
            if hi - lo > best {
                best = hi - lo;
                dim = d;
            }
        }
        let mid = (start + end) / 2;
        order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][dim]
                .partial_cmp(&points[b][dim])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let value = points[order[mid]][dim];
        nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = Self::build(points, order, start, mid, nodes);
        let right = Self::build(points, order, mid, end, nodes);
        nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[T; D]] {
        &self.points
    }

    /// The `k` nearest points to `query` as `(index, squared distance)`,
    /// nearest first. Returns fewer than `k` only when the tree is smaller.
    pub fn knn_with_dist2(&self, query: &[T; D], k: usize) -> Vec<(usize, T)> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        let mut cand = Candidates::new(k);
        self.search(0, query, &mut cand);
        cand.items.into_iter().map(|(d, i)| (i, d)).collect()
    }

    pub fn knn(&self, query: &[T; D], k: usize) -> Vec<usize> {
        self.knn_with_dist2(query, k)
            .into_iter()
            .map(|(i, _)| i)
            .collect()
    }

    /// Nearest point and its squared distance. Panics on an empty tree.
    pub fn nearest(&self, query: &[T; D]) -> (usize, T) {
        let mut cand = Candidates::new(1);
        self.search(0, query, &mut cand);
        let (d, i) = cand.items[0];
        (i, d)
    }

    fn search(&self, node: usize, q: &[T; D], cand: &mut Candidates<T>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    cand.offer(dist2(q, &self.points[i]), i);
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < T::zero() {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, q, cand);
                // `<=` keeps equidistant lower-index points reachable.
                if diff * diff <= cand.worst() {
                    self.search(far, q, cand);
                }
            }
        }
    }

    /// All indices with distance `<= radius`, ascending by index.
    pub fn within_radius(&self, query: &[T; D], radius: T) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.points.is_empty() {
            self.radius_search(0, query, radius * radius, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn radius_search(&self, node: usize, q: &[T; D], r2: T, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                out.extend(
                    self.order[start..end]
                        .iter()
                        .copied()
                        .filter(|&i| dist2(q, &self.points[i]) <= r2),
                );
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < T::zero() {
                    (left, right)
                } else {
                    (right, left)
                };
                self.radius_search(near, q, r2, out);
                if diff * diff <= r2 {
                    self.radius_search(far, q, r2, out);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(points: &[[f64; 3]], q: &[f64; 3], k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| {
            dist2(q, &points[a])
                .partial_cmp(&dist2(q, &points[b]))
                .unwrap()
                .then(a.cmp(&b))
        });
        idx.truncate(k);
        idx
    }

    #[test]
    fn one_dimensional_distances() {
        let tree = KdTree::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]]);
        assert_eq!(tree.knn(&[0.9, 0.0, 0.0], 2), vec![1, 0]);
        assert_eq!(tree.knn(&[0.9, 0.0, 0.0], 3), vec![1, 0, 2]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|i| if i % 2 == 0 { [1.0, 0.0] } else { [-1.0, 0.0] })
            .collect();
        let tree = KdTree::new(pts);
        assert_eq!(tree.knn(&[0.0, 0.0], 5), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn radius_search_matches_scan() {
        let pts: Vec<[f64; 3]> = (0..300)
            .map(|i| {
                let t = i as f64 * 0.37;
                [t.sin(), (1.3 * t).cos(), (0.7 * t).sin()]
            })
            .collect();
        let tree = KdTree::new(pts.clone());
        let q = [0.1, 0.2, -0.3];
        let expect: Vec<usize> = (0..pts.len())
            .filter(|&i| dist2(&q, &pts[i]) <= 0.25)
            .collect();
        assert_eq!(tree.within_radius(&q, 0.5), expect);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn knn_equals_brute_force(
            pts in prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 1..400),
            q in prop::array::uniform3(-1.2f64..1.2),
            k in 1usize..20,
        ) {
            let tree = KdTree::new(pts.clone());
            let k = k.min(pts.len());
            prop_assert_eq!(tree.knn(&q, k), brute(&pts, &q, k));
        }

        #[test]
        fn knn_on_grid_with_ties(k in 1usize..30, qx in -1i32..6, qy in -1i32..6) {
            // Integer lattice: many exactly equal distances.
            let pts: Vec<[f64; 3]> = (0..125)
                .map(|i| [(i % 5) as f64, ((i / 5) % 5) as f64, (i / 25) as f64])
                .collect();
            let tree = KdTree::new(pts.clone());
            let q = [qx as f64, qy as f64, 2.0];
            prop_assert_eq!(tree.knn(&q, k), brute(&pts, &q, k));
        }
    }
}
