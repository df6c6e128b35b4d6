//! Point-set distances, normal consistency, F-score and edge Chamfer distance.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChamferOrder {
    L1,
    L2,
}

fn non_empty(name: &str, pts: &[[f64; 3]]) -> Result<()> {
    if pts.is_empty() {
        return Err(Error::input(format!("{name} point set is empty")));
    }
    Ok(())
}

/// Distance from every point of `from` to its nearest point in `to`, with that index.
pub fn nearest_neighbors(from: &[[f64; 3]], to: &[[f64; 3]]) -> Result<Vec<(usize, f64)>> {
    non_empty("target", to)?;
    let tree = KdTree::new(to.to_vec());
    Ok(from
        .par_iter()
        .map(|p| {
            let (i, d2) = tree.nearest(p);
            (i, d2.sqrt())
        })
        .collect())
}

fn nn_distances(from: &[[f64; 3]], to: &[[f64; 3]]) -> Result<Vec<f64>> {
    non_empty("source", from)?;
    Ok(nearest_neighbors(from, to)?.into_iter().map(|(_, d)| d).collect())
}

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

/// Mean nearest-neighbour distance from `a` to `b` (squared for L2).
pub fn one_sided_chamfer(a: &[[f64; 3]], b: &[[f64; 3]], order: ChamferOrder) -> Result<f64> {
    let d = nn_distances(a, b)?;
    Ok(match order {
        ChamferOrder::L1 => mean(d.iter().copied(), d.len()),
        ChamferOrder::L2 => mean(d.iter().map(|x| x * x), d.len()),
    })
}

/// Average of the two one-sided Chamfer distances.
pub fn chamfer(a: &[[f64; 3]], b: &[[f64; 3]], order: ChamferOrder) -> Result<f64> {
    Ok(0.5 * (one_sided_chamfer(a, b, order)? + one_sided_chamfer(b, a, order)?))
}

/// Largest nearest-neighbour distance from `a` to `b`.
pub fn one_sided_hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64> {
    Ok(nn_distances(a, b)?.into_iter().fold(0.0, f64::max))
}

pub fn hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64> {
    Ok(one_sided_hausdorff(a, b)?.max(one_sided_hausdorff(b, a)?))
}

fn check_normals(pts: &[[f64; 3]], normals: &[[f64; 3]]) -> Result<()> {
    if pts.len() != normals.len() {
        return Err(Error::input(format!(
            "{} points but {} normals",
            pts.len(),
            normals.len()
        )));
    }
    Ok(())
}

fn abs_dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).abs()
}

/// Mean `|n_x . n_NN(x)|` over both directions; normals must be unit length.
pub fn normal_consistency(
    a: &[[f64; 3]],
    a_normals: &[[f64; 3]],
    b: &[[f64; 3]],
    b_normals: &[[f64; 3]],
) -> Result<f64> {
    check_normals(a, a_normals)?;
    check_normals(b, b_normals)?;
    non_empty("source", a)?;
    let one = |p: &[[f64; 3]], pn: &[[f64; 3]], q: &[[f64; 3]], qn: &[[f64; 3]]| -> Result<f64> {
        let nn = nearest_neighbors(p, q)?;
        Ok(mean(nn.iter().zip(pn).map(|(&(j, _), n)| abs_dot(n, &qn[j])), p.len()))
    };
    Ok(0.5 * (one(a, a_normals, b, b_normals)? + one(b, b_normals, a, a_normals)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FScore {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

/// Precision and recall count points strictly closer than `threshold`.
pub fn f_score(pred: &[[f64; 3]], gt: &[[f64; 3]], threshold: f64) -> Result<FScore> {
    if !(threshold > 0.0) {
        return Err(Error::input("F-score threshold must be positive"));
    }
    let frac = |d: Vec<f64>| d.iter().filter(|&&x| x < threshold).count() as f64 / d.len() as f64;
    let precision = frac(nn_distances(pred, gt)?);
    let recall = frac(nn_distances(gt, pred)?);
    let f_score = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(FScore {
        precision,
        recall,
        f_score,
    })
}

/// Indices of points with an `epsilon`-neighbour whose normal is nearly
/// orthogonal (`|n_p . n_q| < sigma`).
pub fn edge_points(points: &[[f64; 3]], normals: &[[f64; 3]], epsilon: f64, sigma: f64) -> Result<Vec<usize>> {
    check_normals(points, normals)?;
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let tree = KdTree::new(points.to_vec());
    Ok(points
        .par_iter()
        .enumerate()
        .filter(|&(i, p)| {
            tree.within_radius(p, epsilon)
                .into_iter()
                .any(|j| abs_dot(&normals[i], &normals[j]) < sigma)
        })
        .map(|(i, _)| i)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeChamfer {
    pub l1: f64,
    pub l2: f64,
    pub pred_edges: usize,
    pub gt_edges: usize,
    /// An edge set was empty and the full point set stood in for it.
    pub fallback: bool,
}

/// Chamfer distance between the edge points of two oriented samples.
///
/// An empty edge set is replaced by its full sample, and `fallback` is set.
pub fn edge_chamfer(
    pred: &[[f64; 3]],
    pred_normals: &[[f64; 3]],
    gt: &[[f64; 3]],
    gt_normals: &[[f64; 3]],
    epsilon: f64,
    sigma: f64,
) -> Result<EdgeChamfer> {
    non_empty("predicted", pred)?;
    non_empty("reference", gt)?;
    let pe = edge_points(pred, pred_normals, epsilon, sigma)?;
    let ge = edge_points(gt, gt_normals, epsilon, sigma)?;
    let pick = |pts: &[[f64; 3]], idx: &[usize]| -> Vec<[f64; 3]> {
        if idx.is_empty() {
            pts.to_vec()
        } else {
            idx.iter().map(|&i| pts[i]).collect()
        }
    };
    let (a, b) = (pick(pred, &pe), pick(gt, &ge));
    Ok(EdgeChamfer {
        l1: chamfer(&a, &b, ChamferOrder::L1)?,
        l2: chamfer(&a, &b, ChamferOrder::L2)?,
        pred_edges: pe.len(),
        gt_edges: ge.len(),
        fallback: pe.is_empty() || ge.is_empty(),
    })
}
