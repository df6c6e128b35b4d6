//! Distances of one centre point to its neighbourhood and their
//! derivatives.

use super::config::{FilterConfig, FilterKind, SigmaPolicy};
use crate::error::{Error, Result};
use crate::geom::vector::{add_scaled, dot, norm, norm2, sub};
use crate::scalar::{sign0, Real};

/// Spatial bandwidths below this are clamped and treated as constant.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// `exp(-|p_bar - p_j|^2 / sigma_p^2)`
pub fn weight_spatial<T: Real, const D: usize>(p_bar: &[T; D], p_j: &[T; D], sigma_p: T) -> T {
    (-norm2(&sub(p_bar, p_j)) / (sigma_p * sigma_p)).exp()
}

/// `exp(-(1 - n_a . n_b) / (1 - cos sigma_n))`, `sigma_n` in degrees.
pub fn weight_normal<T: Real, const D: usize>(n_a: &[T; D], n_b: &[T; D], sigma_n_deg: T) -> T {
    let scale = T::one() - sigma_n_deg.to_radians().cos();
    (-(T::one() - dot(n_a, n_b)) / scale).exp()
}

/// Position-weighted mean of `neighbors` as seen from `center`.
pub fn average_filter_baseline<T: Real, const D: usize>(
    center: &[T; D],
    neighbors: &[[T; D]],
    sigma_p: T,
) -> Result<[T; D]> {
    if neighbors.is_empty() {
        return Err(Error::input("average filter needs at least one neighbour"));
    }
    let mut acc = [T::zero(); D];
    let mut total = T::zero();
    for p in neighbors {
        let w = weight_spatial(center, p, sigma_p);
        add_scaled(&mut acc, w, p);
        total += w;
    }
    let total = total.max(T::min_positive_value());
    Ok(acc.map(|v| v / total))
}

/// Scalar settings of the patch distance.
#[derive(Debug, Clone, Copy)]
pub struct PatchParams<T> {
    pub kind: FilterKind,
    pub policy: SigmaPolicy,
    /// `1 - cos(sigma_n)`
    pub normal_scale: T,
    pub weight_floor: T,
}

impl<T: Real> PatchParams<T> {
    pub fn from_config(cfg: &FilterConfig) -> Self {
        Self {
            kind: cfg.kind,
            policy: cfg.sigma_p_policy,
            normal_scale: T::lit(cfg.normal_scale()),
            weight_floor: T::lit(cfg.weight_floor),
        }
    }
}

/// A centre point with its neighbourhood. Normals are unit vectors.
#[derive(Debug, Clone, Copy)]
pub struct Patch<'a, T, const D: usize> {
    pub center: [T; D],
    pub center_normal: [T; D],
    pub positions: &'a [[T; D]],
    pub normals: &'a [[T; D]],
}

/// Derivatives of a patch distance with respect to its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrad<T, const D: usize> {
    pub center: [T; D],
    pub center_normal: [T; D],
    pub positions: Vec<[T; D]>,
    pub normals: Vec<[T; D]>,
}

impl<T: Real, const D: usize> PatchGrad<T, D> {
    fn zeros(k: usize) -> Self {
        Self {
            center: [T::zero(); D],
            center_normal: [T::zero(); D],
            positions: vec![[T::zero(); D]; k],
            normals: vec![[T::zero(); D]; k],
        }
    }
}

enum SigmaArg {
    Max(usize),
    Diagonal { lo: Vec<usize>, hi: Vec<usize>, extent: Vec<f64> },
    Clamped,
}

fn spatial_sigma<T: Real, const D: usize>(patch: &Patch<'_, T, D>, policy: SigmaPolicy) -> (T, SigmaArg) {
    let floor = T::lit(SIGMA_FLOOR);
    let (s, arg) = match policy {
        SigmaPolicy::MaxNeighbor => {
            let mut best = (T::zero(), 0);
            for (j, p) in patch.positions.iter().enumerate() {
                let d = norm(&sub(&patch.center, p));
                if d > best.0 {
                    best = (d, j);
                }
            }
            (best.0, SigmaArg::Max(best.1))
        }
        SigmaPolicy::PatchDiagonal => {
            let mut lo = vec![0; D];
            let mut hi = vec![0; D];
            for (j, p) in patch.positions.iter().enumerate() {
                for k in 0..D {
                    if p[k] < patch.positions[lo[k]][k] {
                        lo[k] = j;
                    }
                    if p[k] > patch.positions[hi[k]][k] {
                        hi[k] = j;
                    }
                }
            }
            let extent: Vec<T> = (0..D).map(|k| patch.positions[hi[k]][k] - patch.positions[lo[k]][k]).collect();
            let s = extent.iter().map(|&e| e * e).sum::<T>().sqrt();
            let extent = extent.iter().map(|e| e.to_f64_lossy()).collect();
            (s, SigmaArg::Diagonal { lo, hi, extent })
        }
    };
    if s > floor {
        (s, arg)
    } else {
        (floor, SigmaArg::Clamped)
    }
}

fn sigma_backward<T: Real, const D: usize>(
    patch: &Patch<'_, T, D>,
    s: T,
    arg: &SigmaArg,
    sbar: T,
    grad: &mut PatchGrad<T, D>,
) {
    match arg {
        SigmaArg::Max(j) => {
            let r = sub(&patch.center, &patch.positions[*j]);
            let g = sbar / s;
            add_scaled(&mut grad.center, g, &r);
            add_scaled(&mut grad.positions[*j], -g, &r);
        }
        SigmaArg::Diagonal { lo, hi, extent } => {
            for k in 0..D {
                let g = sbar * T::lit(extent[k]) / s;
                grad.positions[hi[k]][k] += g;
                grad.positions[lo[k]][k] -= g;
            }
        }
        SigmaArg::Clamped => {}
    }
}

/// Evaluates the patch distance and, if `with_grad`, its derivatives.
pub fn patch_distance<T: Real, const D: usize>(
    params: &PatchParams<T>,
    patch: &Patch<'_, T, D>,
    with_grad: bool,
) -> Result<(T, Option<PatchGrad<T, D>>)> {
    let k = patch.positions.len();
    if k == 0 {
        return Err(Error::input("patch distance needs at least one neighbour"));
    }
    if params.kind != FilterKind::Average && patch.normals.len() != k {
        return Err(Error::input("one normal per neighbour required"));
    }
    let (s, arg) = spatial_sigma(patch, params.policy);
    let inv_s2 = T::one() / (s * s);

    // Spatial weights and, for the projection kinds, normal weights.
    let mut r = Vec::with_capacity(k);
    let mut phi = Vec::with_capacity(k);
    let mut psi = Vec::with_capacity(k);
    for j in 0..k {
        let rj = sub(&patch.center, &patch.positions[j]);
        phi.push((-norm2(&rj) * inv_s2).exp());
        psi.push(match params.kind {
            FilterKind::Average => T::one(),
            _ => (-(T::one() - dot(&patch.center_normal, &patch.normals[j])) / params.normal_scale).exp(),
        });
        r.push(rj);
    }
    let total: T = (0..k).map(|j| phi[j] * psi[j]).sum();
    let clamped = !(total > params.weight_floor);
    let denom = if clamped { params.weight_floor } else { total };

    if params.kind == FilterKind::Average {
        let mut mean = [T::zero(); D];
        for j in 0..k {
            add_scaled(&mut mean, phi[j] / denom, &patch.positions[j]);
        }
        let e = sub(&patch.center, &mean);
        let d = norm(&e);
        if !with_grad {
            return Ok((d, None));
        }
        let mut grad = PatchGrad::zeros(k);
        if d > T::zero() {
            let u = e.map(|v| v / d);
            grad.center = u;
            let mut sbar = T::zero();
            for j in 0..k {
                // d mean / d p_j through the numerator.
                add_scaled(&mut grad.positions[j], -phi[j] / denom, &u);
                // d mean / d w_j
                let dm = if clamped { patch.positions[j] } else { sub(&patch.positions[j], &mean) };
                let wbar = -dot(&u, &dm) / denom;
                spatial_backward(&r[j], phi[j], inv_s2, s, wbar, j, &mut grad, &mut sbar);
            }
            sigma_backward(patch, s, &arg, sbar, &mut grad);
        }
        return Ok((d, Some(grad)));
    }

    let bidirectional = params.kind == FilterKind::Bilateral;
    let mut a = Vec::with_capacity(k);
    let mut b = Vec::with_capacity(k);
    let mut num = T::zero();
    for j in 0..k {
        let aj = dot(&patch.normals[j], &r[j]);
        let bj = if bidirectional { dot(&patch.center_normal, &r[j]) } else { T::zero() };
        num += (aj.abs() + bj.abs()) * phi[j] * psi[j];
        a.push(aj);
        b.push(bj);
    }
    let d = num / denom;
    if !with_grad {
        return Ok((d, None));
    }

    let mut grad = PatchGrad::zeros(k);
    let mut sbar = T::zero();
    for j in 0..k {
        let w = phi[j] * psi[j];
        let e = a[j].abs() + b[j].abs();
        let ebar = w / denom;
        let abar = ebar * sign0(a[j]);
        let bbar = ebar * sign0(b[j]);
        // r_j = center - p_j
        let mut rbar = [T::zero(); D];
        add_scaled(&mut rbar, abar, &patch.normals[j]);
        add_scaled(&mut rbar, bbar, &patch.center_normal);
        add_scaled(&mut grad.normals[j], abar, &r[j]);
        add_scaled(&mut grad.center_normal, bbar, &r[j]);
        for i in 0..D {
            grad.center[i] += rbar[i];
            grad.positions[j][i] -= rbar[i];
        }

        let wbar = if clamped { e / denom } else { (e - d) / denom };
        spatial_backward(&r[j], phi[j], inv_s2, s, wbar * psi[j], j, &mut grad, &mut sbar);
        let cbar = wbar * phi[j] * psi[j] / params.normal_scale;
        add_scaled(&mut grad.center_normal, cbar, &patch.normals[j]);
        add_scaled(&mut grad.normals[j], cbar, &patch.center_normal);
    }
    sigma_backward(patch, s, &arg, sbar, &mut grad);
    Ok((d, Some(grad)))
}

/// Backward through `phi = exp(-|r|^2 / s^2)` given `phi_bar`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn spatial_backward<T: Real, const D: usize>(
    r: &[T; D],
    phi: T,
    inv_s2: T,
    s: T,
    phi_bar: T,
    j: usize,
    grad: &mut PatchGrad<T, D>,
    sbar: &mut T,
) {
    let two = T::lit(2.0);
    let g = -two * phi_bar * phi * inv_s2;
    add_scaled(&mut grad.center, g, r);
    add_scaled(&mut grad.positions[j], -g, r);
    *sbar += phi_bar * phi * two * norm2(r) * inv_s2 / s;
}

/// Weighted bidirectional projection distance of `center` to its
/// neighbours.
pub fn bilateral_distance<T: Real, const D: usize>(
    center: &[T; D],
    center_normal: &[T; D],
    positions: &[[T; D]],
    normals: &[[T; D]],
    cfg: &FilterConfig,
) -> Result<T> {
    let params = PatchParams::from_config(cfg);
    let patch = Patch {
        center: *center,
        center_normal: *center_normal,
        positions,
        normals,
    };
    Ok(patch_distance(&params, &patch, false)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const E1: f64 = 0.36787944117144233;

    fn unit(v: [f64; 3]) -> [f64; 3] {
        let n = norm(&v);
        v.map(|x| x / n)
    }

    struct Owned {
        center: [f64; 3],
        center_normal: [f64; 3],
        positions: Vec<[f64; 3]>,
        normals: Vec<[f64; 3]>,
    }

    impl Owned {
        fn patch(&self) -> Patch<'_, f64, 3> {
            Patch {
                center: self.center,
                center_normal: self.center_normal,
                positions: &self.positions,
                normals: &self.normals,
            }
        }
    }

    fn random_patch(rng: &mut ChaCha8Rng, k: usize) -> Owned {
        let mut v = || [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let center = v().map(|x| 0.1 * x);
        let center_normal = unit(add_z(v(), 2.0));
        let positions = (0..k).map(|_| v().map(|x| 0.2 * x)).collect();
        let normals = (0..k).map(|_| unit(add_z(v(), 1.5))).collect();
        Owned {
            center,
            center_normal,
            positions,
            normals,
        }
    }

    fn add_z(mut v: [f64; 3], z: f64) -> [f64; 3] {
        v[2] += z;
        v
    }

    fn params(kind: FilterKind, policy: SigmaPolicy) -> PatchParams<f64> {
        PatchParams {
            kind,
            policy,
            ..PatchParams::from_config(&FilterConfig::default())
        }
    }

    /// Straight-line evaluation of the weighted projection distance.
    fn oracle(p: &Owned, sigma_n_deg: f64, bidirectional: bool, weight_scale: f64) -> f64 {
        let sigma_p = p
            .positions
            .iter()
            .map(|q| ((p.center[0] - q[0]).powi(2) + (p.center[1] - q[1]).powi(2) + (p.center[2] - q[2]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for (q, n) in p.positions.iter().zip(&p.normals) {
            let r = [p.center[0] - q[0], p.center[1] - q[1], p.center[2] - q[2]];
            let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
            let cos = n[0] * p.center_normal[0] + n[1] * p.center_normal[1] + n[2] * p.center_normal[2];
            let w = weight_scale
                * (-r2 / (sigma_p * sigma_p)).exp()
                * (-(1.0 - cos) / (1.0 - (sigma_n_deg * std::f64::consts::PI / 180.0).cos())).exp();
            let a = (n[0] * r[0] + n[1] * r[1] + n[2] * r[2]).abs();
            let b = (p.center_normal[0] * r[0] + p.center_normal[1] * r[1] + p.center_normal[2] * r[2]).abs();
            num += (a + if bidirectional { b } else { 0.0 }) * w;
            den += w;
        }
        num / den
    }

    #[test]
    fn spatial_weight_examples() {
        let p = [0.1, 0.2, 0.3];
        assert_eq!(weight_spatial(&p, &p, 0.5), 1.0);
        let q = [0.1, 0.2, 0.8];
        assert!((weight_spatial(&p, &q, 0.5) - E1).abs() < 1e-15);
    }

    #[test]
    fn normal_weight_examples() {
        let a = [0.0, 0.0, 1.0];
        assert_eq!(weight_normal(&a, &a, 15.0), 1.0);
        let t = 15f64.to_radians();
        let b = [t.sin(), 0.0, t.cos()];
        assert!((weight_normal(&a, &b, 15.0) - E1).abs() < 1e-12);
        let c = [0.0, 0.0, -1.0];
        let expect = (-2.0 / (1.0 - t.cos())).exp();
        let got = weight_normal(&a, &c, 15.0);
        assert!((got / expect - 1.0).abs() < 1e-9);
        assert!(got < 1e-25);
    }

    #[test]
    fn max_policy_bounds_spatial_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = random_patch(&mut rng, 16);
            let (s, _) = spatial_sigma(&p.patch(), SigmaPolicy::MaxNeighbor);
            for q in &p.positions {
                assert!(weight_spatial(&p.center, q, s) >= E1 - 1e-12);
            }
        }
    }

    fn plane_patch(h: f64) -> Owned {
        let positions: Vec<[f64; 3]> = (0..9).map(|i| [(i % 3) as f64 * 0.1 - 0.1, (i / 3) as f64 * 0.1 - 0.1, 0.0]).collect();
        Owned {
            center: [0.02, -0.03, h],
            center_normal: [0.0, 0.0, 1.0],
            normals: vec![[0.0, 0.0, 1.0]; positions.len()],
            positions,
        }
    }

    #[test]
    fn coplanar_patch_is_zero() {
        let p = plane_patch(0.0);
        for kind in [FilterKind::Bilateral, FilterKind::Unidirectional] {
            assert_eq!(patch_distance(&params(kind, SigmaPolicy::MaxNeighbor), &p.patch(), false).unwrap().0, 0.0);
        }
    }

    #[test]
    fn plane_offset_doubles() {
        let h = 0.037;
        let p = plane_patch(h);
        let d = bilateral_distance(&p.center, &p.center_normal, &p.positions, &p.normals, &FilterConfig::default()).unwrap();
        assert!((d - 2.0 * h).abs() < 1e-15);
        let one = patch_distance(&params(FilterKind::Unidirectional, SigmaPolicy::MaxNeighbor), &p.patch(), false).unwrap().0;
        assert!((one - h).abs() < 1e-15);
    }

    #[test]
    fn matches_formula_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let p = random_patch(&mut rng, 12);
            for (kind, bi) in [(FilterKind::Bilateral, true), (FilterKind::Unidirectional, false)] {
                let d = patch_distance(&params(kind, SigmaPolicy::MaxNeighbor), &p.patch(), false).unwrap().0;
                let o = oracle(&p, 15.0, bi, 1.0);
                assert!((d - o).abs() < 1e-9, "{d} vs {o}");
                // A common factor on every weight cancels.
                assert!((oracle(&p, 15.0, bi, 7.5) - o).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_patch_is_an_error() {
        let p = Owned {
            center: [0.0; 3],
            center_normal: [0.0, 0.0, 1.0],
            positions: vec![],
            normals: vec![],
        };
        assert!(patch_distance(&params(FilterKind::Bilateral, SigmaPolicy::MaxNeighbor), &p.patch(), false).is_err());
        assert!(average_filter_baseline(&[0.0; 3], &[], 1.0).is_err());
    }

    fn rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
        // Gram-Schmidt on random vectors.
        let mut v = || [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let a = unit(v());
        let b0 = v();
        let b = unit(sub(&b0, &a.map(|x| x * dot(&a, &b0))));
        let c = crate::geom::vector::cross(&a, &b);
        [a, b, c]
    }

    fn apply(r: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
        [dot(&r[0], v), dot(&r[1], v), dot(&r[2], v)]
    }

    #[test]
    fn rigid_motion_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_patch(&mut rng, 10);
            let r = rotation(&mut rng);
            let t = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let moved = Owned {
                center: crate::geom::vector::add(&apply(&r, &p.center), &t),
                center_normal: apply(&r, &p.center_normal),
                positions: p.positions.iter().map(|x| crate::geom::vector::add(&apply(&r, x), &t)).collect(),
                normals: p.normals.iter().map(|n| apply(&r, n)).collect(),
            };
            for kind in [FilterKind::Bilateral, FilterKind::Unidirectional, FilterKind::Average] {
                let prm = params(kind, SigmaPolicy::MaxNeighbor);
                let a = patch_distance(&prm, &p.patch(), false).unwrap().0;
                let b = patch_distance(&prm, &moved.patch(), false).unwrap().0;
                assert!((a - b).abs() < 1e-9, "{kind:?}: {a} vs {b}");
            }
        }
    }

    fn perturbed(p: &Owned, slot: usize, k: usize, h: f64) -> Owned {
        let mut q = Owned {
            center: p.center,
            center_normal: p.center_normal,
            positions: p.positions.clone(),
            normals: p.normals.clone(),
        };
        let n = p.positions.len();
        let (which, idx) = (slot / 3, slot % 3);
        match which {
            0 => q.center[idx] += h,
            1 => q.center_normal[idx] += h,
            w if w < 2 + n => q.positions[w - 2][idx] += h,
            w => q.normals[w - 2 - n][idx] += h,
        }
        let _ = k;
        q
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in [FilterKind::Bilateral, FilterKind::Unidirectional, FilterKind::Average] {
            for policy in [SigmaPolicy::MaxNeighbor, SigmaPolicy::PatchDiagonal] {
                let prm = params(kind, policy);
                for _ in 0..10 {
                    let p = random_patch(&mut rng, 6);
                    let (_, g) = patch_distance(&prm, &p.patch(), true).unwrap();
                    let g = g.unwrap();
                    let mut flat = vec![];
                    flat.extend(g.center);
                    flat.extend(g.center_normal);
                    g.positions.iter().for_each(|v| flat.extend(v));
                    g.normals.iter().for_each(|v| flat.extend(v));
                    let h = 1e-6;
                    for (slot, &an) in flat.iter().enumerate() {
                        let plus = patch_distance(&prm, &perturbed(&p, slot, 6, h).patch(), false).unwrap().0;
                        let minus = patch_distance(&prm, &perturbed(&p, slot, 6, -h).patch(), false).unwrap().0;
                        let fd = (plus - minus) / (2.0 * h);
                        assert!((an - fd).abs() < 1e-6 + 1e-4 * fd.abs(), "{kind:?} {policy:?} slot {slot}: {an} vs {fd}");
                    }
                }
            }
        }
    }

    #[test]
    fn average_baseline_examples() {
        let q = [0.3, -0.1, 0.2];
        assert_eq!(average_filter_baseline(&[0.0; 3], &[q], 0.5).unwrap(), q);
        let sym = [[0.1, 0.0, 0.0], [-0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, -0.1, 0.0]];
        let m = average_filter_baseline(&[0.0; 3], &sym, 0.3).unwrap();
        assert!(norm(&m) < 1e-15);
    }

    #[test]
    fn average_baseline_rounds_a_corner() {
        // Points on the faces x = 0 and y = 0 of the quadrant x, y >= 0; the
        // solid occupies x, y <= 0 and the edge is the z axis.
        let mut pts = vec![];
        for i in 0..6 {
            for z in [-0.05, 0.0, 0.05] {
                pts.push([0.0, -(i as f64) * 0.02, z]);
                pts.push([-(i as f64) * 0.02, 0.0, z]);
            }
        }
        let corner = [0.0, 0.0, 0.0];
        let sigma = pts.iter().map(|p| norm(p)).fold(0.0, f64::max);
        let m = average_filter_baseline(&corner, &pts, sigma).unwrap();
        assert!(m[0] < -1e-3 && m[1] < -1e-3, "{m:?}");
        // The projection distance keeps the corner in place.
        let normals: Vec<[f64; 3]> = pts.iter().map(|p| if p[0] == 0.0 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] }).collect();
        let patch = Patch {
            center: corner,
            center_normal: [1.0, 0.0, 0.0],
            positions: &pts,
            normals: &normals,
        };
        let one = patch_distance(&params(FilterKind::Unidirectional, SigmaPolicy::MaxNeighbor), &patch, false).unwrap().0;
        assert_eq!(one, 0.0);
        let both = bilateral_distance(&corner, &[1.0, 0.0, 0.0], &pts, &normals, &FilterConfig::default()).unwrap();
        assert!(both < 1e-9, "{both}");
    }

    proptest! {
        #[test]
        fn distance_is_nonnegative(seed in 0u64..10_000, k in 1usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_patch(&mut rng, k);
            for kind in [FilterKind::Bilateral, FilterKind::Unidirectional, FilterKind::Average] {
                for policy in [SigmaPolicy::MaxNeighbor, SigmaPolicy::PatchDiagonal] {
                    let (d, g) = patch_distance(&params(kind, policy), &p.patch(), true).unwrap();
                    prop_assert!(d >= 0.0 && d.is_finite());
                    let g = g.unwrap();
                    prop_assert!(g.center.iter().chain(g.positions.iter().flatten()).all(|v| v.is_finite()));
                }
            }
        }
    }
}
