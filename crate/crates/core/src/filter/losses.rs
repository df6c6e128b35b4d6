//! Loss terms over a sampled field and the combined objective.

use rayon::prelude::*;

use super::config::{Constraint, FilterConfig};
use super::patch::{patch_distance, Patch, PatchGrad, PatchParams};
use crate::autodiff::objective::{normalize, pull_point, sample_field, Cotangents, FieldState, LossEvaluator};
use crate::autodiff::GRAD_FLOOR;
use crate::error::{Error, Result};
use crate::geom::vector::{add_scaled, dist, dot, norm, scale, sub};
use crate::geom::{KdTree, PointCloud, QueryBatch};
use crate::net::MlpField;
use crate::scalar::{sign0, Real};

/// Values of every term and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterTermBreakdown {
    pub l_dist: f64,
    pub l_zero: f64,
    pub l_field: f64,
    pub l_cd: f64,
    pub l_pull: f64,
    pub l_eikonal: f64,
    pub total: f64,
}

impl FilterTermBreakdown {
    pub fn is_finite(&self) -> bool {
        [self.l_dist, self.l_zero, self.l_field, self.l_cd, self.l_pull, self.l_eikonal, self.total]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Weighted sum of the terms selected by `cfg`.
pub fn combine(cfg: &FilterConfig, b: &FilterTermBreakdown) -> f64 {
    let constraint = match cfg.constraint {
        Constraint::Chamfer => b.l_cd,
        Constraint::Pull => b.l_pull,
    };
    cfg.zero_weight * b.l_zero
        + cfg.alpha1 * b.l_field
        + cfg.alpha2 * b.l_dist
        + cfg.alpha3 * constraint
        + cfg.eikonal_weight * b.l_eikonal
}

fn check_finite<T: Real>(term: &'static str, values: impl Iterator<Item = T>) -> Result<()> {
    for (index, v) in values.enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { term, index });
        }
    }
    Ok(())
}

fn mean<T: Real>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    values.iter().copied().sum::<T>() / T::lit(values.len() as f64)
}

fn check_neighborhoods<T: Real, const D: usize>(state: &FieldState<'_, T, D>, k: usize) -> Result<()> {
    if state.batch.k < k {
        return Err(Error::input(format!(
            "batch caches {} neighbours per query but the filter needs {k}",
            state.batch.k
        )));
    }
    if state.points.len() != state.cloud.len() {
        return Err(Error::input("filter terms need samples at the input points"));
    }
    Ok(())
}

/// Mean `|f(p)|` over the input points.
pub fn dist_term<T: Real, const D: usize>(
    state: &FieldState<'_, T, D>,
    grad: Option<(&mut Cotangents<T, D>, T)>,
) -> Result<T> {
    let f = &state.points.values;
    check_finite("l_dist", f.iter().copied())?;
    let value = mean(&f.iter().map(|v| v.abs()).collect::<Vec<_>>());
    if let Some((cot, w)) = grad {
        let s = w / T::lit(f.len() as f64);
        for (c, v) in cot.points.values.iter_mut().zip(f) {
            *c += s * sign0(*v);
        }
    }
    Ok(value)
}

fn gather<T: Real, const D: usize>(src: &[[T; D]], idx: &[usize]) -> Vec<[T; D]> {
    idx.iter().map(|&j| src[j]).collect()
}

type PatchResults<T, const D: usize> = Vec<(T, Option<PatchGrad<T, D>>)>;

/// Mean patch distance at the pulled queries, neighbourhoods taken around
/// the nearest input point of each query.
pub fn zero_term<T: Real, const D: usize>(
    state: &FieldState<'_, T, D>,
    cfg: &FilterConfig,
    grad: Option<(&mut Cotangents<T, D>, T)>,
) -> Result<T> {
    check_neighborhoods(state, cfg.k_filter)?;
    let params = PatchParams::from_config(cfg);
    let k = cfg.k_filter;
    let with_grad = grad.is_some();
    let results: PatchResults<T, D> = (0..state.queries.len())
        .into_par_iter()
        .map(|i| {
            let idx = &state.batch.neighbors(i)[..k];
            let positions = gather(state.cloud.points(), idx);
            let normals = gather(&state.points.unit, idx);
            let patch = Patch {
                center: state.pulled.positions[i],
                center_normal: state.pulled.unit[i],
                positions: &positions,
                normals: &normals,
            };
            patch_distance(&params, &patch, with_grad)
        })
        .collect::<Result<_>>()?;
    check_finite("l_zero", results.iter().map(|r| r.0))?;
    let value = mean(&results.iter().map(|r| r.0).collect::<Vec<_>>());
    if let Some((cot, w)) = grad {
        let s = w / T::lit(results.len() as f64);
        for (i, (_, g)) in results.iter().enumerate() {
            let g = g.as_ref().expect("gradient requested");
            add_scaled(&mut cot.pulled_positions[i], s, &g.center);
            cot.pulled.add_unit_cotangent(&state.pulled, i, &scale(&g.center_normal, s));
            for (j, &pj) in state.batch.neighbors(i)[..k].iter().enumerate() {
                cot.points.add_unit_cotangent(&state.points, pj, &scale(&g.normals[j], s));
            }
        }
    }
    Ok(value)
}

/// Mean patch distance at the queries, neighbours moved onto the query's
/// level set along their own normals.
pub fn field_term<T: Real, const D: usize>(
    state: &FieldState<'_, T, D>,
    cfg: &FilterConfig,
    grad: Option<(&mut Cotangents<T, D>, T)>,
) -> Result<T> {
    check_neighborhoods(state, cfg.k_filter)?;
    let params = PatchParams::from_config(cfg);
    let k = cfg.k_filter;
    let with_grad = grad.is_some();
    let results: PatchResults<T, D> = (0..state.queries.len())
        .into_par_iter()
        .map(|i| {
            let idx = &state.batch.neighbors(i)[..k];
            let level = state.queries.values[i];
            let normals = gather(&state.points.unit, idx);
            let positions: Vec<[T; D]> = idx
                .iter()
                .zip(&normals)
                .map(|(&j, n)| {
                    let mut p = state.cloud.points()[j];
                    add_scaled(&mut p, level, n);
                    p
                })
                .collect();
            let patch = Patch {
                center: state.queries.positions[i],
                center_normal: state.queries.unit[i],
                positions: &positions,
                normals: &normals,
            };
            patch_distance(&params, &patch, with_grad)
        })
        .collect::<Result<_>>()?;
    check_finite("l_field", results.iter().map(|r| r.0))?;
    let value = mean(&results.iter().map(|r| r.0).collect::<Vec<_>>());
    if let Some((cot, w)) = grad {
        let s = w / T::lit(results.len() as f64);
        for (i, (_, g)) in results.iter().enumerate() {
            let g = g.as_ref().expect("gradient requested");
            let level = state.queries.values[i];
            cot.queries.add_unit_cotangent(&state.queries, i, &scale(&g.center_normal, s));
            for (j, &pj) in state.batch.neighbors(i)[..k].iter().enumerate() {
                // p^ = p + f(q) n(p)
                let pbar = scale(&g.positions[j], s);
                let n = state.points.unit[pj];
                cot.queries.values[i] += dot(&pbar, &n);
                let mut nbar = scale(&g.normals[j], s);
                add_scaled(&mut nbar, level, &pbar);
                cot.points.add_unit_cotangent(&state.points, pj, &nbar);
            }
        }
    }
    Ok(value)
}

/// Symmetric Chamfer distance between the pulled queries and the cloud.
pub fn cd_term<T: Real, const D: usize>(
    state: &FieldState<'_, T, D>,
    grad: Option<(&mut Cotangents<T, D>, T)>,
) -> Result<T> {
    let pulled = &state.pulled.positions;
    let points = state.cloud.points();
    if pulled.is_empty() {
        return Err(Error::input("chamfer term needs at least one query"));
    }
    check_finite("l_cd", pulled.iter().flatten().copied())?;
    let forward: Vec<(usize, T)> = pulled
        .par_iter()
        .map(|q| {
            let j = state.cloud.nearest(q);
            (j, dist(q, &points[j]))
        })
        .collect();
    let tree = KdTree::new(pulled.clone());
    let backward: Vec<(usize, T)> = points
        .par_iter()
        .map(|p| {
            let (i, d2) = tree.nearest(p);
            (i, d2.sqrt())
        })
        .collect();
    let value = mean(&forward.iter().map(|r| r.1).collect::<Vec<_>>())
        + mean(&backward.iter().map(|r| r.1).collect::<Vec<_>>());
    if let Some((cot, w)) = grad {
        let s = w / T::lit(forward.len() as f64);
        for (i, &(j, d)) in forward.iter().enumerate() {
            if d > T::zero() {
                add_scaled(&mut cot.pulled_positions[i], s / d, &sub(&pulled[i], &points[j]));
            }
        }
        let s = w / T::lit(backward.len() as f64);
        for (j, &(i, d)) in backward.iter().enumerate() {
            if d > T::zero() {
                add_scaled(&mut cot.pulled_positions[i], s / d, &sub(&pulled[i], &points[j]));
            }
        }
    }
    Ok(value)
}

/// Mean distance from each pulled query to the nearest input point of the
/// unpulled query.
pub fn pull_term<T: Real, const D: usize>(
    state: &FieldState<'_, T, D>,
    grad: Option<(&mut Cotangents<T, D>, T)>,
) -> Result<T> {
    let pulled = &state.pulled.positions;
    let points = state.cloud.points();
    let d: Vec<T> = pulled
        .iter()
        .zip(&state.batch.nn_index)
        .map(|(q, &j)| dist(q, &points[j]))
        .collect();
    check_finite("l_pull", d.iter().copied())?;
    let value = mean(&d);
    if let Some((cot, w)) = grad {
        let s = w / T::lit(d.len() as f64);
        for (i, (&di, &j)) in d.iter().zip(&state.batch.nn_index).enumerate() {
            if di > T::zero() {
                add_scaled(&mut cot.pulled_positions[i], s / di, &sub(&pulled[i], &points[j]));
            }
        }
    }
    Ok(value)
}

/// Mean `(|grad f(q)| - 1)^2` over the queries.
pub fn eikonal_term<T: Real, const D: usize>(
    state: &FieldState<'_, T, D>,
    grad: Option<(&mut Cotangents<T, D>, T)>,
) -> Result<T> {
    let r: Vec<T> = state.queries.raw_norms.iter().map(|&n| n - T::one()).collect();
    check_finite("l_eikonal", r.iter().copied())?;
    let value = mean(&r.iter().map(|v| *v * *v).collect::<Vec<_>>());
    if let Some((cot, w)) = grad {
        let s = w / T::lit(r.len() as f64);
        for (i, ri) in r.iter().enumerate() {
            let n = state.queries.raw_norms[i];
            if n > T::zero() {
                add_scaled(&mut cot.queries.gradients[i], T::lit(2.0) * s * *ri / n, &state.queries.gradients[i]);
            }
        }
    }
    Ok(value)
}

/// The combined objective. Every term is evaluated for the breakdown; only
/// terms with a nonzero weight contribute cotangents.
#[derive(Debug, Clone)]
pub struct FilterLoss {
    pub cfg: FilterConfig,
}

impl FilterLoss {
    pub fn new(cfg: FilterConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    /// Loss value without gradients.
    pub fn breakdown<T: Real, const D: usize>(&self, state: &FieldState<'_, T, D>) -> Result<FilterTermBreakdown> {
        self.run(state, None)
    }

    fn run<T: Real, const D: usize>(
        &self,
        state: &FieldState<'_, T, D>,
        mut cot: Option<&mut Cotangents<T, D>>,
    ) -> Result<FilterTermBreakdown> {
        let cfg = &self.cfg;
        let constraint = |c| if cfg.constraint == c { cfg.alpha3 } else { 0.0 };
        macro_rules! term {
            ($w:expr, $call:expr) => {{
                let w: f64 = $w;
                let g = match cot.as_deref_mut() {
                    Some(c) if w != 0.0 => Some((c, T::lit(w))),
                    _ => None,
                };
                $call(g)?.to_f64_lossy()
            }};
        }
        let mut b = FilterTermBreakdown {
            l_dist: term!(cfg.alpha2, |g| dist_term(state, g)),
            l_zero: term!(cfg.zero_weight, |g| zero_term(state, cfg, g)),
            l_field: term!(cfg.alpha1, |g| field_term(state, cfg, g)),
            l_cd: term!(constraint(Constraint::Chamfer), |g| cd_term(state, g)),
            l_pull: term!(constraint(Constraint::Pull), |g| pull_term(state, g)),
            l_eikonal: term!(cfg.eikonal_weight, |g| eikonal_term(state, g)),
            total: 0.0,
        };
        b.total = combine(cfg, &b);
        if !b.total.is_finite() {
            return Err(Error::NonFinite { term: "total", index: 0 });
        }
        Ok(b)
    }
}

impl<T: Real, const D: usize> LossEvaluator<T, D> for FilterLoss {
    type Output = FilterTermBreakdown;

    fn evaluate(&self, state: &FieldState<'_, T, D>, cot: &mut Cotangents<T, D>) -> Result<FilterTermBreakdown> {
        self.run(state, Some(cot))
    }
}

fn check_gradient<T: Real, const D: usize>(g: &[T; D], what: &'static str, index: usize) -> Result<[T; D]> {
    let n = norm(g);
    if !(n > T::lit(GRAD_FLOOR)) {
        return Err(Error::DegenerateGradient {
            what,
            index,
            norm: n.to_f64_lossy(),
        });
    }
    Ok(normalize(g).0)
}

/// Moves `q` onto the zero level set along the normalized gradient.
pub fn pull<T: Real, const D: usize>(field: &MlpField<T>, q: &[T; D]) -> Result<[T; D]> {
    let s = field.eval(q);
    let unit = check_gradient(&s.gradient, "query", 0)?;
    Ok(pull_point(q, s.value, &unit))
}

/// Moves points of the zero level set onto the level set `level`.
pub fn project_neighbors<T: Real, const D: usize>(
    field: &MlpField<T>,
    level: T,
    neighbors: &[[T; D]],
) -> Result<Vec<[T; D]>> {
    field
        .eval_batch(neighbors)
        .iter()
        .zip(neighbors)
        .enumerate()
        .map(|(i, (s, p))| {
            let unit = check_gradient(&s.gradient, "neighbour", i)?;
            let mut out = *p;
            add_scaled(&mut out, level, &unit);
            Ok(out)
        })
        .collect()
}

/// Mean `|f(p)|` over the cloud.
pub fn loss_dist<T: Real, const D: usize>(field: &MlpField<T>, cloud: &PointCloud<T, D>) -> Result<T> {
    let f = field.values(cloud.points());
    check_finite("l_dist", f.iter().copied())?;
    Ok(mean(&f.iter().map(|v| v.abs()).collect::<Vec<_>>()))
}

fn with_state<T: Real, const D: usize, R>(
    field: &MlpField<T>,
    cloud: &PointCloud<T, D>,
    batch: &QueryBatch<T, D>,
    f: impl FnOnce(&FieldState<'_, T, D>) -> Result<R>,
) -> Result<R> {
    if batch.is_empty() {
        return Err(Error::input("query batch is empty"));
    }
    let (state, _) = sample_field(field, cloud, batch, true);
    f(&state)
}

pub fn loss_zero<T: Real, const D: usize>(
    field: &MlpField<T>,
    cloud: &PointCloud<T, D>,
    batch: &QueryBatch<T, D>,
    cfg: &FilterConfig,
) -> Result<T> {
    with_state(field, cloud, batch, |s| zero_term(s, cfg, None))
}

pub fn loss_field<T: Real, const D: usize>(
    field: &MlpField<T>,
    cloud: &PointCloud<T, D>,
    batch: &QueryBatch<T, D>,
    cfg: &FilterConfig,
) -> Result<T> {
    with_state(field, cloud, batch, |s| field_term(s, cfg, None))
}

pub fn loss_cd<T: Real, const D: usize>(
    field: &MlpField<T>,
    cloud: &PointCloud<T, D>,
    batch: &QueryBatch<T, D>,
) -> Result<T> {
    with_state(field, cloud, batch, |s| cd_term(s, None))
}

pub fn loss_pull<T: Real, const D: usize>(
    field: &MlpField<T>,
    cloud: &PointCloud<T, D>,
    batch: &QueryBatch<T, D>,
) -> Result<T> {
    with_state(field, cloud, batch, |s| pull_term(s, None))
}

pub fn total_loss<T: Real, const D: usize>(
    field: &MlpField<T>,
    cloud: &PointCloud<T, D>,
    batch: &QueryBatch<T, D>,
    cfg: &FilterConfig,
) -> Result<FilterTermBreakdown> {
    let loss = FilterLoss::new(cfg.clone())?;
    with_state(field, cloud, batch, |s| loss.breakdown(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::grad_params_of_loss;
    use crate::filter::config::{FilterKind, SigmaPolicy};
    use crate::geom::{sample_queries, SamplingConfig};
    use crate::net::NetConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn plane_setup() -> (MlpField<f64>, PointCloud<f64, 3>) {
        let field = MlpField::<f64>::plane(&[0.0, 0.0, 1.0], 0.0, 100.0).unwrap();
        let pts = (0..400)
            .map(|i| [(i % 20) as f64 * 0.05 - 0.5, (i / 20) as f64 * 0.05 - 0.5, 0.0])
            .collect();
        (field, PointCloud::new(pts).unwrap())
    }

    fn sphere_cloud(n: usize, r: f64, noise: f64, seed: u64) -> PointCloud<f64, 3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|_| {
                let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
                let s = r / norm(&v);
                v.map(|x| x * s + noise * rng.random_range(-1.0..1.0))
            })
            .collect();
        PointCloud::new(pts).unwrap()
    }

    fn small_setup(seed: u64) -> (MlpField<f64>, PointCloud<f64, 3>, QueryBatch<f64, 3>) {
        let cfg = NetConfig {
            hidden: vec![32, 32],
            skip: None,
            radius: 0.3,
            ..NetConfig::default()
        };
        let mut field = MlpField::geometric_init(3, &cfg, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let flat: Vec<f64> = field
            .flat_params()
            .iter()
            .map(|p| p + 0.05 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        field.set_flat_params(&flat);
        let cloud = sphere_cloud(60, 0.3, 0.01, seed);
        let all = sample_queries(
            &cloud,
            &SamplingConfig {
                per_point: 1,
                sigma_k: 5,
                k_neighbors: 8,
                seed,
            },
        )
        .unwrap();
        let batch = all.select(&(0..8).map(|i| i * 7).collect::<Vec<_>>());
        (field, cloud, batch)
    }

    fn only(term: &str) -> FilterConfig {
        let mut cfg = FilterConfig {
            k_filter: 8,
            zero_weight: 0.0,
            alpha1: 0.0,
            alpha2: 0.0,
            alpha3: 0.0,
            ..FilterConfig::default()
        };
        match term {
            "dist" => cfg.alpha2 = 1.0,
            "zero" => cfg.zero_weight = 1.0,
            "field" => cfg.alpha1 = 1.0,
            "cd" => cfg.alpha3 = 1.0,
            "pull" => {
                cfg.alpha3 = 1.0;
                cfg.constraint = Constraint::Pull;
            }
            "eikonal" => cfg.eikonal_weight = 1.0,
            _ => unreachable!(),
        }
        cfg
    }

    fn fd_relative_error(cfg: &FilterConfig, seed: u64) -> (f64, f64) {
        let (field, cloud, batch) = small_setup(seed);
        let loss = FilterLoss::new(cfg.clone()).unwrap();
        let lg = grad_params_of_loss(&loss, &field, &cloud, &batch).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 7);
        let mut dir: Vec<f64> = (0..field.param_count()).map(|_| rng.sample(StandardNormal)).collect();
        let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|v| *v /= n);
        let eps = 1e-5;
        let at = |s: f64| {
            let mut f = field.clone();
            let p: Vec<f64> = field.flat_params().iter().zip(&dir).map(|(a, b)| a + s * b).collect();
            f.set_flat_params(&p);
            total_loss(&f, &cloud, &batch, cfg).unwrap().total
        };
        let fd = (at(eps) - at(-eps)) / (2.0 * eps);
        let an: f64 = lg.grad.flat().iter().zip(&dir).map(|(a, b)| a * b).sum();
        ((an - fd).abs() / fd.abs().max(1e-8), fd)
    }

    #[test]
    fn every_term_matches_finite_differences() {
        for term in ["dist", "zero", "field", "cd", "pull", "eikonal"] {
            for seed in 0..3 {
                let (err, fd) = fd_relative_error(&only(term), seed);
                assert!(err < 1e-3, "{term} seed {seed}: rel err {err:e} (fd {fd:e})");
                assert!(fd.abs() > 1e-8, "{term}: vanishing directional derivative");
            }
        }
    }

    #[test]
    fn variants_match_finite_differences() {
        for kind in [FilterKind::Unidirectional, FilterKind::Average] {
            for policy in [SigmaPolicy::MaxNeighbor, SigmaPolicy::PatchDiagonal] {
                for term in ["zero", "field"] {
                    let cfg = FilterConfig {
                        kind,
                        sigma_p_policy: policy,
                        ..only(term)
                    };
                    let (err, _) = fd_relative_error(&cfg, 11);
                    assert!(err < 1e-3, "{kind:?} {policy:?} {term}: {err:e}");
                }
            }
        }
        let full = FilterConfig {
            k_filter: 8,
            eikonal_weight: 0.1,
            ..FilterConfig::default()
        };
        assert!(fd_relative_error(&full, 5).0 < 1e-3);
    }

    #[test]
    fn gradient_is_linear_in_weights() {
        let (field, cloud, batch) = small_setup(3);
        let grad = |cfg: &FilterConfig| {
            grad_params_of_loss(&FilterLoss::new(cfg.clone()).unwrap(), &field, &cloud, &batch)
                .unwrap()
                .grad
        };
        let g_zero = grad(&only("zero"));
        let g_cd = grad(&only("cd"));
        let cfg = FilterConfig {
            zero_weight: 0.5,
            alpha3: 3.0,
            ..only("zero")
        };
        let g = grad(&cfg);
        let mut expect = g_zero.clone();
        expect.scale(0.5);
        expect.scaled_add(3.0, &g_cd);
        let (a, b) = (g.flat(), expect.flat());
        let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn zero_weights_give_zero_gradient() {
        let (field, cloud, batch) = small_setup(4);
        let mut cfg = only("zero");
        cfg.zero_weight = 0.0;
        let lg = grad_params_of_loss(&FilterLoss::new(cfg).unwrap(), &field, &cloud, &batch).unwrap();
        assert!(lg.grad.is_zero());
        assert!(lg.output.l_zero > 0.0 && lg.output.total == 0.0);
    }

    #[test]
    fn plane_field_zeroes_filter_terms() {
        let (field, cloud) = plane_setup();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let queries: Vec<[f64; 3]> = (0..50)
            .map(|_| [rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4), rng.random_range(-0.1..0.1)])
            .collect();
        let batch = QueryBatch::from_queries(&cloud, queries, 16).unwrap();
        let cfg = FilterConfig::default();
        let b = total_loss(&field, &cloud, &batch, &cfg).unwrap();
        assert!(b.l_dist < 1e-12 && b.l_zero < 1e-12 && b.l_field < 1e-12, "{b:?}");
        assert_eq!(loss_dist(&field, &cloud).unwrap(), b.l_dist);
        let q = pull(&field, &[0.1, 0.2, 0.7]).unwrap();
        assert_eq!(q, [0.1, 0.2, 0.0]);
    }

    #[test]
    fn pull_examples() {
        let plane = MlpField::<f64>::plane(&[0.0, 0.0, 1.0], 0.0, 100.0).unwrap();
        assert_eq!(pull(&plane, &[0.0, 0.0, 2.0]).unwrap(), [0.0, 0.0, 0.0]);
        let on = [0.3, -0.2, 0.0];
        assert_eq!(pull(&plane, &on).unwrap(), on);
        let flat = MlpField::<f64>::zeros(3, &NetConfig::default()).unwrap();
        assert!(matches!(pull(&flat, &on), Err(Error::DegenerateGradient { .. })));
        assert!(project_neighbors(&flat, 0.1, &[on]).is_err());
    }

    #[test]
    fn project_neighbors_examples() {
        let plane = MlpField::<f64>::plane(&[0.0, 0.0, 1.0], 0.0, 100.0).unwrap();
        let p = [[1.0, 1.0, 0.0], [0.2, -0.4, 0.0]];
        assert_eq!(project_neighbors(&plane, 0.0, &p).unwrap(), p.to_vec());
        assert_eq!(project_neighbors(&plane, 0.5, &p).unwrap()[0], [1.0, 1.0, 0.5]);
    }

    #[test]
    fn loss_dist_examples() {
        let c = MlpField::<f64>::plane(&[0.0, 0.0, 0.0], -0.25, 100.0).unwrap();
        let cloud = sphere_cloud(30, 0.4, 0.0, 1);
        assert!((loss_dist(&c, &cloud).unwrap() - 0.25).abs() < 1e-15);
        let (field, cloud, _) = small_setup(2);
        let oracle = cloud.points().iter().map(|p| field.value(p).abs()).sum::<f64>() / cloud.len() as f64;
        assert!((loss_dist(&field, &cloud).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn single_query_two_neighbours_by_hand() {
        // Field f = z; neighbours on z = 0 with the query straight above
        // the first one.
        let field = MlpField::<f64>::plane(&[0.0, 0.0, 1.0], 0.0, 100.0).unwrap();
        let cloud = PointCloud::new(vec![[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [2.0, 2.0, 0.3]]).unwrap();
        let q = [0.0, 0.0, 0.2];
        let batch = QueryBatch::from_queries(&cloud, vec![q], 2).unwrap();
        let cfg = FilterConfig {
            k_filter: 2,
            ..FilterConfig::default()
        };
        // Pulled to the origin; both neighbours lie in the plane, normals
        // agree, so every projection is zero.
        assert!(loss_zero(&field, &cloud, &batch, &cfg).unwrap().abs() < 1e-15);
        // Tilt the third point into the neighbourhood instead.
        let cloud = PointCloud::new(vec![[0.0, 0.0, 0.0], [0.1, 0.0, 0.05], [2.0, 2.0, 0.3]]).unwrap();
        let batch = QueryBatch::from_queries(&cloud, vec![q], 2).unwrap();
        // q^ = (0, 0, 0); r_1 = 0, r_2 = (-0.1, 0, -0.05), sigma_p = |r_2|,
        // all normals (0, 0, 1): w_1 = 1, w_2 = exp(-1),
        // d = (0 + 2 * 0.05 * exp(-1)) / (1 + exp(-1)).
        let e = (-1f64).exp();
        let expect = 0.1 * e / (1.0 + e);
        let got = loss_zero(&field, &cloud, &batch, &cfg).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn field_term_examples() {
        let (field, cloud) = plane_setup();
        let cfg = FilterConfig::default();
        let batch = QueryBatch::from_queries(&cloud, vec![[0.01, 0.02, 0.3]], 16).unwrap();
        assert!(loss_field(&field, &cloud, &batch, &cfg).unwrap() < 1e-12);
        // A query on the zero level set sees the same patch in both terms.
        let (_, cloud, batch) = small_setup(6);
        let net = NetConfig {
            hidden: vec![32, 32],
            skip: None,
            radius: 0.3,
            ..NetConfig::default()
        };
        let field = MlpField::geometric_init(3, &net, 6).unwrap();
        let mut on_batch = batch.clone();
        // Newton steps along the gradient put the queries on the zero set.
        for _ in 0..30 {
            on_batch.queries = on_batch
                .queries
                .iter()
                .map(|q| {
                    let s = field.eval(q);
                    let g2 = crate::geom::vector::norm2(&s.gradient);
                    std::array::from_fn(|k| q[k] - s.value * s.gradient[k] / g2)
                })
                .collect();
        }
        let residual = on_batch.queries.iter().map(|q| field.value(q).abs()).fold(0.0, f64::max);
        assert!(residual < 1e-12, "{residual}");
        let cfg = FilterConfig {
            k_filter: 8,
            ..FilterConfig::default()
        };
        let z = loss_zero(&field, &cloud, &on_batch, &cfg).unwrap();
        let f = loss_field(&field, &cloud, &on_batch, &cfg).unwrap();
        assert!((z - f).abs() < 1e-9 * z.max(1.0), "{z} vs {f}");
    }

    fn brute_chamfer(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
        let one = |x: &[[f64; 3]], y: &[[f64; 3]]| {
            x.iter().map(|p| y.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min)).sum::<f64>() / x.len() as f64
        };
        one(a, b) + one(b, a)
    }

    #[test]
    fn chamfer_and_pull_terms() {
        let plane = MlpField::<f64>::plane(&[0.0, 0.0, 1.0], 0.0, 100.0).unwrap();
        let cloud = PointCloud::new(vec![[0.0, 0.0, 0.0]]).unwrap();
        let batch = QueryBatch::from_queries(&cloud, vec![[0.3, 0.0, 0.5]], 1).unwrap();
        // Pulled point (0.3, 0, 0) is 0.3 from the only input point.
        assert!((loss_cd(&plane, &cloud, &batch).unwrap() - 0.6).abs() < 1e-15);
        assert!((loss_pull(&plane, &cloud, &batch).unwrap() - 0.3).abs() < 1e-15);

        let (field, cloud, batch) = small_setup(8);
        let pulled: Vec<[f64; 3]> = batch.queries.iter().map(|q| pull(&field, q).unwrap()).collect();
        let cd = loss_cd(&field, &cloud, &batch).unwrap();
        assert!((cd - brute_chamfer(&pulled, cloud.points())).abs() < 1e-12);
        let lp = loss_pull(&field, &cloud, &batch).unwrap();
        let direct = pulled
            .iter()
            .zip(&batch.nn_index)
            .map(|(q, &j)| dist(q, &cloud.points()[j]))
            .sum::<f64>()
            / pulled.len() as f64;
        assert!((lp - direct).abs() < 1e-12);
    }

    #[test]
    fn chamfer_vanishes_on_the_cloud() {
        let plane = MlpField::<f64>::plane(&[0.0, 0.0, 1.0], 0.0, 100.0).unwrap();
        let pts: Vec<[f64; 3]> = (0..30).map(|i| [i as f64 * 0.01, 0.0, 0.0]).collect();
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let batch = QueryBatch::from_queries(&cloud, pts, 2).unwrap();
        assert_eq!(loss_cd(&plane, &cloud, &batch).unwrap(), 0.0);
        assert_eq!(loss_pull(&plane, &cloud, &batch).unwrap(), 0.0);
    }

    #[test]
    fn total_is_weighted_sum() {
        let (field, cloud, batch) = small_setup(9);
        let base = FilterConfig {
            k_filter: 8,
            ..FilterConfig::default()
        };
        let b = total_loss(&field, &cloud, &batch, &base).unwrap();
        let expect = b.l_zero + b.l_field + b.l_dist + 10.0 * b.l_cd;
        assert!((b.total - expect).abs() < 1e-12 * expect);
        let none = FilterConfig {
            alpha1: 0.0,
            alpha2: 0.0,
            alpha3: 0.0,
            ..base
        };
        let b0 = total_loss(&field, &cloud, &batch, &none).unwrap();
        assert_eq!(b0.total, b0.l_zero);
        for v in [b.l_dist, b.l_zero, b.l_field, b.l_cd, b.l_pull, b.l_eikonal] {
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn too_few_cached_neighbours_is_an_error() {
        let (field, cloud, batch) = small_setup(1);
        let cfg = FilterConfig::default();
        assert!(loss_zero(&field, &cloud, &batch, &cfg).is_err());
    }
}
