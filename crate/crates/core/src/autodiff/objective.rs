//! Differentiating losses defined on the field around a query batch.
//!
//! A loss sees the field sampled at three sets of points:
//!
//! * the queries `q` (value and gradient),
//! * the pulled queries `q^ = q - f(q) n(q)` (value and gradient), whose
//!   positions depend on the parameters,
//! * every input point `p` (value and gradient), when requested.
//!
//! The loss writes cotangents for each of these quantities. They are then
//! propagated back: through the tape at `q^` (which also yields the
//! position cotangent `H gbar + fbar g`), through the pulling map into `f(q)`
//! and `grad f(q)`, and through the tapes at `q` and `p` into the parameters.

use ndarray::{Array1, Array2};

use super::grad::ParamGrad;
use super::tape::Tape;
use crate::error::Result;
use crate::geom::vector::{dot, norm, scale};
use crate::geom::{PointCloud, QueryBatch};
use crate::net::MlpField;
use crate::scalar::Real;

/// Floor applied to `|grad f|` before normalizing.
pub const GRAD_FLOOR: f64 = 1e-12;

/// `g / max(|g|, floor)` and the (floored) norm.
#[inline]
pub fn normalize<T: Real, const D: usize>(g: &[T; D]) -> ([T; D], T) {
    let n = norm(g).max(T::lit(GRAD_FLOOR));
    (scale(g, T::one() / n), n)
}

/// Pulls the cotangent of `normalize(g)` back to `g`.
#[inline]
pub fn normalize_backward<T: Real, const D: usize>(unit: &[T; D], floored_norm: T, nbar: &[T; D], raw_norm: T) -> [T; D] {
    if raw_norm > T::lit(GRAD_FLOOR) {
        let proj = dot(unit, nbar);
        std::array::from_fn(|i| (nbar[i] - unit[i] * proj) / floored_norm)
    } else {
        scale(nbar, T::one() / floored_norm)
    }
}

/// Moves `q` to the zero level set along the normalized gradient.
#[inline]
pub fn pull_point<T: Real, const D: usize>(q: &[T; D], value: T, unit: &[T; D]) -> [T; D] {
    std::array::from_fn(|i| q[i] - value * unit[i])
}

/// Network samples at a set of points.
#[derive(Debug, Clone)]
pub struct Samples<T, const D: usize> {
    pub positions: Vec<[T; D]>,
    pub values: Vec<T>,
    pub gradients: Vec<[T; D]>,
    pub unit: Vec<[T; D]>,
    /// `max(|grad f|, floor)`
    pub norms: Vec<T>,
    /// Unfloored `|grad f|`.
    pub raw_norms: Vec<T>,
}

impl<T: Real, const D: usize> Samples<T, D> {
    fn from_tape(field: &MlpField<T>, positions: Vec<[T; D]>, tape: &Tape<T>) -> Self {
        let values = tape.values().to_vec();
        let g = tape.input_gradients(field);
        let gradients: Vec<[T; D]> = (0..positions.len())
            .map(|i| std::array::from_fn(|j| g[[i, j]]))
            .collect();
        let mut unit = Vec::with_capacity(gradients.len());
        let mut norms = Vec::with_capacity(gradients.len());
        let mut raw_norms = Vec::with_capacity(gradients.len());
        for gr in &gradients {
            let (u, n) = normalize(gr);
            unit.push(u);
            norms.push(n);
            raw_norms.push(norm(gr));
        }
        Self {
            positions,
            values,
            gradients,
            unit,
            norms,
            raw_norms,
        }
    }

    fn empty() -> Self {
        Self {
            positions: Vec::new(),
            values: Vec::new(),
            gradients: Vec::new(),
            unit: Vec::new(),
            norms: Vec::new(),
            raw_norms: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Count of samples whose gradient norm is at or below `threshold`.
    pub fn degenerate_count(&self, threshold: T) -> usize {
        self.raw_norms.iter().filter(|&&n| !(n > threshold)).count()
    }
}

/// Cotangents with respect to sampled quantities.
#[derive(Debug, Clone)]
pub struct SampleCotangents<T, const D: usize> {
    pub values: Vec<T>,
    pub gradients: Vec<[T; D]>,
}

impl<T: Real, const D: usize> SampleCotangents<T, D> {
    fn zeros(n: usize) -> Self {
        Self {
            values: vec![T::zero(); n],
            gradients: vec![[T::zero(); D]; n],
        }
    }

    fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
            && self.gradients.iter().flatten().all(|v| *v == T::zero())
    }

    /// Adds the cotangent of a unit normal at sample `i`.
    pub fn add_unit_cotangent(&mut self, samples: &Samples<T, D>, i: usize, nbar: &[T; D]) {
        let g = normalize_backward(&samples.unit[i], samples.norms[i], nbar, samples.raw_norms[i]);
        for k in 0..D {
            self.gradients[i][k] += g[k];
        }
    }
}

/// The field sampled around one training batch.
pub struct FieldState<'a, T, const D: usize> {
    pub cloud: &'a PointCloud<T, D>,
    pub batch: &'a QueryBatch<T, D>,
    pub queries: Samples<T, D>,
    pub pulled: Samples<T, D>,
    /// Samples at every input point; empty unless the loss asked for them.
    pub points: Samples<T, D>,
}

/// Everything a loss may write cotangents into.
#[derive(Debug, Clone)]
pub struct Cotangents<T, const D: usize> {
    pub queries: SampleCotangents<T, D>,
    pub pulled: SampleCotangents<T, D>,
    /// Cotangent of the pulled positions themselves.
    pub pulled_positions: Vec<[T; D]>,
    pub points: SampleCotangents<T, D>,
}

/// A differentiable objective over a [`FieldState`].
pub trait LossEvaluator<T: Real, const D: usize> {
    type Output;

    /// Whether the loss reads samples at the input points.
    fn needs_points(&self) -> bool {
        true
    }

    /// Returns the loss and adds `d loss / d (sampled quantity)` into `cot`.
    fn evaluate(&self, state: &FieldState<'_, T, D>, cot: &mut Cotangents<T, D>) -> Result<Self::Output>;
}

fn to_matrix<T: Real, const D: usize>(points: &[[T; D]]) -> Array2<T> {
    Array2::from_shape_fn((points.len(), D), |(i, j)| points[i][j])
}

fn cot_arrays<T: Real, const D: usize>(c: &SampleCotangents<T, D>) -> (Array1<T>, Array2<T>) {
    (Array1::from(c.values.clone()), to_matrix(&c.gradients))
}

/// Evaluates the field around `batch` (the forward half of
/// [`grad_params_of_loss`]).
pub fn sample_field<'a, T: Real, const D: usize>(
    field: &MlpField<T>,
    cloud: &'a PointCloud<T, D>,
    batch: &'a QueryBatch<T, D>,
    with_points: bool,
) -> (FieldState<'a, T, D>, [Option<Tape<T>>; 3]) {
    let q_tape = Tape::record(field, &to_matrix(&batch.queries));
    let queries = Samples::from_tape(field, batch.queries.clone(), &q_tape);
    let pulled_pos: Vec<[T; D]> = (0..queries.len())
        .map(|i| pull_point(&queries.positions[i], queries.values[i], &queries.unit[i]))
        .collect();
    let qh_tape = Tape::record(field, &to_matrix(&pulled_pos));
    let pulled = Samples::from_tape(field, pulled_pos, &qh_tape);
    let (points, p_tape) = if with_points {
        let tape = Tape::record(field, &to_matrix(cloud.points()));
        (Samples::from_tape(field, cloud.points().to_vec(), &tape), Some(tape))
    } else {
        (Samples::empty(), None)
    };
    (
        FieldState {
            cloud,
            batch,
            queries,
            pulled,
            points,
        },
        [Some(q_tape), Some(qh_tape), p_tape],
    )
}

/// Loss value, parameter gradient, and the sampled state (for diagnostics).
pub struct LossGradient<'a, T: Real, const D: usize, O> {
    pub output: O,
    pub grad: ParamGrad<T>,
    pub state: FieldState<'a, T, D>,
}

/// Evaluates `loss` on `batch` and returns its exact parameter gradient.
pub fn grad_params_of_loss<'a, T: Real, const D: usize, L: LossEvaluator<T, D>>(
    loss: &L,
    field: &MlpField<T>,
    cloud: &'a PointCloud<T, D>,
    batch: &'a QueryBatch<T, D>,
) -> Result<LossGradient<'a, T, D, L::Output>> {
    let (state, [q_tape, qh_tape, p_tape]) = sample_field(field, cloud, batch, loss.needs_points());
    let m = state.queries.len();
    let mut cot = Cotangents {
        queries: SampleCotangents::zeros(m),
        pulled: SampleCotangents::zeros(m),
        pulled_positions: vec![[T::zero(); D]; m],
        points: SampleCotangents::zeros(state.points.len()),
    };
    let output = loss.evaluate(&state, &mut cot)?;

    let mut grad = ParamGrad::zeros_like(field);
    let (q_tape, qh_tape) = (q_tape.expect("query tape"), qh_tape.expect("pulled tape"));

    // Pulled queries: parameters directly, plus their positions.
    if !cot.pulled.is_zero() {
        let (fbar, gbar) = cot_arrays(&cot.pulled);
        let (g, xbar) = qh_tape.backward(field, fbar.view(), gbar.view());
        grad.add_assign(&g);
        for (i, p) in cot.pulled_positions.iter_mut().enumerate() {
            for k in 0..D {
                p[k] += xbar[[i, k]];
            }
        }
    }
    // q^ = q - f(q) n(q)
    for i in 0..m {
        let pbar = cot.pulled_positions[i];
        if pbar.iter().all(|v| *v == T::zero()) {
            continue;
        }
        let n = state.queries.unit[i];
        cot.queries.values[i] -= dot(&pbar, &n);
        let nbar = scale(&pbar, -state.queries.values[i]);
        cot.queries.add_unit_cotangent(&state.queries, i, &nbar);
    }
    if !cot.queries.is_zero() {
        let (fbar, gbar) = cot_arrays(&cot.queries);
        grad.add_assign(&q_tape.backward(field, fbar.view(), gbar.view()).0);
    }
    if let Some(p_tape) = p_tape {
        if !cot.points.is_zero() {
            let (fbar, gbar) = cot_arrays(&cot.points);
            grad.add_assign(&p_tape.backward(field, fbar.view(), gbar.view()).0);
        }
    }
    Ok(LossGradient { output, grad, state })
}
