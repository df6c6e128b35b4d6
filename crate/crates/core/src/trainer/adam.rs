use crate::error::{Error, Result};
use crate::scalar::Real;

pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    /// Number of completed steps.
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Real>(
    params: &mut [T],
    grads: &[T],
    state: &mut AdamState<T>,
    lr: f64,
    betas: (f64, f64),
) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != grads.len() {
        return Err(Error::input("parameter, gradient and state sizes differ"));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            term: "gradient",
            index: i,
        });
    }
    state.t += 1;
    let (b1, b2) = betas;
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    let (b1t, b2t) = (T::lit(b1), T::lit(b2));
    let (one_b1, one_b2) = (T::lit(1.0 - b1), T::lit(1.0 - b2));
    let step = T::lit(lr / c1);
    let inv_c2 = T::lit(1.0 / c2);
    let eps = T::lit(ADAM_EPS);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1t * state.m[i] + one_b1 * g;
        state.v[i] = b2t * state.v[i] + one_b2 * g * g;
        params[i] -= step * state.m[i] / ((state.v[i] * inv_c2).sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::<f64>::new(2);
        s.m = vec![0.5, 0.5];
        s.v = vec![0.25, 0.25];
        adam_step(&mut p, &[0.0, 0.0], &mut s, 0.0, (0.9, 0.999)).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(s.m, vec![0.45, 0.45]);
        assert!((s.v[0] - 0.24975).abs() < 1e-15);
    }

    #[test]
    fn zero_lr_keeps_params() {
        let mut p = vec![0.3f32; 4];
        let mut s = AdamState::new(4);
        for _ in 0..5 {
            adam_step(&mut p, &[1.0, -1.0, 2.0, 0.5], &mut s, 0.0, (0.9, 0.999)).unwrap();
        }
        assert_eq!(p, vec![0.3; 4]);
        assert_eq!(s.t, 5);
    }

    #[test]
    fn constant_gradient_matches_scalar_reference() {
        let (lr, b1, b2, g) = (1e-3, 0.9, 0.999, 0.37);
        let mut p = vec![1.0f64];
        let mut s = AdamState::new(1);
        let (mut x, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for t in 1..=50 {
            adam_step(&mut p, &[g], &mut s, lr, (b1, b2)).unwrap();
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            x -= lr * mh / (vh.sqrt() + 1e-8);
            assert!((p[0] - x).abs() < 1e-14, "step {t}");
        }
        // With a constant gradient the bias-corrected step is lr * g / (|g| + eps).
        let closed = 1.0 - 50.0 * lr * g / (g + 1e-8);
        assert!((p[0] - closed).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut p = vec![0.0f64; 2];
        let mut s = AdamState::new(2);
        let err = adam_step(&mut p, &[0.0, f64::NAN], &mut s, 1e-3, (0.9, 0.999)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
        assert_eq!(s.t, 0);
    }
}
