use ndarray::{Array1, Array2, Zip};

use super::tape::Tape;
use crate::net::{Linear, MlpField};
use crate::scalar::Real;

/// Gradient with respect to every network parameter, shaped like the
/// network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad<T> {
    pub layers: Vec<Linear<T>>,
}

impl<T: Real> ParamGrad<T> {
    pub fn zeros_like(field: &MlpField<T>) -> Self {
        Self {
            layers: field
                .layers()
                .iter()
                .map(|l| Linear::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.scaled_add(T::one(), other);
    }

    /// `self += s * other`
    pub fn scaled_add(&mut self, s: T, other: &Self) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.scaled_add(s, &b.weight);
            a.bias.scaled_add(s, &b.bias);
        }
    }

    pub fn scale(&mut self, s: T) {
        for l in &mut self.layers {
            l.weight.mapv_inplace(|v| v * s);
            l.bias.mapv_inplace(|v| v * s);
        }
    }

    pub fn flat(&self) -> Vec<T> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weight.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    pub fn dot(&self, other: &Self) -> T {
        let mut s = T::zero();
        for (a, b) in self.layers.iter().zip(&other.layers) {
            Zip::from(&a.weight).and(&b.weight).for_each(|&x, &y| s += x * y);
            Zip::from(&a.bias).and(&b.bias).for_each(|&x, &y| s += x * y);
        }
        s
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| *v == T::zero()))
    }

    pub fn shape_matches(&self, field: &MlpField<T>) -> bool {
        self.layers.len() == field.layers().len()
            && self
                .layers
                .iter()
                .zip(field.layers())
                .all(|(g, l)| g.weight.dim() == l.weight.dim() && g.bias.len() == l.bias.len())
    }
}

fn single<T: Real, const D: usize>(q: &[T; D]) -> Array2<T> {
    Array2::from_shape_fn((1, D), |(_, j)| q[j])
}

/// `d f(q) / d theta`
pub fn grad_params_of_value<T: Real, const D: usize>(field: &MlpField<T>, q: &[T; D]) -> ParamGrad<T> {
    let tape = Tape::record(field, &single(q));
    let fbar = Array1::from_elem(1, T::one());
    let gbar = Array2::zeros((1, D));
    tape.backward(field, fbar.view(), gbar.view()).0
}

/// `d (c . grad_q f(q)) / d theta` for a cotangent `c`.
pub fn grad_params_of_input_gradient<T: Real, const D: usize>(
    field: &MlpField<T>,
    q: &[T; D],
    cotangent: &[T; D],
) -> ParamGrad<T> {
    let tape = Tape::record(field, &single(q));
    let fbar = Array1::zeros(1);
    let gbar = single(cotangent);
    tape.backward(field, fbar.view(), gbar.view()).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::activation::{curvature_from_slope, softplus_and_slope};
    use crate::net::NetConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small(hidden: Vec<usize>, skip: Option<usize>, seed: u64) -> MlpField<f64> {
        MlpField::random(3, &NetConfig { hidden, skip, ..NetConfig::default() }, seed).unwrap()
    }

    fn random_direction(field: &MlpField<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..field.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// Central difference of `h(theta)` along `dir`.
    fn directional_fd(field: &MlpField<f64>, dir: &[f64], eps: f64, h: impl Fn(&MlpField<f64>) -> f64) -> f64 {
        let base = field.flat_params();
        let mut plus = field.clone();
        let mut minus = field.clone();
        plus.set_flat_params(&base.iter().zip(dir).map(|(p, d)| p + eps * d).collect::<Vec<_>>());
        minus.set_flat_params(&base.iter().zip(dir).map(|(p, d)| p - eps * d).collect::<Vec<_>>());
        (h(&plus) - h(&minus)) / (2.0 * eps)
    }

    fn dot_flat(g: &ParamGrad<f64>, dir: &[f64]) -> f64 {
        g.flat().iter().zip(dir).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn output_bias_gradient_is_one() {
        let mut f = small(vec![8, 8], None, 1);
        let n = f.layers().len();
        f.layers_mut()[n - 1].weight.fill(0.0);
        f.layers_mut()[n - 1].bias[0] = 0.3;
        let g = grad_params_of_value(&f, &[0.2, -0.1, 0.4]);
        assert_eq!(g.layers[n - 1].bias[0], 1.0);
        // Zero output weights cut every path into the hidden layers.
        for l in 0..n - 1 {
            assert!(g.layers[l].weight.iter().all(|&v| v == 0.0));
        }
        assert!(g.layers[n - 1].weight.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn value_gradient_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..5 {
            let f = small(vec![32, 32], None, seed);
            let q: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let g = grad_params_of_value(&f, &q);
            assert!(g.shape_matches(&f));
            let dir = random_direction(&f, &mut rng);
            let fd = directional_fd(&f, &dir, 1e-4, |m| m.value(&q));
            let an = dot_flat(&g, &dir);
            assert!((an - fd).abs() <= 1e-3 * fd.abs().max(1e-6), "{an} vs {fd}");
            assert_eq!(g, grad_params_of_value(&f, &q));
        }
    }

    #[test]
    fn input_gradient_parameter_gradient_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (seed, skip) in [(0, None), (1, Some(1)), (2, None)] {
            let f = small(vec![32, 32], skip, seed);
            let q: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let c: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let g = grad_params_of_input_gradient(&f, &q, &c);
            let dir = random_direction(&f, &mut rng);
            let fd = directional_fd(&f, &dir, 1e-4, |m| {
                let s = m.eval(&q);
                (0..3).map(|j| c[j] * s.gradient[j]).sum()
            });
            let an = dot_flat(&g, &dir);
            assert!((an - fd).abs() <= 1e-3 * fd.abs().max(1e-6), "{an} vs {fd}");
        }
    }

    #[test]
    fn zero_cotangent_gives_zero_gradient() {
        let f = small(vec![16, 16], Some(1), 3);
        assert!(grad_params_of_input_gradient(&f, &[0.1, 0.2, 0.3], &[0.0; 3]).is_zero());
    }

    #[test]
    fn one_hidden_layer_closed_form() {
        let f = small(vec![6], None, 9);
        let beta = f.beta();
        let q = [0.3, -0.2, 0.1];
        let c = [0.5, 1.0, -0.7];
        let (w1, b1) = (&f.layers()[0].weight, &f.layers()[0].bias);
        let w2 = &f.layers()[1].weight;
        let g = grad_params_of_input_gradient(&f, &q, &c);
        for k in 0..6 {
            let z: f64 = (0..3).map(|j| w1[[k, j]] * q[j]).sum::<f64>() + b1[k];
            let (_, s1) = softplus_and_slope(z, beta);
            let s2 = curvature_from_slope(s1, beta);
            let wc: f64 = (0..3).map(|j| w1[[k, j]] * c[j]).sum();
            let expect_w2 = s1 * wc;
            let expect_b1 = w2[[0, k]] * s2 * wc;
            assert!((g.layers[1].weight[[0, k]] - expect_w2).abs() < 1e-12);
            assert!((g.layers[0].bias[k] - expect_b1).abs() < 1e-10 * expect_b1.abs().max(1.0));
            for j in 0..3 {
                let expect = w2[[0, k]] * (s2 * q[j] * wc + s1 * c[j]);
                assert!((g.layers[0].weight[[k, j]] - expect).abs() < 1e-10 * expect.abs().max(1.0));
            }
        }
        assert_eq!(g.layers[1].bias[0], 0.0);
    }

    #[test]
    fn hessian_vector_product_matches_fd() {
        let f = small(vec![32, 32, 32], Some(2), 4);
        let q = [0.1, 0.25, -0.3];
        let v = [0.3, -0.6, 0.2];
        let tape = Tape::record(&f, &Array2::from_shape_fn((1, 3), |(_, j)| q[j]));
        let (_, xbar) = tape.backward(&f, Array1::zeros(1).view(), Array2::from_shape_fn((1, 3), |(_, j)| v[j]).view());
        let h = 1e-5;
        for k in 0..3 {
            let mut a = q;
            let mut b = q;
            a[k] += h;
            b[k] -= h;
            let ga = f.eval(&a).gradient;
            let gb = f.eval(&b).gradient;
            // (H v)_k = d/dx_k (v . g)
            let fd: f64 = (0..3).map(|j| v[j] * (ga[j] - gb[j]) / (2.0 * h)).sum();
            assert!((xbar[[0, k]] - fd).abs() < 1e-4 * fd.abs().max(1.0), "{} vs {fd}", xbar[[0, k]]);
        }
    }
}
