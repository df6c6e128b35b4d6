use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::activation::softplus_and_slope;
use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One affine layer, `weight` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Real> Linear<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

/// Architecture of the signed distance network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
    /// Hidden layer whose input is `[previous activation, x] / sqrt(2)`.
    pub skip: Option<usize>,
    pub beta: f64,
    /// Radius of the sphere the initialized network approximates.
    pub radius: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64; 4],
            skip: Some(2),
            beta: 100.0,
            radius: 0.5,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::input("hidden layer widths must be non-empty and positive"));
        }
        if let Some(s) = self.skip {
            if s == 0 || s >= self.hidden.len() {
                return Err(Error::input(format!(
                    "skip layer {s} must lie in 1..{}",
                    self.hidden.len()
                )));
            }
        }
        if !(self.beta > 0.0) || !(self.radius > 0.0) {
            return Err(Error::input("beta and radius must be positive"));
        }
        Ok(())
    }
}

/// Signed distance value and input gradient at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfSample<T, const D: usize> {
    pub value: T,
    pub gradient: [T; D],
}

/// Multilayer perceptron `f: R^d -> R` with softplus activations.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpField<T> {
    d_in: usize,
    hidden: Vec<usize>,
    skip: Option<usize>,
    beta: T,
    layers: Vec<Linear<T>>,
}

impl<T: Real> MlpField<T> {
    /// All-zero parameters with the given architecture.
    pub fn zeros(d_in: usize, cfg: &NetConfig) -> Result<Self> {
        cfg.validate()?;
        if d_in == 0 {
            return Err(Error::input("input dimension must be positive"));
        }
        let mut layers = Vec::with_capacity(cfg.hidden.len() + 1);
        let mut prev = d_in;
        for (l, &w) in cfg.hidden.iter().enumerate() {
            let inputs = if cfg.skip == Some(l) { prev + d_in } else { prev };
            layers.push(Linear::zeros(inputs, w));
            prev = w;
        }
        layers.push(Linear::zeros(prev, 1));
        Ok(Self {
            d_in,
            hidden: cfg.hidden.clone(),
            skip: cfg.skip,
            beta: T::lit(cfg.beta),
            layers,
        })
    }

    /// Geometric initialization: hidden weights `N(0, 2/out)`, zero biases,
    /// output weights `N(sqrt(pi/in), 1e-4^2)` and output bias `-radius`, so
    /// that `f(x) ~ |x| - radius`. The output layer is then calibrated by a
    /// ridge fit to the sphere distance.
    pub fn geometric_init(d_in: usize, cfg: &NetConfig, seed: u64) -> Result<Self> {
        let mut field = Self::zeros(d_in, cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = field.layers.len();
        for (l, layer) in field.layers.iter_mut().enumerate() {
            let (outputs, inputs) = layer.weight.dim();
            let (mean, std) = if l + 1 == n {
                ((std::f64::consts::PI / inputs as f64).sqrt(), 1e-4)
            } else {
                (0.0, (2.0 / outputs as f64).sqrt())
            };
            layer.weight.mapv_inplace(|_| {
                let z: f64 = rng.sample(StandardNormal);
                T::lit(mean + std * z)
            });
            layer.bias.fill(T::zero());
        }
        field.layers[n - 1].bias[0] = T::lit(-cfg.radius);
        field.calibrate_output(cfg.radius, &mut rng);
        Ok(field)
    }

    /// Refits the output layer so the field matches `|x| - radius` on random
    /// points of `[-0.55, 0.55]^d`, with a ridge penalty pulling the weights
    /// toward their initial values. The random hidden layers are kept.
    fn calibrate_output(&mut self, radius: f64, rng: &mut ChaCha8Rng) {
        const SAMPLES: usize = 4096;
        let d = self.d_in;
        let x = Array2::from_shape_fn((SAMPLES, d), |_| rng.random_range(-0.55..0.55));
        let x_t = x.mapv(T::lit);
        let feats = self.last_hidden(&x_t).mapv(|v| v.to_f64_lossy());
        let w = feats.ncols();
        // Design matrix [features, 1].
        let mut a = Array2::<f64>::ones((SAMPLES, w + 1));
        a.slice_mut(ndarray::s![.., ..w]).assign(&feats);
        let target = Array1::from_shape_fn(SAMPLES, |i| {
            (0..d).map(|j| x[[i, j]] * x[[i, j]]).sum::<f64>().sqrt() - radius
        });
        let out = &self.layers[self.layers.len() - 1];
        let mut prior = Array1::<f64>::zeros(w + 1);
        for j in 0..w {
            prior[j] = out.weight[[0, j]].to_f64_lossy();
        }
        prior[w] = -radius;
        let mut normal = a.t().dot(&a);
        let lambda = 1e-3 * (0..=w).map(|j| normal[[j, j]]).sum::<f64>() / (w + 1) as f64;
        let mut rhs = a.t().dot(&target);
        for j in 0..=w {
            normal[[j, j]] += lambda;
            rhs[j] += lambda * prior[j];
        }
        if let Some(sol) = cholesky_solve(normal, rhs) {
            let n = self.layers.len();
            let out = &mut self.layers[n - 1];
            for j in 0..w {
                out.weight[[0, j]] = T::lit(sol[j]);
            }
            out.bias[0] = T::lit(sol[w]);
        }
    }

    /// Input of the output layer.
    fn last_hidden(&self, x: &Array2<T>) -> Array2<T> {
        let n = self.layers.len();
        let inv_sqrt2 = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        let mut u = x.clone();
        for (l, layer) in self.layers[..n - 1].iter().enumerate() {
            if self.skip == Some(l) {
                u = ndarray::concatenate(Axis(1), &[u.view(), x.view()]).expect("skip concat");
                u.mapv_inplace(|v| v * inv_sqrt2);
            }
            let mut z = u.dot(&layer.weight.t());
            z += &layer.bias;
            let beta = self.beta;
            z.mapv_inplace(|v| softplus_and_slope(v, beta).0);
            u = z;
        }
        u
    }

    /// Unstructured Gaussian parameters (`N(0, 1/in)` weights, `N(0, 0.1^2)`
    /// biases). Used for gradient checks, where a sphere-like field would be
    /// too special.
    pub fn random(d_in: usize, cfg: &NetConfig, seed: u64) -> Result<Self> {
        let mut field = Self::zeros(d_in, cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut field.layers {
            let std = (1.0 / layer.inputs() as f64).sqrt();
            layer.weight.mapv_inplace(|_| {
                let z: f64 = rng.sample(StandardNormal);
                T::lit(std * z)
            });
            layer.bias.mapv_inplace(|_| {
                let z: f64 = rng.sample(StandardNormal);
                T::lit(0.1 * z)
            });
        }
        Ok(field)
    }

    pub fn input_dim(&self) -> usize {
        self.d_in
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn skip(&self) -> Option<usize> {
        self.skip
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn layers(&self) -> &[Linear<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Linear<T>] {
        &mut self.layers
    }

    pub fn config(&self, radius: f64) -> NetConfig {
        NetConfig {
            hidden: self.hidden.clone(),
            skip: self.skip,
            beta: self.beta.to_f64_lossy(),
            radius,
        }
    }

    /// The affine field `f(x) = normal . x + offset`, represented exactly
    /// through `s(z) - s(-z) = z`.
    pub fn plane(normal: &[T], offset: T, beta: T) -> Result<Self> {
        let d_in = normal.len();
        if d_in == 0 || !(beta > T::zero()) {
            return Err(Error::input("plane field needs a normal and a positive beta"));
        }
        let mut hidden = Linear::zeros(d_in, 2);
        for (j, &n) in normal.iter().enumerate() {
            hidden.weight[[0, j]] = n;
            hidden.weight[[1, j]] = -n;
        }
        hidden.bias[0] = offset;
        hidden.bias[1] = -offset;
        let mut out = Linear::zeros(2, 1);
        out.weight[[0, 0]] = T::one();
        out.weight[[0, 1]] = -T::one();
        Ok(Self::from_parts(d_in, vec![2], None, beta, vec![hidden, out]))
    }

    pub(crate) fn from_parts(
        d_in: usize,
        hidden: Vec<usize>,
        skip: Option<usize>,
        beta: T,
        layers: Vec<Linear<T>>,
    ) -> Self {
        Self {
            d_in,
            hidden,
            skip,
            beta,
            layers,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    /// Parameters in storage order: per layer, row-major weight then bias.
    pub fn flat_params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weight.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[T]) {
        assert_eq!(flat.len(), self.param_count(), "parameter vector length");
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.weight.iter_mut().for_each(|w| *w = it.next().unwrap());
            l.bias.iter_mut().for_each(|b| *b = it.next().unwrap());
        }
    }

    fn points_matrix<const D: usize>(&self, points: &[[T; D]]) -> Array2<T> {
        assert_eq!(D, self.d_in, "point dimension does not match the network");
        Array2::from_shape_fn((points.len(), D), |(i, j)| points[i][j])
    }

    /// Field values only (no gradient bookkeeping), `x` is `B x d`.
    pub fn forward_values(&self, x: &Array2<T>) -> Array1<T> {
        let n = self.layers.len();
        let inv_sqrt2 = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        let mut u = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            if self.skip == Some(l) {
                u = ndarray::concatenate(Axis(1), &[u.view(), x.view()]).expect("skip concat");
                u.mapv_inplace(|v| v * inv_sqrt2);
            }
            let mut z = u.dot(&layer.weight.t());
            z += &layer.bias;
            if l + 1 < n {
                let beta = self.beta;
                z.mapv_inplace(|v| softplus_and_slope(v, beta).0);
            }
            u = z;
        }
        u.column(0).to_owned()
    }

    pub fn values<const D: usize>(&self, points: &[[T; D]]) -> Vec<T> {
        self.forward_values(&self.points_matrix(points)).to_vec()
    }

    pub fn value<const D: usize>(&self, q: &[T; D]) -> T {
        self.values(std::slice::from_ref(q))[0]
    }

    /// Values and exact input gradients for a batch of points.
    pub fn eval_batch<const D: usize>(&self, points: &[[T; D]]) -> Vec<SdfSample<T, D>> {
        let x = self.points_matrix(points);
        let tape = Tape::record(self, &x);
        let g = tape.input_gradients(self);
        tape.values()
            .iter()
            .enumerate()
            .map(|(i, &value)| SdfSample {
                value,
                gradient: std::array::from_fn(|j| g[[i, j]]),
            })
            .collect()
    }

    pub fn eval<const D: usize>(&self, q: &[T; D]) -> SdfSample<T, D> {
        self.eval_batch(std::slice::from_ref(q))[0]
    }

    pub fn cast<U: Real>(&self) -> MlpField<U> {
        MlpField {
            d_in: self.d_in,
            hidden: self.hidden.clone(),
            skip: self.skip,
            beta: U::lit(self.beta.to_f64_lossy()),
            layers: self
                .layers
                .iter()
                .map(|l| Linear {
                    weight: l.weight.mapv(|v| U::lit(v.to_f64_lossy())),
                    bias: l.bias.mapv(|v| U::lit(v.to_f64_lossy())),
                })
                .collect(),
        }
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
fn cholesky_solve(mut a: Array2<f64>, mut b: Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= a[[j, k]] * a[[j, k]];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a[[j, j]] = d;
        for i in j + 1..n {
            let mut v = a[[i, j]];
            for k in 0..j {
                v -= a[[i, k]] * a[[j, k]];
            }
            a[[i, j]] = v / d;
        }
    }
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= a[[i, k]] * b[k];
        }
        b[i] = v / a[[i, i]];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in i + 1..n {
            v -= a[[k, i]] * b[k];
        }
        b[i] = v / a[[i, i]];
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn plane_field_is_exact() {
        let f = MlpField::<f64>::plane(&[0.0, 0.0, 1.0], 0.0, 100.0).unwrap();
        for z in [-0.7, -0.01, 0.0, 1e-6, 0.3, 2.0] {
            let s = f.eval(&[0.4, -0.2, z]);
            assert!((s.value - z).abs() < 1e-15, "{z}: {}", s.value);
            assert!((s.gradient[2] - 1.0).abs() < 1e-15);
            assert_eq!(&s.gradient[..2], &[0.0, 0.0]);
        }
    }

    fn wide_deep() -> NetConfig {
        NetConfig {
            hidden: vec![256; 8],
            skip: Some(4),
            ..NetConfig::default()
        }
    }

    fn sphere_fit_error(field: &MlpField<f64>, radius: f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut pts = Vec::new();
        while pts.len() < 1000 {
            let p: [f64; 3] = std::array::from_fn(|_| rng.random_range(-0.5..0.5));
            if (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() > 0.1 {
                pts.push(p);
            }
        }
        let vals = field.values(&pts);
        pts.iter()
            .zip(vals)
            .map(|(p, v)| (v - ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - radius)).abs())
            .sum::<f64>()
            / pts.len() as f64
    }

    #[test]
    fn geometric_init_approximates_sphere() {
        for cfg in [NetConfig::default(), wide_deep()] {
            let f = MlpField::<f64>::geometric_init(3, &cfg, 0).unwrap();
            let err = sphere_fit_error(&f, 0.5);
            assert!(err < 0.05, "{:?}: mean error {err}", cfg.hidden);
            let v = f.eval(&[0.5, 0.0, 0.0]).value;
            assert!((-0.05..=0.05).contains(&v), "f(0.5,0,0) = {v}");
            assert!(f.value(&[0.0, 0.0, 0.0]) < 0.0);
            assert!(f.eval(&[0.3, 0.0, 0.0]).gradient[0] > 0.0);
        }
    }

    #[test]
    fn batch_matches_single_evaluations() {
        let f = MlpField::<f64>::random(3, &NetConfig::default(), 4).unwrap();
        let q1 = [0.1, -0.2, 0.3];
        let q2 = [-0.4, 0.05, 0.2];
        let batch = f.eval_batch(&[q1, q2]);
        assert_eq!(batch[0], f.eval(&q1));
        assert_eq!(batch[1], f.eval(&q2));
        assert_eq!(f.eval(&q1), f.eval(&q1));
        assert!((f.value(&q1) - batch[0].value).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let cfg = NetConfig {
            hidden: vec![32, 32],
            skip: None,
            ..NetConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = MlpField::<f64>::random(3, &cfg, 2).unwrap();
        let h = 1e-4;
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let q: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let s = f.eval(&q);
            let fd: [f64; 3] = std::array::from_fn(|j| {
                let mut a = q;
                let mut b = q;
                a[j] += h;
                b[j] -= h;
                (f.value(&a) - f.value(&b)) / (2.0 * h)
            });
            let num: f64 = (0..3).map(|j| (s.gradient[j] - fd[j]).powi(2)).sum::<f64>().sqrt();
            let den: f64 = (0..3).map(|j| fd[j].powi(2)).sum::<f64>().sqrt().max(1e-8);
            worst = worst.max(num / den);
        }
        assert!(worst < 1e-3, "worst relative error {worst}");
    }

    #[test]
    fn finite_everywhere_on_cube() {
        let f = MlpField::<f32>::geometric_init(3, &NetConfig::default(), 1).unwrap();
        let mut pts = Vec::new();
        for i in 0..11 {
            for j in 0..11 {
                for k in 0..11 {
                    pts.push([i as f32 / 5.0 - 1.0, j as f32 / 5.0 - 1.0, k as f32 / 5.0 - 1.0]);
                }
            }
        }
        for s in f.eval_batch(&pts) {
            assert!(s.value.is_finite() && s.gradient.iter().all(|g| g.is_finite()));
        }
    }

    #[test]
    fn bad_configs_rejected() {
        let mut cfg = NetConfig::default();
        cfg.skip = Some(4);
        assert!(MlpField::<f64>::zeros(3, &cfg).is_err());
        cfg.skip = None;
        cfg.hidden = vec![];
        assert!(MlpField::<f64>::zeros(3, &cfg).is_err());
    }

    #[test]
    fn flat_params_round_trip() {
        let f = MlpField::<f64>::random(2, &NetConfig::default(), 5).unwrap();
        let mut g = MlpField::<f64>::zeros(2, &NetConfig::default()).unwrap();
        g.set_flat_params(&f.flat_params());
        assert_eq!(f, g);
    }
}
