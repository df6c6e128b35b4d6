//! Recorded forward passes of the network and the two reverse sweeps built
//! on them.
//!
//! The tape keeps, per layer, the layer input and the activation slope. From
//! it we obtain
//!
//! * the input gradient `g = grad_x f` (plain reverse sweep), and
//! * for cotangents `(fbar, gbar)` on `(f, g)`, the parameter gradient of
//!   `S = fbar f + gbar . g` together with `dS/dx = fbar g + H gbar`.
//!
//! The second sweep pushes the forward-mode directional derivative along
//! `gbar` through the reverse pass, so only Jacobian-vector products of the
//! input gradient are formed, never a Hessian.
//!
//! Rows are processed in fixed-size chunks. Chunk boundaries do not depend
//! on the thread count and per-chunk results are reduced in chunk order, so
//! results are bit-identical for any degree of parallelism.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rayon::prelude::*;

use super::grad::ParamGrad;
use crate::net::activation::{curvature_from_slope, softplus_and_slope};
use crate::net::MlpField;
use crate::scalar::Real;

const CHUNK: usize = 512;

#[derive(Debug, Clone)]
struct ChunkTape<T> {
    x: Array2<T>,
    /// Input of every layer, output layer included.
    inputs: Vec<Array2<T>>,
    /// `s'(z)` of every hidden layer.
    slopes: Vec<Array2<T>>,
    values: Array1<T>,
}

#[derive(Debug, Clone)]
pub struct Tape<T> {
    chunks: Vec<ChunkTape<T>>,
    rows: usize,
}

fn inv_sqrt2<T: Real>() -> T {
    T::lit(std::f64::consts::FRAC_1_SQRT_2)
}

fn concat_scaled<T: Real>(a: ArrayView2<T>, b: ArrayView2<T>) -> Array2<T> {
    let mut u = ndarray::concatenate(Axis(1), &[a, b]).expect("same row count");
    let c = inv_sqrt2::<T>();
    u.mapv_inplace(|v| v * c);
    u
}

/// `z <- s(z + b)` row by row, recording `s'` in `slope`.
pub(crate) fn activate_rows<T: Real>(z: &mut Array2<T>, slope: &mut Array2<T>, bias: &Array1<T>, beta: T) {
    let b = bias.as_slice().expect("contiguous bias");
    for (mut zr, mut sr) in z.rows_mut().into_iter().zip(slope.rows_mut()) {
        let zr = zr.as_slice_mut().expect("row-major activations");
        let sr = sr.as_slice_mut().expect("row-major slopes");
        for ((zv, sv), &bv) in zr.iter_mut().zip(sr.iter_mut()).zip(b) {
            let (a, ds) = softplus_and_slope(*zv + bv, beta);
            *zv = a;
            *sv = ds;
        }
    }
}

impl<T: Real> ChunkTape<T> {
    fn record(field: &MlpField<T>, x: Array2<T>) -> Self {
        let layers = field.layers();
        let n = layers.len();
        let beta = field.beta();
        let mut inputs = Vec::with_capacity(n);
        let mut slopes = Vec::with_capacity(n - 1);
        let mut u = x.clone();
        let mut values = Array1::zeros(0);
        for (l, layer) in layers.iter().enumerate() {
            if field.skip() == Some(l) {
                u = concat_scaled(u.view(), x.view());
            }
            let mut z = Array2::zeros((u.nrows(), layer.outputs()));
            general_mat_mul(T::one(), &u, &layer.weight.t(), T::zero(), &mut z);
            inputs.push(u);
            if l + 1 < n {
                let mut slope = Array2::zeros(z.raw_dim());
                activate_rows(&mut z, &mut slope, &layer.bias, beta);
                slopes.push(slope);
                u = z;
            } else {
                z += &layer.bias;
                values = z.column(0).to_owned();
                u = z;
            }
        }
        Self {
            x,
            inputs,
            slopes,
            values,
        }
    }

    /// Splits the adjoint of a layer input into the previous activation part
    /// and the re-concatenated `x` part (if the layer is the skip layer).
    fn split_skip(field: &MlpField<T>, layer: usize, ubar: Array2<T>, xbar: Option<&mut Array2<T>>) -> Array2<T> {
        if field.skip() != Some(layer) {
            return ubar;
        }
        let d = field.input_dim();
        let w = ubar.ncols() - d;
        let c = inv_sqrt2::<T>();
        if let Some(xbar) = xbar {
            Zip::from(xbar)
                .and(ubar.slice(s![.., w..]))
                .for_each(|x, &u| *x += u * c);
        }
        ubar.slice(s![.., ..w]).mapv(|v| v * c)
    }

    fn input_gradients(&self, field: &MlpField<T>) -> Array2<T> {
        let layers = field.layers();
        let n = layers.len();
        let rows = self.x.nrows();
        let mut xbar = Array2::zeros(self.x.raw_dim());
        let w_out = layers[n - 1].weight.row(0);
        let mut ubar = Array2::from_shape_fn((rows, w_out.len()), |(_, j)| w_out[j]);
        for l in (0..n - 1).rev() {
            let abar = Self::split_skip(field, l + 1, ubar, Some(&mut xbar));
            let zbar = abar * &self.slopes[l];
            ubar = zbar.dot(&layers[l].weight);
        }
        let ubar = Self::split_skip(field, 0, ubar, Some(&mut xbar));
        xbar += &ubar;
        xbar
    }

    fn backward(
        &self,
        field: &MlpField<T>,
        fbar: ArrayView1<T>,
        gbar: ArrayView2<T>,
    ) -> (ParamGrad<T>, Array2<T>) {
        let layers = field.layers();
        let n = layers.len();
        let beta = field.beta();
        let rows = self.x.nrows();
        let mut grad = ParamGrad::zeros_like(field);

        // Tangent forward along gbar.
        let mut udots: Vec<Array2<T>> = Vec::with_capacity(n);
        let mut zdots: Vec<Array2<T>> = Vec::with_capacity(n - 1);
        let mut udot = gbar.to_owned();
        for (l, layer) in layers.iter().enumerate() {
            if field.skip() == Some(l) {
                udot = concat_scaled(udot.view(), gbar);
            }
            if l + 1 < n {
                let zdot = udot.dot(&layer.weight.t());
                let adot = &zdot * &self.slopes[l];
                udots.push(std::mem::replace(&mut udot, adot));
                zdots.push(zdot);
            } else {
                udots.push(std::mem::take(&mut udot));
            }
        }

        // Output layer: f = w . u + b, fdot = w . udot, S = fbar f + fdot.
        let out = &layers[n - 1];
        {
            let g = &mut grad.layers[n - 1];
            let mut gw = self.inputs[n - 1].t().dot(&fbar);
            gw += &udots[n - 1].sum_axis(Axis(0));
            g.weight.row_mut(0).assign(&gw);
            g.bias[0] = fbar.sum();
        }
        let w_out = out.weight.row(0);
        let mut ubar = Array2::from_shape_fn((rows, w_out.len()), |(i, j)| fbar[i] * w_out[j]);
        let mut udotbar = Array2::from_shape_fn((rows, w_out.len()), |(_, j)| w_out[j]);
        let mut xbar = Array2::zeros(self.x.raw_dim());

        for l in (0..n - 1).rev() {
            let abar = Self::split_skip(field, l + 1, ubar, Some(&mut xbar));
            let adotbar = Self::split_skip(field, l + 1, udotbar, None);
            let slope = &self.slopes[l];
            let mut zdotbar = Array2::zeros(slope.raw_dim());
            let mut zbar = Array2::zeros(slope.raw_dim());
            Zip::from(&mut zbar)
                .and(&mut zdotbar)
                .and(&abar)
                .and(&adotbar)
                .and(slope)
                .and(&zdots[l])
                .for_each(|zb, zdb, &ab, &adb, &s, &zd| {
                    *zdb = adb * s;
                    *zb = ab * s + adb * curvature_from_slope(s, beta) * zd;
                });
            let g = &mut grad.layers[l];
            general_mat_mul(T::one(), &zbar.t(), &self.inputs[l], T::zero(), &mut g.weight);
            general_mat_mul(T::one(), &zdotbar.t(), &udots[l], T::one(), &mut g.weight);
            g.bias.assign(&zbar.sum_axis(Axis(0)));
            ubar = zbar.dot(&layers[l].weight);
            udotbar = if l > 0 {
                zdotbar.dot(&layers[l].weight)
            } else {
                Array2::zeros((0, 0))
            };
        }
        let ubar = Self::split_skip(field, 0, ubar, Some(&mut xbar));
        xbar += &ubar;
        (grad, xbar)
    }

    fn replay(&self, field: &MlpField<T>) -> Array1<T> {
        let layers = field.layers();
        let n = layers.len();
        let mut values = Array1::zeros(self.x.nrows());
        for (l, layer) in layers.iter().enumerate() {
            let mut z = self.inputs[l].dot(&layer.weight.t());
            z += &layer.bias;
            if l + 1 == n {
                values = z.column(0).to_owned();
            }
        }
        values
    }
}

impl<T: Real> Tape<T> {
    /// Runs and records the forward pass for the rows of `x` (`B x d`).
    pub fn record(field: &MlpField<T>, x: &Array2<T>) -> Self {
        assert_eq!(x.ncols(), field.input_dim(), "input dimension");
        let rows = x.nrows();
        let starts: Vec<usize> = (0..rows).step_by(CHUNK).collect();
        let chunks = starts
            .par_iter()
            .map(|&s| {
                let e = (s + CHUNK).min(rows);
                ChunkTape::record(field, x.slice(s![s..e, ..]).to_owned())
            })
            .collect();
        Self { chunks, rows }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn values(&self) -> Array1<T> {
        let mut out = Array1::zeros(self.rows);
        let mut at = 0;
        for c in &self.chunks {
            let n = c.values.len();
            out.slice_mut(s![at..at + n]).assign(&c.values);
            at += n;
        }
        out
    }

    /// `grad_x f` for every recorded row.
    pub fn input_gradients(&self, field: &MlpField<T>) -> Array2<T> {
        let parts: Vec<Array2<T>> = self
            .chunks
            .par_iter()
            .map(|c| c.input_gradients(field))
            .collect();
        stack_rows(parts, self.rows, field.input_dim())
    }

    /// Gradient of `sum_b fbar_b f(x_b) + gbar_b . grad_x f(x_b)` with respect
    /// to the parameters and to every `x_b`.
    pub fn backward(
        &self,
        field: &MlpField<T>,
        fbar: ArrayView1<T>,
        gbar: ArrayView2<T>,
    ) -> (ParamGrad<T>, Array2<T>) {
        assert_eq!(fbar.len(), self.rows);
        assert_eq!(gbar.dim(), (self.rows, field.input_dim()));
        let offsets: Vec<usize> = (0..self.chunks.len()).map(|i| i * CHUNK).collect();
        let parts: Vec<(ParamGrad<T>, Array2<T>)> = self
            .chunks
            .par_iter()
            .zip(offsets.par_iter())
            .map(|(c, &s)| {
                let e = s + c.values.len();
                c.backward(field, fbar.slice(s![s..e]), gbar.slice(s![s..e, ..]))
            })
            .collect();
        let mut total = ParamGrad::zeros_like(field);
        let mut xbars = Vec::with_capacity(parts.len());
        for (g, xb) in parts {
            total.add_assign(&g);
            xbars.push(xb);
        }
        (total, stack_rows(xbars, self.rows, field.input_dim()))
    }

    /// Recomputes the network output from the recorded layer inputs.
    pub fn replay(&self, field: &MlpField<T>) -> Array1<T> {
        let parts: Vec<Array1<T>> = self.chunks.iter().map(|c| c.replay(field)).collect();
        ndarray::concatenate(Axis(0), &parts.iter().map(|a| a.view()).collect::<Vec<_>>())
            .unwrap_or_else(|_| Array1::zeros(0))
    }
}

fn stack_rows<T: Real>(parts: Vec<Array2<T>>, rows: usize, cols: usize) -> Array2<T> {
    if parts.len() == 1 {
        return parts.into_iter().next().unwrap();
    }
    let mut out = Array2::zeros((rows, cols));
    let mut at = 0;
    for p in parts {
        let n = p.nrows();
        out.slice_mut(s![at..at + n, ..]).assign(&p);
        at += n;
    }
    out
}
