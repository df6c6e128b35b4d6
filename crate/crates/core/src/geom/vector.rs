//! Small fixed-size vector helpers over `[T; D]`.

use crate::scalar::Real;

pub type Point<T, const D: usize> = [T; D];

#[inline]
pub fn sub<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> [T; D] {
    std::array::from_fn(|i| a[i] - b[i])
}

#[inline]
pub fn add<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> [T; D] {
    std::array::from_fn(|i| a[i] + b[i])
}

#[inline]
pub fn scale<T: Real, const D: usize>(a: &[T; D], s: T) -> [T; D] {
    std::array::from_fn(|i| a[i] * s)
}

/// `a + s * b`
#[inline]
pub fn axpy<T: Real, const D: usize>(a: &[T; D], s: T, b: &[T; D]) -> [T; D] {
    std::array::from_fn(|i| a[i] + s * b[i])
}

#[inline]
pub fn dot<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> T {
    let mut s = T::zero();
    for i in 0..D {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm2<T: Real, const D: usize>(a: &[T; D]) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Real, const D: usize>(a: &[T; D]) -> T {
    norm2(a).sqrt()
}

#[inline]
pub fn dist2<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> T {
    let mut s = T::zero();
    for i in 0..D {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

#[inline]
pub fn dist<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> T {
    dist2(a, b).sqrt()
}

#[inline]
pub fn add_assign<T: Real, const D: usize>(a: &mut [T; D], b: &[T; D]) {
    for i in 0..D {
        a[i] += b[i];
    }
}

/// `a += s * b`
#[inline]
pub fn add_scaled<T: Real, const D: usize>(a: &mut [T; D], s: T, b: &[T; D]) {
    for i in 0..D {
        a[i] += s * b[i];
    }
}

pub fn cross<T: Real>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn is_finite<T: Real, const D: usize>(a: &[T; D]) -> bool {
    a.iter().all(|x| x.is_finite())
}

pub fn cast<T: Real, U: Real, const D: usize>(a: &[T; D]) -> [U; D] {
    std::array::from_fn(|i| U::lit(a[i].to_f64_lossy()))
}
