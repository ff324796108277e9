//! Small statistics helpers with fixed summation order.

use crate::scalar::Scalar;

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope<T: Scalar>(x: &[T], y: &[T]) -> T {
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    linear_slope(&lx, &ly)
}

/// Unweighted least-squares slope.
pub fn linear_slope<T: Scalar>(x: &[T], y: &[T]) -> T {
    let n = T::of_usize(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        sxy = sxy + (a - mx) * (b - my);
        sxx = sxx + (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr<T: Scalar>(v: &[T]) -> (T, T) {
    let n = v.len();
    if n == 0 {
        return (T::nan(), T::nan());
    }
    let nf = T::of_usize(n);
    let mean = v.iter().copied().sum::<T>() / nf;
    if n < 2 {
        return (mean, T::zero());
    }
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (nf - T::one());
    (mean, (var / nf).sqrt())
}

/// Root mean square.
pub fn rms<T: Scalar>(v: &[T]) -> T {
    (v.iter().map(|&x| x * x).sum::<T>() / T::of_usize(v.len())).sqrt()
}

pub fn strictly_decreasing<T: Scalar>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}
