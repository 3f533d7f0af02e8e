use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::scalar::Real;

/// Neumaier-compensated summation.
pub fn compensated_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub fn max_abs_diff<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

/// `exp(-i dt H) psi` for real symmetric `H = V diag(values) V^T`.
pub fn evolve_eigenbasis<T: Real>(
    values: &[T],
    vectors: &DMatrix<T>,
    psi: &DVector<Complex<T>>,
    dt: T,
) -> DVector<Complex<T>> {
    let n = psi.len();
    let re = DVector::from_iterator(n, psi.iter().map(|a| a.re));
    let im = DVector::from_iterator(n, psi.iter().map(|a| a.im));
    let cr = vectors.tr_mul(&re);
    let ci = vectors.tr_mul(&im);
    let mut rr = DVector::zeros(n);
    let mut ri = DVector::zeros(n);
    for k in 0..n {
        let theta = values[k] * dt;
        let c = Complex::new(cr[k], ci[k]) * Complex::new(theta.cos(), -theta.sin());
        rr[k] = c.re;
        ri[k] = c.im;
    }
    let out_r = vectors * rr;
    let out_i = vectors * ri;
    DVector::from_iterator(
        n,
        out_r.iter().zip(out_i.iter()).map(|(&r, &i)| Complex::new(r, i)),
    )
}
