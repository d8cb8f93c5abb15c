//! One-dimensional search routines used by the geometry and allocation code.

use crate::scalar::Scalar;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `abs_tol`. Returns the best point
/// seen together with its value.
pub fn golden_section_min<T, F>(mut f: F, lo: T, hi: T, abs_tol: T) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let inv_phi = T::lit(INV_PHI);
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    // Each step shrinks the bracket by ~0.618; 300 steps is far beyond any
    // tolerance representable in f64.
    for _ in 0..300 {
        if (b - a).abs() <= abs_tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<T, F>(mut f: F, lo: T, hi: T, abs_tol: T) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let (x, fx) = golden_section_min(|x| -f(x), lo, hi, abs_tol);
    (x, -fx)
}

/// Bisection for the root of `g` on `[lo, hi]`, which must bracket a sign
/// change. Returns `None` when it does not.
pub fn bisect<T, F>(mut g: F, lo: T, hi: T, abs_tol: T) -> Option<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let (mut a, mut b) = (lo, hi);
    let mut ga = g(a);
    let gb = g(b);
    if ga == T::zero() {
        return Some(a);
    }
    if gb == T::zero() {
        return Some(b);
    }
    if (ga > T::zero()) == (gb > T::zero()) {
        return None;
    }
    for _ in 0..2000 {
        let mid = a + (b - a) / T::lit(2.0);
        if (b - a).abs() <= abs_tol || mid == a || mid == b {
            return Some(mid);
        }
        let gm = g(mid);
        if gm == T::zero() {
            return Some(mid);
        }
        if (gm > T::zero()) == (ga > T::zero()) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    Some(a + (b - a) / T::lit(2.0))
}
