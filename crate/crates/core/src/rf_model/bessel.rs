//! Order-one Bessel function of the first kind.

use crate::scalar::Scalar;

/// Switch point between the power series and the Hankel expansion. Below it
/// the series loses at most a few 1e-13 to cancellation; above it the
/// smallest asymptotic term is under 1e-11.
const SERIES_LIMIT: f64 = 12.0;

/// `J1(x)` for any real `x`, accurate to ~1e-12 absolute in `f64`.
pub fn bessel_j1<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        return -bessel_j1(-x);
    }
    if x <= T::lit(SERIES_LIMIT) {
        series(x)
    } else {
        hankel(x)
    }
}

fn series<T: Scalar>(x: T) -> T {
    // J1(x) = Σ (-1)^k (x/2)^(2k+1) / (k! (k+1)!)
    let half = x / T::lit(2.0);
    let q = half * half;
    let mut term = half;
    let mut sum = term;
    for k in 1..200 {
        let kf = T::from_count(k);
        term = -term * q / (kf * (kf + T::one()));
        sum = sum + term;
        if term.abs() <= T::epsilon() * T::lit(1e-3) * sum.abs().max(T::epsilon()) {
            break;
        }
    }
    sum
}

fn hankel<T: Scalar>(x: T) -> T {
    // J1(x) ~ sqrt(2/(πx)) (P cos χ − Q sin χ), χ = x − 3π/4, with
    // a_k = Π_{j=1..k} (4 − (2j−1)²) / (k! 8^k).
    let mu = T::lit(4.0);
    let eight_x = T::lit(8.0) * x;
    let mut p = T::one();
    let mut q = T::zero();
    let mut a = T::one();
    let mut prev = T::infinity();
    for k in 1..60 {
        let kf = T::from_count(k);
        let odd = T::lit((2 * k - 1) as f64);
        a = a * (mu - odd * odd) / (kf * eight_x);
        if a.abs() >= prev {
            break;
        }
        prev = a.abs();
        // Signs: P takes a_0 − a_2 + a_4 ..., Q takes a_1 − a_3 + ...
        match k % 4 {
            0 => p = p + a,
            1 => q = q + a,
            2 => p = p - a,
            _ => q = q - a,
        }
        if a.abs() < T::epsilon() * T::lit(1e-2) {
            break;
        }
    }
    let chi = x - T::lit(0.75) * T::PI();
    (T::lit(2.0) / (T::PI() * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
