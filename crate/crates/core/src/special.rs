//! Bessel functions of the first kind for the moderate arguments the drive
//! protocols use.

/// `J_n(x)` for integer order from the ascending power series.
///
/// Accurate to ~1e-14 for |x| ≲ 20; the drive strengths of interest give
/// `x = 2 K_0` of order a few.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    if n < 0 {
        let v = bessel_j(-n, x);
        return if n % 2 == 0 { v } else { -v };
    }
    let half = 0.5 * x;
    let n_u = n as u32;
    // (x/2)^n / n!
    let mut term = (1..=n_u).fold(1.0, |acc, k| acc * half / k as f64);
    let mut sum = term;
    let q = -half * half;
    for k in 1..400u32 {
        term *= q / (k as f64 * (k + n_u) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    sum
}
