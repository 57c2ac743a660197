//! Small floating point helpers shared by the engines.

/// Absolute tolerance used for exact-arithmetic identities.
pub const EXACT_TOL: f64 = 1e-12;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for t in terms {
        let next = sum + t;
        if sum.abs() >= t.abs() {
            carry += (sum - next) + t;
        } else {
            carry += (t - next) + sum;
        }
        sum = next;
    }
    sum + carry
}

/// Compensated dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// `n` evenly spaced points on `[lo, hi]`, endpoints included exactly.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { hi } else { lo + step * k as f64 })
                .collect()
        }
    }
}
