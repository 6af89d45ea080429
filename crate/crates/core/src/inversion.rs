//! Numerical inversion of one-sided Laplace transforms.
//!
//! Fourier-series (Bromwich trapezoid) inversion on the contour
//! `Re s = A / (2t)`, with the alternating tail accelerated by binomial
//! (Euler) averaging of consecutive partial sums. The discretisation error is
//! roughly `e^{-A}` times the size of `f` at `3t`, so transforms of growing
//! functions should be shifted before inversion.

use num_complex::Complex64;

/// Parameters of the Euler-accelerated inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionParams {
    /// Number of plain series terms before averaging starts.
    pub terms: usize,
    /// Target relative discretisation error; sets the contour abscissa.
    pub target_rel_tol: f64,
}

impl Default for InversionParams {
    fn default() -> Self {
        InversionParams {
            terms: 60,
            target_rel_tol: 1e-10,
        }
    }
}

// Number of partial sums averaged by the Euler transform.
const EULER_AVERAGED: usize = 15;

/// Inverts `transform` at `t > 0`.
pub fn euler_invert<F>(transform: F, t: f64, params: &InversionParams) -> f64
where
    F: Fn(Complex64) -> f64,
{
    debug_assert!(t > 0.0);
    let a = -params.target_rel_tol.ln();
    let n = params.terms;
    let m = EULER_AVERAGED;
    let scale = (0.5 * a).exp() / t;

    let mut partial = Vec::with_capacity(n + m + 1);
    let mut sum = 0.5 * transform(Complex64::new(a / (2.0 * t), 0.0));
    partial.push(sum);
    for k in 1..=(n + m) {
        let s = Complex64::new(a, 2.0 * std::f64::consts::PI * k as f64) / (2.0 * t);
        let term = transform(s);
        sum += if k % 2 == 0 { term } else { -term };
        partial.push(sum);
    }

    // Σ_k C(m,k) 2^{-m} s_{n+k}
    let mut binom = 1.0;
    let mut avg = 0.0;
    for k in 0..=m {
        avg += binom * partial[n + k];
        binom = binom * (m - k) as f64 / (k + 1) as f64;
    }
    scale * avg / 2f64.powi(m as i32)
}
