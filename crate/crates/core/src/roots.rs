//! Bracketed root finding: bisection on a sign change, polished by Newton.

/// Bisects `f` on `[lo, hi]`, where `f(lo)` and `f(hi)` have opposite signs
/// (or one of them is zero), until the bracket is no wider than a few ulps.
///
/// Works on the sign of `f` only, so `f` may be huge near an end of the
/// bracket (as it is next to a pole of the Laplace exponent).
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    let lo_negative = f_lo < 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Newton polish of a root already isolated to `[lo, hi]`.
///
/// Steps that would leave the bracket are rejected and the input is returned
/// unchanged, so this never makes a bisection result worse than its bracket.
pub fn newton_polish<F, D>(mut f: F, mut df: D, start: f64, lo: f64, hi: f64) -> f64
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let mut x = start;
    let mut best = (f(x).abs(), x);
    for _ in 0..8 {
        let fx = f(x);
        let d = df(x);
        if fx == 0.0 || d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - fx / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        let r = f(next).abs();
        if r < best.0 {
            best = (r, next);
        }
        if next == x {
            break;
        }
        x = next;
    }
    best.1
}
