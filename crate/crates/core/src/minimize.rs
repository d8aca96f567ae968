//! Golden-section search for convex scalar objectives.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizer of a convex `f` on `[lo, hi]`, located to within `tol`.
///
/// The endpoints are compared against the interior estimate, so a minimum
/// sitting on the boundary is returned exactly.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    debug_assert!(lo <= hi);
    let f_lo = f(lo);
    if hi - lo <= tol {
        let f_hi = f(hi);
        return if f_hi < f_lo { (hi, f_hi) } else { (lo, f_lo) };
    }
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let (mut best_x, mut best_f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if f_lo <= best_f {
        best_x = lo;
        best_f = f_lo;
    }
    let f_hi = f(hi);
    if f_hi < best_f {
        best_x = hi;
        best_f = f_hi;
    }
    (best_x, best_f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_minimum() {
        let (x, fx) = golden_section(|x| (x - 1.3).powi(2) + 2.0, 0.0, 5.0, 1e-10);
        // a flat quadratic bottom pins x only to about sqrt(eps)
        assert!((x - 1.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_minima_are_exact() {
        assert_eq!(golden_section(|x| x, 0.0, 4.0, 1e-9).0, 0.0);
        assert_eq!(golden_section(|x| -x, 0.0, 4.0, 1e-9).0, 4.0);
    }

    #[test]
    fn degenerate_interval() {
        assert_eq!(golden_section(|x| x * x, 2.0, 2.0, 1e-9), (2.0, 4.0));
    }
}
