//! Special functions needed by the closed-form moment expressions of the
//! truncated exponential channel.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Power series below `x = 1`, modified Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 is defined for x > 0, got {x}");
    if x <= 1.0 {
        // E1(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let k = k as f64;
            term *= -x / k;
            let contrib = term / k;
            sum += contrib;
            if contrib.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Upper incomplete gamma function `Γ(a, x)` (not regularized).
pub fn upper_incomplete_gamma(a: f64, x: f64) -> f64 {
    statrs::function::gamma::gamma_ur(a, x) * statrs::function::gamma::gamma(a)
}
