//! Globally adaptive Gauss–Kronrod (7/15) integration on finite intervals.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// 15-point Kronrod abscissae (non-negative half) with 7-point Gauss weights
// interleaved at odd positions.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unconverged {
    pub estimate: Estimate,
}

/// Tolerances for [`integrate`]. Convergence means
/// `abs_error <= max(abs_tol, rel_tol * |value|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let h = half.abs();
    let value = res_k * half;
    let error = rescale_error((res_k - res_g) * half, res_abs * h, res_asc * h);
    Panel { a, b, value, error }
}

/// Integrates `f` over `[a, b]`, splitting first at the interior `breaks`
/// (points where `f` has a kink or discontinuity), then bisecting the
/// panel with the largest error estimate until the tolerance is met.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate, Unconverged> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            abs_error: 0.0,
            subdivisions: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut points = vec![lo];
    let mut interior: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    points.extend(interior);
    points.push(hi);

    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in points.windows(2) {
        let p = kronrod15(&f, w[0], w[1]);
        value += p.value;
        error += p.error;
        heap.push(p);
    }

    let mut subdivisions = heap.len();
    loop {
        let converged = error <= tol.abs_tol.max(tol.rel_tol * value.abs());
        if converged && value.is_finite() {
            return Ok(Estimate {
                value: sign * value,
                abs_error: error,
                subdivisions,
            });
        }
        if subdivisions >= tol.max_subdivisions || !value.is_finite() {
            return Err(Unconverged {
                estimate: Estimate {
                    value: sign * value,
                    abs_error: error,
                    subdivisions,
                },
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            return Err(Unconverged {
                estimate: Estimate {
                    value: sign * value,
                    abs_error: error,
                    subdivisions,
                },
            });
        }
        let left = kronrod15(&f, worst.a, mid);
        let right = kronrod15(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;

        // Periodically resum to stop drift from the incremental updates.
        if subdivisions % 64 == 0 {
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
}
