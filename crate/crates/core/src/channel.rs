//! Fading-channel models, expectations over the channel state, and the
//! fractional inverse moments `ν_m` that every scheduling threshold is
//! built from.
//!
//! The channel state `g` is a power gain: serving `b` bits in a slot with
//! gain `g` costs `(2^b - 1) / g` energy units.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::special::{exp_integral_e1, upper_incomplete_gamma};

/// Mass left beyond the upper integration limit.
pub const TAIL_MASS: f64 = 1e-12;

/// Distribution of the i.i.d. channel state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelModel {
    /// Exponential(`rate`) conditioned on `g >= floor`:
    /// density `rate * exp(-rate (g - floor))` on `[floor, ∞)`.
    TruncatedExponential { rate: f64, floor: f64 },
    /// Gamma(shape, scale). Shape `N` models 1×N Rayleigh diversity combining.
    GammaDiversity { shape: f64, scale: f64 },
    /// Point mass at `value`. Breaks the non-degeneracy assumption; meant for tests.
    DegenerateTest { value: f64 },
}

impl ChannelModel {
    pub fn truncated_exponential(rate: f64, floor: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) || !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::InvalidChannel(format!(
                "truncexp needs lambda > 0 and gamma0 > 0 (got lambda={rate}, gamma0={floor})"
            )));
        }
        Ok(Self::TruncatedExponential { rate, floor })
    }

    /// Shape `k <= 1` is accepted here, but `E[1/g]` then diverges and
    /// [`ChannelModel::moments`] fails with [`Error::NonIntegrable`].
    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidChannel(format!(
                "gamma needs k > 0 and theta > 0 (got k={shape}, theta={scale})"
            )));
        }
        Ok(Self::GammaDiversity { shape, scale })
    }

    pub fn degenerate(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidChannel(format!(
                "const needs g0 > 0 (got g0={value})"
            )));
        }
        Ok(Self::DegenerateTest { value })
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Self::DegenerateTest { .. })
    }

    /// The model of `c * g`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0);
        match *self {
            Self::TruncatedExponential { rate, floor } => Self::TruncatedExponential {
                rate: rate / c,
                floor: floor * c,
            },
            Self::GammaDiversity { shape, scale } => Self::GammaDiversity {
                shape,
                scale: scale * c,
            },
            Self::DegenerateTest { value } => Self::DegenerateTest { value: value * c },
        }
    }

    pub fn density(&self, g: f64) -> f64 {
        match *self {
            Self::TruncatedExponential { rate, floor } => {
                if g < floor {
                    0.0
                } else {
                    rate * (-rate * (g - floor)).exp()
                }
            }
            Self::GammaDiversity { shape, scale } => {
                if g <= 0.0 {
                    return 0.0;
                }
                ((shape - 1.0) * g.ln() - g / scale - ln_gamma(shape) - shape * scale.ln()).exp()
            }
            Self::DegenerateTest { value } => {
                if g == value {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, g: f64) -> f64 {
        match *self {
            Self::TruncatedExponential { rate, floor } => {
                if g < floor {
                    0.0
                } else {
                    -(-rate * (g - floor)).exp_m1()
                }
            }
            Self::GammaDiversity { shape, scale } => {
                if g <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, g / scale)
                }
            }
            Self::DegenerateTest { value } => {
                if g < value {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    fn survival(&self, g: f64) -> f64 {
        match *self {
            Self::TruncatedExponential { rate, floor } => {
                if g < floor {
                    1.0
                } else {
                    (-rate * (g - floor)).exp()
                }
            }
            Self::GammaDiversity { shape, scale } => {
                if g <= 0.0 {
                    1.0
                } else {
                    gamma_ur(shape, g / scale)
                }
            }
            Self::DegenerateTest { .. } => 1.0 - self.cdf(g),
        }
    }

    /// Inverse CDF for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        assert!(u > 0.0 && u < 1.0, "quantile level must be in (0, 1), got {u}");
        match *self {
            Self::TruncatedExponential { rate, floor } => floor - (-u).ln_1p() / rate,
            Self::GammaDiversity { shape, scale } => {
                // Bisection in log-space, on the survival function in the
                // upper half so tail quantiles keep their relative accuracy.
                let upper_half = u > 0.5;
                let target = if upper_half { 1.0 - u } else { u };
                let miss = |x: f64| {
                    if upper_half {
                        target - self.survival(x)
                    } else {
                        self.cdf(x) - target
                    }
                };
                let mut lo = (1e-300f64).ln();
                let mut hi = (scale * (shape + 50.0 * (shape.sqrt() + 10.0))).ln();
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if miss(mid.exp()) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-15 {
                        break;
                    }
                }
                (0.5 * (lo + hi)).exp()
            }
            Self::DegenerateTest { value } => value,
        }
    }

    /// Integration support `[lower, q_{1 - TAIL_MASS}]`.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::TruncatedExponential { rate, floor } => (floor, floor - TAIL_MASS.ln() / rate),
            Self::GammaDiversity { .. } => (0.0, self.quantile(1.0 - TAIL_MASS)),
            Self::DegenerateTest { value } => (value, value),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::TruncatedExponential { rate, floor } => {
                floor + Exp::new(rate).expect("validated rate").sample(rng)
            }
            Self::GammaDiversity { shape, scale } => {
                // Gamma samples can underflow to zero for small shapes.
                Gamma::new(shape, scale)
                    .expect("validated parameters")
                    .sample(rng)
                    .max(f64::MIN_POSITIVE)
            }
            Self::DegenerateTest { value } => value,
        }
    }

    /// `E[f(g)]` by adaptive quadrature.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        self.expect_with_breaks(f, &[])
    }

    /// `E[f(g)]`, with `breaks` marking points where `f` is not smooth.
    pub fn expect_with_breaks<F: Fn(f64) -> f64>(&self, f: F, breaks: &[f64]) -> Result<f64> {
        if let Self::DegenerateTest { value } = *self {
            return Ok(f(value));
        }
        let (lo, hi) = self.support();
        let mut all_breaks = breaks.to_vec();
        if let Self::TruncatedExponential { rate, floor } = *self {
            // Integrands like 1/g peak sharply at the floor when rate*floor is small.
            let mut x = floor;
            while x * 4.0 < floor + 1.0 / rate {
                x *= 4.0;
                all_breaks.push(x);
            }
        }
        quadrature::integrate(
            |g| {
                let d = self.density(g);
                if d == 0.0 {
                    0.0
                } else {
                    f(g) * d
                }
            },
            lo,
            hi,
            &all_breaks,
            Tolerance::default(),
        )
        .map(|e| e.value)
        .map_err(|u| Error::NonIntegrable {
            what: format!("expectation over {self}"),
            estimate: u.estimate.value,
            abs_error: u.estimate.abs_error,
            subdivisions: u.estimate.subdivisions,
        })
    }

    /// `ν_m = (E[g^{-1/m}])^m`.
    pub fn nu(&self, m: usize) -> Result<f64> {
        assert!(m >= 1);
        let p = 1.0 / m as f64;
        let inner = self.expect(|g| g.powf(-p))?;
        Ok(inner.powi(m as i32))
    }

    /// `ν_∞ = exp(E[ln(1/g)])`.
    pub fn nu_inf(&self) -> Result<f64> {
        Ok(self.expect(|g| -g.ln())?.exp())
    }

    pub fn moments(&self, count: usize) -> Result<MomentTable> {
        assert!(count >= 1, "need at least one moment");
        let mut nu = Vec::with_capacity(count);
        for m in 1..=count {
            nu.push(self.nu(m)?);
        }
        let nu_inf = self.nu_inf()?;
        Ok(MomentTable::new(nu, nu_inf))
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TruncatedExponential { rate, floor } => {
                write!(f, "truncexp:lambda={rate},gamma0={floor}")
            }
            Self::GammaDiversity { shape, scale } => write!(f, "gamma:k={shape},theta={scale}"),
            Self::DegenerateTest { value } => write!(f, "const:g0={value}"),
        }
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    /// Parses `truncexp:lambda=1,gamma0=0.001`, `gamma:k=2,theta=1` or
    /// `const:g0=2`. Missing `lambda`/`theta` default to 1.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidChannel(format!("`{s}`: {msg}"));
        let (family, params) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut kv = Vec::new();
        for part in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| bad(format!("`{v}` is not a number")))?;
            kv.push((k.trim().to_ascii_lowercase(), v));
        }
        let take = |key: &str| kv.iter().find(|(k, _)| k == key).map(|(_, v)| *v);
        let check_keys = |allowed: &[&str]| -> Result<()> {
            for (k, _) in &kv {
                if !allowed.contains(&k.as_str()) {
                    return Err(bad(format!(
                        "unknown parameter `{k}` (expected one of {allowed:?})"
                    )));
                }
            }
            Ok(())
        };
        match family.to_ascii_lowercase().as_str() {
            "truncexp" => {
                let allowed = ["lambda", "gamma0"];
                check_keys(&allowed)?;
                let gamma0 =
                    take("gamma0").ok_or_else(|| bad("missing gamma0".into()))?;
                Self::truncated_exponential(take("lambda").unwrap_or(1.0), gamma0)
            }
            "gamma" => {
                let allowed = ["k", "theta"];
                check_keys(&allowed)?;
                let k = take("k").ok_or_else(|| bad("missing k".into()))?;
                Self::gamma(k, take("theta").unwrap_or(1.0))
            }
            "const" => {
                let allowed = ["g0"];
                check_keys(&allowed)?;
                Self::degenerate(take("g0").ok_or_else(|| bad("missing g0".into()))?)
            }
            other => Err(bad(format!(
                "unknown family `{other}` (expected truncexp, gamma or const)"
            ))),
        }
    }
}

/// Fractional inverse moments `ν_1..ν_M`, their limit `ν_∞`, and the
/// running geometric means `G(ν_m, …, ν_1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    nu: Vec<f64>,
    nu_inf: f64,
    gmean: Vec<f64>,
}

impl MomentTable {
    pub fn new(nu: Vec<f64>, nu_inf: f64) -> Self {
        let mut gmean = Vec::with_capacity(nu.len());
        let mut log_sum = 0.0;
        for (i, v) in nu.iter().enumerate() {
            log_sum += v.ln();
            gmean.push((log_sum / (i + 1) as f64).exp());
        }
        Self { nu, nu_inf, gmean }
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// `ν_m`, 1-based.
    pub fn nu(&self, m: usize) -> Result<f64> {
        self.check(m)?;
        Ok(self.nu[m - 1])
    }

    pub fn nu1(&self) -> f64 {
        self.nu[0]
    }

    pub fn nu_inf(&self) -> f64 {
        self.nu_inf
    }

    /// `G(ν_m, …, ν_1)`, 1-based.
    pub fn gmean(&self, m: usize) -> Result<f64> {
        self.check(m)?;
        Ok(self.gmean[m - 1])
    }

    pub fn nus(&self) -> &[f64] {
        &self.nu
    }

    pub fn gmeans(&self) -> &[f64] {
        &self.gmean
    }

    fn check(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.nu.len() {
            return Err(Error::MissingMoments {
                needed: m,
                available: self.nu.len(),
            });
        }
        Ok(())
    }
}

/// Closed-form fractional moments of the truncated exponential channel,
/// in terms of `E1` and the upper incomplete gamma function.
pub mod closed_form {
    use super::*;

    /// `ν_1 = λ e^{λγ0} E1(λγ0)`, `ν_m = λ [e^{λγ0} Γ((m-1)/m, λγ0)]^m` for `m > 1`.
    pub fn truncexp_nu(rate: f64, floor: f64, m: usize) -> f64 {
        let x = rate * floor;
        if m == 1 {
            rate * x.exp() * exp_integral_e1(x)
        } else {
            let a = (m as f64 - 1.0) / m as f64;
            rate * (x.exp() * upper_incomplete_gamma(a, x)).powi(m as i32)
        }
    }

    /// `ν_∞ = (1/γ0) exp(-e^{λγ0} E1(λγ0))`.
    pub fn truncexp_nu_inf(rate: f64, floor: f64) -> f64 {
        let x = rate * floor;
        (-(x.exp() * exp_integral_e1(x))).exp() / floor
    }
}
