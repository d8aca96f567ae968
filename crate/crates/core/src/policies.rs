//! Causal scheduling policies and the non-causal inverse-waterfilling
//! allocation.
//!
//! Every causal policy maps the scheduler state (slots left `t`, backlog
//! `β`) and the current gain `g` to the number of bits served now. The
//! threshold policies share one form:
//!
//! ```text
//! b = clamp(β/t + (t-1)/t · log2(g / η_t), 0, β)
//! ```
//!
//! and differ only in the channel threshold `η_t`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::channel::MomentTable;
use crate::dp::{self, CostToGoTable};
use crate::error::{Error, Result};
use crate::oneshot::{self, OneShotThresholds};

/// Slots remaining (including the current one) and bits still queued.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerState {
    pub t: usize,
    pub beta: f64,
}

impl SchedulerState {
    pub fn new(t: usize, beta: f64) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidConfig("at least one slot must remain".into()));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("backlog must be finite and >= 0, got {beta}")));
        }
        Ok(Self { t, beta })
    }
}

/// Energy to serve `bits` in one slot with gain `g`: `(2^b - 1) / g`.
pub fn energy_cost(bits: f64, g: f64) -> f64 {
    let numer = if bits < 1.0 {
        (bits * std::f64::consts::LN_2).exp_m1()
    } else {
        bits.exp2() - 1.0
    };
    numer / g
}

fn clamp_bits(raw: f64, beta: f64) -> f64 {
    if raw.is_nan() {
        return 0.0;
    }
    raw.clamp(0.0, beta)
}

/// The shared threshold rule `clamp(β/t + (t-1)/t · log2(g/η), 0, β)`.
pub fn threshold_rule(state: SchedulerState, g: f64, eta: f64) -> f64 {
    if state.t <= 1 {
        return state.beta;
    }
    if state.beta == 0.0 {
        return 0.0;
    }
    let t = state.t as f64;
    clamp_bits(state.beta / t + (t - 1.0) / t * (g / eta).log2(), state.beta)
}

/// Channel-blind baseline: `β/t` every slot.
pub fn equal_bit(state: SchedulerState, _g: f64) -> f64 {
    state.beta / state.t as f64
}

/// Threshold `1/ν_1` at every `t`.
pub fn eta_suboptimal_i(moments: &MomentTable) -> f64 {
    1.0 / moments.nu1()
}

/// Threshold `1 / G(ν_{t-1}, …, ν_1)`; requires `t >= 2`.
pub fn eta_suboptimal_ii(moments: &MomentTable, t: usize) -> Result<f64> {
    assert!(t >= 2, "the threshold is only defined away from the deadline slot");
    Ok(1.0 / moments.gmean(t - 1)?)
}

pub fn suboptimal_i(state: SchedulerState, g: f64, moments: &MomentTable) -> f64 {
    threshold_rule(state, g, eta_suboptimal_i(moments))
}

pub fn suboptimal_ii(state: SchedulerState, g: f64, moments: &MomentTable) -> Result<f64> {
    if state.t <= 1 {
        return Ok(state.beta);
    }
    Ok(threshold_rule(state, g, eta_suboptimal_ii(moments, state.t)?))
}

/// Optimal bits in the first of two remaining slots:
/// `clamp(B/2 + log2(g ν_1)/2, 0, B)`.
pub fn optimal_t2(total_bits: f64, g: f64, moments: &MomentTable) -> f64 {
    clamp_bits(0.5 * total_bits + 0.5 * (g * moments.nu1()).log2(), total_bits)
}

/// Non-causal optimum for one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IwfResult {
    pub bits: Vec<f64>,
    pub water_level: f64,
    pub utilized: Vec<bool>,
    pub energy: f64,
}

/// Inverse waterfilling: `b_t = max(0, log2(g_t / g_th))` with the water
/// level `g_th` chosen so the allocations sum to `total_bits`.
pub fn iwf_allocate(total_bits: f64, gains: &[f64]) -> IwfResult {
    assert!(!gains.is_empty(), "need at least one slot");
    assert!(gains.iter().all(|&g| g > 0.0), "gains must be positive");
    assert!(total_bits >= 0.0);
    let logs: Vec<f64> = gains.iter().map(|g| g.log2()).collect();
    let max_log = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_log = logs.iter().copied().fold(f64::INFINITY, f64::min);

    if total_bits == 0.0 {
        return IwfResult {
            bits: vec![0.0; gains.len()],
            water_level: max_log.exp2(),
            utilized: vec![false; gains.len()],
            energy: 0.0,
        };
    }

    let served = |level: f64| -> f64 { logs.iter().map(|&l| (l - level).max(0.0)).sum() };

    // served() is continuous and decreasing in the (log) water level.
    let mut hi = max_log;
    let mut lo = min_log - total_bits / gains.len() as f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if served(mid) > total_bits {
            lo = mid;
        } else {
            hi = mid;
        }
        if (served(mid) - total_bits).abs() < 1e-12 || hi - lo < 1e-15 {
            break;
        }
    }
    let approx = 0.5 * (lo + hi);

    // With the active set known the level has a closed form.
    let active: Vec<usize> = (0..logs.len()).filter(|&i| logs[i] > approx).collect();
    let exact = (active.iter().map(|&i| logs[i]).sum::<f64>() - total_bits) / active.len() as f64;
    let consistent = logs
        .iter()
        .enumerate()
        .all(|(i, &l)| if active.contains(&i) { l > exact } else { l <= exact + 1e-12 });
    let level = if consistent { exact } else { approx };

    // slots that sit on the water level to rounding are left empty
    let dust = 1e-12 * total_bits.max(1.0);
    let mut bits: Vec<f64> = logs
        .iter()
        .map(|&l| if l - level > dust { l - level } else { 0.0 })
        .collect();
    let utilized: Vec<bool> = bits.iter().map(|&b| b > 0.0).collect();
    let n_used = utilized.iter().filter(|&&u| u).count();
    let residual = total_bits - bits.iter().sum::<f64>();
    if n_used > 0 {
        for (b, _) in bits.iter_mut().zip(&utilized).filter(|(_, &u)| u) {
            *b += residual / n_used as f64;
        }
    }
    let energy = bits.iter().zip(gains).map(|(&b, &g)| energy_cost(b, g)).sum();
    IwfResult {
        bits,
        water_level: level.exp2(),
        utilized,
        energy,
    }
}

/// Policy names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    EqualBit,
    SuboptimalI,
    SuboptimalII,
    OptimalT2,
    Dp,
    OneShot,
    /// Non-causal; sees the whole realization.
    Iwf,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::EqualBit,
        PolicyKind::SuboptimalI,
        PolicyKind::SuboptimalII,
        PolicyKind::OptimalT2,
        PolicyKind::Dp,
        PolicyKind::OneShot,
        PolicyKind::Iwf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::EqualBit => "eq",
            PolicyKind::SuboptimalI => "sub1",
            PolicyKind::SuboptimalII => "sub2",
            PolicyKind::OptimalT2 => "opt2",
            PolicyKind::Dp => "dp",
            PolicyKind::OneShot => "oneshot",
            PolicyKind::Iwf => "iwf",
        }
    }

    pub fn is_causal(self) -> bool {
        self != PolicyKind::Iwf
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown policy `{s}` (expected eq | sub1 | sub2 | opt2 | dp | oneshot | iwf)"
                ))
            })
    }
}

/// A causal decision rule `(t, β, g) -> b`.
#[derive(Debug, Clone)]
pub enum Policy {
    EqualBit,
    SuboptimalI(Arc<MomentTable>),
    SuboptimalII(Arc<MomentTable>),
    /// Exact for two remaining slots; refuses longer horizons.
    OptimalT2(Arc<MomentTable>),
    Dp(Arc<CostToGoTable>),
    OneShot(Arc<OneShotThresholds>),
}

impl Policy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::EqualBit => PolicyKind::EqualBit,
            Policy::SuboptimalI(_) => PolicyKind::SuboptimalI,
            Policy::SuboptimalII(_) => PolicyKind::SuboptimalII,
            Policy::OptimalT2(_) => PolicyKind::OptimalT2,
            Policy::Dp(_) => PolicyKind::Dp,
            Policy::OneShot(_) => PolicyKind::OneShot,
        }
    }

    /// Checks that the policy has what it needs to schedule `bits` over
    /// `horizon` slots.
    pub fn validate(&self, bits: f64, horizon: usize) -> Result<()> {
        match self {
            Policy::EqualBit | Policy::SuboptimalI(_) => Ok(()),
            Policy::SuboptimalII(m) => {
                if horizon >= 2 && m.len() < horizon - 1 {
                    return Err(Error::MissingMoments {
                        needed: horizon - 1,
                        available: m.len(),
                    });
                }
                Ok(())
            }
            Policy::OptimalT2(_) => {
                if horizon > 2 {
                    return Err(Error::UnsupportedHorizon {
                        policy: "opt2".into(),
                        horizon,
                        reason: "the closed-form rule is only optimal with two slots left; use dp".into(),
                    });
                }
                Ok(())
            }
            Policy::Dp(table) => {
                if horizon > table.t_max() || bits > table.b_max() * (1.0 + 1e-12) {
                    return Err(Error::OutOfTable {
                        t: horizon,
                        beta: bits,
                        t_max: table.t_max(),
                        b_max: table.b_max(),
                    });
                }
                Ok(())
            }
            Policy::OneShot(th) => {
                if horizon > th.horizon() {
                    return Err(Error::UnsupportedHorizon {
                        policy: "oneshot".into(),
                        horizon,
                        reason: format!("thresholds computed only up to T={}", th.horizon()),
                    });
                }
                Ok(())
            }
        }
    }

    /// Bits to serve now. Always in `[0, β]`, and exactly `β` when `t = 1`.
    pub fn decide(&self, state: SchedulerState, g: f64) -> Result<f64> {
        if state.t <= 1 {
            return Ok(state.beta);
        }
        let b = match self {
            Policy::EqualBit => equal_bit(state, g),
            Policy::SuboptimalI(m) => suboptimal_i(state, g, m),
            Policy::SuboptimalII(m) => suboptimal_ii(state, g, m)?,
            Policy::OptimalT2(m) => {
                if state.t != 2 {
                    return Err(Error::UnsupportedHorizon {
                        policy: "opt2".into(),
                        horizon: state.t,
                        reason: "the closed-form rule is only optimal with two slots left".into(),
                    });
                }
                optimal_t2(state.beta, g, m)
            }
            Policy::Dp(table) => dp::dp_decide(table, state, g)?,
            Policy::OneShot(th) => {
                // An empty backlog means the packet already went out.
                oneshot::oneshot_decide(th, state, g, state.beta == 0.0)
            }
        };
        Ok(b.clamp(0.0, state.beta))
    }
}
