//! One-shot allocation: the whole packet goes out in a single slot, chosen
//! by an optimal stopping rule.
//!
//! With `t` slots left the packet is sent iff `g > 1/ω_t`, where `ω_t` is
//! the expected cost-to-go of waiting divided by `2^B - 1`:
//! `ω_1 = ∞`, `ω_2 = E[1/g]`, `ω_t = E[min(1/g, ω_{t-1})]`. None of the
//! thresholds depend on `B`.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::policies::{energy_cost, SchedulerState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneShotThresholds {
    /// `omega[t - 1] = ω_t`; `omega[0]` is `+∞`.
    omega: Vec<f64>,
    channel: ChannelModel,
}

/// `E[min(1/g, cap)]`.
fn capped_inverse_mean(channel: &ChannelModel, cap: f64) -> Result<f64> {
    if cap.is_infinite() {
        return channel.expect(|g| 1.0 / g);
    }
    channel.expect_with_breaks(|g| (1.0 / g).min(cap), &[1.0 / cap])
}

pub fn compute_thresholds(channel: &ChannelModel, horizon: usize) -> Result<OneShotThresholds> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    let mut omega = vec![f64::INFINITY];
    for _t in 2..=horizon {
        let prev = *omega.last().expect("omega_1 present");
        omega.push(capped_inverse_mean(channel, prev)?);
    }
    Ok(OneShotThresholds {
        omega,
        channel: *channel,
    })
}

/// `E[1/g | 1/g < ω] P(1/g < ω) + ω P(1/g >= ω)`, the conditional form of
/// the threshold recursion.
pub fn next_omega_conditional(channel: &ChannelModel, prev: f64) -> Result<f64> {
    let g_star = 1.0 / prev;
    let fire = match *channel {
        ChannelModel::DegenerateTest { value } => {
            if value > g_star {
                1.0 / value
            } else {
                0.0
            }
        }
        _ => channel.expect_with_breaks(|g| if g > g_star { 1.0 / g } else { 0.0 }, &[g_star])?,
    };
    let wait = match *channel {
        ChannelModel::DegenerateTest { value } => {
            if value <= g_star {
                1.0
            } else {
                0.0
            }
        }
        _ => channel.cdf(g_star),
    };
    Ok(fire + prev * wait)
}

impl OneShotThresholds {
    pub fn horizon(&self) -> usize {
        self.omega.len()
    }

    /// `ω_t`, 1-based.
    pub fn omega(&self, t: usize) -> f64 {
        self.omega[t - 1]
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omega
    }

    /// Channel threshold `1/ω_t` (zero at the deadline slot).
    pub fn gain_threshold(&self, t: usize) -> f64 {
        1.0 / self.omega(t)
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }
}

/// Bits sent now: all of the backlog or nothing.
pub fn oneshot_decide(
    th: &OneShotThresholds,
    state: SchedulerState,
    g: f64,
    already_fired: bool,
) -> f64 {
    if already_fired {
        return 0.0;
    }
    if state.t <= 1 {
        return state.beta;
    }
    if g * th.omega(state.t) > 1.0 {
        state.beta
    } else {
        0.0
    }
}

/// Expected energy of the optimal one-shot policy over `horizon` slots:
/// `(2^B - 1) E[min(1/g, ω_T)]`.
pub fn oneshot_expected_energy(th: &OneShotThresholds, bits: f64, horizon: usize) -> Result<f64> {
    if horizon == 0 || horizon > th.horizon() {
        return Err(Error::UnsupportedHorizon {
            policy: "oneshot".into(),
            horizon,
            reason: format!("thresholds computed only up to T={}", th.horizon()),
        });
    }
    if bits == 0.0 {
        return Ok(0.0);
    }
    let factor = capped_inverse_mean(&th.channel, th.omega(horizon))?;
    Ok(energy_cost(bits, 1.0) * factor)
}
