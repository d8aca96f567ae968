//! Energy-minimizing bit scheduling over i.i.d. fading slots with a hard
//! deadline.
//!
//! A transmitter must deliver `B` bits within `T` slots. Serving `b` bits
//! in a slot with channel gain `g` costs `(2^b - 1) / g` energy, and the
//! gain of each slot is revealed only when the slot arrives. This crate
//! provides:
//!
//! - [`channel`]: fading distributions, expectations and the fractional
//!   inverse moments `ν_m` from which every policy threshold is derived;
//! - [`policies`]: closed-form causal schedulers (equal-bit, Suboptimal I
//!   and II, the exact two-slot rule) and non-causal inverse waterfilling;
//! - [`dp`]: the optimal causal scheduler for any horizon by backward
//!   induction on a discretized backlog grid;
//! - [`oneshot`]: the optimal single-slot (stopping) policy;
//! - [`simulator`]: a common-random-numbers Monte Carlo engine;
//! - [`analysis`]: closed-form costs and the equal-bit vs. optimal energy
//!   offsets for two-slot deadlines;
//! - [`cli`]: the `deadline-sched` command line.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod dp;
pub mod error;
pub mod minimize;
pub mod oneshot;
pub mod policies;
pub mod quadrature;
pub mod simulator;
pub mod special;

pub use channel::{ChannelModel, MomentTable};
pub use dp::{CostToGoTable, DpConfig};
pub use error::{Error, Result};
pub use oneshot::OneShotThresholds;
pub use policies::{Policy, PolicyKind, SchedulerState};
pub use simulator::{AggregateStats, EpisodeRecord, SimOptions, SimulationReport, Strategy};
