//! Monte Carlo evaluation of scheduling policies.
//!
//! Episodes are generated in fixed-size blocks. Block `k` draws from a
//! ChaCha8 stream keyed by `(seed, k)`, so results depend only on the seed
//! and episode count, never on how many worker threads run the blocks.
//! With common random numbers (the default) every policy sees the same
//! gain vector in each episode, which makes paired policy differences far
//! less noisy than the policies' individual means.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::dp::{self, CostToGoTable, DpConfig};
use crate::error::{Error, Result};
use crate::oneshot::{self, OneShotThresholds};
use crate::policies::{energy_cost, iwf_allocate, Policy, PolicyKind, SchedulerState};

const BLOCK_EPISODES: usize = 1000;
const SUM_TOL: f64 = 1e-9;

/// Something that can schedule an episode: a causal policy, or the
/// non-causal inverse-waterfilling oracle.
#[derive(Debug, Clone)]
pub enum Strategy {
    Causal(Policy),
    Iwf,
}

impl Strategy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            Strategy::Causal(p) => p.kind(),
            Strategy::Iwf => PolicyKind::Iwf,
        }
    }
}

/// One realization scheduled by one strategy. Vectors run from slot
/// `t = T` (index 0) down to the deadline slot `t = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub gains: Vec<f64>,
    pub bits: Vec<f64>,
    pub energies: Vec<f64>,
    pub total_energy: f64,
}

/// Compensated (Neumaier) sum.
fn accurate_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn run_episode(strategy: &Strategy, total_bits: f64, gains: &[f64]) -> Result<EpisodeRecord> {
    let horizon = gains.len();
    let bits = match strategy {
        Strategy::Iwf => iwf_allocate(total_bits, gains).bits,
        Strategy::Causal(policy) => {
            let mut beta = total_bits;
            let mut bits = Vec::with_capacity(horizon);
            for (k, &g) in gains.iter().enumerate() {
                let t = horizon - k;
                let b = policy.decide(SchedulerState { t, beta }, g)?;
                bits.push(b);
                beta = if b >= beta { 0.0 } else { beta - b };
            }
            bits
        }
    };
    let energies: Vec<f64> = bits.iter().zip(gains).map(|(&b, &g)| energy_cost(b, g)).collect();
    let total_energy = accurate_sum(energies.iter().copied());
    Ok(EpisodeRecord {
        gains: gains.to_vec(),
        bits,
        energies,
        total_energy,
    })
}

/// Checks the hard per-episode constraints: bits sum to `B`, each slot
/// serves within `[0, β_t]`, and the deadline slot clears the queue.
pub fn check_episode(kind: PolicyKind, total_bits: f64, rec: &EpisodeRecord) -> Result<()> {
    let fail = |detail: String| Error::ConstraintViolation {
        policy: kind.to_string(),
        detail,
    };
    let mut beta = total_bits;
    let last = rec.bits.len() - 1;
    for (k, &b) in rec.bits.iter().enumerate() {
        let t = rec.bits.len() - k;
        if b.is_nan() || b < 0.0 {
            return Err(fail(format!("negative allocation {b} at t={t}")));
        }
        if kind.is_causal() && b > beta + SUM_TOL {
            return Err(fail(format!("allocation {b} exceeds backlog {beta} at t={t}")));
        }
        if kind.is_causal() && k == last && (b - beta).abs() > SUM_TOL {
            return Err(fail(format!("deadline slot served {b} of backlog {beta}")));
        }
        beta -= b;
    }
    let sum = accurate_sum(rec.bits.iter().copied());
    if (sum - total_bits).abs() > SUM_TOL {
        return Err(fail(format!("allocations sum to {sum}, expected {total_bits}")));
    }
    let total = accurate_sum(rec.energies.iter().copied());
    if (total - rec.total_energy).abs() > 1e-12 * total.abs().max(1.0) {
        return Err(fail("total energy does not match per-slot energies".into()));
    }
    Ok(())
}

/// Mergeable mean/variance accumulator (Welford, Chan et al. merge).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub policy: PolicyKind,
    pub non_causal: bool,
    pub bits: f64,
    pub horizon: usize,
    pub episodes: usize,
    pub seed: u64,
    pub mean_energy: f64,
    pub std_error: f64,
    /// `E[b_t]`, index 0 is slot `t = T`.
    pub mean_bits_per_slot: Vec<f64>,
}

impl AggregateStats {
    pub fn mean_energy_db(&self) -> f64 {
        10.0 * self.mean_energy.log10()
    }

    /// `E[b_t]` for slot `t` (1-based, counting down to the deadline).
    pub fn mean_bits_at(&self, t: usize) -> f64 {
        self.mean_bits_per_slot[self.horizon - t]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    pub episodes: usize,
    pub seed: u64,
    /// Worker threads; `0` uses rayon's global pool.
    pub workers: usize,
    pub common_random_numbers: bool,
    /// Verify hard constraints on every episode.
    pub check_constraints: bool,
}

impl SimOptions {
    pub fn new(episodes: usize, seed: u64) -> Self {
        Self {
            episodes,
            seed,
            workers: 1,
            common_random_numbers: true,
            check_constraints: cfg!(debug_assertions),
        }
    }
}

/// Per-policy statistics plus paired differences from the same episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub stats: Vec<AggregateStats>,
    paired: Vec<Vec<RunningStats>>,
}

impl SimulationReport {
    pub fn get(&self, kind: PolicyKind) -> Option<&AggregateStats> {
        self.stats.iter().find(|s| s.policy == kind)
    }

    fn index(&self, kind: PolicyKind) -> Option<usize> {
        self.stats.iter().position(|s| s.policy == kind)
    }

    /// Mean and standard error of `E_a - E_b` over shared episodes.
    pub fn paired_difference(&self, a: PolicyKind, b: PolicyKind) -> Option<(f64, f64)> {
        let (i, j) = (self.index(a)?, self.index(b)?);
        let d = &self.paired[i][j];
        Some((d.mean, d.std_error()))
    }
}

struct BlockResult {
    energy: Vec<RunningStats>,
    paired: Vec<Vec<RunningStats>>,
    bit_sums: Vec<Vec<f64>>,
}

fn block_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn run_block(
    strategies: &[Strategy],
    channel: &ChannelModel,
    total_bits: f64,
    horizon: usize,
    opts: &SimOptions,
    block: usize,
) -> Result<BlockResult> {
    let p = strategies.len();
    let start = block * BLOCK_EPISODES;
    let count = BLOCK_EPISODES.min(opts.episodes - start);
    let mut energy = vec![RunningStats::default(); p];
    let mut paired = vec![vec![RunningStats::default(); p]; p];
    let mut bit_sums = vec![vec![0.0; horizon]; p];

    let mut shared = block_rng(opts.seed, block as u64);
    let mut own: Vec<ChaCha8Rng> = (0..p)
        .map(|i| block_rng(opts.seed ^ 0x9e37_79b9_7f4a_7c15, (block * p + i) as u64))
        .collect();
    let mut gains = vec![0.0; horizon];
    let mut totals = vec![0.0; p];

    for _ in 0..count {
        if opts.common_random_numbers {
            gains.iter_mut().for_each(|g| *g = channel.sample(&mut shared));
        }
        for (i, strategy) in strategies.iter().enumerate() {
            if !opts.common_random_numbers {
                gains.iter_mut().for_each(|g| *g = channel.sample(&mut own[i]));
            }
            let rec = run_episode(strategy, total_bits, &gains)?;
            if opts.check_constraints {
                check_episode(strategy.kind(), total_bits, &rec)?;
            }
            energy[i].push(rec.total_energy);
            for (acc, b) in bit_sums[i].iter_mut().zip(&rec.bits) {
                *acc += b;
            }
            totals[i] = rec.total_energy;
        }
        for i in 0..p {
            for j in 0..p {
                paired[i][j].push(totals[i] - totals[j]);
            }
        }
    }
    Ok(BlockResult {
        energy,
        paired,
        bit_sums,
    })
}

/// Runs every strategy over `opts.episodes` sampled episodes of `horizon`
/// slots carrying `total_bits` bits.
pub fn run(
    strategies: &[Strategy],
    channel: &ChannelModel,
    total_bits: f64,
    horizon: usize,
    opts: SimOptions,
) -> Result<SimulationReport> {
    if opts.episodes == 0 {
        return Err(Error::InvalidConfig("episodes must be at least 1".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    if strategies.is_empty() {
        return Err(Error::InvalidConfig("no policies to simulate".into()));
    }
    if !(total_bits >= 0.0 && total_bits.is_finite()) {
        return Err(Error::InvalidConfig(format!("B must be finite and >= 0, got {total_bits}")));
    }
    for s in strategies {
        if let Strategy::Causal(p) = s {
            p.validate(total_bits, horizon)?;
        }
    }

    let blocks = opts.episodes.div_ceil(BLOCK_EPISODES);
    let work = |k: usize| run_block(strategies, channel, total_bits, horizon, &opts, k);
    let results: Vec<BlockResult> = if opts.workers == 1 {
        (0..blocks).map(work).collect::<Result<_>>()?
    } else if opts.workers == 0 {
        (0..blocks).into_par_iter().map(work).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| (0..blocks).into_par_iter().map(work).collect::<Result<_>>())?
    };

    let p = strategies.len();
    let mut energy = vec![RunningStats::default(); p];
    let mut paired = vec![vec![RunningStats::default(); p]; p];
    let mut bit_sums: Vec<Vec<Vec<f64>>> = vec![vec![Vec::with_capacity(blocks); horizon]; p];
    for r in &results {
        for i in 0..p {
            energy[i].merge(&r.energy[i]);
            for (acc, part) in paired[i].iter_mut().zip(&r.paired[i]) {
                acc.merge(part);
            }
            for (k, s) in r.bit_sums[i].iter().enumerate() {
                bit_sums[i][k].push(*s);
            }
        }
    }

    let stats = strategies
        .iter()
        .enumerate()
        .map(|(i, s)| AggregateStats {
            policy: s.kind(),
            non_causal: !s.kind().is_causal(),
            bits: total_bits,
            horizon,
            episodes: opts.episodes,
            seed: opts.seed,
            mean_energy: energy[i].mean,
            std_error: energy[i].std_error(),
            mean_bits_per_slot: bit_sums[i]
                .iter()
                .map(|parts| accurate_sum(parts.iter().copied()) / opts.episodes as f64)
                .collect(),
        })
        .collect();
    Ok(SimulationReport { stats, paired })
}

/// `E[b_t]` per slot for one strategy, index 0 being slot `t = T`.
pub fn profile(
    strategy: &Strategy,
    channel: &ChannelModel,
    total_bits: f64,
    horizon: usize,
    opts: SimOptions,
) -> Result<Vec<f64>> {
    let report = run(std::slice::from_ref(strategy), channel, total_bits, horizon, opts)?;
    Ok(report.stats.into_iter().next().expect("one strategy").mean_bits_per_slot)
}

/// Where a `dp` policy gets its cost-to-go table from.
#[derive(Debug, Clone)]
pub enum DpSource {
    Solve(DpConfig),
    Table(Arc<CostToGoTable>),
}

/// Builds strategies for `kinds`, computing the moments, thresholds and
/// cost-to-go table they need exactly once.
pub fn build_strategies(
    kinds: &[PolicyKind],
    channel: &ChannelModel,
    total_bits: f64,
    horizon: usize,
    dp_source: DpSource,
) -> Result<Vec<Strategy>> {
    let moments = Arc::new(channel.moments(horizon.saturating_sub(1).max(1))?);
    let mut dp_table = None;
    let mut thresholds: Option<Arc<OneShotThresholds>> = None;
    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let s = match kind {
            PolicyKind::EqualBit => Strategy::Causal(Policy::EqualBit),
            PolicyKind::SuboptimalI => Strategy::Causal(Policy::SuboptimalI(moments.clone())),
            PolicyKind::SuboptimalII => Strategy::Causal(Policy::SuboptimalII(moments.clone())),
            PolicyKind::OptimalT2 => Strategy::Causal(Policy::OptimalT2(moments.clone())),
            PolicyKind::Dp => {
                if dp_table.is_none() {
                    dp_table = Some(match &dp_source {
                        DpSource::Table(t) => t.clone(),
                        DpSource::Solve(cfg) => {
                            let cfg = DpConfig {
                                b_max: if total_bits > 0.0 { total_bits } else { 1.0 },
                                ..*cfg
                            };
                            Arc::new(dp::solve(channel, cfg, horizon)?)
                        }
                    });
                }
                Strategy::Causal(Policy::Dp(dp_table.clone().expect("set above")))
            }
            PolicyKind::OneShot => {
                if thresholds.is_none() {
                    thresholds = Some(Arc::new(oneshot::compute_thresholds(channel, horizon)?));
                }
                Strategy::Causal(Policy::OneShot(thresholds.clone().expect("set above")))
            }
            PolicyKind::Iwf => Strategy::Iwf,
        };
        out.push(s);
    }
    Ok(out)
}
