//! Optimal causal scheduling by backward induction on a uniform backlog
//! grid.
//!
//! `J_1(β) = (2^β - 1) ν_1`, and for `t >= 2`
//!
//! ```text
//! J_t(β) = E_g[ min_{0<=b<=β} (2^b - 1)/g + Ĵ_{t-1}(β - b) ]
//! ```
//!
//! where `Ĵ` is the piecewise-linear interpolant of the previous layer.
//! The inner problem is convex in `b` and solved by golden-section search;
//! the outer expectation uses equiprobable quantile nodes.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::minimize::golden_section;
use crate::policies::{energy_cost, SchedulerState};

const FORMAT_TAG: &str = "# deadline-sched cost-to-go table v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    /// Upper end of the backlog grid, in bits.
    pub b_max: f64,
    pub grid_points: usize,
    /// Bracket width at which the inner golden-section search stops, in bits.
    pub inner_tol: f64,
    /// Quadrature node budget for the expectation over `g` (graded Gauss over quantile cells).
    pub quad_nodes: usize,
}

impl DpConfig {
    pub fn new(b_max: f64) -> Self {
        Self {
            b_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_max > 0.0 && self.b_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("b_max must be positive, got {}", self.b_max)));
        }
        if self.grid_points < 3 {
            return Err(Error::InvalidConfig("grid_points must be at least 3".into()));
        }
        if self.inner_tol.is_nan() || self.inner_tol <= 0.0 {
            return Err(Error::InvalidConfig("inner_tol must be positive".into()));
        }
        if self.quad_nodes == 0 {
            return Err(Error::InvalidConfig("quad_nodes must be positive".into()));
        }
        Ok(())
    }
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            b_max: 10.0,
            grid_points: 1025,
            inner_tol: 1e-9,
            quad_nodes: 256,
        }
    }
}

/// Expected optimal cost-to-go `J_t(β_i)` for `t = 1..=t_max` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CostToGoTable {
    channel: ChannelModel,
    config: DpConfig,
    step: f64,
    /// `values[t - 1][i]`
    values: Vec<Vec<f64>>,
    warnings: Vec<String>,
}

/// Halvings applied to each of the two extreme cells in [`quantile_nodes`].
const TAIL_GRADING: i32 = 12;

/// Probability-weighted nodes for `E_g[.]` built from the quantile function.
///
/// `[0, 1]` is cut into `n / 2` equiprobable cells with a two-point Gauss
/// rule in each, so there are `n` nodes in the bulk. The first and last cells
/// are split geometrically toward `u = 0` and `u = 1`, where the cost
/// integrand can be sharply peaked (e.g. near the floor of a truncated
/// exponential).
pub fn quantile_nodes(channel: &ChannelModel, n: usize) -> Vec<(f64, f64)> {
    if let ChannelModel::DegenerateTest { value } = *channel {
        return vec![(value, 1.0)];
    }
    let cells = n / 2;
    if cells < 3 {
        let w = 1.0 / n as f64;
        return (0..n)
            .map(|j| (channel.quantile((j as f64 + 0.5) * w), w))
            .collect();
    }
    let w = 1.0 / cells as f64;
    // sub-cells of [0, w], finest first
    let mut edge = vec![(0.0, w * (-TAIL_GRADING as f64).exp2())];
    for k in (1..=TAIL_GRADING).rev() {
        edge.push((w * (-k as f64).exp2(), w * ((1 - k) as f64).exp2()));
    }
    let mut intervals = edge.clone();
    intervals.extend((1..cells - 1).map(|j| (j as f64 * w, (j + 1) as f64 * w)));
    intervals.extend(edge.iter().rev().map(|&(lo, hi)| (1.0 - hi, 1.0 - lo)));

    let offset = 0.5 / 3f64.sqrt();
    let mut nodes = Vec::with_capacity(2 * intervals.len());
    for (lo, hi) in intervals {
        let (mid, width) = (0.5 * (lo + hi), hi - lo);
        for u in [mid - offset * width, mid + offset * width] {
            nodes.push((channel.quantile(u), 0.5 * width));
        }
    }
    nodes
}

fn interpolate(layer: &[f64], step: f64, x: f64) -> f64 {
    let n = layer.len();
    let pos = (x / step).max(0.0);
    let i = pos.floor() as usize;
    if i >= n - 1 {
        return layer[n - 1];
    }
    let frac = pos - i as f64;
    layer[i] + frac * (layer[i + 1] - layer[i])
}

fn best_split(prev: &[f64], step: f64, beta: f64, g: f64, tol: f64) -> (f64, f64) {
    golden_section(
        |b| energy_cost(b, g) + interpolate(prev, step, beta - b),
        0.0,
        beta,
        tol,
    )
}

/// Backward induction up to `horizon` slots.
pub fn solve(channel: &ChannelModel, config: DpConfig, horizon: usize) -> Result<CostToGoTable> {
    config.validate()?;
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    let nu1 = channel.expect(|g| 1.0 / g)?;
    let n = config.grid_points;
    let step = config.b_max / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    let nodes = quantile_nodes(channel, config.quad_nodes);

    let mut values = Vec::with_capacity(horizon);
    values.push(grid.iter().map(|&b| energy_cost(b, 1.0) * nu1).collect::<Vec<f64>>());

    for _t in 2..=horizon {
        let prev = values.last().expect("layer 1 exists");
        let layer: Vec<f64> = grid
            .par_iter()
            .map(|&beta| {
                if beta == 0.0 {
                    return 0.0;
                }
                nodes
                    .iter()
                    .map(|&(g, w)| w * best_split(prev, step, beta, g, config.inner_tol).1)
                    .sum()
            })
            .collect();
        values.push(layer);
    }

    let mut table = CostToGoTable {
        channel: *channel,
        config,
        step,
        values,
        warnings: Vec::new(),
    };
    table.check_resolution();
    Ok(table)
}

impl CostToGoTable {
    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn config(&self) -> &DpConfig {
        &self.config
    }

    pub fn t_max(&self) -> usize {
        self.values.len()
    }

    pub fn b_max(&self) -> f64 {
        self.config.b_max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.config.grid_points).map(move |i| i as f64 * self.step)
    }

    /// Layer `t` (1-based) on the grid.
    pub fn layer(&self, t: usize) -> &[f64] {
        &self.values[t - 1]
    }

    pub fn value(&self, t: usize, i: usize) -> f64 {
        self.values[t - 1][i]
    }

    /// `Ĵ_t(β)` by linear interpolation.
    pub fn interpolate(&self, t: usize, beta: f64) -> f64 {
        interpolate(&self.values[t - 1], self.step, beta)
    }

    /// Diagnostics such as a too-coarse grid.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    // Linear interpolation of a convex layer overshoots by at most
    // |Δ²J|/8 between nodes.
    fn check_resolution(&mut self) {
        let layer = self.values.last().expect("non-empty");
        let worst = layer
            .windows(3)
            .filter(|w| w[1] > 0.0)
            .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs() / 8.0 / w[1])
            .fold(0.0, f64::max);
        if worst > 0.01 {
            self.warnings.push(format!(
                "GridTooCoarse: interpolation error estimate {:.2}% exceeds 1%; increase grid_points",
                100.0 * worst
            ));
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{FORMAT_TAG}")?;
        writeln!(out, "# channel={}", self.channel)?;
        writeln!(out, "# t_max={}", self.t_max())?;
        writeln!(out, "# b_max={}", self.config.b_max)?;
        writeln!(out, "# grid_points={}", self.config.grid_points)?;
        writeln!(out, "# inner_tol={}", self.config.inner_tol)?;
        writeln!(out, "# quad_nodes={}", self.config.quad_nodes)?;
        for (t, layer) in self.values.iter().enumerate() {
            write!(out, "{}", t + 1)?;
            for v in layer {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let bad = |m: String| Error::TableFormat(m);
        let mut lines = input.lines();
        let first = lines.next().ok_or_else(|| bad("empty file".into()))??;
        if first.trim() != FORMAT_TAG {
            return Err(bad(format!("unexpected first line `{first}`")));
        }
        let mut channel = None;
        let mut t_max = None;
        let mut config = DpConfig::default();
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| bad(format!("bad header `{line}`")))?;
                let num = |v: &str| -> Result<f64> {
                    v.parse().map_err(|_| bad(format!("bad number in `{line}`")))
                };
                match k {
                    "channel" => channel = Some(v.parse::<ChannelModel>()?),
                    "t_max" => t_max = Some(num(v)? as usize),
                    "b_max" => config.b_max = num(v)?,
                    "grid_points" => config.grid_points = num(v)? as usize,
                    "inner_tol" => config.inner_tol = num(v)?,
                    "quad_nodes" => config.quad_nodes = num(v)? as usize,
                    other => return Err(bad(format!("unknown header key `{other}`"))),
                }
                continue;
            }
            let mut fields = line.split(',');
            let t: usize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| bad(format!("bad row start in `{line:.40}`")))?;
            if t != values.len() + 1 {
                return Err(bad(format!("rows out of order: got t={t}")));
            }
            let row = fields
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| bad(format!("bad value in row t={t}")))?;
            if row.len() != config.grid_points {
                return Err(bad(format!(
                    "row t={t} has {} values, expected {}",
                    row.len(),
                    config.grid_points
                )));
            }
            values.push(row);
        }
        let channel = channel.ok_or_else(|| bad("missing channel header".into()))?;
        let t_max = t_max.ok_or_else(|| bad("missing t_max header".into()))?;
        if values.len() != t_max {
            return Err(bad(format!("expected {t_max} rows, found {}", values.len())));
        }
        config.validate()?;
        Ok(Self {
            channel,
            step: config.b_max / (config.grid_points - 1) as f64,
            config,
            values,
            warnings: Vec::new(),
        })
    }
}

/// Optimal bits to serve now, from the stored cost-to-go of the next slot.
pub fn dp_decide(table: &CostToGoTable, state: SchedulerState, g: f64) -> Result<f64> {
    if state.t > table.t_max() || state.beta > table.b_max() * (1.0 + 1e-12) {
        return Err(Error::OutOfTable {
            t: state.t,
            beta: state.beta,
            t_max: table.t_max(),
            b_max: table.b_max(),
        });
    }
    if state.t <= 1 {
        return Ok(state.beta);
    }
    let prev = table.layer(state.t - 1);
    let (b, _) = best_split(prev, table.step, state.beta, g, table.config.inner_tol);
    Ok(b.clamp(0.0, state.beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::optimal_t2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn te() -> ChannelModel {
        ChannelModel::truncated_exponential(1.0, 0.001).unwrap()
    }

    fn cfg(b_max: f64) -> DpConfig {
        DpConfig::new(b_max)
    }

    #[test]
    fn config_validation() {
        assert!(DpConfig { grid_points: 2, ..cfg(4.0) }.validate().is_err());
        assert!(DpConfig { inner_tol: 0.0, ..cfg(4.0) }.validate().is_err());
        assert!(cfg(-1.0).validate().is_err());
        assert!(solve(&te(), cfg(4.0), 0).is_err());
    }

    #[test]
    fn final_slot_layer_is_closed_form() {
        let table = solve(&te(), cfg(8.0), 1).unwrap();
        let nu1 = te().nu(1).unwrap();
        for (i, beta) in table.grid().enumerate() {
            let want = (beta.exp2() - 1.0) * nu1;
            assert!((table.value(1, i) - want).abs() <= 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn two_slot_decisions_match_closed_form() {
        let b_max = 10.0;
        let table = solve(&te(), cfg(b_max), 2).unwrap();
        let m = te().moments(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let beta = rng.random_range(0.0..b_max);
            let g = te().quantile(rng.random_range(0.001..0.999));
            let s = SchedulerState::new(2, beta).unwrap();
            let dp = dp_decide(&table, s, g).unwrap();
            let exact = optimal_t2(beta, g, &m);
            assert!((dp - exact).abs() <= 2.0 * table.step(), "beta={beta} g={g}: {dp} vs {exact}");
        }
    }

    #[test]
    fn constant_channel_splits_evenly() {
        let g0 = 2.0;
        let ch = ChannelModel::degenerate(g0).unwrap();
        let table = solve(&ch, cfg(6.0), 3).unwrap();
        for t in 1..=3 {
            for (i, beta) in table.grid().enumerate().step_by(64) {
                let tt = t as f64;
                let want = tt * ((beta / tt).exp2() - 1.0) / g0;
                // each interpolated layer adds at most h^2/8 * J'' with J'' < 1 here
                let tol = (t - 1) as f64 * table.step().powi(2) + 1e-12;
                let got = table.value(t, i);
                assert!((got - want).abs() <= tol, "t={t} beta={beta}: {got} vs {want}");
            }
        }
        // brute force over (b3, b2) allocations at T=3, beta=6
        let mut best = f64::INFINITY;
        let n = 600;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (b3, b2) = (6.0 * i as f64 / n as f64, 6.0 * j as f64 / n as f64);
                let b1 = 6.0 - b3 - b2;
                let e = energy_cost(b3, g0) + energy_cost(b2, g0) + energy_cost(b1, g0);
                best = best.min(e);
            }
        }
        let last = table.layer(3).len() - 1;
        assert!((table.value(3, last) - best).abs() <= 2.0 * table.step().powi(2));
    }

    #[test]
    fn three_slot_decision_matches_fine_grid_search() {
        let table = solve(&te(), cfg(4.0), 3).unwrap();
        let s = SchedulerState::new(3, 4.0).unwrap();
        let got = dp_decide(&table, s, 1.0).unwrap();
        let n = 100_000;
        let brute = (0..=n)
            .map(|k| 4.0 * k as f64 / n as f64)
            .min_by(|a, b| {
                let fa = energy_cost(*a, 1.0) + table.interpolate(2, 4.0 - a);
                let fb = energy_cost(*b, 1.0) + table.interpolate(2, 4.0 - b);
                fa.total_cmp(&fb)
            })
            .unwrap();
        assert!((got - brute).abs() < 1e-3, "{got} vs {brute}");
    }

    #[test]
    fn decisions_at_extremes() {
        let table = solve(&te(), cfg(6.0), 3).unwrap();
        for t in 1..=3 {
            let s = SchedulerState::new(t, 5.0).unwrap();
            assert_eq!(dp_decide(&table, s, 1e9).unwrap(), 5.0);
        }
        let s = SchedulerState::new(3, 5.0).unwrap();
        assert_eq!(dp_decide(&table, s, 1e-6).unwrap(), 0.0);
        let s = SchedulerState::new(1, 5.0).unwrap();
        assert_eq!(dp_decide(&table, s, 1e-6).unwrap(), 5.0);
    }

    #[test]
    fn out_of_table() {
        let table = solve(&te(), cfg(4.0), 2).unwrap();
        let s = SchedulerState::new(2, 4.5).unwrap();
        assert!(matches!(dp_decide(&table, s, 1.0), Err(Error::OutOfTable { .. })));
        let s = SchedulerState::new(3, 1.0).unwrap();
        assert!(matches!(dp_decide(&table, s, 1.0), Err(Error::OutOfTable { .. })));
    }

    #[test]
    fn layer_shape_invariants() {
        let table = solve(&te(), cfg(12.0), 5).unwrap();
        for t in 1..=5 {
            let layer = table.layer(t);
            assert_eq!(layer[0], 0.0);
            for w in layer.windows(2) {
                assert!(w[1] >= w[0]);
            }
            for w in layer.windows(3) {
                assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-7, "t={t} not convex");
            }
            if t >= 2 {
                for (a, b) in layer.iter().zip(table.layer(t - 1)) {
                    assert!(a <= b);
                }
            }
        }
        assert!(table.warnings().is_empty());
    }

    #[test]
    fn decisions_monotone() {
        let table = solve(&te(), cfg(8.0), 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let t = rng.random_range(2..=4);
            let beta = rng.random_range(0.0..7.5);
            let g = te().quantile(rng.random_range(0.001..0.99));
            let s = SchedulerState::new(t, beta).unwrap();
            let b = dp_decide(&table, s, g).unwrap();
            let b_more_g = dp_decide(&table, s, g * 1.3).unwrap();
            let b_more_beta = dp_decide(&table, SchedulerState::new(t, beta + 0.4).unwrap(), g).unwrap();
            assert!(b_more_g >= b - 1e-6, "g-monotone at t={t} beta={beta} g={g}");
            assert!(b_more_beta >= b - 1e-6, "beta-monotone at t={t} beta={beta} g={g}");
        }
    }

    #[test]
    fn grid_refinement_is_stable() {
        let coarse = solve(&te(), cfg(10.0), 5).unwrap();
        let fine = solve(&te(), DpConfig { grid_points: 2049, ..cfg(10.0) }, 5).unwrap();
        let a = *coarse.layer(5).last().unwrap();
        let b = *fine.layer(5).last().unwrap();
        assert!(((a - b) / b).abs() < 0.002, "{a} vs {b}");
    }

    #[test]
    fn csv_round_trip() {
        let table = solve(&te(), DpConfig { grid_points: 65, ..cfg(3.0) }, 3).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let back = CostToGoTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values, table.values);
        assert_eq!(back.config, table.config);
        assert_eq!(back.channel, table.channel);
        assert!(CostToGoTable::read_csv(&b"not a table\n"[..]).is_err());
        let truncated = String::from_utf8(buf).unwrap().lines().take(9).collect::<Vec<_>>().join("\n");
        assert!(CostToGoTable::read_csv(truncated.as_bytes()).is_err());
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let table = solve(&te(), DpConfig { grid_points: 5, ..cfg(40.0) }, 2).unwrap();
        assert!(table.warnings().iter().any(|w| w.starts_with("GridTooCoarse")));
    }
}
