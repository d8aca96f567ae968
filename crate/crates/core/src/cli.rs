//! The `deadline-sched` command line: reproducible experiments that write
//! CSV series and JSON reports.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::channel::ChannelModel;
use crate::dp::{self, CostToGoTable, DpConfig};
use crate::error::{Error, Result};
use crate::oneshot;
use crate::policies::{optimal_t2, Policy, PolicyKind, SchedulerState};
use crate::simulator::{self, DpSource, SimOptions, Strategy};

/// Directory that receives outputs when `--out` is not given.
pub const OUT_DIR_ENV: &str = "DEADLINE_SCHED_OUT_DIR";

const DEFAULT_CHANNEL: &str = "truncexp:lambda=1,gamma0=0.001";

#[derive(Debug, Parser)]
#[command(name = "deadline-sched", version, about = "Energy-minimizing bit scheduling under a hard deadline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fractional inverse moments nu_m, running geometric means and nu_inf.
    Moments(MomentsArgs),
    /// Solve the optimal causal scheduler by backward induction and save the table.
    DpSolve(DpSolveArgs),
    /// Monte Carlo expected energy per policy.
    Simulate(SimArgs),
    /// Monte Carlo mean bits per slot per policy.
    Profile(SimArgs),
    /// One-shot stopping thresholds omega_t and gain thresholds 1/omega_t.
    OneshotThresholds(OneshotThresholdArgs),
    /// Expected energy of the optimal one-shot policy (JSON).
    OneshotEnergy(OneshotEnergyArgs),
    /// Two-slot energy offsets for the reference channels vs. published values.
    Table2(Table2Args),
    /// Two-slot energy advantage of optimal over equal-bit across packet sizes.
    GapCurve(GapCurveArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; defaults to stdout, or to $DEADLINE_SCHED_OUT_DIR/<command>.<ext> when set.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    /// Channel, e.g. `truncexp:lambda=1,gamma0=0.001` or `gamma:k=2,theta=1`.
    #[arg(long, default_value = DEFAULT_CHANNEL)]
    pub channel: String,
    /// Number of moments nu_1..nu_M.
    #[arg(long = "M", default_value_t = 8)]
    pub count: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Backlog grid points for the DP solver.
    #[arg(long, default_value_t = 1025)]
    pub grid_points: usize,
    /// Golden-section stopping width for the inner minimization (bits).
    #[arg(long, default_value_t = 1e-9)]
    pub inner_tol: f64,
    /// Quadrature nodes for the expectation over g (Gauss pairs over quantile cells).
    #[arg(long, default_value_t = 256)]
    pub quad_nodes: usize,
}

#[derive(Debug, Args)]
pub struct DpSolveArgs {
    #[arg(long, default_value = DEFAULT_CHANNEL)]
    pub channel: String,
    /// Horizon (slots).
    #[arg(long = "T")]
    pub horizon: usize,
    /// Largest backlog covered by the table (bits).
    #[arg(long = "B-max", default_value_t = 10.0)]
    pub b_max: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Verify table invariants (and the closed-form two-slot rule); exit nonzero on failure.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// JSON experiment file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub channel: Option<String>,
    /// Horizon (slots).
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    /// Packet size (bits).
    #[arg(long = "B")]
    pub bits: Option<f64>,
    /// Comma-separated subset of eq,sub1,sub2,opt2,dp,oneshot,iwf.
    #[arg(long)]
    pub policies: Option<String>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Cost-to-go table written by `dp-solve`; solved on the fly when absent.
    #[arg(long)]
    pub dp_table: Option<PathBuf>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Draw separate channel realizations per policy instead of common random numbers.
    #[arg(long)]
    pub independent: bool,
    /// Verify per-episode constraints; exit nonzero on violation.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OneshotThresholdArgs {
    #[arg(long, default_value = DEFAULT_CHANNEL)]
    pub channel: String,
    #[arg(long = "T")]
    pub horizon: usize,
    /// Verify omega_2 = nu_1 and monotonicity; exit nonzero on failure.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OneshotEnergyArgs {
    #[arg(long, default_value = DEFAULT_CHANNEL)]
    pub channel: String,
    #[arg(long = "T")]
    pub horizon: usize,
    #[arg(long = "B")]
    pub bits: f64,
    /// Also estimate by simulation with this many episodes.
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// With --episodes, require agreement within 4 standard errors.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct Table2Args {
    /// Exit nonzero unless every row is within 0.05 dB of the published value.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GapCurveArgs {
    #[arg(long, default_value = DEFAULT_CHANNEL)]
    pub channel: String,
    #[arg(long, default_value_t = 0.01)]
    pub b_min: f64,
    #[arg(long, default_value_t = 30.0)]
    pub b_max: f64,
    /// Log-spaced grid points.
    #[arg(long, default_value_t = 60)]
    pub points: usize,
    /// Verify monotonicity and agreement of the endpoints with the limits (0.05 dB).
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Fully resolved simulation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: String,
    #[serde(rename = "B")]
    pub bits: f64,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub policies: Vec<PolicyKind>,
    pub episodes: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub workers: usize,
}

/// Partial config as read from a JSON file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    channel: Option<String>,
    #[serde(rename = "B")]
    bits: Option<f64>,
    #[serde(rename = "T")]
    horizon: Option<usize>,
    policies: Option<Vec<String>>,
    episodes: Option<usize>,
    seed: Option<u64>,
    grid_points: Option<usize>,
    workers: Option<usize>,
}

fn parse_policies(s: &str) -> Result<Vec<PolicyKind>> {
    let kinds: Vec<PolicyKind> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if kinds.is_empty() {
        return Err(Error::InvalidConfig("no policies given".into()));
    }
    Ok(kinds)
}

impl ExperimentConfig {
    /// Merges flags over an optional config file over defaults.
    pub fn resolve(args: &SimArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let f = File::open(path).map_err(|e| {
                    Error::InvalidConfig(format!("cannot open config {}: {e}", path.display()))
                })?;
                serde_json::from_reader::<_, ConfigFile>(BufReader::new(f)).map_err(|e| {
                    Error::InvalidConfig(format!("bad config {}: {e}", path.display()))
                })?
            }
            None => ConfigFile::default(),
        };
        let policies = match (&args.policies, &file.policies) {
            (Some(s), _) => parse_policies(s)?,
            (None, Some(list)) => parse_policies(&list.join(","))?,
            (None, None) => parse_policies("eq,sub1,sub2,dp,iwf")?,
        };
        let cfg = Self {
            channel: args
                .channel
                .clone()
                .or(file.channel)
                .unwrap_or_else(|| DEFAULT_CHANNEL.to_string()),
            bits: args
                .bits
                .or(file.bits)
                .ok_or_else(|| Error::InvalidConfig("--B is required".into()))?,
            horizon: args
                .horizon
                .or(file.horizon)
                .ok_or_else(|| Error::InvalidConfig("--T is required".into()))?,
            policies,
            episodes: args.episodes.or(file.episodes).unwrap_or(100_000),
            seed: args.seed.or(file.seed).unwrap_or(1),
            grid_points: args.grid_points.or(file.grid_points).unwrap_or(1025),
            workers: args.workers.or(file.workers).unwrap_or(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let channel: ChannelModel = self.channel.parse()?;
        if self.channel != channel.to_string() {
            // keep the canonical spelling
            return Err(Error::InvalidConfig(format!(
                "channel `{}` is not in canonical form `{channel}`",
                self.channel
            )));
        }
        if !(self.bits >= 0.0 && self.bits.is_finite()) {
            return Err(Error::InvalidConfig(format!("B must be finite and >= 0, got {}", self.bits)));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("T must be at least 1".into()));
        }
        if self.episodes == 0 {
            return Err(Error::InvalidConfig("episodes must be at least 1".into()));
        }
        if self.grid_points < 3 {
            return Err(Error::InvalidConfig("grid_points must be at least 3".into()));
        }
        if self.policies.contains(&PolicyKind::OptimalT2) && self.horizon > 2 {
            return Err(Error::InvalidConfig(
                "opt2 is the closed-form two-slot rule; use dp for T > 2".into(),
            ));
        }
        Ok(())
    }

    pub fn channel_model(&self) -> Result<ChannelModel> {
        self.channel.parse()
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let policies: Vec<&str> = self.policies.iter().map(|p| p.name()).collect();
        write!(
            f,
            "channel={};B={};T={};policies={};episodes={};seed={};grid_points={};workers={}",
            self.channel,
            self.bits,
            self.horizon,
            policies.join(","),
            self.episodes,
            self.seed,
            self.grid_points,
            self.workers
        )
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidConfig(format!("experiment string: {m}"));
        let mut fields = std::collections::BTreeMap::new();
        for part in s.split(';') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            if fields.insert(k.trim(), v.trim()).is_some() {
                return Err(bad(format!("duplicate key `{k}`")));
            }
        }
        let mut get = |k: &str| fields.remove(k).ok_or_else(|| bad(format!("missing `{k}`")));
        let num = |k: &str, v: &str| -> Result<f64> {
            v.parse().map_err(|_| bad(format!("`{k}` is not a number: `{v}`")))
        };
        let int = |k: &str, v: &str| -> Result<u64> {
            v.parse().map_err(|_| bad(format!("`{k}` is not an integer: `{v}`")))
        };
        let cfg = Self {
            channel: get("channel")?.to_string(),
            bits: num("B", get("B")?)?,
            horizon: int("T", get("T")?)? as usize,
            policies: parse_policies(get("policies")?)?,
            episodes: int("episodes", get("episodes")?)? as usize,
            seed: int("seed", get("seed")?)?,
            grid_points: int("grid_points", get("grid_points")?)? as usize,
            workers: int("workers", get("workers")?)? as usize,
        };
        if let Some(k) = fields.keys().next() {
            return Err(bad(format!("unknown key `{k}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Whether every requested `--check` passed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

fn open_output<'a>(
    out: &OutputArgs,
    command: &str,
    ext: &str,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>> {
    let path = match (&out.out, std::env::var_os(OUT_DIR_ENV)) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(Path::new(&dir).join(format!("{command}.{ext}"))),
        (None, None) => None,
    };
    Ok(match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(stdout),
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    run(cli, stdout, stderr)
}

pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome> {
    let outcome = match cli.command {
        Command::Moments(a) => cmd_moments(&a, stdout)?,
        Command::DpSolve(a) => cmd_dp_solve(&a, stdout, stderr)?,
        Command::Simulate(a) => cmd_simulate(&a, stdout, false)?,
        Command::Profile(a) => cmd_simulate(&a, stdout, true)?,
        Command::OneshotThresholds(a) => cmd_oneshot_thresholds(&a, stdout)?,
        Command::OneshotEnergy(a) => cmd_oneshot_energy(&a, stdout)?,
        Command::Table2(a) => cmd_table2(&a, stdout)?,
        Command::GapCurve(a) => cmd_gap_curve(&a, stdout)?,
    };
    for f in &outcome.failures {
        writeln!(stderr, "check failed: {f}")?;
    }
    Ok(outcome)
}

pub fn cmd_moments(a: &MomentsArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    if a.count == 0 {
        return Err(Error::InvalidConfig("--M must be at least 1".into()));
    }
    let channel: ChannelModel = a.channel.parse()?;
    let table = channel.moments(a.count)?;
    let mut w = open_output(&a.output, "moments", "csv", stdout)?;
    writeln!(w, "m,nu_m,gmean_m,nu_inf")?;
    for m in 1..=a.count {
        writeln!(w, "{m},{},{},{}", table.nu(m)?, table.gmean(m)?, table.nu_inf())?;
    }
    w.flush()?;
    Ok(Outcome::default())
}

fn dp_config(b_max: f64, g: &GridArgs) -> DpConfig {
    DpConfig {
        b_max,
        grid_points: g.grid_points,
        inner_tol: g.inner_tol,
        quad_nodes: g.quad_nodes,
    }
}

/// Structural checks on a solved table, plus the two-slot closed form.
pub fn check_table(table: &CostToGoTable) -> Result<Outcome> {
    let mut out = Outcome::default();
    out.failures.extend(table.warnings().iter().cloned());
    let nu1 = table.channel().nu(1)?;
    for (i, beta) in table.grid().enumerate() {
        let want = (beta.exp2() - 1.0) * nu1;
        if (table.value(1, i) - want).abs() > 1e-12 * want.max(1.0) {
            out.failures.push(format!("J_1({beta}) differs from (2^beta - 1) nu_1"));
            break;
        }
    }
    for t in 1..=table.t_max() {
        let layer = table.layer(t);
        out.require(layer[0] == 0.0, format!("J_{t}(0) != 0"));
        out.require(layer.windows(2).all(|w| w[1] >= w[0]), format!("J_{t} not nondecreasing"));
        out.require(
            layer.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] >= -1e-7),
            format!("J_{t} not convex"),
        );
        if t >= 2 {
            out.require(
                layer.iter().zip(table.layer(t - 1)).all(|(a, b)| a <= b),
                format!("J_{t} exceeds J_{}", t - 1),
            );
        }
    }
    if table.t_max() >= 2 {
        let moments = table.channel().moments(1)?;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tol = 2.0 * table.step();
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let beta = rng.random_range(0.0..table.b_max());
            let g = match table.channel() {
                ChannelModel::DegenerateTest { value } => *value,
                ch => ch.quantile(rng.random_range(0.001..0.999)),
            };
            let b = dp::dp_decide(table, SchedulerState { t: 2, beta }, g)?;
            worst = worst.max((b - optimal_t2(beta, g, &moments)).abs());
        }
        out.require(
            worst <= tol,
            format!("two-slot decisions deviate from the closed form by {worst} > {tol}"),
        );
        for k in 1..=4 {
            let beta = table.b_max() * k as f64 / 4.0;
            let exact = analysis::optimal_t2_cost(beta, table.channel(), &moments)?;
            let got = table.interpolate(2, beta);
            out.require(
                (got / exact - 1.0).abs() <= 0.005,
                format!("J_2({beta}) = {got} differs from the two-slot closed form {exact} by more than 0.5%"),
            );
        }
    }
    Ok(out)
}

pub fn cmd_dp_solve(a: &DpSolveArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome> {
    let channel: ChannelModel = a.channel.parse()?;
    let table = dp::solve(&channel, dp_config(a.b_max, &a.grid), a.horizon)?;
    for warning in table.warnings() {
        writeln!(stderr, "warning: {warning}")?;
    }
    let outcome = if a.check { check_table(&table)? } else { Outcome::default() };
    let mut w = open_output(&a.output, "dp-solve", "csv", stdout)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    Ok(outcome)
}

fn load_table(path: &Path) -> Result<CostToGoTable> {
    let f = File::open(path).map_err(|e| {
        Error::InvalidConfig(format!(
            "cannot read DP table {}: {e}; run `deadline-sched dp-solve --channel ... --T ... --B-max ... --out {}` first",
            path.display(),
            path.display()
        ))
    })?;
    CostToGoTable::read_csv(BufReader::new(f))
}

pub fn cmd_simulate(a: &SimArgs, stdout: &mut dyn Write, profile: bool) -> Result<Outcome> {
    let cfg = ExperimentConfig::resolve(a)?;
    let channel = cfg.channel_model()?;
    let dp_source = match &a.dp_table {
        Some(path) => {
            let table = load_table(path)?;
            if table.channel() != &channel {
                return Err(Error::InvalidConfig(format!(
                    "DP table {} was solved for {}, not {channel}; rerun dp-solve",
                    path.display(),
                    table.channel()
                )));
            }
            if cfg.policies.contains(&PolicyKind::Dp) {
                Policy::Dp(Arc::new(table.clone())).validate(cfg.bits, cfg.horizon).map_err(|e| {
                    Error::InvalidConfig(format!("{e}; rerun dp-solve with a larger --T or --B-max"))
                })?;
            }
            DpSource::Table(Arc::new(table))
        }
        None => DpSource::Solve(DpConfig {
            grid_points: cfg.grid_points,
            ..DpConfig::new(cfg.bits)
        }),
    };
    let strategies = simulator::build_strategies(&cfg.policies, &channel, cfg.bits, cfg.horizon, dp_source)?;
    let opts = SimOptions {
        episodes: cfg.episodes,
        seed: cfg.seed,
        workers: cfg.workers,
        common_random_numbers: !a.independent,
        check_constraints: a.check,
    };
    let report = simulator::run(&strategies, &channel, cfg.bits, cfg.horizon, opts)?;

    let (name, ext) = if profile { ("profile", "csv") } else { ("simulate", "csv") };
    let mut w = open_output(&a.output, name, ext, stdout)?;
    if profile {
        writeln!(w, "policy,slot_index_t,mean_bits")?;
        for st in &report.stats {
            for t in (1..=cfg.horizon).rev() {
                writeln!(w, "{},{t},{}", st.policy, st.mean_bits_at(t))?;
            }
        }
    } else {
        writeln!(w, "policy,B,T,episodes,mean_energy,stderr,mean_energy_db,non_causal")?;
        for st in &report.stats {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                st.policy,
                st.bits,
                st.horizon,
                st.episodes,
                st.mean_energy,
                st.std_error,
                st.mean_energy_db(),
                st.non_causal
            )?;
        }
    }
    w.flush()?;
    Ok(Outcome::default())
}

pub fn cmd_oneshot_thresholds(a: &OneshotThresholdArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let channel: ChannelModel = a.channel.parse()?;
    let th = oneshot::compute_thresholds(&channel, a.horizon)?;
    let mut out = Outcome::default();
    if a.check && a.horizon >= 2 {
        let nu1 = channel.nu(1)?;
        out.require((th.omega(2) - nu1).abs() <= 1e-10 * nu1, "omega_2 != nu_1");
        out.require(
            th.omegas()[1..].windows(2).all(|w| w[1] <= w[0]),
            "gain threshold 1/omega_t is not monotone in t",
        );
    }
    let mut w = open_output(&a.output, "oneshot-thresholds", "csv", stdout)?;
    writeln!(w, "t,omega_t,gain_threshold")?;
    for t in 2..=a.horizon {
        writeln!(w, "{t},{},{}", th.omega(t), th.gain_threshold(t))?;
    }
    w.flush()?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct OneshotEnergyReport {
    channel: String,
    #[serde(rename = "B")]
    bits: f64,
    #[serde(rename = "T")]
    horizon: usize,
    expected_energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulated_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulated_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    episodes: Option<usize>,
}

pub fn cmd_oneshot_energy(a: &OneshotEnergyArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let channel: ChannelModel = a.channel.parse()?;
    if !(a.bits >= 0.0 && a.bits.is_finite()) {
        return Err(Error::InvalidConfig(format!("B must be finite and >= 0, got {}", a.bits)));
    }
    let th = Arc::new(oneshot::compute_thresholds(&channel, a.horizon)?);
    let expected = oneshot::oneshot_expected_energy(&th, a.bits, a.horizon)?;
    let mut report = OneshotEnergyReport {
        channel: channel.to_string(),
        bits: a.bits,
        horizon: a.horizon,
        expected_energy: expected,
        simulated_energy: None,
        simulated_stderr: None,
        episodes: None,
    };
    let mut out = Outcome::default();
    if let Some(n) = a.episodes {
        let s = [Strategy::Causal(Policy::OneShot(th))];
        let r = simulator::run(&s, &channel, a.bits, a.horizon, SimOptions::new(n, a.seed))?;
        let st = &r.stats[0];
        report.simulated_energy = Some(st.mean_energy);
        report.simulated_stderr = Some(st.std_error);
        report.episodes = Some(n);
        if a.check {
            out.require(
                (st.mean_energy - expected).abs() <= 4.0 * st.std_error,
                format!("simulated {} vs closed form {expected} beyond 4 sigma", st.mean_energy),
            );
        }
    }
    let mut w = open_output(&a.output, "oneshot-energy", "json", stdout)?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(out)
}

pub fn cmd_table2(a: &Table2Args, stdout: &mut dyn Write) -> Result<Outcome> {
    let rows = analysis::compare_published_offsets()?;
    let mut out = Outcome::default();
    let mut w = open_output(&a.output, "table2", "csv", stdout)?;
    writeln!(w, "channel,small_B_dB,large_B_dB,published_small_B_dB,published_large_B_dB,pass")?;
    for r in &rows {
        writeln!(
            w,
            "\"{}\",{:.4},{:.4},{:.2},{:.2},{}",
            r.report.channel,
            r.report.small_b_db,
            r.report.large_b_db,
            r.published_small_b_db,
            r.published_large_b_db,
            r.pass
        )?;
        if a.check {
            out.require(r.pass, format!("{} outside ±0.05 dB of published values", r.label));
        }
    }
    w.flush()?;
    Ok(out)
}

pub fn cmd_gap_curve(a: &GapCurveArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let channel: ChannelModel = a.channel.parse()?;
    if !(a.b_min > 0.0 && a.b_max > a.b_min) || a.points < 2 {
        return Err(Error::InvalidConfig("need 0 < --b-min < --b-max and --points >= 2".into()));
    }
    let pts = analysis::gap_curve(&channel, &analysis::log_grid(a.b_min, a.b_max, a.points))?;
    let mut out = Outcome::default();
    if a.check {
        let limits = analysis::theorem1_ratios(&channel)?;
        out.require(
            pts.windows(2).all(|w| w[1].gap_db <= w[0].gap_db + 1e-9),
            "gap is not nonincreasing in B",
        );
        let first = pts.first().expect("points >= 2").gap_db;
        let last = pts.last().expect("points >= 2").gap_db;
        out.require(
            (first - limits.small_b_db).abs() <= analysis::PUBLISHED_TOLERANCE_DB,
            format!("small-B end {first:.3} dB vs limit {:.3} dB", limits.small_b_db),
        );
        out.require(
            (last - limits.large_b_db).abs() <= analysis::PUBLISHED_TOLERANCE_DB,
            format!("large-B end {last:.3} dB vs limit {:.3} dB", limits.large_b_db),
        );
    }
    let mut w = open_output(&a.output, "gap-curve", "csv", stdout)?;
    writeln!(w, "B,equal_bit_energy,optimal_energy,gap_db")?;
    for p in &pts {
        writeln!(w, "{},{},{},{}", p.bits, p.equal_bit, p.optimal, p.gap_db)?;
    }
    w.flush()?;
    Ok(out)
}
