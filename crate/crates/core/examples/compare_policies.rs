//! Monte Carlo comparison of every scheduler on common channel draws.

use deadline_sched::simulator::{build_strategies, run, DpSource};
use deadline_sched::{ChannelModel, DpConfig, PolicyKind, SimOptions};

fn main() -> deadline_sched::Result<()> {
    let ch = ChannelModel::truncated_exponential(1.0, 0.001)?;
    let (bits, horizon) = (10.0, 5);
    let kinds = [
        PolicyKind::EqualBit,
        PolicyKind::SuboptimalI,
        PolicyKind::SuboptimalII,
        PolicyKind::Dp,
        PolicyKind::OneShot,
        PolicyKind::Iwf,
    ];
    let strategies = build_strategies(&kinds, &ch, bits, horizon, DpSource::Solve(DpConfig::new(bits)))?;
    let report = run(&strategies, &ch, bits, horizon, SimOptions::new(50_000, 7))?;
    println!("B = {bits} bits, T = {horizon} slots, {ch}");
    for s in &report.stats {
        let note = if s.non_causal { "  (knows future gains)" } else { "" };
        println!("{:>8}: {:>10.4} ± {:.4}  ({:6.2} dB){note}", s.policy, s.mean_energy, s.std_error, s.mean_energy_db());
    }
    let (d, se) = report.paired_difference(PolicyKind::SuboptimalII, PolicyKind::Dp).expect("both simulated");
    println!("sub2 - dp = {d:.4} ± {se:.4} (paired)");
    Ok(())
}
