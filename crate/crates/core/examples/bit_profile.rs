//! Expected bits sent in each slot as the deadline approaches.

use deadline_sched::simulator::{build_strategies, run, DpSource};
use deadline_sched::{ChannelModel, DpConfig, PolicyKind, SimOptions};

fn main() -> deadline_sched::Result<()> {
    let ch = ChannelModel::truncated_exponential(1.0, 0.001)?;
    let (bits, horizon) = (10.0, 10);
    let kinds = [PolicyKind::EqualBit, PolicyKind::SuboptimalI, PolicyKind::SuboptimalII, PolicyKind::Dp];
    let strategies = build_strategies(&kinds, &ch, bits, horizon, DpSource::Solve(DpConfig::new(bits)))?;
    let report = run(&strategies, &ch, bits, horizon, SimOptions::new(20_000, 1))?;
    print!("{:>4}", "t");
    for s in &report.stats {
        print!("{:>8}", s.policy.name());
    }
    println!();
    for t in (1..=horizon).rev() {
        print!("{t:>4}");
        for s in &report.stats {
            print!("{:>8.3}", s.mean_bits_at(t));
        }
        println!();
    }
    Ok(())
}
