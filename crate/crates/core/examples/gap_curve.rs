//! Two-slot advantage of optimal over equal-bit scheduling across packet
//! sizes, with its limiting values.

use deadline_sched::analysis::{gap_curve, log_grid, theorem1_ratios};
use deadline_sched::ChannelModel;

fn main() -> deadline_sched::Result<()> {
    let ch = ChannelModel::truncated_exponential(1.0, 0.001)?;
    let limits = theorem1_ratios(&ch)?;
    println!("limits: {:.3} dB as B -> 0, {:.3} dB as B -> inf", limits.small_b_db, limits.large_b_db);
    for p in gap_curve(&ch, &log_grid(0.01, 30.0, 12))? {
        println!("B = {:>8.3}  gap = {:.3} dB", p.bits, p.gap_db);
    }
    Ok(())
}
