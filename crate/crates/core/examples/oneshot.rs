//! Send the whole packet in one slot: stopping thresholds and the energy
//! penalty relative to spreading bits over several slots.

use deadline_sched::dp::{solve, DpConfig};
use deadline_sched::oneshot::{compute_thresholds, oneshot_expected_energy};
use deadline_sched::ChannelModel;

fn main() -> deadline_sched::Result<()> {
    let ch = ChannelModel::truncated_exponential(1.0, 0.001)?;
    let horizon = 10;
    let th = compute_thresholds(&ch, horizon)?;
    println!(" t   omega_t   fire if g >");
    for t in 2..=horizon {
        println!("{t:>2} {:>9.4} {:>12.4}", th.omega(t), th.gain_threshold(t));
    }
    let table = solve(&ch, DpConfig::new(10.0), horizon)?;
    for bits in [1.0, 5.0, 10.0] {
        let one = oneshot_expected_energy(&th, bits, horizon)?;
        let multi = table.interpolate(horizon, bits);
        println!("B = {bits:>4}: one-shot {one:.4}, multi-slot {multi:.4}, penalty {:.2} dB", 10.0 * (one / multi).log10());
    }
    Ok(())
}
