//! Fractional inverse moments for the reference channels, and how quickly
//! they approach the geometric limit nu_inf.

use deadline_sched::ChannelModel;

fn main() -> deadline_sched::Result<()> {
    let channels = [
        ChannelModel::truncated_exponential(1.0, 0.001)?,
        ChannelModel::gamma(2.0, 1.0)?,
        ChannelModel::gamma(4.0, 1.0)?,
    ];
    for ch in channels {
        let m = ch.moments(16)?;
        println!("{ch}  nu_inf = {:.4}", m.nu_inf());
        println!("   m      nu_m   gmean_m");
        for k in [1, 2, 3, 4, 8, 16] {
            println!("{k:>4} {:>9.4} {:>9.4}", m.nu(k)?, m.gmean(k)?);
        }
    }
    Ok(())
}
