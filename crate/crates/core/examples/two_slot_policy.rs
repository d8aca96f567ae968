//! The closed-form two-slot rule: how many of B bits to send now, as a
//! function of the current gain, and what it saves over an even split.

use deadline_sched::analysis::{equal_bit_cost, optimal_t2_cost};
use deadline_sched::policies::optimal_t2;
use deadline_sched::ChannelModel;

fn main() -> deadline_sched::Result<()> {
    let ch = ChannelModel::truncated_exponential(1.0, 0.001)?;
    let m = ch.moments(1)?;
    let bits = 4.0;
    println!("B = {bits}, nu_1 = {:.4}, break-even gain 1/nu_1 = {:.4}", m.nu1(), 1.0 / m.nu1());
    for g in [0.01, 0.05, 1.0 / m.nu1(), 0.5, 1.0, 2.0, 5.0] {
        println!("  g = {g:>7.4}  ->  send {:.3} bits now", optimal_t2(bits, g, &m));
    }
    for b in [0.1, 1.0, 10.0, 30.0] {
        let opt = optimal_t2_cost(b, &ch, &m)?;
        let eq = equal_bit_cost(b, 2, &m);
        println!("B = {b:>4}: optimal {opt:.4e}, equal split {eq:.4e}, saving {:.2} dB", 10.0 * (eq / opt).log10());
    }
    Ok(())
}
