//! Offline inverse waterfilling: the energy floor when all gains are known
//! in advance.

use deadline_sched::policies::{energy_cost, iwf_allocate};

fn main() {
    let gains = [0.3, 2.0, 0.05, 1.1, 0.7];
    let bits = 8.0;
    let r = iwf_allocate(bits, &gains);
    println!("water level g_th = {:.4}", r.water_level);
    for ((g, b), used) in gains.iter().zip(&r.bits).zip(&r.utilized) {
        println!("g = {g:<5} -> {b:.3} bits{}", if *used { "" } else { "  (skipped)" });
    }
    let even: f64 = gains.iter().map(|&g| energy_cost(bits / gains.len() as f64, g)).sum();
    println!("energy {:.4} vs even split {even:.4}", r.energy);
}
