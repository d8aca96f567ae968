//! Solve the optimal causal scheduler by backward induction, save the
//! cost-to-go table, and query decisions from the reloaded copy.

use std::fs::File;
use std::io::{BufReader, BufWriter};

use deadline_sched::dp::{dp_decide, solve, DpConfig};
use deadline_sched::{ChannelModel, CostToGoTable, SchedulerState};

fn main() -> deadline_sched::Result<()> {
    let ch = ChannelModel::truncated_exponential(1.0, 0.001)?;
    let table = solve(&ch, DpConfig::new(20.0), 10)?;
    for t in [1, 2, 5, 10] {
        println!("J_{t}(10 bits) = {:.4}", table.interpolate(t, 10.0));
    }

    let path = std::env::temp_dir().join("deadline-sched-example-table.csv");
    table.write_csv(BufWriter::new(File::create(&path)?))?;
    let loaded = CostToGoTable::read_csv(BufReader::new(File::open(&path)?))?;
    println!("saved and reloaded {}", path.display());

    let state = SchedulerState::new(5, 10.0)?;
    for g in [0.05, 0.2, 1.0, 3.0] {
        println!("t=5, backlog 10: g = {g:<4} -> send {:.3} bits", dp_decide(&loaded, state, g)?);
    }
    Ok(())
}
