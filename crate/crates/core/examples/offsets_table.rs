//! Small- and large-packet energy advantage of the optimal two-slot rule
//! over an even split, for the reference channels.

use deadline_sched::analysis::compare_published_offsets;

fn main() -> deadline_sched::Result<()> {
    println!("{:<38} {:>9} {:>9} {:>11} {:>11}", "channel", "B->0 dB", "B->inf dB", "reference", "reference");
    for r in compare_published_offsets()? {
        println!(
            "{:<38} {:>9.3} {:>9.3} {:>11.2} {:>11.2} {}",
            r.label,
            r.report.small_b_db,
            r.report.large_b_db,
            r.published_small_b_db,
            r.published_large_b_db,
            if r.pass { "" } else { "  MISMATCH" }
        );
    }
    Ok(())
}
