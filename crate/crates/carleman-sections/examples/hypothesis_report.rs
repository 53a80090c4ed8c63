//! Structural hypothesis report for a weight family.
//!
//! Usage: hypothesis_report [spec] (default `power:alpha=2`)

use carleman_sections::hypotheses::CheckStatus;
use carleman_sections::weights::{estimate_constants, WeightSequence};
use carleman_sections::check_hypotheses;

fn main() -> carleman_sections::Result<()> {
    let spec = std::env::args().nth(1).unwrap_or_else(|| "power:alpha=2".into());
    let seq = WeightSequence::parse_spec(&spec)?;
    let consts = estimate_constants(&seq, 10_000)?;
    let report = check_hypotheses(&seq, &consts, 10_000)?;
    for entry in &report.entries {
        let name = format!("{:?}", entry.condition);
        match &entry.status {
            CheckStatus::Pass => println!(
                "{name:<22} pass            margin {:.3e}  (k = {}..{})",
                entry.margin, entry.checked_from, entry.checked_to
            ),
            CheckStatus::NotApplicable => println!("{name:<22} not applicable"),
            CheckStatus::Fail { witness, lhs, rhs } => {
                println!("{name:<22} FAIL at k = {witness}: {lhs} vs {rhs}")
            }
        }
    }
    std::process::exit(if report.all_pass() { 0 } else { 1 });
}
