//! The strictly increasing staircase mu_1 < mu_2 < ... and its gaps.

use carleman_sections::recursion::critical_sequence;
use carleman_sections::weights::{estimate_constants, WeightSequence};

fn main() -> carleman_sections::Result<()> {
    let seq = WeightSequence::unit();
    let consts = estimate_constants(&seq, 1_000)?;
    let stairs = critical_sequence(&seq, &consts, 30)?;
    println!("k     mu_k                 step to mu_(k+1)");
    for w in stairs.windows(2) {
        println!("{:<5} {:.15}    {:.6e}", w[0].n, w[0].mu, w[1].mu - w[0].mu);
    }
    let last = stairs.last().unwrap();
    println!("{:<5} {:.15}    (limit e^M = {:.15})", last.n, last.mu, consts.e_m());
    Ok(())
}
