//! Section constants for a weight family across a range of N.
//!
//! Usage: compute_mu [spec] (default `unit`; try `power:alpha=2`)

use carleman_sections::recursion::section_constant;
use carleman_sections::weights::{estimate_constants, WeightSequence};

fn main() -> carleman_sections::Result<()> {
    let spec = std::env::args().nth(1).unwrap_or_else(|| "unit".into());
    let seq = WeightSequence::parse_spec(&spec)?;
    let consts = estimate_constants(&seq, 10_000)?;
    println!("family {spec}: M = {:.12}, C = {:.12}, e^M = {:.12}", consts.m, consts.c, consts.e_m());
    for n in [2usize, 5, 10, 100, 1_000, 10_000, 100_000] {
        let s = section_constant(&seq, &consts, n)?;
        println!(
            "N = {:>6}  mu_N = {:.15}  gap to e^M = {:.3e}  ({} bisection steps)",
            s.n,
            s.mu,
            consts.e_m() - s.mu,
            s.iterations
        );
    }
    Ok(())
}
