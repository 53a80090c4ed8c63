//! The optimizing vector of a section: reconstructed from mu_N, cross
//! checked against the seeded brute-force maximizer for small N.

use carleman_sections::recursion::section_constant;
use carleman_sections::weights::{estimate_constants, WeightSequence};
use carleman_sections::{oracle_maximize, reconstruct_extremal, verify_stationarity};

fn main() -> carleman_sections::Result<()> {
    let seq = WeightSequence::unit();
    let consts = estimate_constants(&seq, 1_000)?;

    let n = 10;
    let s = section_constant(&seq, &consts, n)?;
    let v = reconstruct_extremal(&seq, s.mu, n)?;
    println!("N = {n}, mu_N = {:.15}", s.mu);
    println!("k    a_k              G_k");
    for k in 1..=n {
        println!("{:<4} {:.12}   {:.12}", k, v.a[k - 1], v.g[k - 1]);
    }
    println!("objective {:.15}, stationarity residual {:.3e}", v.objective, verify_stationarity(&seq, &v, s.mu)?);

    let small = 5;
    let oracle = oracle_maximize(&seq, small, 8, 0)?;
    let exact = section_constant(&seq, &consts, small)?;
    println!(
        "\noracle check at N = {small}: {:.12} vs bisection {:.12}",
        oracle.objective, exact.mu
    );
    Ok(())
}
