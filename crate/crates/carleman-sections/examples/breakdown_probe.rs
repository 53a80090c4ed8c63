//! How long the recurrence survives as mu approaches e^M, against the
//! continuum prediction log N_mu ~ sqrt(2)*pi/C * (log(e^M/mu))^(-1/2).

use carleman_sections::asymptotics::predicted_log_breakdown;
use carleman_sections::recursion::breakdown_index;
use carleman_sections::weights::{estimate_constants, WeightSequence};

fn main() -> carleman_sections::Result<()> {
    let seq = WeightSequence::power(1.0)?;
    let consts = estimate_constants(&seq, 10_000)?;
    println!("gap = log(e^M/mu)   N_mu        log N_mu   predicted");
    let mut gap = 0.5f64;
    while gap > 0.02 {
        let mu = (consts.m - gap).exp();
        let result = breakdown_index(&seq, mu, 100_000_000)?;
        let predicted = predicted_log_breakdown(&consts, mu)?;
        match result.index {
            Some(n) => println!(
                "{:<18.4} {:<11} {:<10.4} {:.4}",
                gap,
                n,
                (n as f64).ln(),
                predicted
            ),
            None => println!("{:<18.4} > cap", gap),
        }
        gap *= 0.5;
    }
    Ok(())
}
