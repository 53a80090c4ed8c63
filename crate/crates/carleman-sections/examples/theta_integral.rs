//! The step-counting integral theta and its square-root blow-up near e^M.

use carleman_sections::asymptotics::{theta, theta_infinity};
use carleman_sections::weights::{estimate_constants, WeightSequence};

fn main() -> carleman_sections::Result<()> {
    let seq = WeightSequence::unit();
    let consts = estimate_constants(&seq, 1_000)?;

    let mu = 2.5;
    for y in [0.5, 1.0, 2.0, 5.0, 10.0] {
        println!("theta({y:>4}; mu = {mu}) = {:.10}", theta(y, mu, consts.m)?);
    }

    println!("\ngap = log(e^M/mu)   theta(inf)   sqrt(2)*pi*gap^(-1/2)");
    for gap in [1e-1, 1e-2, 1e-3, 1e-4] {
        let mu = (consts.m - gap).exp();
        let t = theta_infinity(mu, consts.m)?;
        let closed = std::f64::consts::SQRT_2 * std::f64::consts::PI / gap.sqrt();
        println!("{gap:<18.0e} {t:<12.4} {closed:.4}");
    }
    Ok(())
}
