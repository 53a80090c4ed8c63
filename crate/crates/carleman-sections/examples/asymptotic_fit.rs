//! Residual fit against the second-order law mu_N = e^M - 2pi^2 e^M/(C log N)^2.
//!
//! r(N) = (e^M - mu_N)(log N)^2 is fitted to A + B/log N; A should approach
//! 2pi^2 e^M/C^2 as the grid moves out.

use carleman_sections::asymptotics::fit_residual;
use carleman_sections::weights::{estimate_constants, WeightSequence};

fn main() -> carleman_sections::Result<()> {
    for spec in ["unit", "power:alpha=1"] {
        let seq = WeightSequence::parse_spec(spec)?;
        let consts = estimate_constants(&seq, 10_000)?;
        let target = 2.0 * std::f64::consts::PI.powi(2) * consts.e_m() / (consts.c * consts.c);
        let fit = fit_residual(&seq, &consts, &[1_000, 10_000, 100_000, 1_000_000])?;
        println!("{spec}: target {target:.4}");
        for (i, &n) in fit.grid.iter().enumerate() {
            println!("  N = {:>7}  mu_N = {:.12}  r(N) = {:.4}", n, fit.mu_values[i], fit.r_values[i]);
        }
        println!("  fit: A = {:.4}, B = {:.4}, rms = {:.2e}\n", fit.fitted_a, fit.fitted_b, fit.fit_rms);
    }
    Ok(())
}
