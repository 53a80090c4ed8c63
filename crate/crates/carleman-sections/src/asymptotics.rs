//! The continuum surrogate and the second-order law for `μ_N`.
//!
//! Counting recurrence steps through the integral
//! `θ(y) = ∫_0^y dx/(e^x/μ − x + M − 1)` gives `θ(h_N) ≈ C·log N` up to a
//! bounded term, and `θ(∞) ≈ √2·π·(log(e^M/μ))^{−1/2}`. Inverting that
//! relation at `μ = μ_N` yields
//!
//! `μ_N = e^M − 2π²e^M/(C²(log N)²) + O(1/(log N)³)`.
//!
//! This module evaluates θ by adaptive quadrature, produces the closed-form
//! predictions, and fits the residual `r(N) = (e^M − μ_N)(log N)²` of exact
//! values against the one-correction model `A + B/log N`.

use serde::Serialize;

use crate::recursion::section_constant;
use crate::weights::{WeightConstants, WeightSequence};
use crate::{Error, Result};

/// Absolute quadrature tolerance for θ.
const THETA_TOL: f64 = 1e-10;

/// Closed-form prediction for one `N`.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticPrediction {
    pub m: f64,
    pub c: f64,
    pub n: usize,
    /// `e^M − 2π²e^M/(C²(log N)²)`.
    pub mu_predicted: f64,
    /// `2π²e^M/C²`, the limit of `(e^M − μ_N)(log N)²`.
    pub leading_gap_coefficient: f64,
}

/// Least-squares fit of `r(N) = (e^M − μ_N)(log N)²` to `A + B/log N`.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualFit {
    pub grid: Vec<usize>,
    pub mu_values: Vec<f64>,
    pub r_values: Vec<f64>,
    pub fitted_a: f64,
    pub fitted_b: f64,
    pub fit_rms: f64,
}

/// Adaptive Simpson on `[a, b]`.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        // the width floor stops subdivision once the interval is a few ulps
        // wide, where the error estimate is pure rounding noise
        if depth == 0
            || delta.abs() <= 15.0 * tol
            || b - a <= 8.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0)
        {
            return left + right + delta / 15.0;
        }
        let child_tol = (0.5 * tol).max(1e-18);
        recurse(f, a, m, fa, flm, fm, left, child_tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, child_tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 60)
}

fn check_mu_window(mu: f64, m: f64, upper_inclusive: bool) -> Result<()> {
    let lo = (m - 1.0).exp();
    let hi = m.exp();
    let ok = mu > lo && if upper_inclusive { mu <= hi } else { mu < hi };
    if !ok {
        return Err(Error::MuOutOfRange { mu, lo, hi });
    }
    Ok(())
}

/// `θ(y) = ∫_0^y dx/(e^x/μ − x + M − 1)`, absolute tolerance 1e-10.
///
/// The denominator is minimized at `x = log μ` where it equals `M − log μ`,
/// so a quadrature knot is placed there; near `μ = e^M` the integrand is a
/// sharp peak that uniform panels would miss.
pub fn theta(y: f64, mu: f64, m: f64) -> Result<f64> {
    check_mu_window(mu, m, true)?;
    if !y.is_finite() || y < 0.0 {
        return Err(Error::InvalidArgument(format!("y must be finite and >= 0, got {y}")));
    }
    let x0 = mu.ln();
    if m - x0 <= 0.0 && y >= x0 {
        return Err(Error::NonPositiveDenominator(x0));
    }
    let f = move |x: f64| 1.0 / (x.exp() / mu - x + m - 1.0);
    if y == 0.0 {
        return Ok(0.0);
    }
    if x0 > 0.0 && x0 < y {
        Ok(adaptive_simpson(&f, 0.0, x0, 0.5 * THETA_TOL)
            + adaptive_simpson(&f, x0, y, 0.5 * THETA_TOL))
    } else {
        Ok(adaptive_simpson(&f, 0.0, y, THETA_TOL))
    }
}

/// `θ(∞)`: quadrature to `log μ + 40` plus an analytic tail bound below
/// 1e-12 (the integrand is under `2μ·e^{−x}` past the cutoff).
pub fn theta_infinity(mu: f64, m: f64) -> Result<f64> {
    check_mu_window(mu, m, false)?;
    let cutoff = mu.ln() + 40.0;
    let tail = 2.0 * (-40.0f64).exp();
    Ok(theta(cutoff, mu, m)? + tail)
}

/// Second-order prediction for `μ_N`.
pub fn predicted_mu(consts: &WeightConstants, n: usize) -> AsymptoticPrediction {
    assert!(n >= 2, "the prediction needs N >= 2");
    let e_m = consts.e_m();
    let coeff = 2.0 * std::f64::consts::PI.powi(2) * e_m / consts.c.powi(2);
    let log_n = (n as f64).ln();
    AsymptoticPrediction {
        m: consts.m,
        c: consts.c,
        n,
        mu_predicted: e_m - coeff / (log_n * log_n),
        leading_gap_coefficient: coeff,
    }
}

/// `log N_μ ≈ (√2·π/C)·(log(e^M/μ))^{−1/2}` for `μ` just below `e^M`.
pub fn predicted_log_breakdown(consts: &WeightConstants, mu: f64) -> Result<f64> {
    let gap = consts.m - mu.ln();
    if gap <= 0.0 {
        return Err(Error::MuOutOfRange { mu, lo: 0.0, hi: consts.e_m() });
    }
    Ok(std::f64::consts::SQRT_2 * std::f64::consts::PI / consts.c / gap.sqrt())
}

/// Computes exact `μ_N` over `grid`, forms the residuals and fits
/// `r = A + B/log N` by ordinary least squares with uniform weights.
pub fn fit_residual(
    seq: &WeightSequence,
    consts: &WeightConstants,
    grid: &[usize],
) -> Result<ResidualFit> {
    if grid.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 4 points, got {}",
            grid.len()
        )));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    if (grid[grid.len() - 1] as f64) < 1e3 * grid[0] as f64 {
        return Err(Error::InvalidArgument("grid must span at least 3 decades".into()));
    }
    let e_m = consts.e_m();
    let mut mu_values = Vec::with_capacity(grid.len());
    let mut r_values = Vec::with_capacity(grid.len());
    for &n in grid {
        let s = section_constant(seq, consts, n)?;
        let log_n = (n as f64).ln();
        mu_values.push(s.mu);
        r_values.push((e_m - s.mu) * log_n * log_n);
    }
    // normal equations for [1, 1/log N]
    let (mut s11, mut s1x, mut sxx, mut s1y, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&n, &r) in grid.iter().zip(&r_values) {
        let x = 1.0 / (n as f64).ln();
        s11 += 1.0;
        s1x += x;
        sxx += x * x;
        s1y += r;
        sxy += x * r;
    }
    let det = s11 * sxx - s1x * s1x;
    let fitted_a = (s1y * sxx - sxy * s1x) / det;
    let fitted_b = (s11 * sxy - s1x * s1y) / det;
    let mut ss = 0.0;
    for (&n, &r) in grid.iter().zip(&r_values) {
        let e = r - (fitted_a + fitted_b / (n as f64).ln());
        ss += e * e;
    }
    Ok(ResidualFit {
        grid: grid.to_vec(),
        mu_values,
        r_values,
        fitted_a,
        fitted_b,
        fit_rms: (ss / grid.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::estimate_constants;
    use std::f64::consts::{E, PI};

    /// Fixed-step Simpson oracle, independent of the adaptive routine.
    fn simpson_oracle(mu: f64, m: f64, a: f64, b: f64, panels: usize) -> f64 {
        let f = |x: f64| 1.0 / (x.exp() / mu - x + m - 1.0);
        let h = (b - a) / panels as f64;
        let mut acc = f(a) + f(b);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn empty_integral_is_zero() {
        assert_eq!(theta(0.0, 2.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn theta_matches_fixed_step_oracle() {
        for mu in [1.5, 2.6, E * (1.0 - 1e-4)] {
            let got = theta(1.0, mu, 1.0).unwrap();
            let want = simpson_oracle(mu, 1.0, 0.0, 1.0, 1_000_000);
            assert!((got - want).abs() < 1e-8, "mu = {mu}: got {got}, oracle {want}");
        }
    }

    #[test]
    fn theta_is_additive_over_subintervals() {
        let mu = E * (1.0 - 1e-3);
        let seg = theta(2.0, mu, 1.0).unwrap() - theta(0.7, mu, 1.0).unwrap();
        let want = simpson_oracle(mu, 1.0, 0.7, 2.0, 1_000_000);
        assert!((seg - want).abs() < 1e-8, "segment {seg}, oracle {want}");
    }

    #[test]
    fn theta_rejects_out_of_window_mu() {
        assert!(theta(1.0, 0.9, 1.0).is_err());
        assert!(theta(1.0, E + 0.1, 1.0).is_err());
        assert!(theta_infinity(E, 1.0).is_err());
        // at μ = e^M the denominator vanishes at x = log μ
        assert!(theta(2.0, E, 1.0).is_err());
        assert!(theta(0.5, E, 1.0).is_ok());
    }

    #[test]
    fn theta_infinity_tracks_closed_form() {
        for eps in [1e-1f64, 1e-2, 1e-3, 1e-4] {
            let mu = E * (-eps).exp(); // log(e/μ) = eps exactly
            let got = theta_infinity(mu, 1.0).unwrap();
            let closed = std::f64::consts::SQRT_2 * PI / eps.sqrt();
            assert!(
                (got - closed).abs() <= 5.0,
                "eps = {eps}: theta_inf = {got}, closed form = {closed}"
            );
        }
    }

    #[test]
    fn theta_infinity_is_increasing_in_mu() {
        let a = theta_infinity(2.0, 1.0).unwrap();
        let b = theta_infinity(2.5, 1.0).unwrap();
        let c = theta_infinity(2.7, 1.0).unwrap();
        assert!(a < b && b < c);
    }

    #[test]
    fn prediction_formulas() {
        let consts = estimate_constants(&WeightSequence::power(1.0).unwrap(), 100).unwrap();
        let p = predicted_mu(&consts, 1_000_000);
        assert!((p.mu_predicted - 1.60609).abs() < 1e-3, "predicted {}", p.mu_predicted);
        assert!(p.mu_predicted < consts.e_m());
        // C scaling: halving the breakdown estimate under C = 2 at equal gap
        let unit = estimate_constants(&WeightSequence::unit(), 100).unwrap();
        let mu_unit = E * (-0.01f64).exp();
        let mu_p1 = 0.5f64.exp() * (-0.01f64).exp();
        let a = predicted_log_breakdown(&unit, mu_unit).unwrap();
        let b = predicted_log_breakdown(&consts, mu_p1).unwrap();
        assert!((b - 0.5 * a).abs() < 1e-12);
        // arithmetic check at μ = 1.5, unit weights
        let v = predicted_log_breakdown(&unit, 1.5).unwrap();
        assert!((v - 5.77).abs() < 0.02, "got {v}");
    }

    #[test]
    fn prediction_is_increasing_in_n() {
        let consts = estimate_constants(&WeightSequence::unit(), 100).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for n in [10usize, 100, 1_000, 100_000] {
            let p = predicted_mu(&consts, n).mu_predicted;
            assert!(p > prev && p < consts.e_m());
            prev = p;
        }
    }

    #[test]
    fn fit_preconditions() {
        let seq = WeightSequence::unit();
        let consts = estimate_constants(&seq, 100).unwrap();
        assert!(fit_residual(&seq, &consts, &[10, 10, 10, 10]).is_err());
        assert!(fit_residual(&seq, &consts, &[10, 20, 30]).is_err());
        assert!(fit_residual(&seq, &consts, &[10, 20, 40, 80]).is_err());
    }
}
