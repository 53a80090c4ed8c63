//! The scalar recurrence behind the section constants.
//!
//! Along the Lagrange stationary point, `h_k = log(G_k/a_k)` obeys
//!
//! `h_{k+1} = (Λ_k/Λ_{k+1})·(h_k − log(λ_{k+1}/λ_k − λ_{k+1}/(Λ_k·μ)·e^{h_k}))`
//!
//! starting from `h_1 = 0`. The log argument turns non-positive exactly when
//! `h_k ≥ log(μ·Λ_k/λ_k)`; the first such `k` is the breakdown index `N_μ`.
//! For each `N` there is a unique `μ_N < e^M` with
//! `h_N(μ_N) = log(μ_N·Λ_N/λ_N)`, and that root is the best constant of the
//! `N`-term section. `h_N` is decreasing in `μ` while the threshold is
//! increasing, so the sign function has exactly one sign change and bisection
//! is safe; it is also the only robust choice because an evaluation just below
//! the root breaks down early rather than returning a value.

use serde::Serialize;

use crate::weights::{WeightConstants, WeightSequence};
use crate::{Error, Result};

/// Upper bracket backs off from `e^M` by one part in 2^40: the sign
/// evaluation exactly at `e^M` rests on an asymptotic bound and is fragile.
const BRACKET_BACKOFF: f64 = 1.0 - 1.0 / (1u64 << 40) as f64;

/// Default bisection stop: bracket width relative to `e^M`.
const DEFAULT_TOL_FACTOR: f64 = 1e-14;

const MAX_BISECTION_ITERS: u32 = 200;

/// Result of one recurrence step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Value(f64),
    /// The log argument was non-positive: `h_k ≥ log(μ·Λ_k/λ_k)`.
    Breakdown,
}

/// The vector `h_1..h_m` at a fixed `μ`.
#[derive(Debug, Clone)]
pub struct HTrace {
    pub mu: f64,
    /// `values[k-1] = h_k`; ends at the breakdown index when one occurred.
    pub values: Vec<f64>,
    /// First `k` with `h_k ≥ log(μ·Λ_k/λ_k)`, if any.
    pub breakdown_at: Option<usize>,
    /// True when the requested length was reached without breakdown.
    pub cap_reached: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BreakdownResult {
    pub mu: f64,
    /// `None` means no breakdown up to `cap` (the index is infinite as far
    /// as this search can tell).
    pub index: Option<usize>,
    pub cap: usize,
}

/// A computed best constant `μ_N`.
#[derive(Debug, Clone, Serialize)]
pub struct SectionConstant {
    pub n: usize,
    pub mu: f64,
    /// `h_N(μ) − log(μ·Λ_N/λ_N)` at the returned `μ`.
    pub residual: f64,
    pub bracket_width: f64,
    pub iterations: u32,
}

/// Per-index coefficients of the recurrence, precomputed so that repeated
/// evaluations at different `μ` (bisection) cost one `exp` and one `log1p`
/// per step.
struct StepTables {
    /// `Λ_k/Λ_{k+1}` for `k = 1..n-1` (0-based storage).
    shrink: Vec<f64>,
    /// `log(λ_{k+1}/λ_k)` for `k = 1..n-1`.
    log_lambda_ratio: Vec<f64>,
    /// `log(Λ_k/λ_k)` for `k = 1..n`.
    log_recip: Vec<f64>,
}

impl StepTables {
    fn build(seq: &WeightSequence, n: usize) -> Result<Self> {
        seq.with_tables(n.max(1), |t| {
            let mut shrink = Vec::with_capacity(n.saturating_sub(1));
            let mut log_lambda_ratio = Vec::with_capacity(n.saturating_sub(1));
            let mut log_recip = Vec::with_capacity(n);
            for k in 1..=n {
                log_recip.push((t.prefix(k) / t.lambda(k)).ln());
                if k < n {
                    shrink.push(t.prefix(k) / t.prefix(k + 1));
                    log_lambda_ratio.push((t.lambda(k + 1) / t.lambda(k)).ln());
                }
            }
            StepTables { shrink, log_lambda_ratio, log_recip }
        })
    }

    /// One step `h_k -> h_{k+1}` (`k` 1-based, `k < n`), written as
    /// `(Λ_k/Λ_{k+1})·(h − log(λ_{k+1}/λ_k) − log1p(−e^{h − log(μΛ_k/λ_k)}))`
    /// so that the cancellation near breakdown happens inside `log1p`.
    #[inline]
    fn step(&self, k: usize, h: f64, ln_mu: f64) -> StepOutcome {
        let d = h - (ln_mu + self.log_recip[k - 1]);
        if d >= 0.0 {
            return StepOutcome::Breakdown;
        }
        let q = self.log_lambda_ratio[k - 1] + (-d.exp()).ln_1p();
        StepOutcome::Value(self.shrink[k - 1] * (h - q))
    }
}

/// Outcome of streaming the recurrence to index `n`.
enum TraceEnd {
    /// `h_n − log(μ·Λ_n/λ_n)`: the bisection sign value.
    Sign(f64),
    /// Breakdown at this index, strictly before `n`.
    #[allow(dead_code)]
    EarlyBreakdown(usize),
}

fn sign_value(tables: &StepTables, mu: f64, n: usize) -> TraceEnd {
    let ln_mu = mu.ln();
    let mut h = 0.0;
    for k in 1..n {
        let d = h - (ln_mu + tables.log_recip[k - 1]);
        if d >= 0.0 {
            return TraceEnd::EarlyBreakdown(k);
        }
        let q = tables.log_lambda_ratio[k - 1] + (-d.exp()).ln_1p();
        h = tables.shrink[k - 1] * (h - q);
    }
    TraceEnd::Sign(h - (ln_mu + tables.log_recip[n - 1]))
}

/// One recurrence step `h_k -> h_{k+1}`.
pub fn h_step(seq: &WeightSequence, k: usize, h_k: f64, mu: f64) -> Result<StepOutcome> {
    if !h_k.is_finite() {
        return Err(Error::NonFiniteInput(h_k));
    }
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    assert!(k >= 1, "indices are 1-based");
    let tables = StepTables::build(seq, k + 1)?;
    Ok(tables.step(k, h_k, mu.ln()))
}

/// Runs the recurrence from `h_1 = 0` up to index `m`, stopping early at
/// breakdown.
pub fn h_trace(seq: &WeightSequence, mu: f64, m: usize) -> Result<HTrace> {
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    assert!(m >= 1, "trace length must be at least 1");
    let tables = StepTables::build(seq, m)?;
    let ln_mu = mu.ln();
    let mut values = Vec::with_capacity(m.min(1 << 20));
    let mut h = 0.0;
    let mut breakdown_at = None;
    for k in 1..=m {
        values.push(h);
        if h - (ln_mu + tables.log_recip[k - 1]) >= 0.0 {
            breakdown_at = Some(k);
            break;
        }
        if k < m {
            match tables.step(k, h, ln_mu) {
                StepOutcome::Value(next) => h = next,
                StepOutcome::Breakdown => unreachable!("threshold already checked"),
            }
        }
    }
    let cap_reached = breakdown_at.is_none();
    Ok(HTrace { mu, values, breakdown_at, cap_reached })
}

/// First index at which the recurrence breaks down, searching up to `cap`.
pub fn breakdown_index(seq: &WeightSequence, mu: f64, cap: usize) -> Result<BreakdownResult> {
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    assert!(cap >= 1);
    let tables = StepTables::build(seq, cap)?;
    let ln_mu = mu.ln();
    let mut h = 0.0;
    for k in 1..=cap {
        if h - (ln_mu + tables.log_recip[k - 1]) >= 0.0 {
            return Ok(BreakdownResult { mu, index: Some(k), cap });
        }
        if k < cap {
            match tables.step(k, h, ln_mu) {
                StepOutcome::Value(next) => h = next,
                StepOutcome::Breakdown => unreachable!("threshold already checked"),
            }
        }
    }
    Ok(BreakdownResult { mu, index: None, cap })
}

fn bisect(
    tables: &StepTables,
    n: usize,
    mut lo: f64,
    e_m: f64,
    tol: f64,
) -> Result<SectionConstant> {
    let hi0 = e_m * BRACKET_BACKOFF;
    match sign_value(tables, hi0, n) {
        TraceEnd::Sign(s) if s < 0.0 => {}
        _ => return Err(Error::BracketFailure { n, lo, hi: hi0 }),
    }
    let mut hi = hi0;
    let mut iterations = 0u32;
    while hi - lo > tol && iterations < MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket narrower than f64 spacing
        }
        // early breakdown means mu is below the root: sign is positive there
        let positive = match sign_value(tables, mid, n) {
            TraceEnd::EarlyBreakdown(_) => true,
            TraceEnd::Sign(s) => s >= 0.0,
        };
        if positive {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    // report the root from the defined side of the bracket
    let residual = match sign_value(tables, hi, n) {
        TraceEnd::Sign(s) => s,
        TraceEnd::EarlyBreakdown(_) => f64::INFINITY,
    };
    Ok(SectionConstant { n, mu: hi, residual, bracket_width: hi - lo, iterations })
}

/// Best constant `μ_N` of the `N`-term section, found by bisection on the
/// sign of `h_N(μ) − log(μ·Λ_N/λ_N)` over `(1, e^M)`.
pub fn section_constant(
    seq: &WeightSequence,
    consts: &WeightConstants,
    n: usize,
) -> Result<SectionConstant> {
    let tol = DEFAULT_TOL_FACTOR * consts.e_m();
    section_constant_with_tol(seq, consts, n, tol)
}

/// As [`section_constant`] with an explicit bracket-width stop.
pub fn section_constant_with_tol(
    seq: &WeightSequence,
    consts: &WeightConstants,
    n: usize,
    tol: f64,
) -> Result<SectionConstant> {
    assert!(n >= 1);
    if n == 1 {
        // the one-term section is an identity: G_1 = a_1
        return Ok(SectionConstant { n: 1, mu: 1.0, residual: 0.0, bracket_width: 0.0, iterations: 0 });
    }
    let tables = StepTables::build(seq, n)?;
    bisect(&tables, n, 1.0, consts.e_m(), tol)
}

/// The critical sequence `μ_1 < μ_2 < ... < μ_K`, each root bracketed from
/// below by its predecessor.
pub fn critical_sequence(
    seq: &WeightSequence,
    consts: &WeightConstants,
    k_count: usize,
) -> Result<Vec<SectionConstant>> {
    assert!(k_count >= 1);
    let tol = DEFAULT_TOL_FACTOR * consts.e_m();
    let tables = StepTables::build(seq, k_count)?;
    let mut out = Vec::with_capacity(k_count);
    out.push(SectionConstant { n: 1, mu: 1.0, residual: 0.0, bracket_width: 0.0, iterations: 0 });
    for n in 2..=k_count {
        let lo = out[n - 2].mu;
        out.push(bisect(&tables, n, lo, consts.e_m(), tol)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::estimate_constants;

    fn unit_consts() -> WeightConstants {
        estimate_constants(&WeightSequence::unit(), 100).unwrap()
    }

    const MU_2_UNIT: f64 = 1.2071067811865475; // (1+√2)/2

    #[test]
    fn step_matches_direct_formula() {
        let seq = WeightSequence::unit();
        // h_2(μ) = −(Λ_1/Λ_2)·log(λ_2/λ_1 − λ_2/(Λ_1·μ)) for h_1 = 0
        let direct = |mu: f64| -0.5 * (1.0 - 1.0 / mu).ln();
        match h_step(&seq, 1, 0.0, std::f64::consts::E).unwrap() {
            StepOutcome::Value(h2) => {
                assert!((h2 - direct(std::f64::consts::E)).abs() < 1e-15);
                assert!((h2 - 0.229_337_572_693_540_96).abs() < 1e-12);
            }
            StepOutcome::Breakdown => panic!("unexpected breakdown"),
        }
        assert_eq!(h_step(&seq, 1, 0.0, 1.0).unwrap(), StepOutcome::Breakdown);
        match h_step(&seq, 1, 0.0, 1e9).unwrap() {
            StepOutcome::Value(h2) => assert!(h2.abs() < 1e-8),
            StepOutcome::Breakdown => panic!("unexpected breakdown"),
        }
        assert!(h_step(&seq, 1, f64::NAN, 2.0).is_err());
    }

    #[test]
    fn trace_at_e_stays_under_bound() {
        let seq = WeightSequence::unit();
        let trace = h_trace(&seq, std::f64::consts::E, 100_000).unwrap();
        assert!(trace.cap_reached);
        assert_eq!(trace.values[0], 0.0);
        for (i, &h) in trace.values.iter().enumerate() {
            let k = i + 1;
            if k >= 2 {
                // h_k(e^M) ≤ M·Λ_{k−1}/Λ_k with M = 1
                assert!(h <= (k - 1) as f64 / k as f64 + 1e-12, "k = {k}, h = {h}");
            }
        }
    }

    #[test]
    fn trace_below_e_breaks_down() {
        let seq = WeightSequence::unit();
        let trace = h_trace(&seq, 1.05, 1_000_000).unwrap();
        let at = trace.breakdown_at.expect("breakdown must occur below e");
        assert_eq!(trace.values.len(), at);
        // values are non-negative and non-decreasing up to breakdown
        for w in trace.values.windows(2) {
            assert!(w[1] >= w[0] && w[0] >= 0.0);
        }
    }

    #[test]
    fn breakdown_staircase() {
        let seq = WeightSequence::unit();
        assert_eq!(breakdown_index(&seq, 0.9, 100).unwrap().index, Some(1));
        let mu2 = (1.0 + 2.0f64.sqrt()) / 2.0;
        let mid = (1.0 + mu2) / 2.0;
        assert_eq!(breakdown_index(&seq, mid, 100).unwrap().index, Some(2));
        assert_eq!(
            breakdown_index(&seq, std::f64::consts::E, 10_000).unwrap().index,
            None
        );
    }

    #[test]
    fn two_term_constant_is_closed_form() {
        let seq = WeightSequence::unit();
        let consts = unit_consts();
        assert_eq!(section_constant(&seq, &consts, 1).unwrap().mu, 1.0);
        let s = section_constant(&seq, &consts, 2).unwrap();
        assert!((s.mu - MU_2_UNIT).abs() < 1e-12, "mu_2 = {}", s.mu);
        assert!(s.residual.abs() < 1e-10);
    }

    #[test]
    fn million_term_constant_in_expected_window() {
        let seq = WeightSequence::unit();
        let consts = unit_consts();
        let s = section_constant(&seq, &consts, 1_000_000).unwrap();
        assert!(s.mu > 2.4 && s.mu < std::f64::consts::E, "mu = {}", s.mu);
    }

    #[test]
    fn critical_sequence_is_strictly_increasing() {
        let seq = WeightSequence::unit();
        let consts = unit_consts();
        let crits = critical_sequence(&seq, &consts, 50).unwrap();
        assert_eq!(crits[0].mu, 1.0);
        assert!((crits[1].mu - MU_2_UNIT).abs() < 1e-12);
        for w in crits.windows(2) {
            assert!(w[1].mu > w[0].mu);
        }
        assert!(crits.last().unwrap().mu < std::f64::consts::E);

        let p1 = WeightSequence::power(1.0).unwrap();
        let c1 = estimate_constants(&p1, 100).unwrap();
        let crits = critical_sequence(&p1, &c1, 50).unwrap();
        for w in crits.windows(2) {
            assert!(w[1].mu > w[0].mu);
        }
        assert!(crits.last().unwrap().mu < 0.5f64.exp());
    }

    #[test]
    fn critical_sequence_matches_section_constant() {
        let seq = WeightSequence::power(2.0).unwrap();
        let consts = estimate_constants(&seq, 100).unwrap();
        let crits = critical_sequence(&seq, &consts, 20).unwrap();
        for n in [5usize, 12, 20] {
            let direct = section_constant(&seq, &consts, n).unwrap();
            assert!(
                (direct.mu - crits[n - 1].mu).abs() < 1e-12,
                "n = {n}: {} vs {}",
                direct.mu,
                crits[n - 1].mu
            );
        }
    }

    #[test]
    fn h_is_decreasing_in_mu() {
        for seq in [WeightSequence::unit(), WeightSequence::power(1.0).unwrap()] {
            let consts = estimate_constants(&seq, 100).unwrap();
            let crits = critical_sequence(&seq, &consts, 12).unwrap();
            for k in [4usize, 8, 12] {
                // grid above μ_{k−1}: h_k must be strictly decreasing
                let lo = crits[k - 2].mu;
                let hi = consts.e_m();
                let mut prev = f64::INFINITY;
                for i in 1..=10 {
                    let mu = lo + (hi - lo) * i as f64 / 11.0;
                    let trace = h_trace(&seq, mu, k).unwrap();
                    assert_eq!(trace.values.len(), k, "early breakdown above mu_{}", k - 1);
                    let h = *trace.values.last().unwrap();
                    assert!(h < prev, "k = {k}, mu = {mu}");
                    prev = h;
                }
            }
        }
    }
}
