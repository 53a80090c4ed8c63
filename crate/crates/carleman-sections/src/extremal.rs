//! The optimizing vector behind a section constant.
//!
//! At the maximum of `Σ G_n` over the simplex `Σ a_n = 1`, the stationarity
//! system reads `μ·a_k = λ_k·Σ_{n≥k} G_n/Λ_n`, and subtracting consecutive
//! equations makes it lower-triangular in `a_k/λ_k`:
//!
//! `μ·(a_k/λ_k − a_{k+1}/λ_{k+1}) = G_k/Λ_k`.
//!
//! [`reconstruct_extremal`] seeds `a_1` and propagates forward, using
//! `G_k = a_k·e^{h_k}` from the recurrence trace so that no product of small
//! coefficients ever underflows. [`oracle_maximize`] is the independent
//! check: a direct maximizer of the quotient for small `N` that never touches
//! the recurrence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::recursion::h_trace;
use crate::weights::{KahanSum, WeightSequence};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct ExtremalVector {
    pub n: usize,
    /// Positive coefficients summing to 1.
    pub a: Vec<f64>,
    /// Weighted geometric means `G_n = Π_{k≤n} a_k^{λ_k/Λ_n}`.
    pub g: Vec<f64>,
    /// `Σ G_n`; equals the section constant at the exact optimum.
    pub objective: f64,
}

/// `Σ G_n(a) / Σ a_n` for an arbitrary positive vector (not necessarily
/// normalized). Both numerator and denominator are homogeneous of degree 1,
/// so the quotient is scale invariant.
pub fn carleman_quotient(seq: &WeightSequence, a: &[f64]) -> Result<f64> {
    let n = a.len();
    assert!(n >= 1);
    seq.with_tables(n, |t| {
        let mut log_prefix = KahanSum::default();
        let mut num = KahanSum::default();
        let mut den = KahanSum::default();
        for (i, &ai) in a.iter().enumerate() {
            let k = i + 1;
            log_prefix.add(t.lambda(k) * ai.ln());
            num.add((log_prefix.value() / t.prefix(k)).exp());
            den.add(ai);
        }
        num.value() / den.value()
    })
}

/// Rebuilds the optimizing vector from a converged `μ_N`.
pub fn reconstruct_extremal(seq: &WeightSequence, mu: f64, n: usize) -> Result<ExtremalVector> {
    assert!(n >= 1);
    let trace = h_trace(seq, mu, n)?;
    if trace.values.len() < n {
        return Err(Error::InvalidArgument(format!(
            "recurrence broke down at index {} < {n}; mu = {mu} is below the section constant",
            trace.values.len()
        )));
    }
    seq.with_tables(n, |t| {
        let mut a = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n);
        let mut b = 1.0 / t.lambda(1); // b_k = a_k/λ_k, seeded with a_1 = 1
        a.push(1.0);
        g.push(trace.values[0].exp());
        for k in 1..n {
            b -= g[k - 1] / (mu * t.prefix(k));
            let ak = t.lambda(k + 1) * b;
            if ak.is_nan() || ak <= 0.0 {
                return Err(Error::NonPositiveCoefficient { index: k + 1, value: ak });
            }
            a.push(ak);
            g.push(ak * trace.values[k].exp());
        }
        // normalize onto the simplex; G scales with the same factor since
        // the exponents λ_k/Λ_n sum to 1
        let mut total = KahanSum::default();
        for &ai in &a {
            total.add(ai);
        }
        let scale = 1.0 / total.value();
        let mut objective = KahanSum::default();
        for i in 0..n {
            a[i] *= scale;
            g[i] *= scale;
            objective.add(g[i]);
        }
        Ok(ExtremalVector { n, a, g, objective: objective.value() })
    })?
}

/// Largest relative defect of the stationarity system,
/// `max_k |μ·a_k − λ_k·Σ_{n≥k} G_n/Λ_n| / μ`.
pub fn verify_stationarity(seq: &WeightSequence, v: &ExtremalVector, mu: f64) -> Result<f64> {
    seq.with_tables(v.n, |t| {
        let mut suffix = KahanSum::default();
        let mut worst = 0.0f64;
        for k in (1..=v.n).rev() {
            suffix.add(v.g[k - 1] / t.prefix(k));
            let defect = (mu * v.a[k - 1] - t.lambda(k) * suffix.value()).abs() / mu;
            worst = worst.max(defect);
        }
        worst
    })
}

fn build_vector(seq: &WeightSequence, a: Vec<f64>) -> Result<ExtremalVector> {
    let n = a.len();
    seq.with_tables(n, |t| {
        let mut total = KahanSum::default();
        for &ai in &a {
            total.add(ai);
        }
        let scale = 1.0 / total.value();
        let a: Vec<f64> = a.iter().map(|&x| x * scale).collect();
        let mut log_prefix = KahanSum::default();
        let mut objective = KahanSum::default();
        let mut g = Vec::with_capacity(n);
        for (i, &ai) in a.iter().enumerate() {
            let k = i + 1;
            log_prefix.add(t.lambda(k) * ai.ln());
            let gk = (log_prefix.value() / t.prefix(k)).exp();
            g.push(gk);
            objective.add(gk);
        }
        ExtremalVector { n, a, g, objective: objective.value() }
    })
}

/// One multiplicative fixed-point pass: `a_k ← a_k·∇_k / Σ_j a_j·∇_j`.
/// Fixed points are exactly the stationary points of the quotient.
fn multiplicative_ascent(seq: &WeightSequence, start: Vec<f64>) -> Result<Vec<f64>> {
    let n = start.len();
    seq.with_tables(n, |t| {
        let mut a = start;
        let mut g = vec![0.0; n];
        let mut best = f64::NEG_INFINITY;
        let mut stale = 0u32;
        for _ in 0..50_000 {
            let mut log_prefix = KahanSum::default();
            let mut objective = KahanSum::default();
            for (i, ai) in a.iter().enumerate() {
                let k = i + 1;
                log_prefix.add(t.lambda(k) * ai.max(1e-300).ln());
                g[i] = (log_prefix.value() / t.prefix(k)).exp();
                objective.add(g[i]);
            }
            let f = objective.value();
            if f > best + 1e-12 {
                best = f;
                stale = 0;
            } else {
                stale += 1;
                if stale >= 100 {
                    break;
                }
            }
            // gradient: ∇_k = (λ_k/a_k)·Σ_{n≥k} G_n/Λ_n; Euler's identity
            // gives Σ a_k·∇_k = f, so the update renormalizes by f
            let mut suffix = KahanSum::default();
            let mut grad_rev = vec![0.0; n];
            for k in (1..=n).rev() {
                suffix.add(g[k - 1] / t.prefix(k));
                grad_rev[k - 1] = t.lambda(k) * suffix.value();
            }
            let mut total = KahanSum::default();
            for i in 0..n {
                // grad_rev[i] is a_k·∇_k, so this is the update a_k·∇_k/f
                a[i] = (grad_rev[i] / f).max(1e-300);
                total.add(a[i]);
            }
            let scale = 1.0 / total.value();
            for ai in a.iter_mut() {
                *ai *= scale;
            }
        }
        a
    })
}

/// Independent brute-force maximizer of `Σ G_n` on the simplex.
///
/// Runs the multiplicative fixed-point iteration from the uniform start and
/// `restarts` random interior starts, and for `N ≤ 3` additionally sweeps a
/// simplex grid (coarse global pass, then a 1e-4 mesh around the best cell)
/// so a non-global basin cannot win silently. The best vector found is
/// returned with its objective.
pub fn oracle_maximize(
    seq: &WeightSequence,
    n: usize,
    restarts: u32,
    seed: u64,
) -> Result<ExtremalVector> {
    assert!((1..=8).contains(&n), "oracle is limited to N <= 8");
    if n == 1 {
        return build_vector(seq, vec![1.0]);
    }
    let mut best: Option<ExtremalVector> = None;
    let mut consider = |candidate: ExtremalVector| {
        if best.as_ref().is_none_or(|b| candidate.objective > b.objective) {
            best = Some(candidate);
        }
    };

    let uniform = vec![1.0 / n as f64; n];
    consider(build_vector(seq, multiplicative_ascent(seq, uniform)?)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        // -log U is Exp(1); normalized, this is uniform on the simplex
        let start: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-16).ln()).collect();
        consider(build_vector(seq, multiplicative_ascent(seq, start)?)?);
    }

    if n == 2 {
        let mesh = 1e-4;
        let mut best_x = 0.5;
        let mut best_f = f64::NEG_INFINITY;
        let steps = (1.0 / mesh) as usize;
        for i in 1..steps {
            let x = i as f64 * mesh;
            let f = carleman_quotient(seq, &[x, 1.0 - x])?;
            if f > best_f {
                best_f = f;
                best_x = x;
            }
        }
        consider(build_vector(seq, multiplicative_ascent(seq, vec![best_x, 1.0 - best_x])?)?);
    } else if n == 3 {
        let coarse = grid_best_3(seq, 1e-2, (0.0, 1.0), (0.0, 1.0))?;
        let fine = grid_best_3(
            seq,
            1e-4,
            (coarse.0 - 2e-2, coarse.0 + 2e-2),
            (coarse.1 - 2e-2, coarse.1 + 2e-2),
        )?;
        let start = vec![fine.0, fine.1, 1.0 - fine.0 - fine.1];
        consider(build_vector(seq, multiplicative_ascent(seq, start)?)?);
    }

    Ok(best.expect("at least one start is always evaluated"))
}

/// Best `(a_1, a_2)` on the mesh with `a_3 = 1 − a_1 − a_2` positive.
fn grid_best_3(
    seq: &WeightSequence,
    mesh: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
) -> Result<(f64, f64)> {
    let mut best = (1.0 / 3.0, 1.0 / 3.0);
    let mut best_f = f64::NEG_INFINITY;
    let mut x = x_range.0.max(mesh);
    while x < x_range.1.min(1.0) {
        let mut y = y_range.0.max(mesh);
        while y < y_range.1.min(1.0 - x) {
            let z = 1.0 - x - y;
            if z > 0.0 {
                let f = carleman_quotient(seq, &[x, y, z])?;
                if f > best_f {
                    best_f = f;
                    best = (x, y);
                }
            }
            y += mesh;
        }
        x += mesh;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recursion::section_constant;
    use crate::weights::estimate_constants;

    const MU_2_UNIT: f64 = 1.2071067811865475;

    #[test]
    fn single_point_simplex() {
        let seq = WeightSequence::unit();
        let v = reconstruct_extremal(&seq, 1.0, 1).unwrap();
        assert_eq!(v.a, vec![1.0]);
        assert_eq!(v.objective, 1.0);
        assert_eq!(verify_stationarity(&seq, &v, 1.0).unwrap(), 0.0);
        let o = oracle_maximize(&seq, 1, 0, 0).unwrap();
        assert_eq!(o.objective, 1.0);
    }

    #[test]
    fn two_term_stationary_point() {
        let seq = WeightSequence::unit();
        let v = reconstruct_extremal(&seq, MU_2_UNIT, 2).unwrap();
        // a_1 = (2+√2)/4 from the hand-solved two-variable problem
        let a1 = (2.0 + 2.0f64.sqrt()) / 4.0;
        assert!((v.a[0] - a1).abs() < 1e-9, "a = {:?}", v.a);
        assert!((v.a[1] - (1.0 - a1)).abs() < 1e-9);
        assert!((v.objective - MU_2_UNIT).abs() < 1e-12);
        assert!(verify_stationarity(&seq, &v, MU_2_UNIT).unwrap() < 1e-10);
    }

    #[test]
    fn uniform_point_is_not_stationary() {
        let seq = WeightSequence::unit();
        let consts = estimate_constants(&seq, 100).unwrap();
        let mu3 = section_constant(&seq, &consts, 3).unwrap().mu;
        let v = build_vector(&seq, vec![1.0 / 3.0; 3]).unwrap();
        assert!(verify_stationarity(&seq, &v, mu3).unwrap() > 1e-3);
    }

    #[test]
    fn ten_term_self_consistency() {
        let seq = WeightSequence::unit();
        let consts = estimate_constants(&seq, 100).unwrap();
        let s = section_constant(&seq, &consts, 10).unwrap();
        let v = reconstruct_extremal(&seq, s.mu, 10).unwrap();
        assert!((v.objective - s.mu).abs() < 1e-9, "objective = {}, mu = {}", v.objective, s.mu);
        // telescoping endpoint: μ·a_N/λ_N = G_N/Λ_N
        let lhs = s.mu * v.a[9] / seq.lambda(10).unwrap();
        let rhs = v.g[9] / seq.prefix_sum(10).unwrap();
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn oracle_agrees_with_closed_form() {
        let seq = WeightSequence::unit();
        let o = oracle_maximize(&seq, 2, 4, 0).unwrap();
        assert!((o.objective - MU_2_UNIT).abs() < 1e-6, "objective = {}", o.objective);
    }

    #[test]
    fn oracle_agrees_with_bisection_for_linear_weights() {
        let seq = WeightSequence::power(1.0).unwrap();
        let consts = estimate_constants(&seq, 100).unwrap();
        let s = section_constant(&seq, &consts, 2).unwrap();
        let o = oracle_maximize(&seq, 2, 4, 0).unwrap();
        assert!((o.objective - s.mu).abs() < 1e-6, "oracle = {}, mu = {}", o.objective, s.mu);
    }

    #[test]
    fn quotient_is_scale_invariant() {
        let seq = WeightSequence::power(2.0).unwrap();
        let a = [0.4, 0.35, 0.15, 0.1];
        let base = carleman_quotient(&seq, &a).unwrap();
        for c in [1e-6, 0.5, 3.0, 1e8] {
            let scaled: Vec<f64> = a.iter().map(|&x| c * x).collect();
            let q = carleman_quotient(&seq, &scaled).unwrap();
            assert!((q - base).abs() < 1e-12 * base.abs());
        }
    }
}
