//! Weight sequences and their derived constants.
//!
//! A weight sequence is a positive sequence `λ_1, λ_2, ...` with prefix sums
//! `Λ_n = λ_1 + ... + λ_n`. Two constants drive everything downstream: `M`,
//! the supremum of `(Λ_n/λ_n)·log((Λ_{n+1}/λ_{n+1})/(Λ_n/λ_n))`, which fixes
//! the infinite-series constant `e^M`, and `C`, the leading coefficient in
//! `λ_k/Λ_k ≈ C/k`, which fixes the second-order term of `μ_N`.

use std::fs;
use std::sync::RwLock;

use serde::Serialize;

use crate::{Error, Result};

/// Kahan-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// The supported weight families.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFamily {
    /// `λ_k = 1` (the classical, unweighted case; `M = C = 1`).
    Unit,
    /// `λ_k = k^α` with `α ≥ 1` (`M = 1/(α+1)`, `C = α+1`).
    Power { alpha: f64 },
    /// Finite list of explicit positive weights.
    Explicit(Vec<f64>),
}

impl WeightFamily {
    fn term(&self, k: usize) -> Result<f64> {
        match self {
            WeightFamily::Unit => Ok(1.0),
            WeightFamily::Power { alpha } => {
                let x = k as f64;
                // powi is exact for small integer exponents, powf need not be
                if alpha.fract() == 0.0 && alpha.abs() <= 32.0 {
                    Ok(x.powi(*alpha as i32))
                } else {
                    Ok(x.powf(*alpha))
                }
            }
            WeightFamily::Explicit(v) => {
                v.get(k - 1)
                    .copied()
                    .ok_or(Error::IndexOutOfRange { index: k, len: v.len() })
            }
        }
    }
}

#[derive(Default)]
struct Cache {
    lambda: Vec<f64>,
    prefix: Vec<f64>,
    running: KahanSum,
}

/// A weight sequence with cached terms and compensated prefix sums.
///
/// All accessors take 1-based indices, matching the usual statement of the
/// inequality. The cache grows on demand; reads are lock-shared so a fully
/// warmed sequence is safe to use concurrently.
pub struct WeightSequence {
    family: WeightFamily,
    cache: RwLock<Cache>,
}

/// Borrowed view of the cached tables, 1-based accessors.
pub struct WeightTables<'a> {
    lambda: &'a [f64],
    prefix: &'a [f64],
}

impl<'a> WeightTables<'a> {
    #[inline]
    pub fn lambda(&self, k: usize) -> f64 {
        self.lambda[k - 1]
    }

    #[inline]
    pub fn prefix(&self, k: usize) -> f64 {
        self.prefix[k - 1]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// n-th term of the supremum defining `M`:
    /// `(Λ_n/λ_n)·log((Λ_{n+1}/λ_{n+1})/(Λ_n/λ_n))`.
    ///
    /// The log argument is `1 + gap` with
    /// `gap = (λ_n·λ_{n+1} − Λ_n·(λ_{n+1} − λ_n)) / (Λ_n·λ_{n+1})`,
    /// evaluated through `ln_1p` since the argument approaches 1.
    #[inline]
    pub fn ratio_term(&self, n: usize) -> f64 {
        let ln = self.lambda(n);
        let ln1 = self.lambda(n + 1);
        let pn = self.prefix(n);
        let numer = ln * ln1 - pn * (ln1 - ln);
        (pn / ln) * (numer / (pn * ln1)).ln_1p()
    }

    /// `Λ_{n+1}/λ_{n+1} − Λ_n/λ_n`, in a cancellation-free form.
    #[inline]
    pub fn reciprocal_gap(&self, n: usize) -> f64 {
        let ln = self.lambda(n);
        let ln1 = self.lambda(n + 1);
        let pn = self.prefix(n);
        (ln * ln1 - pn * (ln1 - ln)) / (ln * ln1)
    }
}

impl WeightSequence {
    /// Builds a sequence, validating the family parameters.
    pub fn new(family: WeightFamily) -> Result<Self> {
        match &family {
            WeightFamily::Unit => {}
            WeightFamily::Power { alpha } => {
                if !alpha.is_finite() || *alpha < 1.0 {
                    return Err(Error::BadAlpha(*alpha));
                }
            }
            WeightFamily::Explicit(v) => {
                if v.is_empty() {
                    return Err(Error::BadSpec("empty explicit weight list".into()));
                }
                for (i, &w) in v.iter().enumerate() {
                    if !w.is_finite() || w <= 0.0 {
                        return Err(Error::NonPositiveWeight { index: i + 1, value: w });
                    }
                }
            }
        }
        Ok(Self { family, cache: RwLock::new(Cache::default()) })
    }

    pub fn unit() -> Self {
        Self::new(WeightFamily::Unit).unwrap()
    }

    pub fn power(alpha: f64) -> Result<Self> {
        Self::new(WeightFamily::Power { alpha })
    }

    pub fn explicit(weights: Vec<f64>) -> Result<Self> {
        Self::new(WeightFamily::Explicit(weights))
    }

    /// Parses a weight spec string: `unit`, `power:alpha=<float>` or
    /// `file:<path>` (one positive decimal per line, UTF-8, no header).
    pub fn parse_spec(spec: &str) -> Result<Self> {
        if spec == "unit" {
            return Ok(Self::unit());
        }
        if let Some(rest) = spec.strip_prefix("power:") {
            let alpha = rest
                .strip_prefix("alpha=")
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::BadSpec(spec.to_string()))?;
            return Self::power(alpha);
        }
        if let Some(path) = spec.strip_prefix("file:") {
            let text = fs::read_to_string(path)?;
            let mut weights = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let w: f64 = line
                    .parse()
                    .map_err(|_| Error::BadSpec(format!("{path}:{} `{line}`", i + 1)))?;
                weights.push(w);
            }
            return Self::explicit(weights);
        }
        Err(Error::BadSpec(spec.to_string()))
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    /// Number of available terms, `None` when unbounded.
    pub fn max_index(&self) -> Option<usize> {
        match &self.family {
            WeightFamily::Explicit(v) => Some(v.len()),
            _ => None,
        }
    }

    /// Extends the cache so that indices `1..=upto` are available.
    fn ensure(&self, upto: usize) -> Result<()> {
        {
            let cache = self.cache.read().unwrap();
            if cache.lambda.len() >= upto {
                return Ok(());
            }
        }
        let mut cache = self.cache.write().unwrap();
        while cache.lambda.len() < upto {
            let k = cache.lambda.len() + 1;
            let w = self.family.term(k)?;
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::NonPositiveWeight { index: k, value: w });
            }
            cache.running.add(w);
            let p = cache.running.value();
            cache.lambda.push(w);
            cache.prefix.push(p);
        }
        Ok(())
    }

    /// `λ_k` (1-based).
    pub fn lambda(&self, k: usize) -> Result<f64> {
        assert!(k >= 1, "weight indices are 1-based");
        self.ensure(k)?;
        Ok(self.cache.read().unwrap().lambda[k - 1])
    }

    /// `Λ_k = λ_1 + ... + λ_k`, compensated summation.
    pub fn prefix_sum(&self, k: usize) -> Result<f64> {
        assert!(k >= 1, "weight indices are 1-based");
        self.ensure(k)?;
        Ok(self.cache.read().unwrap().prefix[k - 1])
    }

    /// n-th term of the supremum defining `M`.
    pub fn ratio_term(&self, n: usize) -> Result<f64> {
        assert!(n >= 1, "weight indices are 1-based");
        self.with_tables(n + 1, |t| t.ratio_term(n))
    }

    /// Runs `f` over a borrowed view of the first `upto` cached terms.
    pub fn with_tables<R>(&self, upto: usize, f: impl FnOnce(&WeightTables<'_>) -> R) -> Result<R> {
        self.ensure(upto)?;
        let cache = self.cache.read().unwrap();
        let tables = WeightTables { lambda: &cache.lambda, prefix: &cache.prefix };
        Ok(f(&tables))
    }
}

/// Provenance of a reported constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantSource {
    ClosedForm,
    Estimated,
}

/// Where the supremum defining `M` was attained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SupremumLocation {
    /// Attained at a finite index.
    Index(usize),
    /// The terms increase towards a limit; `M` is the extrapolated limit.
    TailLimit,
}

/// The constants `M` and `C` for a weight sequence.
#[derive(Debug, Clone, Serialize)]
pub struct WeightConstants {
    pub m: f64,
    pub m_source: ConstantSource,
    pub m_location: SupremumLocation,
    pub c: f64,
    pub c_source: ConstantSource,
    pub c_error_estimate: f64,
}

impl WeightConstants {
    /// Exact constants for a family with closed forms, if any.
    pub fn closed_form(family: &WeightFamily) -> Option<Self> {
        match family {
            WeightFamily::Unit => Some(Self {
                m: 1.0,
                m_source: ConstantSource::ClosedForm,
                m_location: SupremumLocation::TailLimit,
                c: 1.0,
                c_source: ConstantSource::ClosedForm,
                c_error_estimate: 0.0,
            }),
            WeightFamily::Power { alpha } => Some(Self {
                m: 1.0 / (alpha + 1.0),
                m_source: ConstantSource::ClosedForm,
                m_location: SupremumLocation::TailLimit,
                c: alpha + 1.0,
                c_source: ConstantSource::ClosedForm,
                c_error_estimate: 0.0,
            }),
            WeightFamily::Explicit(_) => None,
        }
    }

    /// `e^M`, the infinite-series constant.
    pub fn e_m(&self) -> f64 {
        self.m.exp()
    }
}

/// Computes `M` and `C` for `seq`.
///
/// Families with closed forms short-circuit. Otherwise `M` is the running
/// supremum of the ratio terms over `n ≤ k_max`, upgraded to an extrapolated
/// limit when the last decade of terms is still monotone increasing (the
/// supremum then lives at infinity, as for unit weights), and `C` comes from
/// `C_k = k·λ_k/Λ_k` with one first-order Richardson step, which cancels the
/// `O(1/k)` error the harmonic-rate condition allows.
pub fn estimate_constants(seq: &WeightSequence, k_max: usize) -> Result<WeightConstants> {
    if let Some(c) = WeightConstants::closed_form(seq.family()) {
        return Ok(c);
    }
    if k_max < 100 {
        return Err(Error::InvalidArgument(format!("k_max = {k_max} < 100")));
    }
    let k_max = match seq.max_index() {
        Some(len) if len < k_max + 1 => len.saturating_sub(1).max(2),
        _ => k_max,
    };
    seq.with_tables(k_max + 1, |t| {
        let mut sup = f64::NEG_INFINITY;
        let mut argmax = 1usize;
        let tail_start = (k_max / 10).max(1);
        let mut tail_monotone = true;
        let mut prev = f64::NEG_INFINITY;
        for n in 1..=k_max {
            let term = t.ratio_term(n);
            if term > sup {
                sup = term;
                argmax = n;
            }
            if n >= tail_start {
                if term <= prev {
                    tail_monotone = false;
                }
                prev = term;
            }
        }
        let q1 = t.ratio_term((k_max / 4).max(1));
        let q2 = t.ratio_term((k_max / 2).max(1));
        let q4 = t.ratio_term(k_max);
        let (m, m_location) = if tail_monotone {
            let inc_old = q2 - q1;
            let inc_new = q4 - q2;
            // an O(1/n) tail halves its increments decade over decade; a
            // non-shrinking increment means the sup is still growing
            if inc_new > 0.0 && inc_old > 0.0 && inc_new > 0.8 * inc_old {
                return Err(Error::SupremumNotConverged(k_max));
            }
            (2.0 * q4 - q2, SupremumLocation::TailLimit)
        } else {
            (sup, SupremumLocation::Index(argmax))
        };
        let half = k_max / 2;
        let c_at = |k: usize| k as f64 * t.lambda(k) / t.prefix(k);
        let c_half = c_at(half);
        let c_full = c_at(k_max);
        Ok(WeightConstants {
            m,
            m_source: ConstantSource::Estimated,
            m_location,
            c: 2.0 * c_full - c_half,
            c_source: ConstantSource::Estimated,
            c_error_estimate: (c_full - c_half).abs(),
        })
    })?
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_and_power_terms() {
        let u = WeightSequence::unit();
        assert_eq!(u.lambda(5).unwrap(), 1.0);
        assert_eq!(u.prefix_sum(7).unwrap(), 7.0);
        let p2 = WeightSequence::power(2.0).unwrap();
        assert_eq!(p2.lambda(3).unwrap(), 9.0);
        assert_eq!(p2.prefix_sum(3).unwrap(), 14.0);
        let p1 = WeightSequence::power(1.0).unwrap();
        assert_eq!(p1.lambda(4).unwrap(), 4.0);
        assert_eq!(p1.prefix_sum(4).unwrap(), 10.0);
    }

    #[test]
    fn explicit_bounds_and_validation() {
        let e = WeightSequence::explicit(vec![1.0, 10.0]).unwrap();
        assert_eq!(e.lambda(2).unwrap(), 10.0);
        assert!(matches!(e.lambda(3), Err(Error::IndexOutOfRange { index: 3, len: 2 })));
        assert!(WeightSequence::explicit(vec![1.0, 0.0]).is_err());
        assert!(WeightSequence::explicit(vec![]).is_err());
        assert!(WeightSequence::power(0.5).is_err());
    }

    #[test]
    fn parse_specs() {
        assert!(matches!(
            WeightSequence::parse_spec("unit").unwrap().family(),
            WeightFamily::Unit
        ));
        match WeightSequence::parse_spec("power:alpha=2.5").unwrap().family() {
            WeightFamily::Power { alpha } => assert_eq!(*alpha, 2.5),
            other => panic!("unexpected family {other:?}"),
        }
        assert!(WeightSequence::parse_spec("power:alpha=x").is_err());
        assert!(WeightSequence::parse_spec("gamma").is_err());
    }

    #[test]
    fn ratio_term_values() {
        let u = WeightSequence::unit();
        // 1·log(2/1)
        assert!((u.ratio_term(1).unwrap() - 2.0f64.ln()).abs() < 1e-15);
        // (1/1)·log((3/2)/(1/1))
        let p1 = WeightSequence::power(1.0).unwrap();
        assert!((p1.ratio_term(1).unwrap() - 1.5f64.ln()).abs() < 1e-15);
        // n·log(1+1/n) increases towards 1
        let mut prev = 0.0;
        for n in [1usize, 10, 100, 10_000, 1_000_000] {
            let t = u.ratio_term(n).unwrap();
            assert!(t > prev && t < 1.0, "n = {n}, term = {t}");
            prev = t;
        }
    }

    #[test]
    fn prefix_increment_matches_lambda() {
        let p = WeightSequence::power(3.5).unwrap();
        for k in [1usize, 10, 999, 12_345, 100_000] {
            let diff = p.prefix_sum(k + 1).unwrap() - p.prefix_sum(k).unwrap();
            let lam = p.lambda(k + 1).unwrap();
            assert!(
                (diff - lam).abs() <= 1e-15 * p.prefix_sum(k + 1).unwrap(),
                "k = {k}: diff = {diff}, lambda = {lam}"
            );
        }
    }

    #[test]
    fn closed_form_constants() {
        let c = estimate_constants(&WeightSequence::power(1.0).unwrap(), 100).unwrap();
        assert_eq!(c.m, 0.5);
        assert_eq!(c.c, 2.0);
        assert_eq!(c.m_source, ConstantSource::ClosedForm);
        let c = estimate_constants(&WeightSequence::power(2.0).unwrap(), 100).unwrap();
        assert_eq!(c.m, 1.0 / 3.0);
        assert_eq!(c.c, 3.0);
        let c = estimate_constants(&WeightSequence::unit(), 100).unwrap();
        assert_eq!((c.m, c.c), (1.0, 1.0));
    }

    #[test]
    fn estimated_constants_unit_like_explicit() {
        // explicit copy of the unit family: the sup is attained only in the
        // limit, so the estimator must report the extrapolated tail value
        let e = WeightSequence::explicit(vec![1.0; 100_001]).unwrap();
        let c = estimate_constants(&e, 100_000).unwrap();
        assert_eq!(c.m_source, ConstantSource::Estimated);
        assert_eq!(c.m_location, SupremumLocation::TailLimit);
        assert!((c.m - 1.0).abs() < 1e-4, "M = {}", c.m);
        assert!((c.c - 1.0).abs() < 1e-6, "C = {}", c.c);
    }

    #[test]
    fn estimated_constants_power_like_explicit() {
        let weights: Vec<f64> = (1..=100_001).map(|k| (k as f64).powi(2)).collect();
        let e = WeightSequence::explicit(weights).unwrap();
        let c = estimate_constants(&e, 100_000).unwrap();
        assert!((c.m - 1.0 / 3.0).abs() < 1e-4, "M = {}", c.m);
        assert!((c.c - 3.0).abs() < 1e-5, "C = {}", c.c);
    }

    #[test]
    fn diverging_supremum_is_flagged() {
        // λ_k = 1/k makes Λ_n/λ_n ≈ n·log n, so the ratio terms grow like
        // log n without stabilizing
        let weights: Vec<f64> = (1..=2_001).map(|k| 1.0 / k as f64).collect();
        let e = WeightSequence::explicit(weights).unwrap();
        assert!(matches!(
            estimate_constants(&e, 2_000),
            Err(Error::SupremumNotConverged(_))
        ));
    }
}
