//! Log-domain factorials, binomials and cumulative Stirling numbers of the
//! second kind.

use std::collections::HashMap;
use std::sync::RwLock;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest log-factorial table a cache will allocate.
const MAX_TABLE: usize = 1 << 22;

/// `ln n!` by direct accumulation of `ln k`.
pub fn log_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `ln C(a, b)`.
pub fn log_binomial(a: u64, b: u64) -> Result<f64> {
    if b > a {
        return Err(Error::parameter(format!("binomial ({a}, {b}) has b > a")));
    }
    Ok(log_factorial(a) - log_factorial(b) - log_factorial(a - b))
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// When `ln B(A, B)` switches from the exact recurrence to `A ln B - ln B!`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StirlingPolicy {
    /// Approximate when `A > ratio * B`.
    pub ratio: u64,
    /// Approximate when `A > absolute`.
    pub absolute: u64,
}

impl Default for StirlingPolicy {
    fn default() -> Self {
        StirlingPolicy {
            ratio: 10,
            absolute: 10_000,
        }
    }
}

impl StirlingPolicy {
    pub fn exact_only() -> Self {
        StirlingPolicy {
            ratio: u64::MAX,
            absolute: u64::MAX,
        }
    }

    pub fn approximates(&self, a: u64, b: u64) -> bool {
        a > self.ratio.saturating_mul(b) || a > self.absolute
    }
}

/// `ln B(A, b)` for `b = 1..=width` via the log-space recurrence
/// `S(n,k) = k S(n-1,k) + S(n-1,k-1)`.
fn cumulative_row(a: u64, width: usize) -> Vec<f64> {
    let a_us = a as usize;
    let width = width.min(a_us).max(1);
    let ln_k: Vec<f64> = (0..=width).map(|k| (k as f64).ln()).collect();
    // ls[k] = ln S(n, k); S(1,1) = 1
    let mut ls = vec![f64::NEG_INFINITY; width + 1];
    ls[1] = 0.0;
    for n in 2..=a_us {
        for k in (1..=n.min(width)).rev() {
            ls[k] = log_add(ln_k[k] + ls[k], ls[k - 1]);
        }
    }
    let mut cum = Vec::with_capacity(width);
    let mut acc = f64::NEG_INFINITY;
    for &v in &ls[1..] {
        acc = log_add(acc, v);
        cum.push(acc);
    }
    cum
}

fn approximate(a: u64, b: u64) -> f64 {
    let b = b.min(a);
    a as f64 * (b as f64).ln() - ln_factorial_any(b)
}

fn ln_factorial_any(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `ln B(A, B) = ln sum_{b=1..min(A,B)} S(A, b)` under the default policy.
pub fn log_stirling2_cumulative(a: u64, b: u64) -> Result<f64> {
    log_stirling2_cumulative_with(a, b, StirlingPolicy::default())
}

pub fn log_stirling2_cumulative_with(a: u64, b: u64, policy: StirlingPolicy) -> Result<f64> {
    if a < 1 || b < 1 {
        return Err(Error::parameter(format!("B({a}, {b}) needs A >= 1 and B >= 1")));
    }
    if policy.approximates(a, b) {
        return Ok(approximate(a, b));
    }
    let w = b.min(a) as usize;
    Ok(cumulative_row(a, w)[w - 1])
}

/// Log-factorial table plus memoized cumulative Stirling rows. Reads are
/// lock-free for factorials; Stirling rows sit behind a read-write lock.
#[derive(Debug)]
pub struct CombinatoricsCache {
    log_fact: Vec<f64>,
    stirling: RwLock<HashMap<u64, Vec<f64>>>,
    policy: StirlingPolicy,
}

impl Clone for CombinatoricsCache {
    fn clone(&self) -> Self {
        CombinatoricsCache {
            log_fact: self.log_fact.clone(),
            stirling: RwLock::new(self.stirling.read().expect("poisoned").clone()),
            policy: self.policy,
        }
    }
}

impl CombinatoricsCache {
    /// Table covering `ln n!` for `n <= max_n` (capped; larger arguments use
    /// the log-gamma function).
    pub fn new(max_n: u64, policy: StirlingPolicy) -> Self {
        let len = (max_n as usize).saturating_add(1).clamp(2, MAX_TABLE);
        let mut log_fact = Vec::with_capacity(len);
        log_fact.push(0.0);
        let mut acc = 0.0;
        for k in 1..len {
            acc += (k as f64).ln();
            log_fact.push(acc);
        }
        CombinatoricsCache {
            log_fact,
            stirling: RwLock::new(HashMap::new()),
            policy,
        }
    }

    pub fn policy(&self) -> StirlingPolicy {
        self.policy
    }

    pub fn table_len(&self) -> usize {
        self.log_fact.len()
    }

    #[inline]
    pub fn log_factorial(&self, n: u64) -> f64 {
        match self.log_fact.get(n as usize) {
            Some(&v) => v,
            None => ln_factorial_any(n),
        }
    }

    /// `ln C(a, b)`; callers guarantee `b <= a`.
    #[inline]
    pub fn log_binomial(&self, a: u64, b: u64) -> f64 {
        debug_assert!(b <= a);
        self.log_factorial(a) - self.log_factorial(b) - self.log_factorial(a - b)
    }

    /// `ln B(A, B)`; callers guarantee `A, B >= 1`.
    pub fn log_stirling2_cumulative(&self, a: u64, b: u64) -> f64 {
        debug_assert!(a >= 1 && b >= 1);
        if self.policy.approximates(a, b) {
            return approximate(a, b);
        }
        let w = b.min(a) as usize;
        if let Some(row) = self.stirling.read().expect("poisoned").get(&a) {
            if row.len() >= w {
                return row[w - 1];
            }
        }
        let mut rows = self.stirling.write().expect("poisoned");
        let have = rows.get(&a).map_or(0, Vec::len);
        if have < w {
            let width = w.max(2 * have).min(a as usize);
            rows.insert(a, cumulative_row(a, width));
        }
        rows[&a][w - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_values() {
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
        assert!((log_factorial(5) - 120f64.ln()).abs() < 1e-12);
        assert!((log_factorial(5) - 4.787491743).abs() < 1e-9);
    }

    #[test]
    fn binomial_values() {
        assert!((log_binomial(6, 1).unwrap() - 6f64.ln()).abs() < 1e-12);
        assert_eq!(log_binomial(9, 0).unwrap(), 0.0);
        // Pascal triangle oracle
        let mut row = vec![1u64];
        for _ in 0..10 {
            let mut next = vec![1u64; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        assert_eq!(row[3], 120);
        assert!((log_binomial(10, 3).unwrap() - (row[3] as f64).ln()).abs() < 1e-12);
        assert!(log_binomial(3, 4).is_err());
    }

    #[test]
    fn stirling_small() {
        assert_eq!(log_stirling2_cumulative(7, 1).unwrap(), 0.0);
        assert!((log_stirling2_cumulative(3, 2).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!((log_stirling2_cumulative(4, 4).unwrap() - 15f64.ln()).abs() < 1e-12);
        assert!((log_stirling2_cumulative(4, 9).unwrap() - 15f64.ln()).abs() < 1e-12);
        assert!(log_stirling2_cumulative(0, 1).is_err());
        assert!(log_stirling2_cumulative(1, 0).is_err());
    }

    #[test]
    fn cache_agrees_with_fresh() {
        let cache = CombinatoricsCache::new(500, StirlingPolicy::default());
        assert_eq!(cache.log_factorial(0), 0.0);
        for w in cache.log_fact.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for n in [0u64, 1, 2, 17, 499, 500] {
            assert!((cache.log_factorial(n) - log_factorial(n)).abs() <= 1e-12 * log_factorial(n).max(1.0));
        }
        // beyond the table
        let big = 2000;
        assert!((cache.log_factorial(big) - log_factorial(big)).abs() < 1e-9 * log_factorial(big));
        // grow a row in several steps
        for b in [3u64, 1, 40, 12, 150, 150] {
            let fresh = log_stirling2_cumulative(150, b).unwrap();
            assert_eq!(cache.log_stirling2_cumulative(150, b).to_bits(), fresh.to_bits(), "b={b}");
        }
    }

    #[test]
    fn approximation_at_threshold() {
        for b in 1..=32u64 {
            let a = 10 * b;
            let exact = log_stirling2_cumulative_with(a, b, StirlingPolicy::exact_only()).unwrap();
            let approx = approximate(a, b);
            let err = if exact == 0.0 {
                (approx - exact).abs()
            } else {
                ((approx - exact) / exact).abs()
            };
            assert!(err < 1e-6, "B={b}: exact {exact} approx {approx}");
        }
    }
}
