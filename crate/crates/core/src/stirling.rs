//! Log-space generalized Stirling numbers `S^n_{m,a}` and Pochhammer symbols.
//!
//! The numbers obey `S^{n+1}_m = S^n_{m-1} + (n - m a) S^n_m` with `S^0_0 = 1`.
//! Rows are kept in log space because the raw values overflow long before the
//! customer counts seen in practice. The table is truncated in the table-count
//! dimension: the recurrence for column `m` only reads columns `m - 1` and `m`,
//! so a narrow table is exact for every column it stores, and it is rebuilt
//! wider when a caller asks for more tables than it holds.

const NEG_INFINITY: f64 = f64::NEG_INFINITY;

const INITIAL_ROWS: usize = 64;
const INITIAL_WIDTH: usize = 16;

#[derive(Debug, Clone)]
pub struct StirlingCache {
    discount: f64,
    width: usize,
    rows: Vec<Vec<f64>>,
}

impl StirlingCache {
    pub fn new(discount: f64) -> Self {
        assert!(
            (0.0..1.0).contains(&discount),
            "discount must lie in [0, 1), got {discount}"
        );
        let mut cache = StirlingCache {
            discount,
            width: INITIAL_WIDTH,
            rows: vec![vec![0.0]],
        };
        cache.extend_rows(INITIAL_ROWS);
        cache
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Largest customer count currently tabulated.
    pub fn capacity(&self) -> usize {
        self.rows.len() - 1
    }

    /// Largest table count currently tabulated.
    pub fn width(&self) -> usize {
        self.width
    }

    /// `log S^n_m`, growing the table as needed. Impossible configurations are `-inf`.
    pub fn log_stirling(&mut self, n: usize, m: usize) -> f64 {
        if m > n {
            return NEG_INFINITY;
        }
        self.ensure(n, m);
        self.rows[n][m]
    }

    /// Read-only lookup; `None` when `(n, m)` lies outside the tabulated region.
    pub fn get(&self, n: usize, m: usize) -> Option<f64> {
        if m > n {
            return Some(NEG_INFINITY);
        }
        self.rows.get(n).and_then(|row| row.get(m)).copied()
    }

    /// `log (S^{n+dn}_{m+dm} / S^n_m)`, the only shape of Stirling term the samplers need.
    pub fn log_ratio(&mut self, n: usize, m: usize, dn: usize, dm: usize) -> f64 {
        let top = self.log_stirling(n + dn, m + dm);
        let bottom = self.log_stirling(n, m);
        top - bottom
    }

    /// Make sure `S^n_m` is available.
    pub fn ensure(&mut self, n: usize, m: usize) {
        if m > self.width {
            let mut width = self.width.max(1);
            while width < m {
                width *= 2;
            }
            self.widen(width);
        }
        if n >= self.rows.len() {
            let mut target = self.rows.len().max(1);
            while target <= n {
                target *= 2;
            }
            self.extend_rows(target);
        }
    }

    fn widen(&mut self, width: usize) {
        let rows = self.rows.len();
        self.width = width;
        self.rows.truncate(1);
        self.extend_rows(rows);
    }

    fn extend_rows(&mut self, rows: usize) {
        let a = self.discount;
        while self.rows.len() < rows {
            let n = self.rows.len() - 1;
            let prev = &self.rows[n];
            let len = (n + 1).min(self.width) + 1;
            let mut next = vec![NEG_INFINITY; len];
            for (m, slot) in next.iter_mut().enumerate().skip(1) {
                let from_new_table = prev.get(m - 1).copied().unwrap_or(NEG_INFINITY);
                let from_join = match prev.get(m) {
                    Some(&v) if v > NEG_INFINITY => (n as f64 - m as f64 * a).ln() + v,
                    _ => NEG_INFINITY,
                };
                *slot = log_add_exp(from_new_table, from_join);
            }
            self.rows.push(next);
        }
    }
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == NEG_INFINITY {
        return b;
    }
    if b == NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// `log (x)_count`, the rising factorial `x (x+1) ... (x+count-1)`.
pub fn log_pochhammer(x: f64, count: u64) -> f64 {
    log_pochhammer_stride(x, 1.0, count)
}

/// `log (x|y)_count = log prod_{c<count} (x + c y)`.
pub fn log_pochhammer_stride(x: f64, y: f64, count: u64) -> f64 {
    (0..count).map(|c| (x + c as f64 * y).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn base_cases() {
        let mut cache = StirlingCache::new(0.5);
        assert_eq!(cache.log_stirling(0, 0), 0.0);
        assert_eq!(cache.log_stirling(1, 1), 0.0);
        assert_eq!(cache.log_stirling(1, 2), NEG_INFINITY);
        assert_eq!(cache.log_stirling(3, 0), NEG_INFINITY);
        assert_relative_eq!(cache.log_stirling(2, 1), 0.5f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn diagonal_is_zero() {
        let mut cache = StirlingCache::new(0.7);
        for n in 0..300 {
            assert_eq!(cache.log_stirling(n, n), 0.0, "n = {n}");
        }
    }

    #[test]
    fn zero_discount_matches_unsigned_stirling_first_kind() {
        // |s(4,2)| = 11, |s(5,3)| = 35
        let mut cache = StirlingCache::new(0.0);
        assert_relative_eq!(cache.log_stirling(4, 2), 11f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(cache.log_stirling(5, 3), 35f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn growth_keeps_existing_entries() {
        let mut cache = StirlingCache::new(0.01);
        let before: Vec<f64> = (1..=10).map(|m| cache.log_stirling(40, m)).collect();
        cache.ensure(5000, 200);
        assert!(cache.capacity() >= 5000);
        assert!(cache.width() >= 200);
        let after: Vec<f64> = (1..=10).map(|m| cache.log_stirling(40, m)).collect();
        assert_eq!(before, after);
        assert!(cache.log_stirling(5000, 150).is_finite());
    }

    #[test]
    fn read_only_lookup_outside_table() {
        let cache = StirlingCache::new(0.5);
        assert!(cache.get(10_000, 3).is_none());
        assert_eq!(cache.get(2, 5), Some(NEG_INFINITY));
    }

    #[test]
    fn pochhammer_values() {
        assert_relative_eq!(log_pochhammer(2.0, 3), 24f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(log_pochhammer_stride(1.0, 0.5, 3), 3f64.ln(), max_relative = 1e-14);
        assert_eq!(log_pochhammer(7.3, 0), 0.0);
        assert_eq!(log_pochhammer_stride(0.2, 0.9, 0), 0.0);
    }

    #[test]
    fn pochhammer_ratio_identity() {
        for &(beta, alpha) in &[(0.1, 0.01), (2.5, 0.7), (1.0, 0.0)] {
            for t in 0..50u64 {
                let ratio = (log_pochhammer_stride(beta, alpha, t + 1)
                    - log_pochhammer_stride(beta, alpha, t))
                .exp();
                let expected = beta + t as f64 * alpha;
                assert!(((ratio - expected) / expected).abs() < 1e-10);
            }
        }
    }
}
