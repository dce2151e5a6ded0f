//! Coefficients of the `K`-step fractional update.
//!
//! Applying `K` sub-updates at rate `r = alpha / K` against a fixed target
//! yields `Q + (K r + sum_{j=2..K} (-1)^(j-1) c[j][K] r^j) * TD`. Two tables
//! are provided:
//!
//! - [`coeff_table`] builds `c` from the stated base cases: `c[k][k] = 1`,
//!   `c[2][k] = 3` for `k >= 3`, and `c[j][k+1] = c[j][k] + c[j-1][k]` for the
//!   interior.
//! - [`binomial_table`] holds `c[j][k] = C(k, j)`, which is what the
//!   iteration actually produces, since the sequence collapses to
//!   `Q + (1 - (1 - r)^K) * TD`.
//!
//! The two agree for `K <= 3` and diverge afterwards.

use crate::tabular::{q_update_fractional, QTable, TDParams};

/// Triangular integer table `c[j][k]` for `2 <= j <= k <= k_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffTable {
    k_max: usize,
    c: Vec<Vec<u128>>,
}

impl CoeffTable {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `c[j][k]`; panics outside `2 <= j <= k <= k_max`.
    pub fn get(&self, j: usize, k: usize) -> u128 {
        assert!(
            (2..=k).contains(&j) && k <= self.k_max,
            "c[{j}][{k}] is outside the table"
        );
        self.c[k][j]
    }

    /// `sum_{j=2..k} (-1)^(j-1) c[j][k] r^j`, evaluated in floating point.
    pub fn addon(&self, k: usize, r: f64) -> f64 {
        (2..=k)
            .map(|j| {
                let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
                sign * self.get(j, k) as f64 * r.powi(j as i32)
            })
            .sum()
    }
}

fn empty(k_max: usize) -> Vec<Vec<u128>> {
    (0..=k_max).map(|k| vec![0; k + 1]).collect()
}

/// Table from the stated base cases and recursion.
pub fn coeff_table(k_max: usize) -> CoeffTable {
    assert!(k_max >= 2, "coefficient table needs k_max >= 2");
    let mut c = empty(k_max);
    for k in 2..=k_max {
        c[k][k] = 1;
        if k >= 3 {
            c[k][2] = 3;
        }
        for j in 3..k {
            c[k][j] = c[k - 1][j] + c[k - 1][j - 1];
        }
    }
    CoeffTable { k_max, c }
}

/// `c[j][k] = C(k, j)`.
pub fn binomial_table(k_max: usize) -> CoeffTable {
    assert!(k_max >= 2, "coefficient table needs k_max >= 2");
    let mut c = empty(k_max);
    // Pascal's rule with c[1][k] = k and c[k][k] = 1
    let mut prev: Vec<u128> = vec![1, 1];
    for k in 2..=k_max {
        let mut row = vec![1u128; k + 1];
        for j in 1..k {
            row[j] = prev[j] + prev[j - 1];
        }
        c[k][2..=k].copy_from_slice(&row[2..=k]);
        prev = row;
    }
    CoeffTable { k_max, c }
}

/// `Q + (K r) TD + TD * addon` with `r = alpha / K`.
pub fn closed_form(q_init: f64, td: f64, alpha: f64, k: usize, table: &CoeffTable) -> f64 {
    let r = alpha / k as f64;
    let addon = if k >= 2 { table.addon(k, r) } else { 0.0 };
    q_init + k as f64 * r * td + td * addon
}

/// Runs `K` fractional sub-updates on a two-state table where the target
/// state differs from the updated one, so the bootstrap term stays fixed.
pub fn iterate_fractional(q_init: f64, reward: f64, bootstrap: f64, alpha: f64, k: usize) -> f64 {
    let mut q = QTable::new(2, 1);
    q.set(0, 0, q_init);
    q.set(1, 0, bootstrap);
    let pairs = vec![(0, 1); k];
    q_update_fractional(
        &mut q,
        &pairs,
        0,
        reward,
        false,
        &TDParams::new(alpha, 1.0, k),
    );
    q.get(0, 0)
}

/// `|iterative - closed form|` for one instance, with `gamma = 1` folded
/// into `bootstrap`.
pub fn verify_fractional_theorem(
    q_init: f64,
    reward: f64,
    bootstrap: f64,
    alpha: f64,
    k: usize,
    table: &CoeffTable,
) -> f64 {
    let td = reward + bootstrap - q_init;
    (iterate_fractional(q_init, reward, bootstrap, alpha, k)
        - closed_form(q_init, td, alpha, k, table))
    .abs()
}

/// `|sum_{j=2..K} (-1)^(j-1) c[j][K] (alpha/K)^j|`; zero for `K = 1`.
pub fn addon_magnitude(alpha: f64, k: usize, table: &CoeffTable) -> f64 {
    assert!(k >= 1);
    if k == 1 {
        return 0.0;
    }
    table.addon(k, alpha / k as f64).abs()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn stated_base_cases_and_recursion() {
        let c = coeff_table(50);
        for k in 2..=50 {
            assert_eq!(c.get(k, k), 1);
        }
        for k in 3..=50 {
            assert_eq!(c.get(2, k), 3);
        }
        for k in 3..50 {
            for j in 3..=k {
                assert_eq!(c.get(j, k + 1), c.get(j, k) + c.get(j - 1, k));
            }
        }
        assert_eq!(c.get(3, 4), 4);
        assert_eq!(c.get(2, 2), 1);
    }

    #[test]
    fn binomial_rows() {
        let b = binomial_table(50);
        assert_eq!(b.get(2, 5), 10);
        assert_eq!(b.get(3, 6), 20);
        assert_eq!(b.get(25, 50), 126_410_606_437_752);
        for k in 3..50 {
            for j in 3..=k {
                assert_eq!(b.get(j, k + 1), b.get(j, k) + b.get(j - 1, k));
            }
        }
    }

    #[test]
    fn tables_agree_up_to_three() {
        let (c, b) = (coeff_table(10), binomial_table(10));
        for k in 2..=3 {
            for j in 2..=k {
                assert_eq!(c.get(j, k), b.get(j, k));
            }
        }
        assert_ne!(c.get(2, 4), b.get(2, 4));
    }

    #[test]
    fn k1_has_no_addon() {
        let c = coeff_table(2);
        assert_eq!(addon_magnitude(1.0, 1, &c), 0.0);
        assert_eq!(verify_fractional_theorem(1.0, -1.0, 3.0, 0.7, 1, &c), 0.0);
    }

    #[test]
    fn k2_addon_uses_diagonal() {
        let c = coeff_table(2);
        assert_eq!(addon_magnitude(1.0, 2, &c), 0.25 * c.get(2, 2) as f64);
    }

    /// `(1 - r)^K - 1 + K r`, the add-on implied by the exact iteration.
    fn geometric_addon(alpha: f64, k: usize) -> f64 {
        let r = alpha / k as f64;
        (1.0 - r).powi(k as i32) - 1.0 + k as f64 * r
    }

    #[test]
    fn binomial_addon_matches_geometric_form() {
        let b = binomial_table(30);
        for k in 2..=30 {
            for alpha in [0.1, 0.5, 1.0] {
                assert!(
                    (addon_magnitude(alpha, k, &b) - geometric_addon(alpha, k).abs()).abs() < 1e-12
                );
            }
        }
    }

    #[test]
    fn stated_table_addon_values() {
        // frozen from an independent summation of the same table
        let c = coeff_table(20);
        let expect = [
            (5, 0.071_68),
            (10, 0.013_870_610_1),
            (14, 0.006_612_538_788_8),
        ];
        for (k, v) in expect {
            assert!(
                (addon_magnitude(1.0, k, &c) - v).abs() < 1e-10,
                "K={k}: {}",
                addon_magnitude(1.0, k, &c)
            );
        }
    }

    #[test]
    fn stated_table_deviates_beyond_three() {
        let c = coeff_table(20);
        assert!(verify_fractional_theorem(0.0, 1.0, 0.0, 0.1, 3, &c) < 1e-15);
        let dev = verify_fractional_theorem(0.0, 1.0, 0.0, 0.1, 20, &c);
        assert!((dev - 0.004_541_721_329).abs() < 1e-9, "{dev}");
    }

    proptest! {
        #[test]
        fn binomial_closed_form_matches_iteration(
            q in -10.0f64..10.0,
            reward in -10.0f64..10.0,
            boot in -10.0f64..10.0,
            k in 1usize..=20,
            alpha in prop_oneof![Just(0.1f64), Just(1.0f64)],
        ) {
            let b = binomial_table(20);
            prop_assert!(verify_fractional_theorem(q, reward, boot, alpha, k, &b) < 1e-10);
        }
    }
}
