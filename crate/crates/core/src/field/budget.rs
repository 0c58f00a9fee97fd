//! Per-tube error budgets.
//!
//! Tubes are taken in a fixed order and tube `m` (1-based) receives
//! `ε_m = min ε̃ / (7σ) · 3^{−m}`, where `σ` counts the multi-indices of
//! order at most `s` in three variables. Then `ε_m < min ε̃ / (6σ)` and the
//! tail `Σ_{n>m} ε_n = ε_m / 2 < ε_m`.

use crate::{Error, Result};

/// `card{α ∈ N³ : |α| ≤ s} = C(s + 3, 3)`.
pub fn multi_index_count(order: usize) -> usize {
    (order + 1) * (order + 2) * (order + 3) / 6
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBudget {
    order: usize,
    sigma: usize,
    tolerances: Vec<f64>,
    /// `position[a]` is the 1-based rank of tube `a` in the ordering.
    position: Vec<usize>,
    min_tolerance: f64,
}

/// Outcome of checking both budget inequalities term by term.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetCheck {
    pub terms: usize,
    /// `max_m ε_m · 6σ / min ε̃` (must stay below 1).
    pub worst_ratio: f64,
    /// `max_m (Σ_{n>m} ε_n) / ε_m` including the closed-form tail.
    pub worst_tail_ratio: f64,
    pub holds: bool,
}

/// Builds a budget from per-tube tolerances `ε̃_a`, derivative order `s` and
/// an ordering of the tubes (a permutation of `0..tolerances.len()`).
pub fn make_error_budget(tolerances: &[f64], order: usize, ordering: &[usize]) -> Result<ErrorBudget> {
    if tolerances.is_empty() {
        return Err(Error::InvalidParameter("error budget needs at least one tube".into()));
    }
    if let Some(t) = tolerances.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter(format!("tube tolerance must be positive (got {t})")));
    }
    let n = tolerances.len();
    let mut position = vec![0; n];
    if ordering.len() != n {
        return Err(Error::InvalidParameter(format!(
            "tube ordering has {} entries for {n} tubes",
            ordering.len()
        )));
    }
    for (rank, &a) in ordering.iter().enumerate() {
        if a >= n || position[a] != 0 {
            return Err(Error::InvalidParameter(format!("tube ordering is not a permutation: {ordering:?}")));
        }
        position[a] = rank + 1;
    }
    Ok(ErrorBudget {
        order,
        sigma: multi_index_count(order),
        tolerances: tolerances.to_vec(),
        position,
        min_tolerance: tolerances.iter().cloned().fold(f64::INFINITY, f64::min),
    })
}

impl ErrorBudget {
    /// Budget with tubes taken in index order.
    pub fn uniform(tolerances: &[f64], order: usize) -> Result<Self> {
        let ordering: Vec<usize> = (0..tolerances.len()).collect();
        make_error_budget(tolerances, order, &ordering)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn tolerances(&self) -> &[f64] {
        &self.tolerances
    }

    /// `ε̃_a`.
    pub fn tolerance(&self, tube: usize) -> f64 {
        self.tolerances[tube]
    }

    /// `ε_m` for `m ≥ 1`.
    pub fn epsilon(&self, m: usize) -> f64 {
        self.min_tolerance / (7.0 * self.sigma as f64) * 3f64.powi(-(m as i32))
    }

    /// `Σ_{n>m} ε_n` in closed form.
    pub fn tail(&self, m: usize) -> f64 {
        0.5 * self.epsilon(m)
    }

    /// `ε_m` of the tube's slot in the ordering.
    pub fn tube_epsilon(&self, tube: usize) -> f64 {
        self.epsilon(self.position[tube])
    }

    /// Least-squares weight `(ε_1/ε_tube)²`; the first tube has weight 1.
    pub fn weight(&self, tube: usize) -> f64 {
        (self.epsilon(1) / self.tube_epsilon(tube)).powi(2)
    }

    /// Checks both strict inequalities for `m = 1..=terms`, with partial
    /// sums over the explicit terms plus the closed-form tail beyond them.
    pub fn check(&self, terms: usize) -> BudgetCheck {
        let bound = self.min_tolerance / (6.0 * self.sigma as f64);
        let eps: Vec<f64> = (1..=terms).map(|m| self.epsilon(m)).collect();
        let mut worst_ratio = 0.0f64;
        let mut worst_tail_ratio = 0.0f64;
        let mut holds = true;
        let mut suffix = self.tail(terms);
        for m in (1..=terms).rev() {
            let e = eps[m - 1];
            worst_ratio = worst_ratio.max(e / bound);
            worst_tail_ratio = worst_tail_ratio.max(suffix / e);
            holds &= e < bound && suffix < e;
            suffix += e;
        }
        BudgetCheck {
            terms,
            worst_ratio,
            worst_tail_ratio,
            holds,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn enumerate_multi_indices(order: usize) -> usize {
        let mut count = 0;
        for a in 0..=order {
            for b in 0..=order {
                for c in 0..=order {
                    if a + b + c <= order {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn sigma_counts_multi_indices() {
        for s in 0..6 {
            assert_eq!(multi_index_count(s), enumerate_multi_indices(s));
        }
        assert_eq!(multi_index_count(0), 1);
        assert_eq!(multi_index_count(1), 4);
        assert_eq!(multi_index_count(2), 10);
    }

    #[test]
    fn first_term_example() {
        let b = make_error_budget(&[0.7, 1.5], 2, &[1, 0]).unwrap();
        assert_eq!(b.sigma(), 10);
        assert_relative_eq!(b.epsilon(1), 0.7 / 210.0, epsilon = 1e-18);
        assert_relative_eq!(b.epsilon(1), 3.3333333333333335e-3, epsilon = 1e-15);
        assert!(b.check(50).holds);
        assert_eq!(b.tube_epsilon(1), b.epsilon(1));
        assert_relative_eq!(b.weight(0), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn tail_ratio_is_one_half() {
        let b = ErrorBudget::uniform(&[0.01, 0.02, 0.03], 1).unwrap();
        let c = b.check(50);
        assert!(c.holds);
        assert_relative_eq!(c.worst_tail_ratio, 0.5, epsilon = 1e-12);
        assert_relative_eq!(c.worst_ratio, 6.0 / 21.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_budgets() {
        assert!(make_error_budget(&[], 0, &[]).is_err());
        assert!(make_error_budget(&[0.0], 0, &[0]).is_err());
        assert!(make_error_budget(&[1.0, 1.0], 0, &[0, 0]).is_err());
        assert!(make_error_budget(&[1.0], 0, &[1]).is_err());
    }
}
