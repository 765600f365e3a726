//! Probability comparison policy: exact on population objects, plug-in
//! tolerance on sample estimates.
//!
//! A sample comparison treats two cell probabilities as tied when they are
//! within `max(floor, z_mult * se)` of each other, where `se` is each cell's
//! binomial standard error; cells with fewer than `min_cell` observations are
//! reported as underpowered rather than compared.

use crate::scalar::Scalar;

/// Plug-in tolerance rule for sample comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceRule {
    pub floor: f64,
    pub z_mult: f64,
    pub min_cell: u64,
    /// Fixed epsilon override; disables the adaptive part when set.
    pub fixed: Option<f64>,
}

impl Default for ToleranceRule {
    fn default() -> Self {
        Self {
            floor: 0.02,
            z_mult: 3.0,
            min_cell: 30,
            fixed: None,
        }
    }
}

impl ToleranceRule {
    pub fn fixed(eps: f64) -> Self {
        Self {
            fixed: Some(eps),
            ..Self::default()
        }
    }

    fn cell_epsilon(&self, p: f64, n: Option<u64>) -> f64 {
        if let Some(eps) = self.fixed {
            return eps;
        }
        match n {
            Some(n) if n > 0 => {
                let se = (p * (1.0 - p) / n as f64).sqrt();
                self.floor.max(self.z_mult * se)
            }
            // No count attached: the exact side of a comparison.
            _ => 0.0,
        }
    }
}

/// Three-way comparison outcome, with an underpowered escape hatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering3 {
    Lt,
    Eq,
    Gt,
    Underpowered,
}

/// Comparison context threaded through every check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbComparer {
    Exact,
    Sample(ToleranceRule),
}

impl ProbComparer {
    pub fn exact() -> Self {
        ProbComparer::Exact
    }

    pub fn sample(rule: ToleranceRule) -> Self {
        ProbComparer::Sample(rule)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ProbComparer::Exact)
    }

    /// Compare two probabilities; counts are the sizes of the conditioning
    /// cells the probabilities were estimated on (None for exact values).
    pub fn compare<T: Scalar>(
        &self,
        a: &T,
        n_a: Option<u64>,
        b: &T,
        n_b: Option<u64>,
    ) -> Ordering3 {
        match self {
            ProbComparer::Exact => match crate::scalar::cmp_scalar(a, b) {
                std::cmp::Ordering::Less => Ordering3::Lt,
                std::cmp::Ordering::Equal => Ordering3::Eq,
                std::cmp::Ordering::Greater => Ordering3::Gt,
            },
            ProbComparer::Sample(rule) => {
                for n in [n_a, n_b].into_iter().flatten() {
                    if n < rule.min_cell {
                        return Ordering3::Underpowered;
                    }
                }
                let (fa, fb) = (a.to_f64(), b.to_f64());
                // Union bound: if each estimate sits inside its own band,
                // the difference sits inside the sum of the bands. A fixed
                // override is the whole comparison budget instead.
                let eps = match rule.fixed {
                    Some(eps) => eps,
                    None => rule.cell_epsilon(fa, n_a) + rule.cell_epsilon(fb, n_b),
                };
                if (fa - fb).abs() <= eps {
                    Ordering3::Eq
                } else if fa < fb {
                    Ordering3::Lt
                } else {
                    Ordering3::Gt
                }
            }
        }
    }

    /// Epsilon that would be applied to a comparison, for report output.
    pub fn applied_tolerance(&self, p: f64, n: Option<u64>) -> Option<f64> {
        match self {
            ProbComparer::Exact => None,
            ProbComparer::Sample(rule) => Some(rule.cell_epsilon(p, n)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn exact_comparison_is_strict() {
        let c = ProbComparer::exact();
        let a = Rational::from_ratio(1, 3);
        let b = Rational::from_ratio(333333, 1000000);
        assert_eq!(c.compare(&a, None, &b, None), Ordering3::Gt);
        assert_eq!(c.compare(&a, None, &a.clone(), None), Ordering3::Eq);
    }

    #[test]
    fn sample_comparison_ties_within_floor() {
        let c = ProbComparer::sample(ToleranceRule::default());
        assert_eq!(
            c.compare(&0.50f64, Some(10_000), &0.51, Some(10_000)),
            Ordering3::Eq
        );
        assert_eq!(
            c.compare(&0.50f64, Some(10_000), &0.60, Some(10_000)),
            Ordering3::Lt
        );
    }

    #[test]
    fn small_cells_are_underpowered() {
        let c = ProbComparer::sample(ToleranceRule::default());
        assert_eq!(
            c.compare(&0.5f64, Some(10), &0.9, Some(10_000)),
            Ordering3::Underpowered
        );
    }

    #[test]
    fn fixed_override_wins() {
        let c = ProbComparer::sample(ToleranceRule::fixed(0.5));
        assert_eq!(
            c.compare(&0.2f64, Some(100), &0.6, Some(100)),
            Ordering3::Eq
        );
    }
}
