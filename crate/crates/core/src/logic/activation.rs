//! Arithmetic-geometric aggregation functions behind the weighted
//! robustness of conjunction, disjunction, always and eventually.
//!
//! Conjunction (and "always" over a window) of `N` weighted operands:
//!
//! ```text
//! all ρᵢ > 0 :  (Π (1 + wᵢρᵢ))^(1/N) - 1
//! otherwise  :  (1/N) Σ [wᵢρᵢ]₋
//! ```
//!
//! Disjunction (and "eventually") is the dual:
//!
//! ```text
//! some ρᵢ > 0 :  (1/N) Σ [wᵢρᵢ]₊
//! otherwise   :  1 - (Π (1 - wᵢρᵢ))^(1/N)
//! ```
//!
//! Geometric means are evaluated in log space with `ln_1p`/`exp_m1`, so the
//! sign of the result is exact even for tiny operands.

use serde::{Deserialize, Serialize};

use crate::scalar::{neg_part, pos_part, Scalar};

/// Which aggregation an operator uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregate {
    /// `g^∧` / `g^□`
    Conjunction,
    /// `g^∨` / `g^◇`
    Disjunction,
}

/// Which piece of the piecewise definition produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Geometric piece: every operand positive (conjunction) or every
    /// operand non-positive (disjunction).
    Geometric,
    /// Arithmetic piece over clipped parts.
    Arithmetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Activation<T> {
    pub value: T,
    pub branch: Branch,
}

impl Aggregate {
    /// Evaluates the aggregation. An empty operand list yields zero.
    pub fn apply<T: Scalar>(self, weights: &[T], rho: &[T]) -> Activation<T> {
        debug_assert_eq!(weights.len(), rho.len());
        let n = rho.len();
        if n == 0 {
            return Activation {
                value: T::zero(),
                branch: Branch::Arithmetic,
            };
        }
        let inv_n = T::one() / T::from_usize_lossy(n);
        let products = weights.iter().zip(rho).map(|(&w, &r)| w * r);
        match self {
            Aggregate::Conjunction => {
                if rho.iter().all(|&r| r > T::zero()) {
                    let log_sum: T = products.map(|q| q.ln_1p()).sum();
                    Activation {
                        value: (log_sum * inv_n).exp_m1(),
                        branch: Branch::Geometric,
                    }
                } else {
                    let sum: T = products.map(neg_part).sum();
                    Activation {
                        value: sum * inv_n,
                        branch: Branch::Arithmetic,
                    }
                }
            }
            Aggregate::Disjunction => {
                if rho.iter().any(|&r| r > T::zero()) {
                    let sum: T = products.map(pos_part).sum();
                    Activation {
                        value: sum * inv_n,
                        branch: Branch::Arithmetic,
                    }
                } else {
                    let log_sum: T = products.map(|q| (-q).ln_1p()).sum();
                    Activation {
                        value: -(log_sum * inv_n).exp_m1(),
                        branch: Branch::Geometric,
                    }
                }
            }
        }
    }

    /// Accumulates `upstream · ∂g/∂wᵢ` into `grad_w` (when given) and
    /// `upstream · ∂g/∂ρᵢ` into `grad_rho`, along the branch recorded in
    /// `act`. At the kink of a clipped part the non-positive side is taken.
    pub fn backward<T: Scalar>(
        self,
        weights: &[T],
        rho: &[T],
        act: Activation<T>,
        upstream: T,
        mut grad_w: Option<&mut [T]>,
        grad_rho: &mut [T],
    ) {
        let n = rho.len();
        if n == 0 || upstream == T::zero() {
            return;
        }
        let inv_n = T::one() / T::from_usize_lossy(n);
        for i in 0..n {
            let (w, r) = (weights[i], rho[i]);
            let q = w * r;
            // ∂g/∂q; then ∂q/∂w = r and ∂q/∂r = w.
            let dq = match (self, act.branch) {
                (Aggregate::Conjunction, Branch::Geometric) => {
                    (act.value + T::one()) * inv_n / (T::one() + q)
                }
                (Aggregate::Conjunction, Branch::Arithmetic) => {
                    if q <= T::zero() {
                        inv_n
                    } else {
                        T::zero()
                    }
                }
                (Aggregate::Disjunction, Branch::Arithmetic) => {
                    if q > T::zero() {
                        inv_n
                    } else {
                        T::zero()
                    }
                }
                (Aggregate::Disjunction, Branch::Geometric) => {
                    (T::one() - act.value) * inv_n / (T::one() - q)
                }
            };
            let g = upstream * dq;
            if let Some(gw) = grad_w.as_deref_mut() {
                gw[i] = gw[i] + g * r;
            }
            grad_rho[i] = grad_rho[i] + g * w;
        }
    }
}

/// Smallest distance of any operand from the sign switch that selects the
/// branch or the clipping of its part.
pub fn branch_margin<T: Scalar>(rho: &[T]) -> T {
    rho.iter()
        .map(|r| r.abs())
        .fold(T::infinity(), |a, b| a.min(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjunction_all_positive_is_geometric() {
        let a = Aggregate::Conjunction.apply(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(a.branch, Branch::Geometric);
        assert!((a.value - 1.0f64).abs() < 1e-12);
    }

    #[test]
    fn conjunction_otherwise_is_mean_of_negative_parts() {
        let a = Aggregate::Conjunction.apply(&[1.0, 1.0], &[-1.0, 0.5]);
        assert_eq!(a.branch, Branch::Arithmetic);
        assert!((a.value + 0.5f64).abs() < 1e-12);
    }

    #[test]
    fn disjunction_pieces() {
        let a = Aggregate::Disjunction.apply(&[1.0, 1.0], &[-1.0, 0.5]);
        assert_eq!(a.branch, Branch::Arithmetic);
        assert!((a.value - 0.25f64).abs() < 1e-12);
        // -(1.5)^(1/1)... for a constant -0.5 window the geometric piece
        // returns the operand itself.
        let b = Aggregate::Disjunction.apply(&[1.0; 4], &[-0.5; 4]);
        assert_eq!(b.branch, Branch::Geometric);
        assert!((b.value + 0.5f64).abs() < 1e-12);
    }

    #[test]
    fn single_operand_scales_by_weight() {
        for agg in [Aggregate::Conjunction, Aggregate::Disjunction] {
            for r in [-0.7f64, 0.3] {
                let a = agg.apply(&[2.5], &[r]);
                assert!((a.value - 2.5 * r).abs() < 1e-12, "{agg:?} {r}");
            }
        }
    }

    #[test]
    fn zero_weights_annihilate() {
        for agg in [Aggregate::Conjunction, Aggregate::Disjunction] {
            for rho in [[1.0f64, 2.0], [-1.0, 3.0], [-1.0, -2.0]] {
                assert_eq!(agg.apply(&[0.0, 0.0], &rho).value, 0.0);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let cases: [(&[f64], &[f64]); 4] = [
            (&[0.7, 1.3, 0.4], &[0.2, 0.9, 0.5]),
            (&[0.7, 1.3, 0.4], &[-0.2, 0.9, 0.5]),
            (&[0.7, 1.3, 0.4], &[-0.2, -0.9, -0.5]),
            (&[2.0, 0.1], &[0.3, -0.4]),
        ];
        let eps = 1e-6;
        for agg in [Aggregate::Conjunction, Aggregate::Disjunction] {
            for (w, r) in cases {
                let act = agg.apply(w, r);
                let mut gw = vec![0.0; w.len()];
                let mut gr = vec![0.0; r.len()];
                agg.backward(w, r, act, 1.0, Some(&mut gw), &mut gr);
                for i in 0..w.len() {
                    let mut wp = w.to_vec();
                    let mut wm = w.to_vec();
                    wp[i] += eps;
                    wm[i] -= eps;
                    let fd = (agg.apply(&wp, r).value - agg.apply(&wm, r).value) / (2.0 * eps);
                    assert!((fd - gw[i]).abs() < 1e-7, "{agg:?} w{i}: {fd} vs {}", gw[i]);
                    let mut rp = r.to_vec();
                    let mut rm = r.to_vec();
                    rp[i] += eps;
                    rm[i] -= eps;
                    let fd = (agg.apply(w, &rp).value - agg.apply(w, &rm).value) / (2.0 * eps);
                    assert!((fd - gr[i]).abs() < 1e-7, "{agg:?} rho{i}: {fd} vs {}", gr[i]);
                }
            }
        }
    }
}
