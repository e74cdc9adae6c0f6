//! Boolean satisfaction, classic min/max robustness and weighted
//! arithmetic-geometric robustness of a formula at a sample index.

use crate::error::{Error, Result};
use crate::logic::activation::Aggregate;
use crate::logic::formula::{Formula, Signal, Temporal};
use crate::scalar::Scalar;

fn check_horizon<T: Scalar>(f: &Formula<T>, x: &Signal<T>, t: usize) -> Result<()> {
    let horizon = f.horizon();
    if t + horizon > x.len() - 1 {
        return Err(Error::Horizon {
            horizon,
            time: t,
            len: x.len(),
        });
    }
    Ok(())
}

/// Standard STL satisfaction. Weights are ignored.
pub fn eval_boolean<T: Scalar>(f: &Formula<T>, x: &Signal<T>, t: usize) -> Result<bool> {
    check_horizon(f, x, t)?;
    Ok(boolean_at(f, x.samples(), t))
}

fn boolean_at<T: Scalar>(f: &Formula<T>, x: &[T], t: usize) -> bool {
    match f {
        Formula::Predicate { cmp, threshold, .. } => cmp.holds(x[t], *threshold),
        Formula::Not(child) => !boolean_at(child, x, t),
        Formula::And { children, .. } => children.iter().all(|c| boolean_at(c, x, t)),
        Formula::Or { children, .. } => children.iter().any(|c| boolean_at(c, x, t)),
        Formula::Always(body) => window(body, t).all(|s| boolean_at(&body.child, x, s)),
        Formula::Eventually(body) => window(body, t).any(|s| boolean_at(&body.child, x, s)),
    }
}

/// Traditional robustness: predicate margin, min for conjunction and
/// always, max for disjunction and eventually.
pub fn robustness_classic<T: Scalar>(f: &Formula<T>, x: &Signal<T>, t: usize) -> Result<T> {
    check_horizon(f, x, t)?;
    Ok(classic_at(f, x.samples(), t))
}

fn classic_at<T: Scalar>(f: &Formula<T>, x: &[T], t: usize) -> T {
    let min = |a: T, b: T| a.min(b);
    let max = |a: T, b: T| a.max(b);
    match f {
        Formula::Predicate { cmp, threshold, .. } => cmp.margin(x[t], *threshold),
        Formula::Not(child) => -classic_at(child, x, t),
        Formula::And { children, .. } => children
            .iter()
            .map(|c| classic_at(c, x, t))
            .fold(T::infinity(), min),
        Formula::Or { children, .. } => children
            .iter()
            .map(|c| classic_at(c, x, t))
            .fold(T::neg_infinity(), max),
        Formula::Always(body) => window(body, t)
            .map(|s| classic_at(&body.child, x, s))
            .fold(T::infinity(), min),
        Formula::Eventually(body) => window(body, t)
            .map(|s| classic_at(&body.child, x, s))
            .fold(T::neg_infinity(), max),
    }
}

/// Weighted robustness. A predicate contributes `(w/2)·margin`; operators
/// aggregate their weighted operands with [`Aggregate`].
pub fn robustness_weighted<T: Scalar>(f: &Formula<T>, x: &Signal<T>, t: usize) -> Result<T> {
    check_horizon(f, x, t)?;
    Ok(weighted_at(f, x.samples(), t))
}

pub(crate) fn weighted_at<T: Scalar>(f: &Formula<T>, x: &[T], t: usize) -> T {
    match f {
        Formula::Predicate {
            cmp,
            threshold,
            weight,
        } => *weight / T::lit(2.0) * cmp.margin(x[t], *threshold),
        Formula::Not(child) => -weighted_at(child, x, t),
        Formula::And { children, weights } => {
            let rho: Vec<T> = children.iter().map(|c| weighted_at(c, x, t)).collect();
            Aggregate::Conjunction.apply(weights, &rho).value
        }
        Formula::Or { children, weights } => {
            let rho: Vec<T> = children.iter().map(|c| weighted_at(c, x, t)).collect();
            Aggregate::Disjunction.apply(weights, &rho).value
        }
        Formula::Always(body) => {
            let rho: Vec<T> = window(body, t)
                .map(|s| weighted_at(&body.child, x, s))
                .collect();
            Aggregate::Conjunction.apply(&body.weights, &rho).value
        }
        Formula::Eventually(body) => {
            let rho: Vec<T> = window(body, t)
                .map(|s| weighted_at(&body.child, x, s))
                .collect();
            Aggregate::Disjunction.apply(&body.weights, &rho).value
        }
    }
}

fn window<T>(body: &Temporal<T>, t: usize) -> std::ops::RangeInclusive<usize> {
    t + body.interval.start..=t + body.interval.end
}
