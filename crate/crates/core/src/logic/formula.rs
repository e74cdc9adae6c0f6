use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Comparison used by an atomic predicate `x ~ c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparison {
    /// `x >= c`
    Ge,
    /// `x < c`
    Lt,
}

impl Comparison {
    pub fn holds<T: Scalar>(self, value: T, threshold: T) -> bool {
        match self {
            Comparison::Ge => value >= threshold,
            Comparison::Lt => value < threshold,
        }
    }

    /// Signed margin, positive when the comparison holds strictly.
    pub fn margin<T: Scalar>(self, value: T, threshold: T) -> T {
        match self {
            Comparison::Ge => value - threshold,
            Comparison::Lt => threshold - value,
        }
    }

    /// Derivative of [`Comparison::margin`] with respect to the threshold.
    pub fn threshold_sign<T: Scalar>(self) -> T {
        match self {
            Comparison::Ge => -T::one(),
            Comparison::Lt => T::one(),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Ge => ">=",
            Comparison::Lt => "<",
        }
    }
}

/// Closed integer window `[start, end]` of sample offsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::Interval { start, end });
        }
        Ok(Self { start, end })
    }

    /// Number of sample points covered, `end - start + 1`.
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Body of a bounded temporal operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Temporal<T> {
    pub interval: Interval,
    /// One weight per point of the window, in window order.
    pub weights: Vec<T>,
    pub child: Box<Formula<T>>,
}

/// A weighted signal temporal logic formula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Formula<T> {
    Predicate {
        cmp: Comparison,
        threshold: T,
        weight: T,
    },
    Not(Box<Formula<T>>),
    And {
        children: Vec<Formula<T>>,
        weights: Vec<T>,
    },
    Or {
        children: Vec<Formula<T>>,
        weights: Vec<T>,
    },
    Always(Temporal<T>),
    Eventually(Temporal<T>),
}

impl<T: Scalar> Formula<T> {
    pub fn predicate(cmp: Comparison, threshold: T) -> Self {
        Formula::Predicate {
            cmp,
            threshold,
            weight: T::one(),
        }
    }

    pub fn ge(threshold: T) -> Self {
        Self::predicate(Comparison::Ge, threshold)
    }

    pub fn lt(threshold: T) -> Self {
        Self::predicate(Comparison::Lt, threshold)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: Formula<T>) -> Self {
        Formula::Not(Box::new(child))
    }

    pub fn and(children: Vec<Formula<T>>) -> Self {
        let weights = vec![T::one(); children.len()];
        Formula::And { children, weights }
    }

    pub fn or(children: Vec<Formula<T>>) -> Self {
        let weights = vec![T::one(); children.len()];
        Formula::Or { children, weights }
    }

    pub fn always(start: usize, end: usize, child: Formula<T>) -> Result<Self> {
        Ok(Formula::Always(Temporal::unit(Interval::new(start, end)?, child)))
    }

    pub fn eventually(start: usize, end: usize, child: Formula<T>) -> Result<Self> {
        Ok(Formula::Eventually(Temporal::unit(
            Interval::new(start, end)?,
            child,
        )))
    }

    /// Replaces the weights of the root node. Fails when the node carries
    /// no weights (negation) or the count does not match.
    pub fn with_weights(mut self, new: Vec<T>) -> Result<Self> {
        match &mut self {
            Formula::Predicate { weight, .. } => {
                if new.len() != 1 {
                    return Err(Error::Malformed(format!(
                        "a predicate takes exactly one weight, got {}",
                        new.len()
                    )));
                }
                *weight = new[0];
            }
            Formula::Not(_) => {
                return Err(Error::Malformed("negation carries no weights".into()));
            }
            Formula::And { children, weights } | Formula::Or { children, weights } => {
                if new.len() != children.len() {
                    return Err(Error::Malformed(format!(
                        "expected {} weights, got {}",
                        children.len(),
                        new.len()
                    )));
                }
                *weights = new;
            }
            Formula::Always(body) | Formula::Eventually(body) => {
                if new.len() != body.interval.len() {
                    return Err(Error::Malformed(format!(
                        "window of length {} needs {} weights, got {}",
                        body.interval.len(),
                        body.interval.len(),
                        new.len()
                    )));
                }
                body.weights = new;
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Checks every structural invariant of the AST.
    pub fn validate(&self) -> Result<()> {
        let check_weights = |ws: &[T]| -> Result<()> {
            for &w in ws {
                if !w.is_finite() {
                    return Err(Error::Malformed(format!("non-finite weight {w}")));
                }
                if w < T::zero() {
                    return Err(Error::NegativeWeight(w.to_f64_lossy()));
                }
            }
            Ok(())
        };
        match self {
            Formula::Predicate {
                threshold, weight, ..
            } => {
                if !threshold.is_finite() {
                    return Err(Error::Malformed(format!("non-finite threshold {threshold}")));
                }
                check_weights(std::slice::from_ref(weight))
            }
            Formula::Not(child) => child.validate(),
            Formula::And { children, weights } | Formula::Or { children, weights } => {
                if children.len() < 2 {
                    return Err(Error::Malformed(
                        "conjunction and disjunction need at least two operands".into(),
                    ));
                }
                if weights.len() != children.len() {
                    return Err(Error::Malformed(format!(
                        "{} operands but {} weights",
                        children.len(),
                        weights.len()
                    )));
                }
                check_weights(weights)?;
                children.iter().try_for_each(Formula::validate)
            }
            Formula::Always(body) | Formula::Eventually(body) => {
                let Interval { start, end } = body.interval;
                if start > end {
                    return Err(Error::Interval { start, end });
                }
                if body.weights.len() != body.interval.len() {
                    return Err(Error::Malformed(format!(
                        "window [{start},{end}] has {} weights",
                        body.weights.len()
                    )));
                }
                check_weights(&body.weights)?;
                body.child.validate()
            }
        }
    }

    /// Number of samples past `t` the formula reads: the sum of nested
    /// window ends along the deepest path.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::Predicate { .. } => 0,
            Formula::Not(child) => child.horizon(),
            Formula::And { children, .. } | Formula::Or { children, .. } => {
                children.iter().map(Formula::horizon).max().unwrap_or(0)
            }
            Formula::Always(body) | Formula::Eventually(body) => {
                body.interval.end + body.child.horizon()
            }
        }
    }

    /// Same structure with every weight set to one.
    pub fn strip_weights(&self) -> Self {
        match self {
            Formula::Predicate { cmp, threshold, .. } => Formula::predicate(*cmp, *threshold),
            Formula::Not(child) => Formula::not(child.strip_weights()),
            Formula::And { children, .. } => {
                Formula::and(children.iter().map(Formula::strip_weights).collect())
            }
            Formula::Or { children, .. } => {
                Formula::or(children.iter().map(Formula::strip_weights).collect())
            }
            Formula::Always(body) => Formula::Always(body.strip()),
            Formula::Eventually(body) => Formula::Eventually(body.strip()),
        }
    }

    /// Calls `visit` on every node in pre-order.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Formula<T>)) {
        visit(self);
        match self {
            Formula::Predicate { .. } => {}
            Formula::Not(child) => child.walk(visit),
            Formula::And { children, .. } | Formula::Or { children, .. } => {
                children.iter().for_each(|c| c.walk(visit))
            }
            Formula::Always(body) | Formula::Eventually(body) => body.child.walk(visit),
        }
    }

    pub fn is_temporal(&self) -> bool {
        matches!(self, Formula::Always(_) | Formula::Eventually(_))
    }
}

impl<T: Scalar> Temporal<T> {
    pub fn unit(interval: Interval, child: Formula<T>) -> Self {
        Self {
            interval,
            weights: vec![T::one(); interval.len()],
            child: Box::new(child),
        }
    }

    fn strip(&self) -> Self {
        Self::unit(self.interval, self.child.strip_weights())
    }
}

/// Discrete-time scalar signal. Logic operates on sample indices; the
/// sample period is carried as metadata only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signal<T> {
    samples: Vec<T>,
    period: T,
}

impl<T: Scalar> Signal<T> {
    pub fn new(samples: Vec<T>) -> Result<Self> {
        Self::with_period(samples, T::one())
    }

    pub fn with_period(samples: Vec<T>, period: T) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Signal("a signal needs at least one sample".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Signal(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, period })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }
}
