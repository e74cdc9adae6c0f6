use std::fmt::Write;

use crate::logic::formula::Formula;
use crate::scalar::Scalar;

/// Canonical text form. Reparses to an identical AST; weight groups are
/// printed only when some weight differs from one.
pub fn format_formula<T: Scalar>(f: &Formula<T>) -> String {
    let mut out = String::new();
    write_top(f, &mut out, None);
    out
}

/// Display form that drops conjunction/disjunction operands whose weight is
/// below `min_weight`. Evaluation is unaffected; this is for reading only.
pub fn format_pruned<T: Scalar>(f: &Formula<T>, min_weight: T) -> String {
    let mut out = String::new();
    write_top(f, &mut out, Some(min_weight));
    out
}

fn weights_are_unit<T: Scalar>(ws: &[T]) -> bool {
    ws.iter().all(|&w| w == T::one())
}

fn write_weights<T: Scalar>(ws: &[T], out: &mut String) {
    out.push_str("{w=");
    for (i, w) in ws.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{w}").unwrap();
    }
    out.push('}');
}

/// Operands of an n-ary node that survive display pruning.
fn kept<'a, T: Scalar>(
    children: &'a [Formula<T>],
    weights: &'a [T],
    prune: Option<T>,
) -> Vec<(&'a Formula<T>, T)> {
    children
        .iter()
        .zip(weights.iter().copied())
        .filter(|(_, w)| prune.is_none_or(|min| *w >= min))
        .collect()
}

fn write_top<T: Scalar>(f: &Formula<T>, out: &mut String, prune: Option<T>) {
    match f {
        Formula::And { children, weights } | Formula::Or { children, weights } => {
            let live = kept(children, weights, prune);
            match live.len() {
                0 => out.push_str("()"),
                1 => write_top(live[0].0, out, prune),
                _ if prune.is_none() && !weights_are_unit(weights) => write_group(f, out, prune),
                _ => write_nary(f, &live, out, prune),
            }
        }
        _ => write_unary(f, out, prune),
    }
}

fn write_nary<T: Scalar>(
    f: &Formula<T>,
    live: &[(&Formula<T>, T)],
    out: &mut String,
    prune: Option<T>,
) {
    let is_and = matches!(f, Formula::And { .. });
    let sep = if is_and { " & " } else { " | " };
    for (i, (child, _)) in live.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        let needs_parens = match child {
            Formula::And { .. } => is_and,
            Formula::Or { .. } => true,
            _ => false,
        };
        if needs_parens {
            write_group(child, out, prune);
        } else {
            write_top(child, out, prune);
        }
    }
}

/// `( ... )` around an n-ary node, followed by its weights when non-unit.
fn write_group<T: Scalar>(f: &Formula<T>, out: &mut String, prune: Option<T>) {
    match f {
        Formula::And { children, weights } | Formula::Or { children, weights } => {
            let live = kept(children, weights, prune);
            if live.len() < 2 {
                return write_top(f, out, prune);
            }
            out.push('(');
            write_nary(f, &live, out, prune);
            out.push(')');
            if prune.is_none() && !weights_are_unit(weights) {
                write_weights(weights, out);
            }
        }
        _ => write_unary(f, out, prune),
    }
}

fn write_unary<T: Scalar>(f: &Formula<T>, out: &mut String, prune: Option<T>) {
    match f {
        Formula::Predicate {
            cmp,
            threshold,
            weight,
        } => {
            write!(out, "(x {} {threshold})", cmp.symbol()).unwrap();
            if prune.is_none() && *weight != T::one() {
                write_weights(std::slice::from_ref(weight), out);
            }
        }
        Formula::Not(child) => {
            out.push('!');
            write_unary(child, out, prune);
        }
        Formula::Always(body) | Formula::Eventually(body) => {
            let op = if matches!(f, Formula::Always(_)) { 'G' } else { 'F' };
            write!(out, "{op}[{},{}]", body.interval.start, body.interval.end).unwrap();
            if prune.is_none() && !weights_are_unit(&body.weights) {
                write_weights(&body.weights, out);
            }
            out.push(' ');
            write_unary(&body.child, out, prune);
        }
        Formula::And { .. } | Formula::Or { .. } => write_group(f, out, prune),
    }
}
