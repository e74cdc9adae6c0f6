//! Reading a weighted formula off a trained network.
//!
//! Encoder intervals depend on the input, so each neuron's interval is
//! frozen at the hard-quantized mean of its codes over a calibration set.
//! With the interval fixed, every layer has a formula counterpart that
//! evaluates to the same robustness:
//!
//! * layer-2 row → predicate with weight 2 (its robustness is the raw margin)
//! * layer-3 neuron → `G`/`F` (or a nesting of both) with window weights `W²`
//! * layer 4 → weighted conjunction / disjunction over the live members
//! * layer 5 → weighted conjunction of the live groups
//!
//! A group with a single member is replaced by that member and its weight
//! folded into the layer-5 weight, which leaves the value unchanged. When
//! only one group is live the result is that group alone; its robustness
//! then differs from the network output by the positive layer-5 factor,
//! so signs still agree.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::{robustness_weighted, Comparison, Formula, Interval, Temporal};
use crate::network::{
    decoder_input, forward, interval_from_codes, layer2_predicates, window_from_interval, Mode, NeuronKind,
    TlnnParams,
};
use crate::scalar::{softplus, Scalar};
use crate::signals::{Dataset, Label};

/// Window and predicate each neuron was frozen to.
#[derive(Clone, Debug, PartialEq)]
pub struct FrozenNeuron<T> {
    pub kind: NeuronKind,
    /// Mean interval codes over the calibration set.
    pub codes: [T; 2],
    pub window: Interval,
    /// `W²` restricted to the window.
    pub weights: Vec<T>,
    pub nested_horizon: usize,
    pub cmp: Comparison,
    pub threshold: T,
}

impl<T: Scalar> FrozenNeuron<T> {
    pub fn formula(&self) -> Formula<T> {
        let pred = Formula::Predicate {
            cmp: self.cmp,
            threshold: self.threshold,
            weight: T::lit(2.0),
        };
        let body = Temporal {
            interval: self.window,
            weights: self.weights.clone(),
            child: Box::new(pred),
        };
        let outer = Interval {
            start: 0,
            end: self.nested_horizon,
        };
        match self.kind {
            NeuronKind::Always => Formula::Always(body),
            NeuronKind::Eventually => Formula::Eventually(body),
            NeuronKind::AlwaysEventually => Formula::Always(Temporal::unit(outer, Formula::Eventually(body))),
            NeuronKind::EventuallyAlways => Formula::Eventually(Temporal::unit(outer, Formula::Always(body))),
        }
    }
}

/// Freezes every neuron's interval at the calibration mean of its codes.
pub fn freeze<T: Scalar>(params: &TlnnParams<T>, calibration: &Dataset<T>) -> Result<Vec<FrozenNeuron<T>>> {
    if calibration.is_empty() {
        return Err(Error::Dataset("calibration set is empty".into()));
    }
    let mut sums = vec![[T::zero(); 2]; params.len()];
    for sample in calibration.iter() {
        let rho2 = layer2_predicates(&sample.signal, params)?;
        for ((spec, row), sum) in params.neurons.iter().zip(&rho2).zip(&mut sums) {
            let (_, codes) = spec.encoder.forward(row);
            sum[0] = sum[0] + codes[0];
            sum[1] = sum[1] + codes[1];
        }
    }
    let count = T::from_usize_lossy(calibration.len());
    Ok(params
        .neurons
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let codes = [sums[i][0] / count, sums[i][1] / count];
            let interval = interval_from_codes(spec, codes, Mode::Hard);
            let window = window_from_interval(interval, params.n, spec.nested_horizon);
            let (_, out) = spec.decoder.forward(&decoder_input(interval, params.n));
            FrozenNeuron {
                kind: spec.kind,
                codes,
                window,
                weights: out[window.start..=window.end].iter().map(|&o| softplus(o)).collect(),
                nested_horizon: spec.nested_horizon,
                cmp: params.comparisons[i],
                threshold: params.thresholds[i],
            }
        })
        .collect())
}

/// Weighted formula equivalent (in sign) to the network with frozen
/// intervals.
pub fn extract_formula<T: Scalar>(params: &TlnnParams<T>, calibration: &Dataset<T>) -> Result<Formula<T>> {
    let frozen = freeze(params, calibration)?;
    let atoms: Vec<Formula<T>> = frozen.iter().map(FrozenNeuron::formula).collect();

    let mut groups = Vec::new();
    let mut group_weights = Vec::new();
    for (col, w4) in params.output.iter().copied().enumerate() {
        let members: Vec<usize> = (0..params.len())
            .filter(|&i| params.reduction[i][col] > T::zero())
            .collect();
        if members.is_empty() || w4 <= T::zero() {
            continue;
        }
        if let [only] = members[..] {
            groups.push(atoms[only].clone());
            group_weights.push(w4 * params.reduction[only][col]);
            continue;
        }
        let children = members.iter().map(|&i| atoms[i].clone()).collect();
        let weights = members.iter().map(|&i| params.reduction[i][col]).collect();
        groups.push(if col == 0 {
            Formula::And { children, weights }
        } else {
            Formula::Or { children, weights }
        });
        group_weights.push(w4);
    }
    let formula = match groups.len() {
        0 => {
            return Err(Error::Malformed(
                "no live layer-4 group: every neuron or output weight is zero".into(),
            ))
        }
        1 => groups.pop().expect("one group"),
        _ => Formula::And {
            children: groups,
            weights: group_weights,
        },
    };
    formula.validate()?;
    Ok(formula)
}

/// The same formula with every weight set to one.
pub fn strip_weights<T: Scalar>(f: &Formula<T>) -> Formula<T> {
    f.strip_weights()
}

/// Fraction of `data` on which the formula's weighted robustness at time 0
/// and the hard-mode network output give the same class.
pub fn fidelity<T: Scalar>(params: &TlnnParams<T>, formula: &Formula<T>, data: &Dataset<T>) -> Result<T> {
    let mut agree = 0;
    for s in data.iter() {
        let (y, _) = forward(params, &s.signal, Mode::Hard)?;
        let r = robustness_weighted(formula, &s.signal, 0)?;
        if Label::from_robustness(y) == Label::from_robustness(r) {
            agree += 1;
        }
    }
    Ok(T::from_usize_lossy(agree) / T::from_usize_lossy(data.len().max(1)))
}

/// One temporal operator of a formula, with the absolute span of time it
/// reads when evaluated at `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region<T> {
    /// `G` or `F`.
    pub operator: char,
    /// Number of temporal operators above this one.
    pub depth: usize,
    pub tau1: usize,
    pub tau2: usize,
    pub span_start: usize,
    pub span_end: usize,
    pub comparison: Option<Comparison>,
    pub threshold: Option<T>,
}

/// Every temporal sub-formula, in pre-order.
pub fn regions<T: Scalar>(f: &Formula<T>) -> Vec<Region<T>> {
    fn predicate<T: Scalar>(f: &Formula<T>) -> Option<(Comparison, T)> {
        match f {
            Formula::Predicate { cmp, threshold, .. } => Some((*cmp, *threshold)),
            Formula::Not(c) => predicate(c),
            Formula::Always(b) | Formula::Eventually(b) => predicate(&b.child),
            Formula::And { .. } | Formula::Or { .. } => None,
        }
    }
    fn visit<T: Scalar>(f: &Formula<T>, depth: usize, span: (usize, usize), out: &mut Vec<Region<T>>) {
        match f {
            Formula::Predicate { .. } => {}
            Formula::Not(c) => visit(c, depth, span, out),
            Formula::And { children, .. } | Formula::Or { children, .. } => {
                for c in children {
                    visit(c, depth, span, out);
                }
            }
            Formula::Always(b) | Formula::Eventually(b) => {
                let operator = if matches!(f, Formula::Always(_)) { 'G' } else { 'F' };
                let inner = (span.0 + b.interval.start, span.1 + b.interval.end);
                let pred = predicate(&b.child);
                out.push(Region {
                    operator,
                    depth,
                    tau1: b.interval.start,
                    tau2: b.interval.end,
                    span_start: inner.0,
                    span_end: inner.1,
                    comparison: pred.map(|p| p.0),
                    threshold: pred.map(|p| p.1),
                });
                visit(&b.child, depth + 1, inner, out);
            }
        }
    }
    let mut out = Vec::new();
    visit(f, 0, (0, 0), &mut out);
    out
}

pub fn write_regions<T: Scalar>(regions: &[Region<T>], out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "operator",
        "depth",
        "tau1",
        "tau2",
        "span_start",
        "span_end",
        "comparison",
        "threshold",
    ])?;
    for r in regions {
        w.write_record([
            r.operator.to_string(),
            r.depth.to_string(),
            r.tau1.to_string(),
            r.tau2.to_string(),
            r.span_start.to_string(),
            r.span_end.to_string(),
            r.comparison.map(|c| c.symbol().to_string()).unwrap_or_default(),
            r.threshold.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()
}

pub fn write_regions_csv<T: Scalar>(regions: &[Region<T>], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    write_regions(regions, file).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{eval_boolean, format_formula, parse_formula, Signal};
    use crate::network::{IntervalSeed, NetworkConfig, NeuronSpec};
    use crate::signals::LabeledSample;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn network(rng: &mut ChaCha8Rng, n: usize, kinds: &[NeuronKind]) -> TlnnParams<f64> {
        let cfg = NetworkConfig {
            nested_horizon: 3,
            ..NetworkConfig::default()
        };
        let mut p = TlnnParams::empty(n, 0).unwrap();
        for &kind in kinds {
            let seed = IntervalSeed {
                start: rng.random_range(0..n / 2) as f64,
                width: rng.random_range(1..n / 4) as f64,
            };
            let cmp = if rng.random_bool(0.5) { Comparison::Ge } else { Comparison::Lt };
            let nrn = NeuronSpec::init(kind, n, seed, &cfg, rng).unwrap();
            p.push_neuron(nrn, cmp, rng.random_range(-0.3..0.3));
        }
        for r in &mut p.reduction {
            *r = [rng.random_range(0.2..1.5), rng.random_range(0.2..1.5)];
        }
        p.output = [rng.random_range(0.2..1.5), rng.random_range(0.2..1.5)];
        p
    }

    fn data(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Dataset<f64> {
        Dataset::new(
            (0..count)
                .map(|_| LabeledSample {
                    signal: Signal::new((0..n).map(|_| rng.random_range(-0.5..0.5)).collect()).unwrap(),
                    label: Label::Positive,
                    condition: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn replay_matches_network_exactly() {
        // Calibrating on one sample freezes exactly the intervals the
        // network uses for it, so the values must coincide.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = network(&mut rng, 24, &NeuronKind::ALL);
            let one = data(&mut rng, 24, 1);
            let f = extract_formula(&p, &one).unwrap();
            let x = &one.samples()[0].signal;
            let (y, _) = forward(&p, x, Mode::Hard).unwrap();
            let r = robustness_weighted(&f, x, 0).unwrap();
            assert!((y - r).abs() <= 1e-12 * y.abs().max(1.0), "{y} vs {r}");
        }
    }

    #[test]
    fn single_neuron_is_its_atom() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for kind in NeuronKind::ALL {
            let p = network(&mut rng, 16, &[kind]);
            let cal = data(&mut rng, 16, 3);
            let f = extract_formula(&p, &cal).unwrap();
            let atom = freeze(&p, &cal).unwrap()[0].formula();
            match &f {
                Formula::And { children, .. } => assert!(children.iter().all(|c| *c == atom)),
                other => panic!("{other:?}"),
            }
            let text = format_formula(&f.strip_weights());
            assert!(!text.contains('\n') && !text.contains('|'), "{text}");
        }
    }

    #[test]
    fn groups_follow_layer4_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = network(&mut rng, 16, &[NeuronKind::Always, NeuronKind::Eventually, NeuronKind::Always]);
        p.reduction = vec![[1.0, 0.0], [0.0, 2.0], [0.5, 0.0]];
        let cal = data(&mut rng, 16, 4);
        match extract_formula(&p, &cal).unwrap() {
            Formula::And { children, weights } => {
                assert!(matches!(&children[0], Formula::And { children, .. } if children.len() == 2));
                assert!(matches!(children[1], Formula::Eventually(_)));
                assert_eq!(weights[1], p.output[1] * 2.0);
            }
            other => panic!("{other:?}"),
        }
        p.output = [0.0, 0.0];
        assert!(extract_formula(&p, &cal).is_err());
    }

    #[test]
    fn extracted_text_reparses() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let p = network(&mut rng, 20, &NeuronKind::ALL);
            let cal = data(&mut rng, 20, 5);
            let f = extract_formula(&p, &cal).unwrap();
            let back: Formula<f64> = parse_formula(&format_formula(&f)).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn fidelity_on_calibration_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = network(&mut rng, 24, &NeuronKind::ALL);
        let cal = data(&mut rng, 24, 40);
        let f = extract_formula(&p, &cal).unwrap();
        assert!(fidelity(&p, &f, &cal).unwrap() >= 0.9);
    }

    #[test]
    fn strip_examples() {
        let f: Formula<f64> = parse_formula("((x >= 0.1) & (x < 0.5)){w=2,3}").unwrap();
        let s = strip_weights(&f);
        match &s {
            Formula::And { weights, .. } => assert_eq!(weights, &vec![1.0, 1.0]),
            other => panic!("{other:?}"),
        }
        assert_eq!(strip_weights(&s), s);
    }

    #[test]
    fn regions_of_nested_formula() {
        let f: Formula<f64> = parse_formula("F[0,5] G[15,25] (x >= 0.4) | G[0,5] (x < 0.12)").unwrap();
        let r = regions(&f);
        assert_eq!(r.len(), 3);
        assert_eq!((r[1].operator, r[1].depth, r[1].span_start, r[1].span_end), ('G', 1, 15, 30));
        assert_eq!(r[2].comparison, Some(Comparison::Lt));
        let mut buf = Vec::new();
        write_regions(&r, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    fn arb_formula(depth: u32) -> impl Strategy<Value = Formula<f64>> {
        let leaf = (any::<bool>(), -1.0f64..1.0, 0.1f64..3.0).prop_map(|(ge, c, w)| Formula::Predicate {
            cmp: if ge { Comparison::Ge } else { Comparison::Lt },
            threshold: c,
            weight: w,
        });
        leaf.prop_recursive(depth, 16, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (proptest::collection::vec((inner.clone(), 0.1f64..3.0), 2..4), any::<bool>()).prop_map(
                    |(kids, and)| {
                        let (children, weights): (Vec<_>, Vec<_>) = kids.into_iter().unzip();
                        if and {
                            Formula::And { children, weights }
                        } else {
                            Formula::Or { children, weights }
                        }
                    }
                ),
                (inner, 0usize..4, 0usize..4, any::<bool>(), proptest::collection::vec(0.1f64..3.0, 8))
                    .prop_map(|(child, a, len, g, ws)| {
                        let body = Temporal {
                            interval: Interval { start: a, end: a + len },
                            weights: ws[..=len].to_vec(),
                            child: Box::new(child),
                        };
                        if g {
                            Formula::Always(body)
                        } else {
                            Formula::Eventually(body)
                        }
                    }),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn stripping_never_changes_satisfaction(
            f in arb_formula(3),
            x in proptest::collection::vec(-1.0f64..1.0, 32),
        ) {
            let x = Signal::new(x).unwrap();
            prop_assume!(f.horizon() < 32);
            prop_assert_eq!(
                eval_boolean(&f, &x, 0).unwrap(),
                eval_boolean(&strip_weights(&f), &x, 0).unwrap()
            );
        }
    }
}
