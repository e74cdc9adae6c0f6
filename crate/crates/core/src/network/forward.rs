use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::{activation::branch_margin, Activation, Aggregate, Interval, Signal};
use crate::network::params::{NeuronKind, NeuronSpec, TlnnParams};
use crate::quantizer::{quantize_hard, quantize_soft};
use crate::scalar::{softplus, Scalar};

/// Quantizer used for the interval codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Differentiable staircase; used for training.
    Soft,
    /// Exact rounding; used for inference and extraction.
    Hard,
}

/// Everything one layer-3 neuron computed.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuronTrace<T> {
    /// Layer-2 row `ρ²ᵢ`.
    pub rho2: Vec<T>,
    pub enc_hidden: Vec<T>,
    /// Raw interval codes `(h₁, h₂)`.
    pub codes: [T; 2],
    /// Quantized interval `(τ₁, τ₂) = (Q(h₁), Q(h₁) + Q(h₂))` before
    /// rounding to indices; also the decoder input scaled by `1/(n-1)`.
    pub interval: [T; 2],
    /// Integer window actually read.
    pub window: Interval,
    pub dec_hidden: Vec<T>,
    /// Decoder pre-activations; `W² = softplus(dec_out)`.
    pub dec_out: Vec<T>,
    pub w2: Vec<T>,
    /// Inner window activations: one for plain kinds, `τ₀ + 1` for nested.
    pub inner: Vec<Activation<T>>,
    /// Outer all-ones aggregation of the nested kinds.
    pub outer: Option<Activation<T>>,
    pub rho3: T,
    /// Smallest distance to any branch switch inside this neuron.
    pub margin: T,
}

/// A layer-4 or layer-5 aggregation over its live (non-zero weight) inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateTrace<T> {
    pub members: Vec<usize>,
    pub act: Activation<T>,
}

impl<T: Scalar> AggregateTrace<T> {
    pub fn value(&self) -> T {
        self.act.value
    }

    pub fn is_live(&self) -> bool {
        !self.members.is_empty()
    }
}

/// All intermediate values of one forward pass, replayed by backprop.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace<T> {
    pub mode: Mode,
    /// Layer-1 pass-through of the input.
    pub rho1: Vec<T>,
    pub neurons: Vec<NeuronTrace<T>>,
    pub rho3: Vec<T>,
    /// Layer-4 `[and, or]`.
    pub layer4: [AggregateTrace<T>; 2],
    pub layer5: AggregateTrace<T>,
    pub rho5: T,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn rho4(&self) -> [T; 2] {
        [self.layer4[0].value(), self.layer4[1].value()]
    }

    /// Smallest distance of any recorded branch condition from switching.
    pub fn margin(&self) -> T {
        let mut m = self
            .neurons
            .iter()
            .map(|n| n.margin)
            .fold(T::infinity(), T::min);
        for agg in &self.layer4 {
            let rho: Vec<T> = agg.members.iter().map(|&i| self.rho3[i]).collect();
            m = m.min(branch_margin(&rho));
        }
        let rho4 = self.rho4();
        let rho: Vec<T> = self.layer5.members.iter().map(|&i| rho4[i]).collect();
        m.min(branch_margin(&rho))
    }
}

/// Layer 2: `μᵢ(t) = x(t) - W¹ᵢ` for `>=` neurons, `W¹ᵢ - x(t)` for `<`.
pub fn layer2_predicates<T: Scalar>(x: &Signal<T>, params: &TlnnParams<T>) -> Result<Vec<Vec<T>>> {
    if x.len() != params.n {
        return Err(Error::LengthMismatch {
            expected: params.n,
            found: x.len(),
        });
    }
    Ok(params
        .comparisons
        .iter()
        .zip(&params.thresholds)
        .map(|(cmp, &c)| x.samples().iter().map(|&v| cmp.margin(v, c)).collect())
        .collect())
}

pub(crate) fn quantize<T: Scalar>(h: T, spec: &crate::quantizer::QuantSpec<T>, mode: Mode) -> T {
    match mode {
        Mode::Soft => quantize_soft(h, spec),
        Mode::Hard => quantize_hard(h, spec),
    }
}

/// `(τ₁, τ₂)` from the encoder codes.
pub(crate) fn interval_from_codes<T: Scalar>(spec: &NeuronSpec<T>, codes: [T; 2], mode: Mode) -> [T; 2] {
    let t1 = quantize(codes[0], &spec.quant, mode);
    let width = quantize(codes[1], &spec.quant, mode);
    [t1, t1 + width]
}

/// Rounds the quantized interval to indices and clamps it so that the
/// window (shifted by up to `τ₀`) stays inside the signal.
pub(crate) fn window_from_interval<T: Scalar>(interval: [T; 2], n: usize, nested: usize) -> Interval {
    let last = n - 1 - nested;
    let idx = |v: T| v.round().max(T::zero()).to_usize().unwrap_or(usize::MAX);
    let start = idx(interval[0]).min(last);
    let end = idx(interval[1]).clamp(start, last);
    Interval { start, end }
}

pub(crate) fn decoder_input<T: Scalar>(interval: [T; 2], n: usize) -> [T; 2] {
    let scale = T::from_usize_lossy(n - 1);
    [interval[0] / scale, interval[1] / scale]
}

/// Distance of a real value from the nearest rounding tie.
fn rounding_margin<T: Scalar>(v: T) -> T {
    (v - v.floor() - T::lit(0.5)).abs()
}

/// Activation of the atomic formula over window `w` of `rho2`, with window
/// weights `w2` indexed relative to the window start.
pub(crate) fn atomic_activation<T: Scalar>(
    kind: NeuronKind,
    rho2: &[T],
    window: Interval,
    w2: &[T],
    nested: usize,
) -> (Vec<Activation<T>>, Option<Activation<T>>, T) {
    let inner_agg = match kind {
        NeuronKind::Always | NeuronKind::EventuallyAlways => Aggregate::Conjunction,
        NeuronKind::Eventually | NeuronKind::AlwaysEventually => Aggregate::Disjunction,
    };
    let shifts = if kind.is_nested() { nested + 1 } else { 1 };
    let inner: Vec<Activation<T>> = (0..shifts)
        .map(|j| inner_agg.apply(w2, &rho2[window.start + j..=window.end + j]))
        .collect();
    let outer = match kind {
        NeuronKind::Always | NeuronKind::Eventually => None,
        NeuronKind::AlwaysEventually | NeuronKind::EventuallyAlways => {
            let agg = if kind == NeuronKind::AlwaysEventually {
                Aggregate::Conjunction
            } else {
                Aggregate::Disjunction
            };
            let values: Vec<T> = inner.iter().map(|a| a.value).collect();
            Some(agg.apply(&vec![T::one(); shifts], &values))
        }
    };
    let value = outer.map_or(inner[0].value, |a| a.value);
    (inner, outer, value)
}

/// Layer 3 for one neuron.
pub fn atomic_forward<T: Scalar>(spec: &NeuronSpec<T>, rho2: &[T], mode: Mode) -> (T, NeuronTrace<T>) {
    let n = rho2.len();
    let (enc_hidden, codes) = spec.encoder.forward(rho2);
    let codes = [codes[0], codes[1]];
    let interval = interval_from_codes(spec, codes, mode);
    let window = window_from_interval(interval, n, spec.nested_horizon);
    let (dec_hidden, dec_out) = spec.decoder.forward(&decoder_input(interval, n));
    let w2: Vec<T> = dec_out.iter().map(|&o| softplus(o)).collect();
    let (inner, outer, rho3) = atomic_activation(
        spec.kind,
        rho2,
        window,
        &w2[window.start..=window.end],
        spec.nested_horizon,
    );

    let mut margin = T::infinity();
    let shifts = inner.len();
    margin = margin.min(branch_margin(&rho2[window.start..=window.end + shifts - 1]));
    if outer.is_some() {
        let values: Vec<T> = inner.iter().map(|a| a.value).collect();
        margin = margin.min(branch_margin(&values));
    }
    margin = margin.min(rounding_margin(interval[0])).min(rounding_margin(interval[1]));
    for &h in &codes {
        margin = margin
            .min((h - spec.quant.lower).abs())
            .min((h - spec.quant.upper).abs());
    }

    let trace = NeuronTrace {
        rho2: rho2.to_vec(),
        enc_hidden,
        codes,
        interval,
        window,
        dec_hidden,
        dec_out,
        w2,
        inner,
        outer,
        rho3,
        margin,
    };
    (rho3, trace)
}

/// Layer 4: weighted "and" and "or" over the neurons with non-zero weight
/// in the respective column.
pub fn reduction_forward<T: Scalar>(rho3: &[T], w3: &[[T; 2]]) -> [AggregateTrace<T>; 2] {
    let column = |c: usize, agg: Aggregate| {
        let members: Vec<usize> = (0..rho3.len()).filter(|&i| w3[i][c] > T::zero()).collect();
        let w: Vec<T> = members.iter().map(|&i| w3[i][c]).collect();
        let r: Vec<T> = members.iter().map(|&i| rho3[i]).collect();
        AggregateTrace {
            act: agg.apply(&w, &r),
            members,
        }
    };
    [
        column(0, Aggregate::Conjunction),
        column(1, Aggregate::Disjunction),
    ]
}

/// Layer 5: weighted "and" of the live layer-4 outputs.
pub fn output_forward<T: Scalar>(rho4: [T; 2], w4: [T; 2], live: [bool; 2]) -> AggregateTrace<T> {
    let members: Vec<usize> = (0..2).filter(|&i| live[i] && w4[i] > T::zero()).collect();
    let w: Vec<T> = members.iter().map(|&i| w4[i]).collect();
    let r: Vec<T> = members.iter().map(|&i| rho4[i]).collect();
    AggregateTrace {
        act: Aggregate::Conjunction.apply(&w, &r),
        members,
    }
}

/// Full five-layer pass.
pub fn forward<T: Scalar>(params: &TlnnParams<T>, x: &Signal<T>, mode: Mode) -> Result<(T, ForwardTrace<T>)> {
    let rho2 = layer2_predicates(x, params)?;
    let (rho3, neurons): (Vec<T>, Vec<NeuronTrace<T>>) = params
        .neurons
        .iter()
        .zip(&rho2)
        .map(|(spec, row)| atomic_forward(spec, row, mode))
        .unzip();
    let layer4 = reduction_forward(&rho3, &params.reduction);
    let rho4 = [layer4[0].value(), layer4[1].value()];
    let layer5 = output_forward(rho4, params.output, [layer4[0].is_live(), layer4[1].is_live()]);
    let rho5 = layer5.value();
    Ok((
        rho5,
        ForwardTrace {
            mode,
            rho1: x.samples().to_vec(),
            neurons,
            rho3,
            layer4,
            layer5,
            rho5,
        },
    ))
}

/// Network output only.
pub fn predict<T: Scalar>(params: &TlnnParams<T>, x: &Signal<T>, mode: Mode) -> Result<T> {
    forward(params, x, mode).map(|(y, _)| y)
}
