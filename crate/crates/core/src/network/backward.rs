//! Manual reverse pass through the five layers, replaying the branches
//! recorded in a [`ForwardTrace`].

use crate::error::{Error, Result};
use crate::logic::Aggregate;
use crate::network::forward::{decoder_input, ForwardTrace, Mode, NeuronTrace};
use crate::network::params::{Gradients, Mlp, NeuronKind, NeuronSpec, TlnnParams};
use crate::quantizer::quantize_soft_grad;
use crate::scalar::{sigmoid, Scalar};

/// `L = ½ (y - y_d)²`
pub fn loss<T: Scalar>(y: T, target: T) -> T {
    let d = y - target;
    T::lit(0.5) * d * d
}

/// `∂L/∂y = y - y_d`
pub fn loss_grad<T: Scalar>(y: T, target: T) -> T {
    y - target
}

/// Gradient of the squared loss for target `target` (±1) with respect to
/// every parameter. Requires a soft-mode trace.
pub fn backward<T: Scalar>(trace: &ForwardTrace<T>, params: &TlnnParams<T>, target: T) -> Result<Gradients<T>> {
    backward_from(trace, params, loss_grad(trace.rho5, target))
}

/// Propagates an arbitrary upstream derivative `∂L/∂ρ⁵`.
pub fn backward_from<T: Scalar>(trace: &ForwardTrace<T>, params: &TlnnParams<T>, upstream: T) -> Result<Gradients<T>> {
    if trace.mode != Mode::Soft {
        return Err(Error::HardTrace);
    }
    let m = params.len();
    if trace.neurons.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            found: trace.neurons.len(),
        });
    }
    let mut grads = Gradients::zeros_like(params);

    // Layer 5.
    let rho4 = trace.rho4();
    let l5 = &trace.layer5;
    let w5: Vec<T> = l5.members.iter().map(|&i| params.output[i]).collect();
    let r5: Vec<T> = l5.members.iter().map(|&i| rho4[i]).collect();
    let mut gw5 = vec![T::zero(); w5.len()];
    let mut gr5 = vec![T::zero(); w5.len()];
    Aggregate::Conjunction.backward(&w5, &r5, l5.act, upstream, Some(&mut gw5), &mut gr5);
    let mut grad_rho4 = [T::zero(); 2];
    for (k, &i) in l5.members.iter().enumerate() {
        grads.output[i] = gw5[k];
        grad_rho4[i] = gr5[k];
    }

    // Layer 4.
    let mut grad_rho3 = vec![T::zero(); m];
    for (col, agg) in [Aggregate::Conjunction, Aggregate::Disjunction].into_iter().enumerate() {
        let l4 = &trace.layer4[col];
        let w: Vec<T> = l4.members.iter().map(|&i| params.reduction[i][col]).collect();
        let r: Vec<T> = l4.members.iter().map(|&i| trace.rho3[i]).collect();
        let mut gw = vec![T::zero(); w.len()];
        let mut gr = vec![T::zero(); w.len()];
        agg.backward(&w, &r, l4.act, grad_rho4[col], Some(&mut gw), &mut gr);
        for (k, &i) in l4.members.iter().enumerate() {
            grads.reduction[i][col] = gw[k];
            grad_rho3[i] = grad_rho3[i] + gr[k];
        }
    }

    // Layers 3 and 2.
    for i in 0..m {
        let g3 = grad_rho3[i];
        if g3 == T::zero() {
            continue;
        }
        let nt = &trace.neurons[i];
        let spec = &params.neurons[i];
        let grad_rho2 = neuron_backward(
            spec,
            nt,
            g3,
            &mut grads.encoders[i],
            &mut grads.decoders[i],
        );
        let sign = params.comparisons[i].threshold_sign::<T>();
        grads.thresholds[i] = grad_rho2.into_iter().sum::<T>() * sign;
    }
    Ok(grads)
}

/// Backpropagates `∂L/∂ρ³ᵢ` through the activation, decoder, soft
/// quantizer and encoder of one neuron. Returns `∂L/∂ρ²ᵢ`.
fn neuron_backward<T: Scalar>(
    spec: &NeuronSpec<T>,
    nt: &NeuronTrace<T>,
    upstream: T,
    g_enc: &mut Mlp<T>,
    g_dec: &mut Mlp<T>,
) -> Vec<T> {
    let n = nt.rho2.len();
    let win = nt.window;
    let len = win.len();
    let w2 = &nt.w2[win.start..=win.end];
    let mut grad_rho2 = vec![T::zero(); n];
    let mut grad_w2 = vec![T::zero(); len];

    let inner_agg = match spec.kind {
        NeuronKind::Always | NeuronKind::EventuallyAlways => Aggregate::Conjunction,
        NeuronKind::Eventually | NeuronKind::AlwaysEventually => Aggregate::Disjunction,
    };
    let inner_up: Vec<T> = match nt.outer {
        None => vec![upstream],
        Some(outer_act) => {
            let outer_agg = if spec.kind == NeuronKind::AlwaysEventually {
                Aggregate::Conjunction
            } else {
                Aggregate::Disjunction
            };
            let values: Vec<T> = nt.inner.iter().map(|a| a.value).collect();
            let ones = vec![T::one(); values.len()];
            let mut g = vec![T::zero(); values.len()];
            outer_agg.backward(&ones, &values, outer_act, upstream, None, &mut g);
            g
        }
    };
    for (j, (&act, &up)) in nt.inner.iter().zip(&inner_up).enumerate() {
        let lo = win.start + j;
        let hi = win.end + j;
        inner_agg.backward(
            w2,
            &nt.rho2[lo..=hi],
            act,
            up,
            Some(&mut grad_w2),
            &mut grad_rho2[lo..=hi],
        );
    }

    // Decoder: W² = softplus(o), only window entries are consumed.
    let mut grad_out = vec![T::zero(); n];
    for (k, &g) in grad_w2.iter().enumerate() {
        let j = win.start + k;
        grad_out[j] = g * sigmoid(nt.dec_out[j]);
    }
    let dec_in = decoder_input(nt.interval, n);
    let grad_dec_in = mlp_backward(&spec.decoder, &dec_in, &nt.dec_hidden, &grad_out, g_dec);
    let scale = T::from_usize_lossy(n - 1);
    let g_tau = [grad_dec_in[0] / scale, grad_dec_in[1] / scale];

    // τ₁ = Q(h₁), τ₂ = Q(h₁) + Q(h₂).
    let q1 = quantize_soft_grad(nt.codes[0], &spec.quant);
    let q2 = quantize_soft_grad(nt.codes[1], &spec.quant);
    let grad_codes = [(g_tau[0] + g_tau[1]) * q1, g_tau[1] * q2];

    let grad_enc_in = mlp_backward(&spec.encoder, &nt.rho2, &nt.enc_hidden, &grad_codes, g_enc);
    for (g, e) in grad_rho2.iter_mut().zip(grad_enc_in) {
        *g = *g + e;
    }
    grad_rho2
}

/// Accumulates parameter gradients of a tanh MLP into `grad` and returns
/// the gradient with respect to its input.
fn mlp_backward<T: Scalar>(mlp: &Mlp<T>, input: &[T], hidden: &[T], grad_out: &[T], grad: &mut Mlp<T>) -> Vec<T> {
    let h = mlp.hidden.outputs;
    let mut grad_hidden = vec![T::zero(); h];
    for (o, &g) in grad_out.iter().enumerate() {
        if g == T::zero() {
            continue;
        }
        grad.output.bias[o] = grad.output.bias[o] + g;
        let row = &mut grad.output.weights[o * h..(o + 1) * h];
        for (k, (gw, &a)) in row.iter_mut().zip(hidden).enumerate() {
            *gw = *gw + g * a;
            grad_hidden[k] = grad_hidden[k] + g * mlp.output.weights[o * h + k];
        }
    }
    let inputs = mlp.hidden.inputs;
    let mut grad_in = vec![T::zero(); inputs];
    for k in 0..h {
        let pre = grad_hidden[k] * (T::one() - hidden[k] * hidden[k]);
        if pre == T::zero() {
            continue;
        }
        grad.hidden.bias[k] = grad.hidden.bias[k] + pre;
        let row = &mut grad.hidden.weights[k * inputs..(k + 1) * inputs];
        let wrow = mlp.hidden.row(k);
        for (i, gw) in row.iter_mut().enumerate() {
            *gw = *gw + pre * input[i];
            grad_in[i] = grad_in[i] + pre * wrow[i];
        }
    }
    grad_in
}
