//! Joint structure and parameter learning.
//!
//! Parameters follow per-sample gradient descent on `½(ρ⁵ - y_d)²`. Once
//! per structure period the roster is pruned (small layer-4 weights are
//! zeroed, neurons with no outgoing weight are dropped) and, if the cost
//! `C = mean (y - y_d)²` is still above the growth threshold, a neuron of
//! a random kind is added.

use std::io::Write;
use std::path::Path;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::Comparison;
use crate::network::{backward, forward, loss, Gradients, IntervalSeed, Mode, NetworkConfig, NeuronKind, NeuronSpec, TlnnParams};
use crate::scalar::Scalar;
use crate::signals::{Dataset, Label};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Scalar")]
pub struct TrainConfig<T> {
    /// `η ∈ [0, 1]`.
    pub learning_rate: T,
    /// `w_th`: layer-4 weights below this are zeroed.
    pub prune_threshold: T,
    /// `c_th`: grow while the cost exceeds this.
    pub growth_threshold: T,
    pub max_neurons: usize,
    pub epochs: usize,
    /// Epochs between structure checks.
    pub structure_every: usize,
    /// Initial quantizer sharpness `k`.
    pub sharpness: T,
    /// `k` is multiplied by this every `anneal_every` epochs ...
    pub anneal_factor: T,
    pub anneal_every: usize,
    /// ... up to this cap.
    pub max_sharpness: T,
    pub seed: u64,
    /// Random intervals scored against the data when a neuron is created.
    /// Zero places it at a random interval and threshold instead.
    pub init_candidates: usize,
    /// Distance from the threshold, as a fraction of the data range, a
    /// sample needs to count as separated while scoring candidates.
    pub init_margin: T,
    pub network: NetworkConfig<T>,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            learning_rate: T::lit(0.05),
            prune_threshold: T::lit(0.05),
            growth_threshold: T::lit(0.5),
            max_neurons: 8,
            epochs: 200,
            structure_every: 1,
            sharpness: T::lit(10.0),
            anneal_factor: T::lit(2.0),
            anneal_every: 20,
            max_sharpness: T::lit(160.0),
            seed: 0,
            init_candidates: 256,
            init_margin: T::lit(0.03),
            network: NetworkConfig::default(),
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.learning_rate >= T::zero() && self.learning_rate <= T::one()) {
            return bad("learning_rate must lie in [0, 1]");
        }
        if !(self.prune_threshold >= T::zero()) {
            return bad("prune_threshold must be >= 0");
        }
        if !(self.growth_threshold > T::zero()) {
            return bad("growth_threshold must be > 0");
        }
        if self.max_neurons == 0 {
            return bad("max_neurons must be >= 1");
        }
        if self.structure_every == 0 || self.anneal_every == 0 {
            return bad("structure_every and anneal_every must be >= 1");
        }
        if !(self.sharpness > T::zero()) || !(self.anneal_factor >= T::one()) || !(self.max_sharpness > T::zero()) {
            return bad("sharpness must be > 0 and anneal_factor >= 1");
        }
        if self.network.hidden == 0 || !(self.network.init_scale >= 0.0) {
            return bad("network.hidden must be >= 1 and init_scale >= 0");
        }
        Ok(())
    }

    /// Quantizer sharpness in effect during `epoch` (0-based).
    pub fn sharpness_at(&self, epoch: usize) -> T {
        let steps = (epoch / self.anneal_every).min(64) as i32;
        (self.sharpness * self.anneal_factor.powi(steps)).min(self.max_sharpness.max(self.sharpness))
    }
}

/// Dataset-level result of a network in hard mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics<T> {
    pub error_rate: T,
    pub mean_robustness: T,
    /// `ρ⁵` per sample, in dataset order.
    pub robustness: Vec<T>,
}

impl<T: Scalar> Metrics<T> {
    pub fn from_outputs(outputs: &[T], labels: &[Label]) -> Self {
        let n = T::from_usize_lossy(outputs.len().max(1));
        let wrong = outputs
            .iter()
            .zip(labels)
            .filter(|(&y, &l)| Label::from_robustness(y) != l)
            .count();
        Self {
            error_rate: T::from_usize_lossy(wrong) / n,
            mean_robustness: outputs.iter().copied().sum::<T>() / n,
            robustness: outputs.to_vec(),
        }
    }

    /// Population variance of the per-sample robustness.
    pub fn robustness_variance(&self) -> T {
        let n = T::from_usize_lossy(self.robustness.len().max(1));
        let m = self.mean_robustness;
        self.robustness.iter().map(|&r| (r - m) * (r - m)).sum::<T>() / n
    }
}

/// One row of the training history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord<T> {
    pub epoch: usize,
    /// Mean per-sample loss over the epoch's updates.
    pub loss: T,
    /// Growth cost `C` after the epoch.
    pub cost: T,
    pub neurons: usize,
    pub mean_robustness: T,
    pub robustness_variance: T,
    pub error_rate: T,
}

pub fn write_history<T: Scalar>(history: &[EpochRecord<T>], out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "epoch",
        "loss",
        "C",
        "M",
        "mean_robustness",
        "robustness_variance",
        "error_rate",
    ])?;
    for r in history {
        w.write_record([
            r.epoch.to_string(),
            r.loss.to_string(),
            r.cost.to_string(),
            r.neurons.to_string(),
            r.mean_robustness.to_string(),
            r.robustness_variance.to_string(),
            r.error_rate.to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_history_csv<T: Scalar>(history: &[EpochRecord<T>], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    write_history(history, file).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// `θ ← θ - η ∂L/∂θ`, then clamps layer-4/5 weights at zero.
///
/// Threshold gradients sum over all `n` time steps and are averaged,
/// i.e. the thresholds move with step `η/n`.
pub fn sgd_step<T: Scalar>(params: &mut TlnnParams<T>, grads: &Gradients<T>, eta: T) {
    let m = params.len();
    let threshold_eta = eta / T::from_usize_lossy(params.n);
    for (k, (p, g)) in params.params_mut().into_iter().zip(grads.values()).enumerate() {
        let step = if k < m { threshold_eta } else { eta };
        *p = *p - step * g;
    }
    for w in params.reduction.iter_mut().flatten().chain(params.output.iter_mut()) {
        *w = w.max(T::zero());
    }
}

/// Zeroes every layer-4 weight below `w_th` and drops neurons left with
/// none. If that would empty the roster, the neuron with the largest
/// layer-4 weight is kept unchanged. Returns the number removed.
pub fn prune_neurons<T: Scalar>(params: &mut TlnnParams<T>, w_th: T) -> usize {
    if params.is_empty() {
        return 0;
    }
    let keep = (0..params.len())
        .max_by(|&a, &b| {
            let wa = params.reduction[a][0].max(params.reduction[a][1]);
            let wb = params.reduction[b][0].max(params.reduction[b][1]);
            wa.partial_cmp(&wb).unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let saved = params.reduction[keep];
    for w in params.reduction.iter_mut().flatten() {
        if *w < w_th {
            *w = T::zero();
        }
    }
    let is_dead = |p: &TlnnParams<T>, i: usize| p.reduction[i].iter().all(|&w| w == T::zero());
    if (0..params.len()).all(|i| is_dead(params, i)) {
        params.reduction[keep] = saved;
    }
    let before = params.len();
    for i in (0..before).rev() {
        if is_dead(params, i) {
            params.remove_neuron(i);
        }
    }
    before - params.len()
}

/// `C = (1/|𝒟|) Σ (y - y_d)²`.
pub fn cost<T: Scalar>(outputs: &[T], targets: &[T]) -> T {
    let n = T::from_usize_lossy(outputs.len().max(1));
    outputs
        .iter()
        .zip(targets)
        .map(|(&y, &d)| (y - d) * (y - d))
        .sum::<T>()
        / n
}

fn outputs<T: Scalar>(params: &TlnnParams<T>, data: &Dataset<T>, mode: Mode) -> Result<Vec<T>> {
    data.iter().map(|s| forward(params, &s.signal, mode).map(|(y, _)| y)).collect()
}

fn targets<T: Scalar>(data: &Dataset<T>) -> Vec<T> {
    data.iter().map(|s| s.label.value()).collect()
}

/// Hard-mode metrics of `params` on `data`.
pub fn evaluate<T: Scalar>(params: &TlnnParams<T>, data: &Dataset<T>) -> Result<Metrics<T>> {
    let ys = outputs(params, data, Mode::Hard)?;
    let labels: Vec<Label> = data.iter().map(|s| s.label).collect();
    Ok(Metrics::from_outputs(&ys, &labels))
}

/// Statistic `s` of `x` over the neuron window such that the atomic
/// formula holds iff `s >= c` (for `>=`) or `s < c` (for `<`).
fn window_statistic<T: Scalar>(x: &[T], kind: NeuronKind, start: usize, end: usize, nested: usize, cmp: Comparison) -> T {
    let min = |a: T, b: T| a.min(b);
    let max = |a: T, b: T| a.max(b);
    // For `>=`: always → min, eventually → max. `<` swaps both.
    let (inner_min, outer_min) = match kind {
        NeuronKind::Always => (true, true),
        NeuronKind::Eventually => (false, false),
        NeuronKind::AlwaysEventually => (false, true),
        NeuronKind::EventuallyAlways => (true, false),
    };
    let flip = cmp == Comparison::Lt;
    let pick = |use_min: bool| if use_min != flip { min } else { max };
    let (inner, outer) = (pick(inner_min), pick(outer_min));
    let shifts = if kind.is_nested() { nested + 1 } else { 1 };
    let seed = |use_min: bool| if use_min != flip { T::infinity() } else { T::neg_infinity() };
    (0..shifts)
        .map(|j| x[start + j..=end + j].iter().copied().fold(seed(inner_min), inner))
        .fold(seed(outer_min), outer)
}

struct Candidate<T> {
    kind: NeuronKind,
    start: usize,
    end: usize,
    cmp: Comparison,
    threshold: T,
    correct: usize,
    margin: T,
}

/// Best threshold for one statistic. `gain[k] = (correct if sample k is
/// accepted, correct if rejected)` for the network that would result.
///
/// A sample whose class depends on this neuron only counts when it lies at
/// least `min_margin` from the threshold; ties go to the wider gap.
fn best_threshold<T: Scalar>(
    stats: &[T],
    gain: &[(bool, bool)],
    cmp: Comparison,
    pad: T,
    min_margin: T,
) -> (T, usize, T) {
    let mut s: Vec<T> = stats.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    s.dedup();
    let mut cuts = vec![(s[0] - pad, pad)];
    cuts.extend(s.windows(2).map(|w| ((w[0] + w[1]) * T::lit(0.5), (w[1] - w[0]) * T::lit(0.5))));
    cuts.push((s[s.len() - 1] + pad, pad));

    let mut best = (T::zero(), 0usize, T::neg_infinity());
    for (c, margin) in cuts {
        let score = stats
            .iter()
            .zip(gain)
            .filter(|(&v, &(if_acc, if_rej))| {
                if if_acc == if_rej {
                    return if_acc;
                }
                let accepted = match cmp {
                    Comparison::Ge => v >= c,
                    Comparison::Lt => v < c,
                };
                (if accepted { if_acc } else { if_rej }) && (v - c).abs() >= min_margin
            })
            .count();
        if score > best.1 || (score == best.1 && margin > best.2) {
            best = (c, score, margin);
        }
    }
    best
}

/// Creates a neuron for `params`. Without candidates the kind, window,
/// comparison and threshold are random (threshold within the data
/// range). With candidates, each one draws a kind (or uses `kind`) and a
/// window at random, and the one that best separates `data` in the grown
/// network wins.
pub fn init_neuron<T: Scalar, R: Rng + ?Sized>(
    params: &TlnnParams<T>,
    data: &Dataset<T>,
    kind: Option<NeuronKind>,
    config: &TrainConfig<T>,
    rng: &mut R,
) -> Result<(NeuronSpec<T>, Comparison, T)> {
    let n = params.n;
    let nested_of = |k: NeuronKind| if k.is_nested() { config.network.nested_horizon.min(n - 1) } else { 0 };
    let draw = |rng: &mut R| {
        let k = kind.unwrap_or_else(|| NeuronKind::ALL[rng.random_range(0..NeuronKind::ALL.len())]);
        let last = n - 1 - nested_of(k);
        let start = rng.random_range(0..=last);
        let width = rng.random_range(0..=last - start);
        (k, start, start + width)
    };
    let (lo, hi) = data.value_range();

    let chosen = if config.init_candidates == 0 {
        let (kind, start, end) = draw(rng);
        let cmp = if rng.random_bool(0.5) { Comparison::Ge } else { Comparison::Lt };
        let threshold = if hi > lo {
            lo + (hi - lo) * T::lit(rng.random_range(0.0..1.0))
        } else {
            lo
        };
        Candidate { kind, start, end, cmp, threshold, correct: 0, margin: T::zero() }
    } else {
        let gain = acceptance_gain(params, data)?;
        let pad = ((hi - lo) * T::lit(0.05)).max(T::epsilon());
        let min_margin = (hi - lo) * config.init_margin;
        let mut best: Option<Candidate<T>> = None;
        for _ in 0..config.init_candidates {
            let (kind, start, end) = draw(rng);
            for cmp in [Comparison::Ge, Comparison::Lt] {
                let stats: Vec<T> = data
                    .iter()
                    .map(|s| window_statistic(s.signal.samples(), kind, start, end, nested_of(kind), cmp))
                    .collect();
                let (threshold, correct, margin) = best_threshold(&stats, &gain, cmp, pad, min_margin);
                let better = best
                    .as_ref()
                    .is_none_or(|b| correct > b.correct || (correct == b.correct && margin > b.margin));
                if better {
                    best = Some(Candidate { kind, start, end, cmp, threshold, correct, margin });
                }
            }
        }
        let best = best.expect("at least one candidate");
        debug!(
            "{:?} neuron at [{}, {}] {} {} separates {}/{}",
            best.kind,
            best.start,
            best.end,
            best.cmp.symbol(),
            best.threshold,
            best.correct,
            data.len()
        );
        best
    };
    let seed = IntervalSeed {
        start: chosen.start as f64,
        width: (chosen.end - chosen.start) as f64,
    };
    let spec = NeuronSpec::init(chosen.kind, n, seed, &config.network, rng)?;
    Ok((spec, chosen.cmp, chosen.threshold))
}

/// For each sample: would the grown network classify it correctly if the
/// new neuron accepted it, and if it rejected it. The new neuron joins
/// both layer-4 groups.
fn acceptance_gain<T: Scalar>(params: &TlnnParams<T>, data: &Dataset<T>) -> Result<Vec<(bool, bool)>> {
    data.iter()
        .map(|s| {
            let positive = s.label == Label::Positive;
            let (and_prev, or_prev) = if params.is_empty() {
                (None, None)
            } else {
                let (_, trace) = forward(params, &s.signal, Mode::Hard)?;
                let ok = |g: usize| {
                    trace.layer4[g]
                        .is_live()
                        .then(|| trace.layer4[g].value() > T::zero())
                };
                (ok(0), ok(1))
            };
            let out = |accept: bool| {
                let and_ok = and_prev.unwrap_or(true) && accept;
                let or_ok = or_prev.unwrap_or(false) || accept;
                (params.output[0] == T::zero() || and_ok) && (params.output[1] == T::zero() || or_ok)
            };
            Ok((out(true) == positive, out(false) == positive))
        })
        .collect()
}

/// Adds one neuron of a random kind when the cost on `data` exceeds the
/// growth threshold and the roster is below its cap. Returns whether a
/// neuron was added.
pub fn maybe_add_neuron<T: Scalar, R: Rng + ?Sized>(
    params: &mut TlnnParams<T>,
    data: &Dataset<T>,
    config: &TrainConfig<T>,
    rng: &mut R,
) -> Result<bool> {
    let c = cost(&outputs(params, data, Mode::Soft)?, &targets(data));
    if c <= config.growth_threshold {
        return Ok(false);
    }
    if params.len() >= config.max_neurons {
        debug!("cost {c} above threshold but roster is full ({})", params.len());
        return Ok(false);
    }
    let (mut spec, cmp, threshold) = init_neuron(params, data, None, config, rng)?;
    if let Some(first) = params.neurons.first() {
        spec.quant.sharpness = first.quant.sharpness;
    }
    info!("cost {c}: added {:?} neuron, roster {}", spec.kind, params.len() + 1);
    params.push_neuron(spec, cmp, threshold);
    Ok(true)
}

/// Fresh single-neuron network for `data`.
pub fn initialize<T: Scalar>(data: &Dataset<T>, config: &TrainConfig<T>, rng: &mut ChaCha8Rng) -> Result<TlnnParams<T>> {
    let mut params = TlnnParams::empty(data.signal_len(), config.seed)?;
    let (spec, cmp, threshold) = init_neuron(&params, data, None, config, rng)?;
    params.push_neuron(spec, cmp, threshold);
    params.set_sharpness(config.sharpness_at(0));
    Ok(params)
}

/// Trains a network from a single neuron. Returns the final parameters
/// and one history row per epoch.
pub fn train<T: Scalar>(data: &Dataset<T>, config: &TrainConfig<T>) -> Result<(TlnnParams<T>, Vec<EpochRecord<T>>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = initialize(data, config, &mut rng)?;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let tgt = targets(data);

    for epoch in 0..config.epochs {
        params.set_sharpness(config.sharpness_at(epoch));
        order.shuffle(&mut rng);
        let mut total = T::zero();
        for &k in &order {
            let sample = &data.samples()[k];
            let (y, trace) = forward(&params, &sample.signal, Mode::Soft)?;
            total = total + loss(y, tgt[k]);
            let grads = backward(&trace, &params, tgt[k])?;
            sgd_step(&mut params, &grads, config.learning_rate);
        }

        if (epoch + 1) % config.structure_every == 0 {
            let removed = prune_neurons(&mut params, config.prune_threshold);
            if removed > 0 {
                info!("epoch {epoch}: pruned {removed} neuron(s), roster {}", params.len());
            }
        }
        let soft = outputs(&params, data, Mode::Soft)?;
        let c = cost(&soft, &tgt);
        let metrics = evaluate(&params, data)?;
        history.push(EpochRecord {
            epoch,
            loss: total / T::from_usize_lossy(data.len()),
            cost: c,
            neurons: params.len(),
            mean_robustness: metrics.mean_robustness,
            robustness_variance: metrics.robustness_variance(),
            error_rate: metrics.error_rate,
        });
        if (epoch + 1) % config.structure_every == 0 && epoch + 1 < config.epochs {
            maybe_add_neuron(&mut params, data, config, &mut rng)?;
        }
    }
    Ok((params, history))
}
