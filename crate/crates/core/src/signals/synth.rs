//! Synthetic stand-in for bearing vibration recordings.
//!
//! A localised defect makes the rollers strike it at a fixed rate; every
//! strike excites a structural resonance that rings down quickly. Each
//! fault signal is therefore a train of decaying sinusoids, one per
//! strike, plus white measurement noise. A healthy bearing gives noise
//! only.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::Signal;
use crate::scalar::Scalar;
use crate::signals::dataset::{Condition, Dataset, Label, LabeledSample};

/// Impulse train parameters of one fault condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultProfile {
    /// Strike repetition rate in Hz.
    pub rate_hz: f64,
    /// Resonance excited by each strike, in Hz.
    pub ring_hz: f64,
    /// Exponential decay time constant of the ring, in seconds.
    pub decay_s: f64,
    pub amplitude: f64,
    /// Relative per-strike amplitude spread, uniform in `±jitter`.
    pub jitter: f64,
    /// Relative spread of strike times around the nominal period.
    pub timing_jitter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub fs: f64,
    pub length: usize,
    /// Samples generated per condition.
    pub count: usize,
    /// Standard deviation of the additive white noise.
    pub noise: f64,
    pub inner: FaultProfile,
    pub outer: FaultProfile,
    pub rolling: FaultProfile,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let profile = |rate_hz, ring_hz| FaultProfile {
            rate_hz,
            ring_hz,
            decay_s: 2.0e-3,
            amplitude: 1.0,
            jitter: 0.2,
            timing_jitter: 0.02,
        };
        Self {
            fs: 12_000.0,
            length: 1024,
            count: 220,
            noise: 0.1,
            inner: profile(162.0, 2_400.0),
            outer: profile(107.0, 500.0),
            rolling: profile(141.0, 5_400.0),
        }
    }
}

impl SynthConfig {
    pub fn profile(&self, condition: Condition) -> Option<&FaultProfile> {
        match condition {
            Condition::Inner => Some(&self.inner),
            Condition::Outer => Some(&self.outer),
            Condition::Rolling => Some(&self.rolling),
            Condition::Normal => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0) || self.length == 0 || !(self.noise >= 0.0) {
            return Err(Error::Config(
                "synth needs fs > 0, length > 0 and noise >= 0".into(),
            ));
        }
        for p in [&self.inner, &self.outer, &self.rolling] {
            if !(p.rate_hz > 0.0) || !(p.decay_s > 0.0) || !(p.ring_hz >= 0.0) || !(p.jitter >= 0.0) {
                return Err(Error::Config(format!("invalid fault profile {p:?}")));
            }
        }
        Ok(())
    }
}

fn impulse_train<R: Rng + ?Sized>(out: &mut [f64], p: &FaultProfile, fs: f64, rng: &mut R) {
    let period = 1.0 / p.rate_hz;
    let duration = out.len() as f64 / fs;
    let tail = 8.0 * p.decay_s;
    // Random phase, with strikes starting before t = 0 so the record opens
    // mid-ring as a real recording would.
    let mut t0 = -rng.random_range(0.0..period) - (tail / period).ceil() * period;
    while t0 < duration {
        let at = t0 + period * p.timing_jitter * rng.random_range(-1.0..=1.0);
        let amp = p.amplitude * (1.0 + p.jitter * rng.random_range(-1.0..=1.0));
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let first = ((at * fs).ceil().max(0.0)) as usize;
        for (i, v) in out.iter_mut().enumerate().skip(first) {
            let dt = i as f64 / fs - at;
            if dt > tail {
                break;
            }
            *v += amp * (-dt / p.decay_s).exp() * (std::f64::consts::TAU * p.ring_hz * dt + phase).sin();
        }
        t0 += period;
    }
}

/// `count` signals of one condition.
pub fn synth_bearing<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    condition: Condition,
    count: usize,
    config: &SynthConfig,
) -> Result<Vec<Signal<T>>> {
    config.validate()?;
    let noise = Normal::new(0.0, config.noise).map_err(|e| Error::Config(e.to_string()))?;
    (0..count)
        .map(|_| {
            let mut x = vec![0.0; config.length];
            if let Some(p) = config.profile(condition) {
                impulse_train(&mut x, p, config.fs, rng);
            }
            if config.noise > 0.0 {
                for v in &mut x {
                    *v += noise.sample(rng);
                }
            }
            Signal::with_period(
                x.into_iter().map(T::lit).collect(),
                T::lit(1.0 / config.fs),
            )
        })
        .collect()
}

/// Full corpus, `config.count` samples per condition in the order of
/// [`Condition::ALL`]. Faults are labelled `+1`, normal `-1`.
pub fn synth_corpus<T: Scalar>(config: &SynthConfig, seed: u64) -> Result<Dataset<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(4 * config.count);
    for condition in Condition::ALL {
        let label = if condition == Condition::Normal {
            Label::Negative
        } else {
            Label::Positive
        };
        for signal in synth_bearing(&mut rng, condition, config.count, config)? {
            samples.push(LabeledSample {
                signal,
                label,
                condition: Some(condition),
            });
        }
    }
    Dataset::new(samples)
}

/// Sample counts of a one-vs-rest split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub positive_train: usize,
    pub positive_test: usize,
    /// Negatives drawn from each other condition, per split.
    pub negative_per_condition: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            positive_train: 110,
            positive_test: 110,
            negative_per_condition: 30,
        }
    }
}

/// Train and test sets for one binary task: `target` against the other
/// three conditions. Positives are taken in corpus order; each other
/// condition is shuffled with `seed` and contributes disjoint negatives
/// to train and test.
pub fn one_vs_rest<T: Scalar>(
    corpus: &Dataset<T>,
    target: Condition,
    split: &SplitConfig,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let of = |c: Condition| -> Vec<&LabeledSample<T>> {
        corpus.iter().filter(|s| s.condition == Some(c)).collect()
    };
    let relabel = |s: &LabeledSample<T>, label| LabeledSample {
        label,
        ..s.clone()
    };

    let pos = of(target);
    if pos.len() < split.positive_train + split.positive_test {
        return Err(Error::Dataset(format!(
            "{target}: need {} samples, have {}",
            split.positive_train + split.positive_test,
            pos.len()
        )));
    }
    let mut train: Vec<_> = pos[..split.positive_train]
        .iter()
        .map(|s| relabel(s, Label::Positive))
        .collect();
    let mut test: Vec<_> = pos[split.positive_train..split.positive_train + split.positive_test]
        .iter()
        .map(|s| relabel(s, Label::Positive))
        .collect();

    let k = split.negative_per_condition;
    for other in Condition::ALL.into_iter().filter(|&c| c != target) {
        let mut neg = of(other);
        if neg.len() < 2 * k {
            return Err(Error::Dataset(format!(
                "{other}: need {} negatives, have {}",
                2 * k,
                neg.len()
            )));
        }
        neg.shuffle(&mut rng);
        train.extend(neg[..k].iter().map(|s| relabel(s, Label::Negative)));
        test.extend(neg[k..2 * k].iter().map(|s| relabel(s, Label::Negative)));
    }
    Ok((Dataset::new(train)?, Dataset::new(test)?))
}
