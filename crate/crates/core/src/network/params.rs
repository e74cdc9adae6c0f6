use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::Comparison;
use crate::quantizer::QuantSpec;
use crate::scalar::Scalar;

/// Atomic formula realised by a layer-3 neuron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NeuronKind {
    /// `G[τ₁,τ₂] μ`
    Always,
    /// `F[τ₁,τ₂] μ`
    Eventually,
    /// `G[0,τ₀] F[τ₁,τ₂] μ`
    AlwaysEventually,
    /// `F[0,τ₀] G[τ₁,τ₂] μ`
    EventuallyAlways,
}

impl NeuronKind {
    pub const ALL: [NeuronKind; 4] = [
        NeuronKind::Always,
        NeuronKind::Eventually,
        NeuronKind::AlwaysEventually,
        NeuronKind::EventuallyAlways,
    ];

    pub fn is_nested(self) -> bool {
        matches!(
            self,
            NeuronKind::AlwaysEventually | NeuronKind::EventuallyAlways
        )
    }
}

/// Fully connected layer, `out = W·in + b` with `W` stored row-major
/// (`outputs × inputs`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        }
    }

    fn uniform<R: Rng + ?Sized>(inputs: usize, outputs: usize, scale: f64, rng: &mut R) -> Self {
        let mut d = Self::zeros(inputs, outputs);
        for w in &mut d.weights {
            *w = T::lit(rng.random_range(-scale..=scale));
        }
        d
    }

    pub fn apply(&self, input: &[T]) -> Vec<T> {
        debug_assert_eq!(input.len(), self.inputs);
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, &b)| row.iter().zip(input).map(|(&w, &x)| w * x).sum::<T>() + b)
            .collect()
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.weights[r * self.inputs..(r + 1) * self.inputs]
    }

    fn check(&self, what: &str) -> Result<()> {
        if self.weights.len() != self.inputs * self.outputs || self.bias.len() != self.outputs {
            return Err(Error::Checkpoint(format!("{what}: inconsistent layer shape")));
        }
        Ok(())
    }
}

/// Two-layer feed-forward map with a tanh hidden layer and linear output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp<T> {
    pub hidden: Dense<T>,
    pub output: Dense<T>,
}

impl<T: Scalar> Mlp<T> {
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        Self {
            hidden: Dense::zeros(inputs, hidden),
            output: Dense::zeros(hidden, outputs),
        }
    }

    /// Returns `(hidden activations, outputs)`.
    pub fn forward(&self, input: &[T]) -> (Vec<T>, Vec<T>) {
        let hidden: Vec<T> = self.hidden.apply(input).into_iter().map(T::tanh).collect();
        let out = self.output.apply(&hidden);
        (hidden, out)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.hidden
            .weights
            .iter_mut()
            .chain(self.hidden.bias.iter_mut())
            .chain(self.output.weights.iter_mut())
            .chain(self.output.bias.iter_mut())
    }

    fn params(&self) -> impl Iterator<Item = &T> {
        self.hidden
            .weights
            .iter()
            .chain(self.hidden.bias.iter())
            .chain(self.output.weights.iter())
            .chain(self.output.bias.iter())
    }
}

/// One layer-3 neuron: its kind, the interval autoencoder and quantizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuronSpec<T> {
    pub kind: NeuronKind,
    /// `ℝⁿ → ℝ²`, producing the raw interval codes `(h₁, h₂)`.
    pub encoder: Mlp<T>,
    /// `ℝ² → ℝⁿ`, followed by softplus to give the window weights `W²`.
    pub decoder: Mlp<T>,
    /// Outer horizon `τ₀` of the nested kinds.
    pub nested_horizon: usize,
    pub quant: QuantSpec<T>,
}

/// Hyperparameters that shape freshly created neurons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Scalar")]
pub struct NetworkConfig<T> {
    pub hidden: usize,
    pub nested_horizon: usize,
    pub sharpness: T,
    /// Half-width of the uniform initialisation of encoder/decoder weights.
    pub init_scale: f64,
}

impl<T: Scalar> Default for NetworkConfig<T> {
    fn default() -> Self {
        Self {
            hidden: 16,
            nested_horizon: 5,
            sharpness: T::lit(10.0),
            init_scale: 0.1,
        }
    }
}

/// Initial interval a neuron's encoder starts from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalSeed {
    pub start: f64,
    pub width: f64,
}

impl<T: Scalar> NeuronSpec<T> {
    /// Fresh neuron whose encoder output bias encodes `seed` and whose
    /// decoder starts with window weights of about one.
    pub fn init<R: Rng + ?Sized>(
        kind: NeuronKind,
        n: usize,
        seed: IntervalSeed,
        config: &NetworkConfig<T>,
        rng: &mut R,
    ) -> Result<Self> {
        let h = config.hidden;
        let s = config.init_scale;
        let mut encoder = Mlp {
            hidden: Dense::uniform(n, h, s, rng),
            output: Dense::uniform(h, 2, s, rng),
        };
        encoder.output.bias = vec![T::lit(seed.start), T::lit(seed.width)];
        let mut decoder = Mlp {
            hidden: Dense::uniform(2, h, s, rng),
            output: Dense::uniform(h, n, s, rng),
        };
        // softplus(ln(e - 1)) = 1
        let unit = T::lit((std::f64::consts::E - 1.0).ln());
        decoder.output.bias = vec![unit; n];
        let nested_horizon = if kind.is_nested() {
            config.nested_horizon.min(n - 1)
        } else {
            0
        };
        Ok(Self {
            kind,
            encoder,
            decoder,
            nested_horizon,
            quant: QuantSpec::for_length(n, config.sharpness)?,
        })
    }
}

/// Full parameter store of a network over length-`n` signals.
///
/// Per-neuron vectors (`neurons`, `comparisons`, `thresholds`,
/// `reduction`) are index-aligned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TlnnParams<T> {
    pub n: usize,
    pub neurons: Vec<NeuronSpec<T>>,
    pub comparisons: Vec<Comparison>,
    /// Predicate thresholds `W¹`, one per neuron, shared across time.
    pub thresholds: Vec<T>,
    /// Layer-4 weights `W³`: `[to "and", to "or"]` per neuron.
    pub reduction: Vec<[T; 2]>,
    /// Layer-5 weights `W⁴`: `[and, or]`.
    pub output: [T; 2],
    /// Seed the parameters were initialised from.
    pub seed: u64,
}

impl<T: Scalar> TlnnParams<T> {
    /// Empty network (no neurons yet) over signals of length `n`.
    pub fn empty(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("signal length must be >= 2, got {n}")));
        }
        Ok(Self {
            n,
            neurons: Vec::new(),
            comparisons: Vec::new(),
            thresholds: Vec::new(),
            reduction: Vec::new(),
            output: [T::one(), T::one()],
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    /// Appends a neuron with both layer-4 weights set to one.
    pub fn push_neuron(&mut self, neuron: NeuronSpec<T>, cmp: Comparison, threshold: T) {
        self.neurons.push(neuron);
        self.comparisons.push(cmp);
        self.thresholds.push(threshold);
        self.reduction.push([T::one(), T::one()]);
    }

    pub fn remove_neuron(&mut self, i: usize) {
        self.neurons.remove(i);
        self.comparisons.remove(i);
        self.thresholds.remove(i);
        self.reduction.remove(i);
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.neurons.len();
        if m == 0 {
            return Err(Error::Config("a network needs at least one neuron".into()));
        }
        if self.comparisons.len() != m || self.thresholds.len() != m || self.reduction.len() != m {
            return Err(Error::Checkpoint("per-neuron arrays disagree in length".into()));
        }
        for (i, nrn) in self.neurons.iter().enumerate() {
            let what = format!("neuron {i}");
            nrn.encoder.hidden.check(&what)?;
            nrn.encoder.output.check(&what)?;
            nrn.decoder.hidden.check(&what)?;
            nrn.decoder.output.check(&what)?;
            if nrn.encoder.hidden.inputs != self.n
                || nrn.encoder.output.outputs != 2
                || nrn.decoder.hidden.inputs != 2
                || nrn.decoder.output.outputs != self.n
                || nrn.encoder.output.inputs != nrn.encoder.hidden.outputs
                || nrn.decoder.output.inputs != nrn.decoder.hidden.outputs
            {
                return Err(Error::Checkpoint(format!("{what}: autoencoder shape mismatch")));
            }
            if nrn.nested_horizon >= self.n {
                return Err(Error::Checkpoint(format!("{what}: nested horizon too long")));
            }
            nrn.quant.validate()?;
        }
        let nonneg = |w: &T| *w >= T::zero() && w.is_finite();
        if !self.reduction.iter().flatten().all(nonneg) || !self.output.iter().all(nonneg) {
            return Err(Error::Config("layer-4/5 weights must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn set_sharpness(&mut self, k: T) {
        for nrn in &mut self.neurons {
            nrn.quant.sharpness = k;
        }
    }

    /// Every trainable scalar in a fixed order shared with
    /// [`Gradients::values`].
    pub fn params_mut(&mut self) -> Vec<&mut T> {
        let mut out: Vec<&mut T> = self.thresholds.iter_mut().collect();
        for nrn in &mut self.neurons {
            out.extend(nrn.encoder.params_mut());
            out.extend(nrn.decoder.params_mut());
        }
        out.extend(self.reduction.iter_mut().flatten());
        out.extend(self.output.iter_mut());
        out
    }

    pub fn param_count(&self) -> usize {
        self.thresholds.len()
            + self
                .neurons
                .iter()
                .map(|n| n.encoder.params().count() + n.decoder.params().count())
                .sum::<usize>()
            + 2 * self.reduction.len()
            + 2
    }
}

/// Partial derivatives of the loss, shaped like [`TlnnParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub thresholds: Vec<T>,
    pub encoders: Vec<Mlp<T>>,
    pub decoders: Vec<Mlp<T>>,
    pub reduction: Vec<[T; 2]>,
    pub output: [T; 2],
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(params: &TlnnParams<T>) -> Self {
        let shape = |m: &Mlp<T>| {
            Mlp::zeros(m.hidden.inputs, m.hidden.outputs, m.output.outputs)
        };
        Self {
            thresholds: vec![T::zero(); params.len()],
            encoders: params.neurons.iter().map(|n| shape(&n.encoder)).collect(),
            decoders: params.neurons.iter().map(|n| shape(&n.decoder)).collect(),
            reduction: vec![[T::zero(); 2]; params.len()],
            output: [T::zero(); 2],
        }
    }

    /// Flattened in the order of [`TlnnParams::params_mut`].
    pub fn values(&self) -> Vec<T> {
        let mut out = self.thresholds.clone();
        for (e, d) in self.encoders.iter().zip(&self.decoders) {
            out.extend(e.params().copied());
            out.extend(d.params().copied());
        }
        out.extend(self.reduction.iter().flatten().copied());
        out.extend(self.output);
        out
    }
}
