//! Feature pipeline: two-level Haar wavelet packet split, sliding second
//! central moment per band, concatenation, block-average downsampling and
//! dataset-wide min-max scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::Signal;
use crate::scalar::Scalar;
use crate::signals::dataset::{Dataset, LabeledSample};

/// One orthonormal Haar analysis step: `(approximation, detail)`, each half
/// the input length.
fn haar_split<T: Scalar>(x: &[T]) -> (Vec<T>, Vec<T>) {
    let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    x.chunks_exact(2)
        .map(|p| ((p[0] + p[1]) * s, (p[0] - p[1]) * s))
        .unzip()
}

/// Full level-2 wavelet packet decomposition with Haar filters.
///
/// Bands are returned in ascending frequency order `[AA, AD, DD, DA]`: the
/// high-pass branch mirrors the spectrum, so its detail leaf is the lower
/// of the two upper bands.
pub fn wpt_level2<T: Scalar>(x: &Signal<T>) -> Result<[Signal<T>; 4]> {
    let n = x.len();
    if !n.is_multiple_of(4) {
        return Err(Error::Signal(format!(
            "wavelet packet split needs a length divisible by 4, got {n}"
        )));
    }
    let (a, d) = haar_split(x.samples());
    let (aa, ad) = haar_split(&a);
    let (da, dd) = haar_split(&d);
    let period = x.period() * T::lit(4.0);
    let band = |v: Vec<T>| Signal::with_period(v, period);
    Ok([band(aa)?, band(ad)?, band(dd)?, band(da)?])
}

/// Population variance over every full window of `window` samples
/// (`len - window + 1` values per band), bands concatenated in order.
pub fn second_moment_features<T: Scalar>(bands: &[Signal<T>], window: usize) -> Result<Signal<T>> {
    if window == 0 {
        return Err(Error::Config("moment window must be at least 1".into()));
    }
    let mut out = Vec::new();
    for band in bands {
        let v = band.samples();
        if window > v.len() {
            return Err(Error::Config(format!(
                "moment window {window} exceeds band length {}",
                v.len()
            )));
        }
        let inv = T::one() / T::from_usize_lossy(window);
        for w in v.windows(window) {
            let mean = w.iter().copied().sum::<T>() * inv;
            let var = w.iter().map(|&s| (s - mean) * (s - mean)).sum::<T>() * inv;
            out.push(var);
        }
    }
    Signal::new(out)
}

/// Averages `target` contiguous blocks; block `i` spans
/// `[⌊i·N/target⌋, ⌊(i+1)·N/target⌋)`.
pub fn downsample<T: Scalar>(x: &Signal<T>, target: usize) -> Result<Signal<T>> {
    let n = x.len();
    if target == 0 || target > n {
        return Err(Error::Config(format!(
            "downsample target must be in 1..={n}, got {target}"
        )));
    }
    let v = x.samples();
    let out = (0..target)
        .map(|i| {
            let lo = i * n / target;
            let hi = (i + 1) * n / target;
            v[lo..hi].iter().copied().sum::<T>() / T::from_usize_lossy(hi - lo)
        })
        .collect();
    Signal::new(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Sliding window of the second moment, in band samples.
    pub moment_window: usize,
    /// Length of the final feature signal.
    pub target_len: usize,
    /// Rescale all features of a dataset jointly onto `[0, 1]`.
    pub rescale: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            moment_window: 32,
            target_len: 128,
            rescale: true,
        }
    }
}

/// Raw signal to unscaled feature signal.
pub fn features<T: Scalar>(x: &Signal<T>, config: &PreprocessConfig) -> Result<Signal<T>> {
    let bands = wpt_level2(x)?;
    let moments = second_moment_features(&bands, config.moment_window)?;
    downsample(&moments, config.target_len)
}

/// Global `(min, max)` scaling onto `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMax<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> MinMax<T> {
    pub fn apply(&self, x: &Signal<T>) -> Result<Signal<T>> {
        let span = self.max - self.min;
        let scale = if span > T::zero() { T::one() / span } else { T::zero() };
        Signal::with_period(
            x.samples().iter().map(|&v| (v - self.min) * scale).collect(),
            x.period(),
        )
    }
}

/// Applies [`features`] to every sample and, when configured, rescales the
/// whole dataset with one min-max map. Returns the map used.
pub fn preprocess_dataset<T: Scalar>(
    raw: &Dataset<T>,
    config: &PreprocessConfig,
) -> Result<(Dataset<T>, Option<MinMax<T>>)> {
    let mut out = raw
        .iter()
        .map(|s| {
            Ok(LabeledSample {
                signal: features(&s.signal, config)?,
                label: s.label,
                condition: s.condition,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut scaling = None;
    if config.rescale {
        let ds = Dataset::new(out)?;
        let (min, max) = ds.value_range();
        let mm = MinMax { min, max };
        out = ds
            .iter()
            .map(|s| {
                Ok(LabeledSample {
                    signal: mm.apply(&s.signal)?,
                    ..s.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        scaling = Some(mm);
    }
    Ok((Dataset::new(out)?, scaling))
}
