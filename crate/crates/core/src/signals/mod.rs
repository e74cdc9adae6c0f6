//! Labelled datasets, the vibration feature pipeline and a synthetic
//! bearing signal generator.
//!
//! The feature index of a preprocessed signal plays the role of time:
//! temporal operators range over positions of the concatenated band
//! moments.

mod dataset;
pub mod preprocess;
pub mod synth;

pub use dataset::{load_csv, Condition, Dataset, Label, LabeledSample};
pub use preprocess::{
    downsample, features, preprocess_dataset, second_moment_features, wpt_level2, MinMax, PreprocessConfig,
};
pub use synth::{one_vs_rest, synth_bearing, synth_corpus, FaultProfile, SplitConfig, SynthConfig};
