use std::fmt;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::Signal;
use crate::scalar::Scalar;

/// Bearing condition a sample was recorded (or synthesised) under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Inner,
    Outer,
    Rolling,
    Normal,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Inner,
        Condition::Outer,
        Condition::Rolling,
        Condition::Normal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Inner => "inner",
            Condition::Outer => "outer",
            Condition::Rolling => "rolling",
            Condition::Normal => "normal",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inner" => Ok(Condition::Inner),
            "outer" => Ok(Condition::Outer),
            "rolling" => Ok(Condition::Rolling),
            "normal" => Ok(Condition::Normal),
            other => Err(Error::Dataset(format!("unknown condition `{other}`"))),
        }
    }
}

/// Binary class label, `+1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn from_int(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(Error::Dataset(format!("label must be 1 or -1, got {other}"))),
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn value<T: Scalar>(self) -> T {
        match self {
            Label::Positive => T::one(),
            Label::Negative => -T::one(),
        }
    }

    /// Class predicted by a robustness value; zero counts as positive.
    pub fn from_robustness<T: Scalar>(rho: T) -> Self {
        if rho >= T::zero() {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample<T> {
    pub signal: Signal<T>,
    pub label: Label,
    pub condition: Option<Condition>,
}

/// Non-empty collection of equal-length labelled signals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    samples: Vec<LabeledSample<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(samples: Vec<LabeledSample<T>>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::Dataset("dataset is empty".into()));
        };
        let n = first.signal.len();
        if let Some(bad) = samples.iter().find(|s| s.signal.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                found: bad.signal.len(),
            });
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[LabeledSample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn signal_len(&self) -> usize {
        self.samples[0].signal.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledSample<T>> {
        self.samples.iter()
    }

    /// Smallest and largest sample value across the dataset.
    pub fn value_range(&self) -> (T, T) {
        self.samples
            .iter()
            .flat_map(|s| s.signal.samples().iter().copied())
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    /// Writes `label[,condition],x0,x1,...`. The condition column is
    /// emitted only when every sample carries one.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_to(file)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn write_to<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let with_condition = self.samples.iter().all(|s| s.condition.is_some());
        let mut header = vec!["label".to_string()];
        if with_condition {
            header.push("condition".into());
        }
        header.extend((0..self.signal_len()).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for s in &self.samples {
            let mut rec = vec![s.label.as_int().to_string()];
            if with_condition {
                rec.push(s.condition.map(Condition::as_str).unwrap_or_default().to_string());
            }
            rec.extend(s.signal.samples().iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()
    }
}

/// Reads a dataset written by [`Dataset::write_csv`] or any file with a
/// `label,x0,x1,...` header. Line numbers in errors count the header as 1.
pub fn load_csv<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let parse_err = |row: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.get(0).map(str::trim) != Some("label") {
        return Err(parse_err(1, "header must start with `label`".into()));
    }
    let with_condition = header.get(1).map(str::trim) == Some("condition");
    let offset = if with_condition { 2 } else { 1 };
    let width = header.len() - offset;
    if width == 0 {
        return Err(parse_err(1, "no signal columns".into()));
    }

    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| parse_err(row, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(Error::LengthMismatch {
                expected: width,
                found: rec.len().saturating_sub(offset),
            });
        }
        let label_text = rec[0].trim();
        let label = label_text
            .parse::<i64>()
            .map_err(|_| parse_err(row, format!("invalid label `{label_text}`")))
            .and_then(|v| Label::from_int(v).map_err(|e| parse_err(row, e.to_string())))?;
        let condition = if with_condition {
            Some(rec[1].parse::<Condition>().map_err(|e| parse_err(row, e.to_string()))?)
        } else {
            None
        };
        let values = rec
            .iter()
            .skip(offset)
            .map(|v| {
                v.trim()
                    .parse::<T>()
                    .map_err(|_| parse_err(row, format!("invalid number `{v}`")))
            })
            .collect::<Result<Vec<T>>>()?;
        let signal = Signal::new(values).map_err(|e| parse_err(row, e.to_string()))?;
        samples.push(LabeledSample {
            signal,
            label,
            condition,
        });
    }
    Dataset::new(samples)
}
