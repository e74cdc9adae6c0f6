//! JSON checkpoint of a [`TlnnParams`]. Floats are written in shortest
//! round-trip form and parsed back exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::params::TlnnParams;
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "tlnn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
struct Envelope<T> {
    format: String,
    version: u32,
    scalar: String,
    params: TlnnParams<T>,
}

fn scalar_name<T: Scalar>() -> &'static str {
    if std::mem::size_of::<T>() == 4 {
        "f32"
    } else {
        "f64"
    }
}

pub fn to_string<T: Scalar>(params: &TlnnParams<T>) -> Result<String> {
    let env = Envelope {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        scalar: scalar_name::<T>().into(),
        params: params.clone(),
    };
    serde_json::to_string_pretty(&env).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn from_str<T: Scalar>(text: &str) -> Result<TlnnParams<T>> {
    let env: Envelope<T> = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if env.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!("unknown format `{}`", env.format)));
    }
    if env.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", env.version)));
    }
    if env.scalar != scalar_name::<T>() {
        return Err(Error::Checkpoint(format!(
            "checkpoint holds {} parameters, expected {}",
            env.scalar,
            scalar_name::<T>()
        )));
    }
    env.params.validate()?;
    Ok(env.params)
}

pub fn save<T: Scalar>(params: &TlnnParams<T>, path: &Path) -> Result<()> {
    let text = to_string(params)?;
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load<T: Scalar>(path: &Path) -> Result<TlnnParams<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    from_str(&text)
}
