//! Dense networks with exact reverse-mode gradients.

mod adam;
pub mod gradcheck;
mod matrix;
mod mlp;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use gradcheck::{compare_gradients, grad_check, LossSpec};
pub use matrix::Matrix;
pub use mlp::{soft_update, Activation, Cache, Head, LayerShape, MlpParams};

use crate::error::{Error, Result};

/// Self-describing network file: shapes, activations, raw parameters and the
/// hash of the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub format: String,
    pub config_hash: String,
    pub params: MlpParams,
}

pub const NETWORK_FORMAT: &str = "sessmarl-mlp/1";

pub fn save_network(path: &Path, params: &MlpParams, config_hash: &str) -> Result<()> {
    let file = NetworkFile {
        format: NETWORK_FORMAT.into(),
        config_hash: config_hash.into(),
        params: params.clone(),
    };
    write_json(path, &file)
}

pub fn load_network(path: &Path) -> Result<NetworkFile> {
    let file: NetworkFile = read_json(path)?;
    if file.format != NETWORK_FORMAT {
        return Err(Error::Checkpoint(format!(
            "{}: unsupported format `{}`",
            path.display(),
            file.format
        )));
    }
    file.params.validate()?;
    Ok(file)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&s)?)
}
