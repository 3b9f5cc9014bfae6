use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ModelDims, SeqVaeModel};
use crate::error::{Error, Result};
use crate::expr::Grammar;

pub const CHECKPOINT_FORMAT: &str = "defect-sr/seqvae";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Textual (JSON) model container: vocabulary, shapes and the flat
/// parameter array in [`super::Layout`] order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub grammar: Grammar,
    pub vocab_size: usize,
    pub dims: ModelDims,
    pub n_params: usize,
    pub epochs_trained: usize,
    pub params: Vec<f64>,
}

pub fn save_checkpoint<W: Write>(model: &SeqVaeModel, epochs_trained: usize, writer: W) -> Result<()> {
    let ck = Checkpoint {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        grammar: model.vocab().grammar().clone(),
        vocab_size: model.vocab().len(),
        dims: model.dims(),
        n_params: model.params().len(),
        epochs_trained,
        params: model.params().to_vec(),
    };
    serde_json::to_writer(writer, &ck)?;
    Ok(())
}

/// Loads and validates a checkpoint; returns the model and its epoch count.
pub fn load_checkpoint<R: Read>(reader: R) -> Result<(SeqVaeModel, usize)> {
    let ck: Checkpoint = serde_json::from_reader(reader)?;
    if ck.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!("unexpected format `{}`", ck.format)));
    }
    if ck.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", ck.version)));
    }
    ck.grammar.validate().map_err(Error::Checkpoint)?;
    ck.dims.validate().map_err(Error::Checkpoint)?;
    let model = SeqVaeModel::from_parts(ck.grammar, ck.dims, ck.params)?;
    if model.vocab().len() != ck.vocab_size {
        return Err(Error::Checkpoint(format!(
            "vocabulary size {} does not match grammar ({})",
            ck.vocab_size,
            model.vocab().len()
        )));
    }
    if model.params().len() != ck.n_params {
        return Err(Error::Checkpoint("declared parameter count mismatch".into()));
    }
    Ok((model, ck.epochs_trained))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn round_trip_and_shape_validation() {
        let m = SeqVaeModel::random(
            Grammar::default(),
            ModelDims {
                embed: 4,
                hidden: 5,
                latent: 6,
            },
            &mut seeded(0),
        );
        let mut buf = Vec::new();
        save_checkpoint(&m, 12, &mut buf).unwrap();
        let (back, epochs) = load_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(epochs, 12);

        let mut v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        v["dims"]["hidden"] = 6.into();
        let bad = serde_json::to_vec(&v).unwrap();
        assert!(matches!(load_checkpoint(bad.as_slice()), Err(Error::Checkpoint(_))));

        let mut v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        v["version"] = 99.into();
        assert!(load_checkpoint(serde_json::to_vec(&v).unwrap().as_slice()).is_err());
    }
}
