//! Sequence variational autoencoder over prefix token sequences.
//!
//! Encoder and decoder are single-layer LSTMs sharing one token embedding.
//! The decoder is conditioned on the latent code twice: through its initial
//! hidden state and by concatenating the code to every input embedding.
//! Gradients are computed by hand-written backpropagation through time.

mod checkpoint;
mod decode;
mod network;
mod train;
mod vocab;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use decode::{decode, sample_prior, validity_rate, DecodeOutcome, DecodeStatus, DecoderCache, Decoding};
pub use network::{Layout, ModelDims, SeqVaeModel};
pub use train::{finetune_on_bank, pretrain, reparameterize, EpochStats, StepLosses, TrainConfig, Trainer};
pub use vocab::{Symbol, Vocabulary};
