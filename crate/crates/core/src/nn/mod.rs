//! Gaussian dynamics network: one Swish hidden layer, a mean / log-std head,
//! analytic gradients of the negative log-likelihood, and Adam.

mod adam;
mod checkpoint;
mod mlp;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use mlp::{gaussian_nll, swish, Batch, Mlp, Prediction, LOG_STD_MAX, LOG_STD_MIN};
