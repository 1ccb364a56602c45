//! Graph outlier scorers and the multidimensional CMP baseline.
//!
//! Every neural scorer trains once on a subject's whole graph stream and then
//! scores each graph of that stream.

pub mod autoencoder;
mod baseline;
pub mod mlpae;
mod net;
pub mod ocgnn;
mod scores;

pub use autoencoder::{score_dominant, score_gcnae, AutoencoderConfig, DominantConfig, GcnaeConfig, GraphAutoencoder};
pub use baseline::{knn_previous, score_cmp_baseline, CmpBaselineConfig};
pub use mlpae::{score_mlpae, Mlpae, MlpaeConfig};
pub use net::NetConfig;
pub use ocgnn::{score_ocgnn, Ocgnn, OcgnnConfig};
pub use scores::{read_scores_csv, write_scores_csv, ScoreSeries};
