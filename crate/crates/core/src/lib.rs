//! Exact information-theoretic analysis of residual, conditional and
//! conditional-residual inter-frame coding on finite models.
//!
//! * [`prob`]: finite joint distributions with derived deterministic variables.
//! * [`info`]: entropy, conditional entropy and (conditional) mutual information.
//! * [`pixel`]: single-pixel temporal prediction model with occlusions and a
//!   quantized prediction path.
//! * [`theorems`]: numeric verification of the lossless and lossy identities.
//! * [`rd`]: Blahut-Arimoto rate-distortion curves for the four paradigms.
//! * [`codec`]: static-model range coder implementing the three lossless coders.
//! * [`analysis`]: Bjøntegaard delta rate and CSV tables.

pub mod analysis;
pub mod codec;
pub mod error;
pub mod info;
pub mod pixel;
pub mod prob;
pub mod rd;
pub mod theorems;

pub use error::{Error, Result};
pub use info::{
    conditional_entropy, conditional_mutual_information, entropy, mutual_information, Bits,
};
pub use analysis::{bd_rate, mse_to_psnr, QualityCurve};
pub use codec::{Bitstream, Paradigm, ProbabilityModel};
pub use pixel::{EntropyReport, PixelModelParams};
pub use prob::{Alphabet, DeterministicMap, JointPmf, Symbol};
pub use rd::{BaConfig, DistortionMatrix, RdCurve, RdPoint};
pub use theorems::TheoremReport;
