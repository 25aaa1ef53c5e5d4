//! File formats and the seeded pixel sampler.

pub mod atb;
pub mod manifest;
pub mod pgm;
pub mod rng;
pub mod sampler;

pub use atb::{parse_atb, write_atb, AtTensorFile, AtbError};
pub use manifest::{load_manifest, write_manifest, ClassDecl, Manifest, ManifestEntry, ManifestError};
pub use pgm::{encode_pgm, parse_pgm_mask, write_pgm_mask, PgmError};
pub use rng::{derive_seed, SplitMix64};
pub use sampler::sample_pixels;
