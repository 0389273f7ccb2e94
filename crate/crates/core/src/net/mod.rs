//! The learned encounter policy: party encoding, the embedding + dense +
//! softmax network over 26 enemy classes and STOP, sequential sampling,
//! analytic log-probability gradients, Adam, and checkpoints.

mod adam;
mod arch;
mod checkpoint;
mod features;
mod gradcheck;
mod network;
mod policy;

pub use adam::{Adam, AdamConfig};
pub use arch::{ArchConfig, FeatureScales, ARCH_VERSION, NUMERIC_FEATURES, SLOT_LEVELS};
pub use checkpoint::{Checkpoint, CheckpointMeta, FORMAT_VERSION, MAGIC};
pub use features::{encode_party, PartyFeatures};
pub use gradcheck::{finite_difference, gradcheck, relative_error, GradcheckReport, FD_STEP, REL_FLOOR};
pub use network::{softmax, Block, Layout, PolicyNetwork, SampleTrace, Scalar};
pub use policy::NtrlPolicy;
