//! Tactile frames: extraction from the contact layer, the EIPF binary
//! format with PNG/CSV previews, and multi-direction dataset batches.

pub mod dataset;
pub mod export;
pub mod frame;

pub use dataset::{
    aim_scenario, fibonacci_directions, generate_dataset, press_rotation, DatasetManifest,
    ManifestEntry,
};
pub use export::{decode, encode, export_frame, read_frame, ExportedFiles, FrameData, Formats, Sidecar};
pub use frame::{contact_positions, extract_tactile_frame, TactileFrame};
