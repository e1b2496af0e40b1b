//! Persistent formats: SMR rasters, PGM import, scanpath CSV, dataset
//! manifests and the JSON parameter/profile files.

pub mod json;
pub mod manifest;
pub mod params;
pub mod pgm;
pub mod raster;
pub mod scanpath;

pub use manifest::{Dataset, DatasetManifest, ImageData, LoadOptions, ManifestEntry};
pub use params::{load_params, load_profile, AmplitudeTable, CostProfile, ModelParams, PhiIndexing};
pub use pgm::{decode_pgm, import_pgm};
pub use raster::{decode_raster, encode_raster, read_raster, write_raster};
pub use scanpath::{parse_scanpaths, read_scanpaths, Scanpath, ScanpathRecord};
