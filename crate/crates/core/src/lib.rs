pub mod device;
pub mod electrostatics;
pub mod error;
pub mod fitting;
pub mod params;
pub mod permittivity;
pub mod trace;
pub mod transport;
pub mod trapping;
pub mod units;
pub mod waveform;

pub use error::{Error, Result};

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
