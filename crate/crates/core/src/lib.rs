//! Joint network-channel coding for multi-source multi-relay networks over
//! block-fading channels: topology construction, diversity analysis, code
//! construction, channel simulation, iterative decoding and outage bounds.

pub mod bounds;
pub mod channel;
pub mod codes;
pub mod decoder;
pub mod diversity;
pub mod error;
pub mod gf2;
pub mod harness;
pub mod stats;
pub mod topology;

pub use error::{JnccError, Result};
