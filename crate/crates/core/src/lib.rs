//! Stationary states and dynamics of a driven, lossy cavity coupled to an
//! ensemble of two-level spins, treated with first-, second- and third-order
//! cumulant expansions (CE1/CE2/CE3).
//!
//! All rates are angular frequencies in rad/µs and times are in µs, so a rate
//! of `2π` corresponds to 1 MHz.

pub mod boundary;
pub mod cumulant;
pub mod error;
pub mod integrate;
pub mod model;
pub mod oracle;
pub mod semiclassical;

pub use error::{Error, Result};
pub use model::{ClusterEnsemble, CumulantOrder, PhysicalParams};

pub type C64 = num_complex::Complex64;
