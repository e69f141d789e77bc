pub mod channel;
pub mod deconvolution;
pub mod error;
pub mod io;
pub mod linalg;
pub mod models;
pub mod quorum;
pub mod random;
pub mod random_unitary;
pub mod scenarios;

pub use error::{Error, Result};
