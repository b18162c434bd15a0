pub mod assembly;
pub mod bench;
pub mod bases;
pub mod error;
pub mod fom;
pub mod io;
pub mod linalg;
pub mod par;
pub mod solvers;

pub use error::{Error, Result};
