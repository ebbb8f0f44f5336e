pub mod error;
pub mod presburger;
pub mod presfn;
pub mod residue;
pub mod constructible;
pub mod cells;
pub mod functoriality;
pub mod dsl;
pub mod cli;
pub mod ring;

pub use error::{Error, Result};
