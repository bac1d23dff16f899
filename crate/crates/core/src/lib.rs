pub mod closed_form;
pub mod dp;
pub mod error;
pub mod oracle;
pub mod pipeline;
pub mod prob;
pub mod rd;
pub mod region;

pub use error::{Error, Result};
