pub mod chanfeat;
pub mod cli;
pub mod config;
pub mod error;
pub mod evalkit;
pub mod hmmrec;
pub mod imagecore;
pub mod mlselect;
pub mod phogfeat;
pub mod pipeline;
pub mod synthgen;
pub mod textfmt;

pub use error::{Error, Result};
