//! File formats, the annotation service and the command line around
//! [`textmanip_core`].

pub mod cli;
pub mod formats;
pub mod generate;
pub mod run;
pub mod service;
pub mod store;
