//! Command-line tool and HTTP service around the explanation engine.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod service;

pub use commands::{run, REPORT_SCHEMA};
pub use service::{router, ServiceOptions};
