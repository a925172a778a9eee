pub mod config;
pub mod run;

pub use config::{resolve, ConfigError, RawConfig, RunConfig};
pub use run::{run, Document, RunError};

/// Worker count from `SOBOLEV_LAB_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("SOBOLEV_LAB_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}
