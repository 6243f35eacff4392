//! Scenario orchestration for the `tcm` command-line tool.

pub mod config;
pub mod error;
pub mod scaling;
pub mod scenario;
pub mod sweep;

pub use config::{AtomicSpec, FieldSpec, Preset, ScenarioConfig};
pub use error::{CliError, CliResult};

/// Shortest round-trip formatting, switching to exponent form for very small
/// or very large magnitudes.
#[derive(Clone, Copy, Debug)]
pub struct Num(pub f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}
