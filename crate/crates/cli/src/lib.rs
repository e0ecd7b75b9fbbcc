//! Command implementations behind the `hamsym` binary.
//!
//! Every command returns an [`Outcome`] holding its exit code and output, so the
//! binary and the tests share one code path.

pub mod commands;
pub mod examples;
pub mod sysfile;

use hamsym::classifier::{ClassifyConfig, DEFAULT_MAX_ORDER};
use hamsym::symexpr::ProbeConfig;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit code for success.
pub const EXIT_OK: u8 = 0;
/// Exit code for a semantic failure: inconsistency or drift above threshold.
pub const EXIT_SEMANTIC: u8 = 1;
/// Exit code for unreadable or invalid input.
pub const EXIT_INPUT: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

/// Options shared by every command.
#[derive(Clone, Debug)]
pub struct Globals {
    pub seed: u64,
    pub tol: f64,
    pub probes: usize,
    pub max_order: usize,
    pub format: Format,
}

impl Default for Globals {
    fn default() -> Self {
        let p = ProbeConfig::default();
        Globals {
            seed: p.seed,
            tol: p.tol,
            probes: p.count,
            max_order: DEFAULT_MAX_ORDER,
            format: Format::Text,
        }
    }
}

impl Globals {
    pub fn probe_config(&self) -> ProbeConfig {
        ProbeConfig {
            count: self.probes,
            seed: self.seed,
            tol: self.tol,
        }
    }

    pub fn classify_config(&self) -> ClassifyConfig {
        ClassifyConfig {
            max_order: self.max_order,
            probes: self.probe_config(),
        }
    }
}

/// Result of running a command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    pub fn input_error(err: anyhow::Error) -> Outcome {
        Outcome {
            code: EXIT_INPUT,
            stdout: String::new(),
            stderr: format!("error: {err:#}\n"),
        }
    }
}
