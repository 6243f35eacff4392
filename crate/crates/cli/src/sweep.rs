//! Positivity sweep wrapper and its text summary.

use std::io::Write;
use std::str::FromStr;

use tcm_core::random::{positivity_sweep_with, write_states, SamplingMeasure, SweepResult, NEGATIVITY_THRESHOLD};
use tcm_core::SystemShape;

use crate::error::{CliError, CliResult};
use crate::Num;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasureArg(pub SamplingMeasure);

impl FromStr for MeasureArg {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "haar" => Ok(MeasureArg(SamplingMeasure::Haar)),
            "product" => Ok(MeasureArg(SamplingMeasure::ProductOfFactors)),
            other => Err(CliError::Config(format!("unknown measure {other:?} (haar | product)"))),
        }
    }
}

fn measure_name(m: SamplingMeasure) -> &'static str {
    match m {
        SamplingMeasure::Haar => "haar",
        SamplingMeasure::ProductOfFactors => "product",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub measure: SamplingMeasure,
}

/// Parses `2,2,3` or `2x2x3`.
pub fn parse_dims(s: &str) -> CliResult<Vec<usize>> {
    s.split([',', 'x'])
        .map(|d| d.trim().parse::<usize>().map_err(|e| CliError::Config(format!("dimension {d:?}: {e}"))))
        .collect()
}

pub fn run_sweep(config: &SweepConfig) -> CliResult<SweepResult> {
    let shape = SystemShape::new(config.dims.clone())?;
    Ok(positivity_sweep_with(&shape, config.samples, config.seed, config.measure)?)
}

/// Summary as `key = value` lines; states below the threshold follow in the
/// counterexample format after a `counterexamples:` line.
pub fn write_sweep_summary<W: Write + ?Sized>(out: &mut W, config: &SweepConfig, result: &SweepResult) -> CliResult<()> {
    let dims: Vec<String> = config.dims.iter().map(|d| d.to_string()).collect();
    writeln!(out, "dims = {}", dims.join(","))?;
    writeln!(out, "measure = {}", measure_name(config.measure))?;
    writeln!(out, "seed = {}", config.seed)?;
    writeln!(out, "samples = {}", result.samples)?;
    writeln!(out, "threshold = {NEGATIVITY_THRESHOLD:e}")?;
    writeln!(out, "min_value = {}", Num(result.min_value))?;
    writeln!(out, "argmin_index = {}", result.argmin_index)?;
    writeln!(out, "negative_count = {}", result.negative_count)?;
    write!(out, "argmin_state: ")?;
    write_states(out, result.argmin_state.shape(), std::slice::from_ref(&result.argmin_state))?;
    if !result.counterexamples.is_empty() {
        writeln!(out, "counterexamples:")?;
        let states: Vec<_> = result.counterexamples.iter().map(|(_, _, s)| s.clone()).collect();
        write_states(out, states[0].shape(), &states)?;
    }
    Ok(())
}
