//! Peak atom-atom tangle of `|gg, n>` against the photon number.

use std::io::Write;

use rayon::prelude::*;
use tcm_core::dynamics::{atomic_state, fock_state, product_state, AtomicPreset, ModelParams, Propagator};
use tcm_core::measures::bipartite_tangles_all;

use crate::error::{CliError, CliResult};
use crate::Num;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingConfig {
    pub ns: Vec<usize>,
    /// Grid points per Rabi period.
    pub steps: usize,
    pub g: f64,
    pub pad: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self { ns: vec![5, 10, 20, 40], steps: 2000, g: 1.0, pad: 5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    /// Rabi period `2 pi / (g sqrt(4n - 2))` of the `|gg, n>` block.
    pub period: f64,
    pub peak_tau_aa: f64,
    pub peak_gt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingResult {
    pub points: Vec<ScalingPoint>,
    pub slope: f64,
    pub intercept: f64,
}

pub fn rabi_period(n: usize, g: f64) -> f64 {
    2.0 * std::f64::consts::PI / (g * (4.0 * n as f64 - 2.0).sqrt())
}

/// Least-squares line through `(ln x, ln y)`; returns `(slope, intercept)`.
pub fn fit_loglog(xy: &[(f64, f64)]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = xy.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn peak_tau_aa(n: usize, config: &ScalingConfig) -> CliResult<ScalingPoint> {
    let n_max = n + config.pad;
    let initial = product_state(&atomic_state(AtomicPreset::Gg), &fock_state(n, n_max)?)?;
    let propagator = Propagator::new(ModelParams::new(config.g, 0.0, n_max)?);
    let trajectory = propagator.trajectory(&initial)?;
    let period = rabi_period(n, config.g);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..config.steps {
        let t = period * k as f64 / (config.steps - 1) as f64;
        let tau = bipartite_tangles_all(&trajectory.at(t)?)?.tau_aa;
        if tau > best.0 {
            best = (tau, config.g * t);
        }
    }
    Ok(ScalingPoint { n, period, peak_tau_aa: best.0, peak_gt: best.1 })
}

pub fn scaling_study(config: &ScalingConfig) -> CliResult<ScalingResult> {
    let mut distinct = config.ns.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 || distinct[0] < 2 {
        return Err(CliError::Config("scaling needs at least three distinct photon numbers >= 2".into()));
    }
    if config.steps < 2 {
        return Err(CliError::Config("steps must be at least 2".into()));
    }
    let points = distinct.par_iter().map(|&n| peak_tau_aa(n, config)).collect::<CliResult<Vec<_>>>()?;
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.n as f64, p.peak_tau_aa)).collect();
    let (slope, intercept) = fit_loglog(&xy);
    Ok(ScalingResult { points, slope, intercept })
}

pub fn write_scaling_csv<W: Write + ?Sized>(out: &mut W, config: &ScalingConfig, result: &ScalingResult) -> CliResult<()> {
    writeln!(out, "# tcm scaling")?;
    writeln!(out, "# atomic = gg")?;
    writeln!(out, "# steps_per_period = {}", config.steps)?;
    writeln!(out, "# g = {}", config.g)?;
    writeln!(out, "# pad = {}", config.pad)?;
    writeln!(out, "n,rabi_period_gt,peak_gt,peak_tau_AA")?;
    for p in &result.points {
        writeln!(out, "{},{},{},{}", p.n, Num(config.g * p.period), Num(p.peak_gt), Num(p.peak_tau_aa))?;
    }
    writeln!(out, "# loglog_slope = {}", result.slope)?;
    writeln!(out, "# loglog_intercept = {}", result.intercept)?;
    Ok(())
}
