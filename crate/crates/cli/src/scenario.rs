//! Time series of the tangles for one initial condition.

use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use tcm_core::dynamics::{
    atomic_state_from_amplitudes, coherent_state, fock_state, pad_field, product_state, ModelParams, Propagator,
};
use tcm_core::markoff::{approx_tau_f_aa, jx_coefficients};
use tcm_core::measures::{pure_itangle, TangleReport};
use tcm_core::{Cut, PureState};

use crate::config::{FieldSpec, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::Num;

pub const SCENARIO_COLUMNS: [&str; 8] =
    ["gt", "tau_F_AA", "tau_A_rest", "tau_AA", "tau_AF", "tau_res", "inversion", "field_eff_dim"];

/// Model and initial state built from a configuration.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub params: ModelParams,
    pub initial: PureState,
    /// Largest photon number carrying weight in the initial field.
    pub field_support: usize,
}

pub fn prepare(config: &ScenarioConfig) -> CliResult<Prepared> {
    config.validate()?;
    let (field, support) = match config.field {
        FieldSpec::Fock(n) => (fock_state(n, n)?, n),
        FieldSpec::Coherent(mean) => {
            let c = coherent_state(mean, config.tail_tol)?;
            (c.amplitudes, c.n_max)
        }
    };
    let n_max = support + config.pad;
    let field = pad_field(&field, n_max)?;
    let atoms = atomic_state_from_amplitudes(&config.atomic.amplitudes())?;
    let initial = product_state(&atoms, &field)?;
    let params = ModelParams::new(config.g, config.omega, n_max)?;
    Ok(Prepared { params, initial, field_support: support })
}

/// States on the configured grid, computed concurrently and returned in order.
fn evolve_grid<T, F>(config: &ScenarioConfig, prepared: &Prepared, f: F) -> CliResult<Vec<T>>
where
    T: Send,
    F: Fn(f64, &PureState) -> CliResult<T> + Sync,
{
    let propagator = Propagator::new(prepared.params);
    let trajectory = propagator.trajectory(&prepared.initial)?;
    (0..config.steps)
        .into_par_iter()
        .map(|k| {
            let gt = config.gt(k);
            let state = trajectory.at(gt / config.g)?;
            f(gt, &state)
        })
        .collect()
}

/// One [`TangleReport`] per grid point, `t` holding `g t`.
pub fn run_scenario(config: &ScenarioConfig) -> CliResult<Vec<TangleReport>> {
    let prepared = prepare(config)?;
    evolve_grid(config, &prepared, |gt, state| Ok(TangleReport::compute(state, gt, config.rank_tol)?))
}

fn header<W: Write + ?Sized>(out: &mut W, title: &str, config: &ScenarioConfig, extra: &[String]) -> std::io::Result<()> {
    writeln!(out, "# {title}")?;
    for line in config.to_text().lines() {
        writeln!(out, "# {line}")?;
    }
    for line in extra {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

fn approx_for(config: &ScenarioConfig) -> CliResult<Option<(tcm_core::markoff::JxCoefficients, f64)>> {
    if !config.approx_compare {
        return Ok(None);
    }
    match config.field {
        FieldSpec::Coherent(mean) => Ok(Some((jx_coefficients(&normalized_atoms(config)?), mean))),
        FieldSpec::Fock(_) => Err(CliError::Config("approx_compare needs a coherent field".into())),
    }
}

fn normalized_atoms(config: &ScenarioConfig) -> CliResult<[C64; 4]> {
    let v = atomic_state_from_amplitudes(&config.atomic.amplitudes())?;
    Ok([v[0], v[1], v[2], v[3]])
}

/// Writes the scenario CSV. With `approx_compare` set, a trailing
/// `tau_F_AA_approx` column is added.
pub fn write_scenario_csv<W: Write + ?Sized>(
    out: &mut W,
    config: &ScenarioConfig,
    prepared: &Prepared,
    rows: &[TangleReport],
) -> CliResult<()> {
    let approx = approx_for(config)?;
    header(
        out,
        "tcm scenario",
        config,
        &[format!("n_max = {}", prepared.params.n_max), format!("field_support = {}", prepared.field_support)],
    )?;
    let mut cols: Vec<&str> = SCENARIO_COLUMNS.to_vec();
    if approx.is_some() {
        cols.push("tau_F_AA_approx");
    }
    writeln!(out, "{}", cols.join(","))?;
    for r in rows {
        write!(
            out,
            "{},{},{},{},{},{},{},{}",
            Num(r.t),
            Num(r.tau_f_aa),
            Num(r.tau_a_rest),
            Num(r.tau_aa),
            Num(r.tau_af),
            Num(r.tau_res),
            Num(r.inversion),
            r.field_dim
        )?;
        if let Some((d, mean)) = &approx {
            write!(out, ",{}", Num(approx_tau_f_aa(d, config.g, r.t / config.g, *mean)?))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Exact and approximate field/atom-pair tangle on the configured grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    /// `(g t, exact, approximate)`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Validity window in `g t`: `[0.2, 0.8] * 2 pi sqrt(mean_n)`.
    pub window: (f64, f64),
    pub sup_norm: f64,
    pub window_points: usize,
}

pub fn comparison_window(mean_n: f64) -> (f64, f64) {
    let revival = 2.0 * std::f64::consts::PI * mean_n.sqrt();
    (0.2 * revival, 0.8 * revival)
}

pub fn compare_exact_vs_approx(config: &ScenarioConfig) -> CliResult<Comparison> {
    let FieldSpec::Coherent(mean) = config.field else {
        return Err(CliError::Config("compare-approx needs a coherent field".into()));
    };
    let prepared = prepare(config)?;
    let coeffs = jx_coefficients(&normalized_atoms(config)?);
    let cut = Cut::against_rest(vec![2], 3)?;
    let rows = evolve_grid(config, &prepared, |gt, state| {
        let exact = pure_itangle(state, &cut, 1.0)?;
        let approx = approx_tau_f_aa(&coeffs, config.g, gt / config.g, mean)?;
        Ok((gt, exact, approx))
    })?;
    let window = comparison_window(mean);
    let inside: Vec<f64> = rows
        .iter()
        .filter(|(gt, _, _)| *gt >= window.0 && *gt <= window.1)
        .map(|(_, e, a)| (e - a).abs())
        .collect();
    if inside.is_empty() {
        return Err(CliError::Config(format!(
            "no grid point inside the comparison window [{}, {}]",
            window.0, window.1
        )));
    }
    let sup_norm = inside.iter().copied().fold(0.0, f64::max);
    Ok(Comparison { rows, window, sup_norm, window_points: inside.len() })
}

pub fn write_comparison_csv<W: Write + ?Sized>(out: &mut W, config: &ScenarioConfig, cmp: &Comparison) -> CliResult<()> {
    header(out, "tcm compare-approx", config, &[])?;
    writeln!(out, "gt,tau_F_AA_exact,tau_F_AA_approx,abs_diff")?;
    for (gt, e, a) in &cmp.rows {
        writeln!(out, "{},{},{},{}", Num(*gt), Num(*e), Num(*a), Num((e - a).abs()))?;
    }
    writeln!(out, "# window_gt = [{}, {}]", cmp.window.0, cmp.window.1)?;
    writeln!(out, "# window_points = {}", cmp.window_points)?;
    writeln!(out, "# sup_norm = {}", cmp.sup_norm)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AtomicSpec, Preset};
    use tcm_core::dynamics::AtomicPreset;

    fn small() -> ScenarioConfig {
        ScenarioConfig { t_max: 2.0, steps: 21, field: FieldSpec::Fock(3), ..Default::default() }
    }

    #[test]
    fn prepare_pads_the_field() {
        let p = prepare(&small()).unwrap();
        assert_eq!(p.params.n_max, 8);
        assert_eq!(p.field_support, 3);
        let c = ScenarioConfig { field: FieldSpec::Coherent(4.0), ..small() };
        let p = prepare(&c).unwrap();
        assert_eq!(p.params.n_max, p.field_support + 5);
    }

    #[test]
    fn scenario_starts_unentangled() {
        let rows = run_scenario(&small()).unwrap();
        assert_eq!(rows.len(), 21);
        let first = rows[0];
        assert_eq!(first.t, 0.0);
        for v in first.tangles() {
            assert!(v.abs() < 1e-12);
        }
        assert!((first.inversion - 1.0).abs() < 1e-15);
        assert_eq!(rows[20].t, 2.0);
    }

    #[test]
    fn csv_layout() {
        let config = small();
        let prepared = prepare(&config).unwrap();
        let rows = run_scenario(&config).unwrap();
        let mut buf = Vec::new();
        write_scenario_csv(&mut buf, &config, &prepared, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], SCENARIO_COLUMNS.join(","));
        assert_eq!(body.len(), 22);
        assert!(text.contains("# field = fock:3"));
        let approx = ScenarioConfig { approx_compare: true, ..config };
        assert!(write_scenario_csv(&mut Vec::new(), &approx, &prepared, &rows).is_err());
    }

    #[test]
    fn comparison_needs_coherent_field() {
        assert!(matches!(compare_exact_vs_approx(&small()), Err(CliError::Config(_))));
        let c = ScenarioConfig {
            atomic: AtomicSpec::Preset(AtomicPreset::Ee),
            field: FieldSpec::Coherent(9.0),
            t_max: 20.0,
            steps: 101,
            ..ScenarioConfig::preset(Preset::Fig2)
        };
        let cmp = compare_exact_vs_approx(&c).unwrap();
        assert_eq!(cmp.rows.len(), 101);
        assert!(cmp.window_points > 0);
        // The approximation is off at t = 0, where the exact value vanishes.
        assert!(cmp.rows[0].1.abs() < 1e-12);
        assert!((cmp.rows[0].2 - 21.0 / 16.0).abs() < 1e-12);
    }
}
