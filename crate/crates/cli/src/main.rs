use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tcm_cli::config::{FieldSpec, Preset, ScenarioConfig};
use tcm_cli::error::{CliError, CliResult};
use tcm_cli::scaling::{scaling_study, write_scaling_csv, ScalingConfig};
use tcm_cli::scenario::{compare_exact_vs_approx, prepare, run_scenario, write_comparison_csv, write_scenario_csv};
use tcm_cli::sweep::{parse_dims, run_sweep, write_sweep_summary, MeasureArg, SweepConfig};

#[derive(Parser)]
#[command(name = "tcm", version, about = "Two-atom Tavis-Cummings entanglement sharing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tangle and inversion time series for one initial condition.
    Scenario(ScenarioArgs),
    /// Exact versus approximate field/atom-pair tangle for a coherent field.
    CompareApprox(ScenarioArgs),
    /// Residual-tangle positivity sweep over random pure states.
    Sweep(SweepArgs),
    /// Peak atom-atom tangle of |gg, n> against n.
    Scaling(ScalingArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Built-in scenario: fig1, fig2, fig3 or fig4.
    #[arg(long)]
    preset: Option<Preset>,
    /// key = value file applied after the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Atomic preset name or eight comma-separated reals.
    #[arg(long)]
    atomic: Option<String>,
    /// fock:N or coherent:MEAN.
    #[arg(long)]
    field: Option<String>,
    /// Shorthand for --field coherent:MEAN.
    #[arg(long)]
    mean_n: Option<f64>,
    /// Shorthand for --field fock:N.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    tail_tol: Option<f64>,
    #[arg(long)]
    rank_tol: Option<f64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// 2,2,3 or 2,2,4.
    #[arg(long, default_value = "2,2,3")]
    dims: String,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// haar or product.
    #[arg(long, default_value = "haar")]
    measure: MeasureArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    /// Comma-separated photon numbers.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    n: Vec<usize>,
    /// Grid points per Rabi period.
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ScenarioArgs {
    fn resolve(&self) -> CliResult<ScenarioConfig> {
        let mut config = self.preset.map(ScenarioConfig::preset).unwrap_or_default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            config = config.apply_text(&text)?;
        }
        if let Some(a) = &self.atomic {
            config.atomic = a.parse()?;
        }
        if let Some(f) = &self.field {
            config.field = f.parse()?;
        }
        if let Some(m) = self.mean_n {
            config.field = FieldSpec::Coherent(m);
        }
        if let Some(n) = self.n {
            config.field = FieldSpec::Fock(n);
        }
        if let Some(t) = self.t_max {
            config.t_max = t;
        }
        if let Some(s) = self.steps {
            config.steps = s;
        }
        if let Some(t) = self.tail_tol {
            config.tail_tol = t;
        }
        if let Some(t) = self.rank_tol {
            config.rank_tol = t;
        }
        if let Some(o) = &self.out {
            config.out = Some(o.clone());
        }
        config.validate()?;
        Ok(config)
    }
}

fn with_output<F>(path: Option<&Path>, f: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> CliResult<()>,
{
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Scenario(args) => {
            let config = args.resolve()?;
            let prepared = prepare(&config)?;
            let rows = run_scenario(&config)?;
            with_output(config.out.as_deref(), |w| write_scenario_csv(w, &config, &prepared, &rows))
        }
        Command::CompareApprox(args) => {
            let config = args.resolve()?;
            let cmp = compare_exact_vs_approx(&config)?;
            with_output(config.out.as_deref(), |w| write_comparison_csv(w, &config, &cmp))?;
            eprintln!("sup-norm over gt in [{:.3}, {:.3}]: {}", cmp.window.0, cmp.window.1, cmp.sup_norm);
            Ok(())
        }
        Command::Sweep(args) => {
            let config =
                SweepConfig { dims: parse_dims(&args.dims)?, samples: args.samples, seed: args.seed, measure: args.measure.0 };
            let result = run_sweep(&config)?;
            with_output(args.out.as_deref(), |w| write_sweep_summary(w, &config, &result))
        }
        Command::Scaling(args) => {
            let config = ScalingConfig { ns: args.n, steps: args.steps, ..Default::default() };
            let result = scaling_study(&config)?;
            with_output(args.out.as_deref(), |w| write_scaling_csv(w, &config, &result))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
