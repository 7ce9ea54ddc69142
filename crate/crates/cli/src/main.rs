use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ordlab_cli::config::parse_strategies;
use ordlab_cli::{
    emit_csv, emit_plot_data, presets, run_experiment, verify, HarnessError, Settings,
};
use ordlab_core::generators::container::export_collection;

/// Runs continual linear regression ordering experiments and writes CSV and
/// plot data.
///
/// Settings are merged from a preset, then a config file, then flags.
#[derive(Debug, Parser)]
#[command(name = "ordlab", version)]
struct Cli {
    /// Start from a named preset (see --list-presets).
    #[arg(long)]
    preset: Option<String>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// isotropic, anisotropic, rank_dminus1, adversarial3d or adversarial_highdim.
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    /// Number of tasks.
    #[arg(long = "T")]
    tasks: Option<usize>,
    /// Group size of the 3-D adversarial collection.
    #[arg(long = "K")]
    k: Option<usize>,
    /// Strategy name; repeat the flag or separate with commas.
    #[arg(long = "strategy")]
    strategies: Vec<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path. Defaults to `$ORDLAB_OUT_DIR/<name>.csv`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    log_every: Option<usize>,
    #[arg(long)]
    hybrid_alpha: Option<f64>,
    #[arg(long)]
    hybrid_c: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Directory for per-strategy plot data files.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Run oracle checks; exit with status 3 if any bound is violated.
    #[arg(long)]
    verify: bool,
    /// Print the available presets and exit.
    #[arg(long)]
    list_presets: bool,
    /// Write the first repeat's task collection to this path and exit.
    #[arg(long)]
    export_collection: Option<PathBuf>,
    /// Default output directory.
    #[arg(long, env = "ORDLAB_OUT_DIR", hide_env_values = true)]
    out_dir: Option<PathBuf>,
}

impl Cli {
    fn settings(&self) -> Result<Settings, HarnessError> {
        let mut s = match &self.preset {
            Some(name) => presets::preset(name)?,
            None => Settings::default(),
        };
        if let Some(path) = &self.config {
            s = s.merge(Settings::from_file(path)?);
        }
        let strategies = if self.strategies.is_empty() {
            None
        } else {
            Some(parse_strategies(&self.strategies.join(","))?)
        };
        Ok(s.merge(Settings {
            name: None,
            generator: self.generator.clone(),
            d: self.d,
            r: self.r,
            tasks: self.tasks,
            k: self.k,
            strategies,
            iterations: self.iterations,
            repeats: self.repeats,
            seed: self.seed,
            output: self.out.clone(),
            log_every: self.log_every,
            hybrid_alpha: self.hybrid_alpha,
            hybrid_c: self.hybrid_c,
            rel_tol: self.rel_tol,
        }))
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    if cli.list_presets {
        for (name, about) in presets::list() {
            println!("{name:<14} {about}");
        }
        return Ok(());
    }
    let config = cli.settings()?.build()?;

    if let Some(path) = &cli.export_collection {
        let c = config.collection(0)?;
        let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        export_collection(&c, BufWriter::new(file)).map_err(|source| HarnessError::Container {
            path: path.clone(),
            source,
        })?;
        eprintln!("wrote {} tasks to {}", c.len(), path.display());
        return Ok(());
    }

    let exp = run_experiment(&config)?;
    for w in &exp.warnings {
        eprintln!("warning: {w}");
    }
    let records = exp.records();

    let out = config.output.clone().or_else(|| {
        cli.out_dir
            .as_ref()
            .map(|dir| dir.join(format!("{}.csv", config.name)))
    });
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
            }
            emit_csv(&records, &path)?;
            eprintln!("wrote {} rows to {}", records.len(), path.display());
        }
        None => ordlab_cli::output::write_csv(io::stdout().lock(), &records)
            .map_err(|e| HarnessError::io("<stdout>", e))?,
    }

    if let Some(dir) = &cli.plot {
        for path in emit_plot_data(&records, dir)? {
            eprintln!("wrote {}", path.display());
        }
    }

    if cli.verify {
        let reports = verify(&exp)?;
        let mut failed = 0;
        for r in &reports {
            let status = if r.passed() { "ok" } else { "FAILED" };
            eprintln!("[{status}] {r}");
            failed += usize::from(!r.passed());
        }
        if failed > 0 {
            return Err(HarnessError::BoundViolation(failed));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
