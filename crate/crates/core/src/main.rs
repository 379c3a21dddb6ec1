use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use infopower::pareto::Scenario;
use infopower::shell::{
    load_config, render_table, run_gain_profile, run_psd, run_trace, verify, RunConfig, RunSummary, ShellResult,
    VerifyOptions,
};

#[derive(Parser)]
#[command(name = "infopower", version, about = "Capacity versus power transfer trade-off of a two-port amplifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the capacity versus power-transfer frontier.
    Trace(RunArgs),
    /// Write optimal input PSDs for the configured `psd_etas`.
    Psd(RunArgs),
    /// Write the power gain of the configured termination.
    GainProfile(RunArgs),
    /// Cross-check the solvers against the reference implementations.
    Verify {
        /// JSON configuration; the built-in defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Fewer instances and coarser oracle resolutions.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scenario, overriding `scenario`.
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    /// Exit with status 1 when any point is infeasible.
    #[arg(long)]
    strict: bool,
    /// Also write SVG plots.
    #[arg(long)]
    emit_svg: bool,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: infopower::Error| e.to_string())
}

impl RunArgs {
    fn config(&self) -> ShellResult<RunConfig> {
        let mut cfg = load_config(&self.config)?;
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.to_string_lossy().into_owned());
        }
        if let Some(s) = self.scenario {
            cfg.scenario = vec![s];
        }
        cfg.emit_svg |= self.emit_svg;
        Ok(cfg)
    }
}

fn report(summary: &RunSummary, strict: bool) -> ExitCode {
    for m in &summary.members {
        let dir = summary.output_dir.join(&m.directory);
        let top = m.eta_max.map(|v| format!(", eta_max {v:.6}")).unwrap_or_default();
        println!(
            "{} g_d/g_m={}: {} points, {} infeasible{top} -> {}",
            m.scenario.tag(),
            m.g_d_over_gm,
            m.points,
            m.infeasible,
            dir.display()
        );
    }
    if strict && summary.infeasible() > 0 {
        eprintln!("error: {} infeasible point(s)", summary.infeasible());
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> ShellResult<ExitCode> {
    match cli.command {
        Command::Trace(a) => Ok(report(&run_trace(&a.config()?)?, a.strict)),
        Command::Psd(a) => Ok(report(&run_psd(&a.config()?)?, a.strict)),
        Command::GainProfile(a) => Ok(report(&run_gain_profile(&a.config()?)?, a.strict)),
        Command::Verify { config, quick } => {
            let cfg = match config {
                Some(p) => load_config(&p)?,
                None => RunConfig::default(),
            };
            let checks = verify(&cfg, &VerifyOptions { quick })?;
            print!("{}", render_table(&checks));
            if checks.iter().all(|c| c.passed) {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(3))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
