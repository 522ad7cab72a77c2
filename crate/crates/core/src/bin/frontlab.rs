use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use frontlab::scenario::{run_with_jobs, validate, Experiment, Scenario, Severity};

#[derive(Parser)]
#[command(name = "frontlab", version, about = "Front speeds and steady states in periodically hostile media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment named in a scenario file.
    Run {
        scenario: PathBuf,
        /// Output directory (default: the scenario's `output.dir`, else `out/<file stem>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a scenario without running it.
    Validate { scenario: PathBuf },
    /// Print the experiment names.
    ListExperiments,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<14} {}", e.name(), e.description());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { scenario } => {
            let s = Scenario::load(&scenario)?;
            let findings = validate(&s);
            for f in &findings {
                println!("{f}");
            }
            let errors = findings.iter().filter(|f| f.severity == Severity::Error).count();
            println!("{} finding(s), {errors} error(s)", findings.len());
            Ok(if errors == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Run { scenario, out, jobs } => {
            let s = Scenario::load(&scenario)?;
            let dir = out.or_else(|| s.output.dir.clone()).unwrap_or_else(|| {
                let stem = scenario.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or("run".into());
                PathBuf::from("out").join(stem)
            });
            let report = run_with_jobs(&s, jobs).with_context(|| format!("scenario {}", scenario.display()))?;
            let paths = report.write(&dir).with_context(|| format!("writing to {}", dir.display()))?;
            print!("{}", report.summary_text());
            println!("wrote {} file(s) to {}", paths.len(), dir.display());
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
