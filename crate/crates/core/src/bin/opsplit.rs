use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use opsplit::experiments::{self, artifacts, registry, runner, Outcome};

/// Run splitting experiments and check their convergence bounds.
#[derive(Parser)]
#[command(name = "opsplit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Run a named reproduction from the registry ("all" runs every entry).
    Reproduce { name: String },
    /// List registry entries.
    List,
    /// Summarize the reports under a directory.
    Report { dir: PathBuf },
}

fn finish(out: &Outcome, dir: &std::path::Path) -> bool {
    let pass = out.passed();
    println!("{} {} -> {}", if pass { "PASS" } else { "FAIL" }, out.name, dir.display());
    if let Some(e) = &out.error {
        println!("  error: {e}");
    }
    for name in out.suite.failures() {
        println!("  failed check: {name}");
    }
    pass
}

fn reproduce(name: &str) -> opsplit::Result<bool> {
    let entries: Vec<_> = if name == "all" { registry::REGISTRY.iter().collect() } else { vec![registry::lookup_entry(name)?] };
    let mut all = true;
    for e in entries {
        let out = e.execute();
        let dir = runner::output_root().join(e.name);
        artifacts::write_artifacts(&out, &dir)?;
        all &= finish(&out, &dir);
    }
    Ok(all)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => runner::run_config_file(&config).map(|(out, dir)| finish(&out, &dir)),
        Command::Reproduce { name } => reproduce(&name),
        Command::List => {
            print!("{}", experiments::list());
            Ok(true)
        }
        Command::Report { dir } => experiments::summarize(&dir).map(|(text, pass)| {
            print!("{text}");
            pass
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
