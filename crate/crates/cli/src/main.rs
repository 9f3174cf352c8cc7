use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use diracwkb::analysis::emit;
use diracwkb::Error;
use diracwkb_cli::{error_report, exit_code, run, Cli, Outcome};

fn fail(e: &Error) -> ExitCode {
    eprintln!("{}", error_report(e));
    ExitCode::from(exit_code(e.kind()))
}

fn write(o: &Outcome, output: Option<&std::path::Path>, report: Option<&std::path::Path>) -> diracwkb::Result<()> {
    match output {
        Some(p) => emit(p, &o.artifact)?,
        None => std::io::stdout().write_all(o.artifact.as_bytes())?,
    }
    if let Some(p) = report {
        let mut text = serde_json::to_string_pretty(&o.report).expect("report serializes");
        text.push('\n');
        emit(p, &text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.resolve() {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let outcome = match run(&config) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    if let Err(e) = write(&outcome, config.output.as_deref(), config.report.as_deref()) {
        return fail(&e);
    }
    if let Some(s) = &outcome.summary {
        eprintln!("{s}");
    }
    match &outcome.failure {
        Some(e) => fail(e),
        None => ExitCode::SUCCESS,
    }
}
