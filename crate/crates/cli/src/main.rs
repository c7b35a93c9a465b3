mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Complete(a) => commands::complete(a),
        Command::Ablate(a) => commands::ablate(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::SampleMask(a) => commands::sample_mask_cmd(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lrtc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
