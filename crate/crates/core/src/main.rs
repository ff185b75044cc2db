use std::process::ExitCode;

use clap::Parser;
use z3ro_sim::cli::{run, Cli};
use z3ro_sim::Error;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(manifest) => {
            for (key, value) in &manifest.highlights {
                println!("{key} = {value:.6}");
            }
            println!(
                "wrote {} files to {} in {:.1}s",
                manifest.outputs.len() + 1,
                cli.out.display(),
                manifest.duration_seconds
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            let message = err.to_string().replace('\n', " ");
            eprintln!("error[{}]: {message}", err.kind());
            match err {
                Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
