use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tevp_cli::{run, Command, RunConfig};

/// Transmission eigenvalue laboratory.
#[derive(Parser, Debug)]
#[command(name = "tevp", version)]
struct Args {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match RunConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("tevp: {e}");
            return ExitCode::from(2);
        }
    };
    match run(args.command, &cfg, args.out.as_deref(), args.workers) {
        Ok(m) => {
            for f in &m.files {
                println!("{}  {}", f.sha256, f.path);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("tevp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
