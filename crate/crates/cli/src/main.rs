use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use glme_cli::{run, Cli, Context};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let threads = Context::new(&cli).and_then(|ctx| ctx.threads(cli.threads));
    match threads {
        Ok(Some(t)) if t > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
        Ok(_) => {}
        Err(e) => {
            eprintln!("glme: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    let mut progress = |msg: &str| eprintln!("{msg}");
    match run(&cli, &mut progress) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.stdout.as_bytes());
            let _ = stdout.flush();
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("glme: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
