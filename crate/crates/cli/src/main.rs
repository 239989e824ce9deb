use clap::Parser;

use kinkfield_cli::{run, Args, EXIT_CONFIG, THREADS_ENV};

fn main() {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            std::process::exit(EXIT_CONFIG);
        }
        Err(e) => {
            // --help and --version
            let _ = e.print();
            std::process::exit(0);
        }
    };
    let threads = std::env::var(THREADS_ENV).ok();
    let outcome = run(&args, threads.as_deref());
    for m in &outcome.messages {
        if outcome.report.is_none() || m.starts_with("error") || m.starts_with("i/o") {
            eprintln!("{m}");
        } else {
            println!("{m}");
        }
    }
    std::process::exit(outcome.code);
}
