use clap::Parser;
use lovelock_mass_cli::{exit, run, Cli};

fn main() {
    if let Ok(v) = std::env::var("LOVELOCK_MASS_THREADS") {
        match v.parse::<usize>() {
            Ok(t) if t > 0 => {
                // a second initialization only happens in tests; ignore it
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
            _ => {
                eprintln!("error: LOVELOCK_MASS_THREADS must be a positive integer, got {v:?}");
                std::process::exit(exit::ERROR);
            }
        }
    }
    let cli = Cli::parse();
    let code = run(cli, &mut std::io::stdout().lock());
    std::process::exit(code);
}
