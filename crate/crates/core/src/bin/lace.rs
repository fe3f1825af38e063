use clap::Parser;
use lace::cli::{self, Args};

fn main() {
    let args = Args::parse();
    if let Ok(v) = std::env::var("LACE_THREADS") {
        let threads = match v.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                eprintln!("error: LACE_THREADS must be a positive integer, got '{v}'");
                std::process::exit(cli::EXIT_USAGE);
            }
        };
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: could not size the thread pool: {e}");
            std::process::exit(cli::EXIT_USAGE);
        }
    }
    std::process::exit(cli::main_with(args));
}
