use clap::Parser;

use rctfuse_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let env_seed = std::env::var("RCTFUSE_SEED").ok();
    if let Err(e) = run(&cli, env_seed.as_deref(), &mut std::io::stdout().lock()) {
        eprintln!("rctfuse: {e}");
        std::process::exit(e.exit_code());
    }
}
