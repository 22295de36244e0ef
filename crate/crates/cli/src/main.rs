use clap::Parser;
use cycle_density_cli::{run, Cli, RunConfig};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = RunConfig::from_cli(cli).and_then(|cfg| run(&cfg));
    if let Err(e) = result {
        eprintln!("cycle-density: {e}");
        std::process::exit(e.exit_code());
    }
}
