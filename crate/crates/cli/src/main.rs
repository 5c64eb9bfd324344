use clap::Parser;
use priorgp_cli::config::{build_plan, CliArgs};
use priorgp_cli::runner::run_plan;

fn main() {
    let args = CliArgs::parse();
    let plan = match build_plan(&args) {
        Ok(plan) => plan,
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    };
    match run_plan(&plan) {
        Ok(outcome) => {
            println!(
                "{} rows -> {}",
                outcome.rows.len(),
                outcome.results_path.display()
            );
            println!("summary -> {}", outcome.summary_path.display());
            if outcome.failed > 0 {
                println!("{} repetitions recorded a failure status", outcome.failed);
            }
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    }
}
