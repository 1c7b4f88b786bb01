use clap::error::ErrorKind;
use clap::Parser;

use pupilbench_cli::args::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PUPILBENCH_LOG", "warn"))
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(pupilbench_cli::run(cli));
}
