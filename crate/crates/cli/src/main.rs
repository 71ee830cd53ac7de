use clap::Parser;
use qsde_cli::output::validation_text;
use qsde_cli::{run, Cli, CliError};

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            if let CliError::Domain { report: Some(report), .. } = &e {
                print!("{}", validation_text("model", report));
            }
            eprintln!("{e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
