use clap::Parser;

fn main() {
    // Malformed invocations exit with the usage code.
    let cli = match sglab_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error display path.
            let code = if e.use_stderr() {
                sglab_cli::EXIT_USAGE
            } else {
                0
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(sglab_cli::run(cli));
}
