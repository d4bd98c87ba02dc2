use clap::Parser;

fn main() {
    let cli = match qopt_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are input errors; help and version output are not errors.
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let code = qopt_cli::execute(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
