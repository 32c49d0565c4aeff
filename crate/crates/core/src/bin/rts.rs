fn main() {
    resilient_tracking::cli::init_logging();
    let code = resilient_tracking::cli::run_cli(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
