fn main() {
    let code = replicator::cli::run_command(std::env::args_os());
    std::process::exit(code);
}
