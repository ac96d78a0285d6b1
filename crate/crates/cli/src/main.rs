fn main() {
    std::process::exit(kontact_cli::run(std::env::args_os()));
}
