fn main() {
    std::process::exit(revrec_cli::run(std::env::args_os()));
}
