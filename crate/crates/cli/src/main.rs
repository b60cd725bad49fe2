fn main() {
    std::process::exit(gld_cli::run_from(std::env::args_os()));
}
