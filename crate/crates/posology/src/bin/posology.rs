fn main() {
    std::process::exit(posology::cli::run_from(std::env::args_os()));
}
