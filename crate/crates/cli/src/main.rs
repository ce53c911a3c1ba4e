fn main() {
    std::process::exit(trajdiff_cli::run(std::env::args_os()));
}
