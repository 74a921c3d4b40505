fn main() {
    std::process::exit(wisp::cli::run(std::env::args_os()));
}
