fn main() {
    std::process::exit(nhp::cli::run(std::env::args_os()));
}
