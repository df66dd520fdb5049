fn main() {
    std::process::exit(phasemax::cli::run(std::env::args_os()));
}
