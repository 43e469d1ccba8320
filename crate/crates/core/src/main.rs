fn main() {
    std::process::exit(pqm::cli::main_with_args(std::env::args_os()));
}
