fn main() {
    std::process::exit(cohsim::harness::cli::main_with_args(std::env::args_os()));
}
