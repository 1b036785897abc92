fn main() {
    std::process::exit(weak_concurrence::cli::main_with_args(std::env::args_os()));
}
