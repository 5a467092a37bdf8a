fn main() {
    std::process::exit(gce_core::cli::main_with_args(std::env::args_os()));
}
