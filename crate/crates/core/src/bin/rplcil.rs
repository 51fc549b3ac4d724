fn main() {
    std::process::exit(rplcil::cli::main_with_args(std::env::args_os()));
}
