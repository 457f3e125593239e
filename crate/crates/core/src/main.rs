fn main() {
    std::process::exit(qubus::cli::main_with_args(std::env::args_os()));
}
