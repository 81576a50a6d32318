fn main() {
    std::process::exit(translab::cli::main_with_args(std::env::args_os()));
}
