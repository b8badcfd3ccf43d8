fn main() {
    std::process::exit(psp::cli::main_with_args(std::env::args_os()));
}
